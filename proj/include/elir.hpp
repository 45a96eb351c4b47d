// Copyright 2026 The elir Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef ELIR_ELIR_HPP
#define ELIR_ELIR_HPP

#include "elir/consistency.hpp"
#include "elir/densities.hpp"
#include "elir/error.hpp"
#include "elir/ess.hpp"
#include "elir/hierarchy.hpp"
#include "elir/io.hpp"
#include "elir/mixfit.hpp"
#include "elir/models.hpp"
#include "elir/numeric.hpp"
#include "elir/posterior.hpp"
#include "elir/random.hpp"
#include "elir/version.hpp"

#endif  // ELIR_ELIR_HPP
