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


#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "elir.hpp"

namespace {

elir::ErrorCode code_of(const std::string& text) {
  std::istringstream in(text);
  try {
    (void)elir::read_trials(in, "t.csv");
  } catch (const elir::Error& e) {
    return e.code();
  }
  return elir::ErrorCode::invalid_argument;
}

TEST(Io, ReadsTrialsWithHeader) {
  std::istringstream in("label,r,n\n# comment\nA, 2, 15\n\nB,0,13\n");
  const auto t = elir::read_trials(in);
  ASSERT_EQ(t.size(), 2U);
  EXPECT_EQ(t[0].label, "A");
  EXPECT_EQ(t[0].responders, 2);
  EXPECT_EQ(t[1].size, 13);
}

TEST(Io, TrialErrorsCarryLineNumbers) {
  std::istringstream in("label,r,n\nA,2,15\nB,x,13\n");
  try {
    (void)elir::read_trials(in, "t.csv");
    FAIL();
  } catch (const elir::Error& e) {
    EXPECT_EQ(e.code(), elir::ErrorCode::parse_error);
    EXPECT_NE(std::string(e.what()).find("t.csv:3"), std::string::npos) << e.what();
  }
  EXPECT_EQ(code_of("A,5,4\n"), elir::ErrorCode::parse_error);
  EXPECT_EQ(code_of("A,5\n"), elir::ErrorCode::parse_error);
  EXPECT_EQ(code_of("label,r,n\n"), elir::ErrorCode::parse_error);
}

TEST(Io, TrialsRoundTrip) {
  const std::vector<elir::TrialRecord> t = {{"x", 1, 5}, {"y", 0, 2}};
  std::stringstream s;
  elir::write_trials(s, t);
  const auto back = elir::read_trials(s);
  ASSERT_EQ(back.size(), 2U);
  EXPECT_EQ(back[1].label, "y");
  EXPECT_EQ(back[1].size, 2);
}

TEST(Io, SamplesRoundTripExactly) {
  const std::vector<double> x = {0.1, 1.0 / 3.0, 2.5e-12, 0.999999999};
  std::stringstream s;
  elir::write_samples(s, x, "pi");
  EXPECT_EQ(elir::read_samples(s), x);
  std::istringstream plain("0.5\n0.25,extra\n");
  EXPECT_EQ(elir::read_samples(plain), (std::vector<double>{0.5, 0.25}));
  std::istringstream bad("0.5\nabc\n");
  EXPECT_THROW((void)elir::read_samples(bad), elir::Error);
}

TEST(Io, BundledTrialFiles) {
  const auto as = elir::read_trials(std::string(ELIR_DATA_DIR) + "/as_trials.csv");
  EXPECT_EQ(as.size(), 8U);
  const auto sarcoma = elir::read_trials(std::string(ELIR_DATA_DIR) + "/sarcoma.csv");
  ASSERT_EQ(sarcoma.size(), 10U);
  EXPECT_EQ(sarcoma[3].responders, 6);
  EXPECT_EQ(sarcoma[3].size, 28);
}

}  // namespace
