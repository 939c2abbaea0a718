// Copyright 2026 The mcprec Authors
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

#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "mcprec/text.hpp"

namespace mcprec {
namespace {

TEST(TextTest, TrimStripsAsciiWhitespace) {
  EXPECT_EQ(trim("  a b \t\n"), "a b");
  EXPECT_EQ(trim(""), "");
  EXPECT_EQ(trim(" \r\n "), "");
}

TEST(TextTest, AsciiLowerLeavesMultibyteAlone) {
  EXPECT_EQ(ascii_lower("PyThOn"), "python");
  EXPECT_EQ(ascii_lower("\xC3\x89T\xC3\x89"), "\xC3\x89t\xC3\x89");
}

TEST(TextTest, NfcComposesCombiningMarks) {
  // "e" + U+0301 composes to U+00E9.
  EXPECT_EQ(nfc("caf\x65\xCC\x81"), "caf\xC3\xA9");
  EXPECT_EQ(nfc("plain"), "plain");
}

TEST(TextTest, NfcPassesInvalidUtf8Through) {
  const std::string bad = "ab\xFF\xFE";
  EXPECT_EQ(nfc(bad), bad);
}

TEST(TextTest, FoldCategoricalTrimsAndLowers) {
  EXPECT_EQ(fold_categorical("  Media "), "media");
  EXPECT_EQ(normalize_text("  Media "), "Media");
}

TEST(TextTest, JoinNonemptySkipsEmptyParts) {
  const std::vector<std::string> parts{"S", "", "x", "", ""};
  EXPECT_EQ(join_nonempty(parts), "S x");
  EXPECT_EQ(join_nonempty(std::vector<std::string>{}), "");
}

TEST(TextTest, Fnv1aKnownVectors) {
  EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a("foobar"), 0x85944171f73967e8ULL);
}

}  // namespace
}  // namespace mcprec
