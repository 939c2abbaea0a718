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

#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>

#include <gtest/gtest.h>

#include "mcprec/corpus.hpp"
#include "mcprec/evidence.hpp"

namespace mcprec {
namespace {

namespace fs = std::filesystem;

const fs::path kMini = fs::path(MCPREC_TEST_DATA) / "mini";

class EvidenceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto add = [&](const std::string& id, Provenance provenance, double fused) {
      const auto row = *corpus.position(id);
      Candidate c{id, row, provenance, {fused - 0.1, 0.5, fused, 0.3}};
      (provenance == Provenance::kAnchor ? rec.pool.anchors : rec.pool.expansion).push_back(c);
    };
    add("m1", Provenance::kAnchor, 0.9);
    add("m3", Provenance::kAnchor, 0.6);
    add("m2", Provenance::kExpansion, 0.4);
    std::size_t rank = 1;
    for (const auto* id : {"m3", "m1", "m2"}) {
      const auto* c = rec.pool.find(id);
      rec.list.entries.push_back({c->id, rank++, c->provenance, c->scores});
    }
    rec.list.explanation = "m3 handles audio";
    input = DraftInput{&corpus, &rec, "download youtube video transcript", 2};
  }

  ServerCorpus corpus{read_servers(kMini / "mcp.jsonl")};
  Recommendation rec;
  DraftInput input;
};

TEST(GuidanceTest, Template) {
  McpRecord server;
  server.name = "Tube";
  server.repo_url = "https://github.com/x/tube";
  server.language = "python";
  server.system = System::kLinux;
  server.license = "mit";
  server.tools = {"a", "b"};
  EXPECT_EQ(render_guidance(server),
            "Register Tube as an MCP server from https://github.com/x/tube. Implementation language: python. "
            "Target system: linux. License: mit. Exposes 2 tool(s).");
  McpRecord bare;
  bare.name = "Bare";
  EXPECT_EQ(render_guidance(bare), "Register Bare as an MCP server.");
}

TEST_F(EvidenceTest, CapabilityMatching) {
  const auto& m1 = *corpus.find("m1");
  const auto notes = match_capabilities("youtube transcript", m1);
  ASSERT_EQ(notes.size(), 2u);
  EXPECT_EQ(notes[0], (CapabilityNote{"youtube", "name", m1.name}));
  EXPECT_EQ(notes[1], (CapabilityNote{"transcript", "tools", "get_transcript"}));
  EXPECT_EQ(match_capabilities("youtube transcript", m1, true).size(), 1u);
  EXPECT_EQ(match_capabilities("youtube transcript", m1, false, 1).size(), 1u);
  EXPECT_TRUE(match_capabilities("to of", m1).empty());
}

TEST_F(EvidenceTest, TemplateDraftPassesFirstTime) {
  const TemplateDraftGenerator generator;
  const auto checked = assemble_evidence(input, generator);
  EXPECT_EQ(checked.reliability, Reliability::kPass);
  ASSERT_EQ(checked.draft.cards.size(), 2u);
  const auto& card = checked.draft.cards[0];
  EXPECT_EQ(card.id, "m3");
  EXPECT_EQ(card.rank, 1u);
  EXPECT_EQ(card.explanation, "m3 handles audio");
  EXPECT_EQ(card.language, "go");
  EXPECT_EQ(card.system, "windows");
  EXPECT_FALSE(card.matched.empty());
  const auto json = card.to_json();
  EXPECT_EQ(json["evidence"]["metadata"]["license"], "GPL-3.0");
  EXPECT_EQ(json["evidence"]["repo_url"], corpus.find("m3")->repo_url);
}

TEST_F(EvidenceTest, CardCountIsCappedByList) {
  input.k = 10;
  EXPECT_EQ(TemplateDraftGenerator().generate(input, false).cards.size(), 3u);
  EXPECT_TRUE(reliability_check(TemplateDraftGenerator().generate(input, false), input).ok);
}

TEST_F(EvidenceTest, FallbackListHasNoExplanation) {
  rec.list.status = RerankStatus::kFallback;
  const auto draft = TemplateDraftGenerator().generate(input, false);
  for (const auto& card : draft.cards) EXPECT_TRUE(card.explanation.empty());
  auto tampered = draft;
  tampered.cards[0].explanation = rec.list.explanation;
  EXPECT_EQ(reliability_check(tampered, input).stage, "truthfulness");
}

TEST_F(EvidenceTest, CheckStages) {
  const auto good = TemplateDraftGenerator().generate(input, false);
  ASSERT_TRUE(reliability_check(good, input).ok);
  const auto stage = [&](auto mutate) {
    auto draft = good;
    mutate(draft);
    return reliability_check(draft, input).stage;
  };
  EXPECT_EQ(stage([](ResponseDraft& d) { d.cards[0].name.clear(); }), "format");
  EXPECT_EQ(stage([](ResponseDraft& d) { d.cards[1].rank = 5; }), "format");
  EXPECT_EQ(stage([](ResponseDraft& d) { d.cards[0].scores.fused = std::numeric_limits<double>::quiet_NaN(); }),
            "format");
  EXPECT_EQ(stage([](ResponseDraft& d) { d.cards.pop_back(); }), "correctness");
  EXPECT_EQ(stage([](ResponseDraft& d) { d.cards[1].id = "m9"; }), "correctness");
  EXPECT_EQ(stage([](ResponseDraft& d) { d.cards[1].id = d.cards[0].id; }), "correctness");
  EXPECT_EQ(stage([](ResponseDraft& d) { d.cards[0].license = "mit"; }), "truthfulness");
  EXPECT_EQ(stage([](ResponseDraft& d) { d.cards[0].official = !d.cards[0].official; }), "truthfulness");
  EXPECT_EQ(stage([](ResponseDraft& d) { d.cards[0].scores.semantic += 1e-9; }), "truthfulness");
  EXPECT_EQ(stage([](ResponseDraft& d) { d.cards[0].provenance = Provenance::kExpansion; }), "truthfulness");
  EXPECT_EQ(stage([](ResponseDraft& d) { d.cards[0].guidance += " Fast."; }), "truthfulness");
  EXPECT_EQ(stage([](ResponseDraft& d) { d.cards[0].matched.push_back({"video", "tools", "download_video"}); }),
            "truthfulness");
  EXPECT_EQ(stage([](ResponseDraft& d) { d.cards[0].matched.push_back({"quantum", "description", "x"}); }),
            "truthfulness");
}

class ScriptedGenerator final : public DraftGenerator {
 public:
  ScriptedGenerator(int bad_attempts, bool throws) : bad_attempts_(bad_attempts), throws_(throws) {}
  ResponseDraft generate(const DraftInput& input, bool strict) const override {
    ++calls;
    if (strict) ++strict_calls;
    if (calls <= bad_attempts_) {
      if (throws_) throw std::runtime_error("model offline");
      auto draft = TemplateDraftGenerator().generate(input, strict);
      draft.cards[0].name = "Invented Server";
      return draft;
    }
    return TemplateDraftGenerator().generate(input, strict);
  }
  mutable int calls = 0;
  mutable int strict_calls = 0;

 private:
  int bad_attempts_;
  bool throws_;
};

TEST_F(EvidenceTest, RegenerationAndFallback) {
  const ScriptedGenerator once(1, false);
  const auto regenerated = assemble_evidence(input, once);
  EXPECT_EQ(regenerated.reliability, Reliability::kRegenerated);
  EXPECT_EQ(once.strict_calls, 1);
  ASSERT_EQ(regenerated.failures.size(), 1u);
  EXPECT_EQ(regenerated.failures[0].stage, "truthfulness");
  for (const auto& card : regenerated.draft.cards) {
    EXPECT_TRUE(card.explanation.empty());
    for (const auto& note : card.matched) EXPECT_EQ(note.field, "tools");
  }

  const ScriptedGenerator always(2, false);
  const auto fallback = assemble_evidence(input, always);
  EXPECT_EQ(fallback.reliability, Reliability::kFallback);
  EXPECT_EQ(always.calls, 2);
  EXPECT_EQ(fallback.failures.size(), 2u);
  ASSERT_EQ(fallback.draft.cards.size(), 2u);
  EXPECT_TRUE(fallback.draft.cards[0].matched.empty());
  EXPECT_TRUE(reliability_check(fallback.draft, input).ok);

  const ScriptedGenerator thrower(2, true);
  EXPECT_EQ(assemble_evidence(input, thrower).reliability, Reliability::kFallback);
}

TEST(ReliabilityNameTest, Strings) {
  EXPECT_EQ(to_string(Reliability::kPass), "pass");
  EXPECT_EQ(to_string(Reliability::kRegenerated), "regenerated");
  EXPECT_EQ(to_string(Reliability::kFallback), "fallback");
}

}  // namespace
}  // namespace mcprec
