#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "fixtures.hpp"
#include "lcrr/alignment.hpp"
#include "lcrr/corpus.hpp"
#include "lcrr/errors.hpp"
#include "lcrr/qa_ingest.hpp"
#include "lcrr/task_synthesis.hpp"

using namespace lcrr;
using lcrr::testing::TempDir;

TEST(FormatFacts, BulletsJoinedByNewlines) {
  const std::vector<std::string> facts = {"A", "B"};
  EXPECT_EQ(format_facts(facts), "- A\n- B");
  const std::vector<std::string> one = {"Only one."};
  EXPECT_EQ(format_facts(one), "- Only one.");
}

TEST(FormatFacts, RejectsMalformedFacts) {
  for (const std::vector<std::string>& bad :
       {std::vector<std::string>{}, {""}, {"two\nlines"}, {" padded"}, {"trailing "}})
    EXPECT_THROW(format_facts(bad), ValidationError);
}

TEST(FormatFacts, ParsesBackThroughRetrievalParser) {
  const std::vector<std::string> facts = {"The sky is blue.", "Water boils at 100 degrees - at sea level.",
                                          "- starts with a dash"};
  EXPECT_EQ(parse_retrieval(Strategy::RR, format_facts(facts)).sentences, facts);
}

TEST(BucketCounts, TenthsOfTotal) {
  EXPECT_EQ(bucket_counts(10), (std::array<std::size_t, 4>{1, 2, 3, 4}));
  EXPECT_EQ(bucket_counts(1600), (std::array<std::size_t, 4>{160, 320, 480, 640}));
  EXPECT_EQ(bucket_counts(0), (std::array<std::size_t, 4>{0, 0, 0, 0}));
  EXPECT_THROW(bucket_counts(7), ValidationError);
}

namespace {

std::vector<AlignmentExample> supply(const std::array<std::size_t, 4>& per_bucket) {
  std::vector<AlignmentExample> out;
  for (std::size_t b = 0; b < 4; ++b)
    for (std::size_t i = 0; i < per_bucket[b]; ++i) {
      AlignmentExample ex;
      ex.instance_id = std::to_string(b) + "-" + std::to_string(i);
      ex.bucket = kAlignmentBuckets[b];
      out.push_back(ex);
    }
  return out;
}

}  // namespace

TEST(BucketMix, ExactCountsAndSeededOrder) {
  auto mixed = bucket_mix(supply({50, 50, 50, 50}), 100, 9);
  ASSERT_EQ(mixed.size(), 100u);
  std::map<std::size_t, std::size_t> counts;
  for (const auto& ex : mixed) ++counts[ex.bucket];
  EXPECT_EQ(counts[4096], 10u);
  EXPECT_EQ(counts[8192], 20u);
  EXPECT_EQ(counts[16384], 30u);
  EXPECT_EQ(counts[32768], 40u);
  EXPECT_EQ(mixed, bucket_mix(supply({50, 50, 50, 50}), 100, 9));
  EXPECT_NE(mixed, bucket_mix(supply({50, 50, 50, 50}), 100, 10));
}

TEST(BucketMix, ShortSupplyNamesBucket) {
  try {
    bucket_mix(supply({50, 50, 50, 10}), 100, 1);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("32K"), std::string::npos) << e.what();
  }
}

TEST(AlignmentExample, RemoteCaseTargets) {
  TempDir dir;
  const auto ds = load_hotpotqa(lcrr::testing::write_hotpot_fixture(dir.path(), 40));
  const auto& ex = ds.examples.front();
  ASSERT_EQ(ex.id, "remote-case");
  const auto inst = build_qa_instance(ex, 4096, ds.passages, 5);
  const auto a = build_alignment_example(inst);
  EXPECT_EQ(a.stage2_target, "keyboard function keys");
  // Facts follow their order in the shuffled context.
  auto bullets = parse_retrieval(Strategy::RR, a.stage1_target).sentences;
  EXPECT_EQ(bullets, inst.gold_facts);
  std::vector<std::size_t> offsets;
  for (const auto& b : bullets) offsets.push_back(inst.context.find(b));
  EXPECT_TRUE(std::is_sorted(offsets.begin(), offsets.end()));
  std::sort(bullets.begin(), bullets.end());
  EXPECT_EQ(bullets, (std::vector<std::string>{
                         "It was built to drive the media center program on a desktop machine.",
                         "The handheld remote is an infrared controller sold for several home computers.",
                         "The program is operated with the handheld remote or the keyboard function keys."}));
  EXPECT_EQ(a.bucket, 4096u);
  EXPECT_EQ(a.source, TaskKind::qa_hotpot);
  EXPECT_NE(a.stage1_prompt.find(inst.context), std::string::npos);
  EXPECT_NE(a.stage2_prompt.find(inst.question), std::string::npos);
  EXPECT_EQ(a.stage2_prompt.find(inst.context), std::string::npos);
}

TEST(AlignmentExample, SquadHasOneBullet) {
  TempDir dir;
  const auto ds = load_squad(lcrr::testing::write_squad_fixture(dir.path(), 30));
  const auto inst = build_qa_instance(ds.examples[3], 4096, ds.passages, 2);
  const auto a = build_alignment_example(inst);
  EXPECT_EQ(std::count(a.stage1_target.begin(), a.stage1_target.end(), '\n'), 0);
  EXPECT_EQ(a.stage1_target.rfind("- ", 0), 0u);
  EXPECT_EQ(a.stage2_target, ds.examples[3].answers.front());
}

TEST(AlignmentExample, ContextInStage2WhenRequested) {
  TempDir dir;
  const auto ds = load_squad(lcrr::testing::write_squad_fixture(dir.path(), 30));
  const auto inst = build_qa_instance(ds.examples[0], 4096, ds.passages, 2);
  RenderOptions opts;
  opts.include_context_in_stage2 = true;
  EXPECT_NE(build_alignment_example(inst, opts).stage2_prompt.find(inst.context), std::string::npos);
}

TEST(AlignmentExample, MultiValueTargetJoinsAll) {
  const auto inst = build_niah(NiahVariant::mv, lcrr::synth_filler(5000, 1, Tokenizer::approximate()),
                               4096, 3);
  const auto a = build_alignment_example(inst);
  std::string joined;
  for (const auto& g : inst.gold_answers) joined += (joined.empty() ? "" : ", ") + g;
  EXPECT_EQ(a.stage2_target, joined);
  EXPECT_EQ(parse_retrieval(Strategy::RR, a.stage1_target).sentences, inst.gold_facts);
}

TEST(AlignmentExample, RejectsMismatchedBucketAndEmptyFacts) {
  auto inst = build_niah(NiahVariant::s, lcrr::synth_filler(5000, 1, Tokenizer::approximate()), 4096, 3);
  auto wrong = inst;
  wrong.target_tokens = 8192;
  EXPECT_THROW(build_alignment_example(wrong), ValidationError);
  auto empty = inst;
  empty.gold_facts.clear();
  EXPECT_THROW(build_alignment_example(empty), ValidationError);
}

TEST(AlignmentExample, JsonRoundTrip) {
  auto inst = build_niah(NiahVariant::mk, lcrr::synth_filler(5000, 1, Tokenizer::approximate()), 4096, 8);
  const auto a = build_alignment_example(inst);
  nlohmann::ordered_json j = a;
  EXPECT_EQ(j.get<AlignmentExample>(), a);
}
