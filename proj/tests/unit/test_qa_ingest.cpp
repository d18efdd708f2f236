#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "lcrr/errors.hpp"
#include "lcrr/qa_ingest.hpp"

using namespace lcrr;
using lcrr::testing::TempDir;
using lcrr::testing::write_file;

TEST(Hotpot, LoadsRemoteCase) {
  TempDir dir;
  auto ds = load_hotpotqa(lcrr::testing::write_hotpot_fixture(dir.path(), 5));
  ASSERT_EQ(ds.examples.size(), 5u);
  const auto& ex = ds.examples[0];
  EXPECT_EQ(ex.id, "remote-case");
  EXPECT_EQ(ex.kind, TaskKind::qa_hotpot);
  EXPECT_EQ(ex.answers, std::vector<std::string>{"keyboard function keys"});
  ASSERT_EQ(ex.gold_passages.size(), 2u);
  EXPECT_EQ(ex.gold_passages[0].title, "Handheld Remote");
  auto facts = ex.gold_facts();
  ASSERT_EQ(facts.size(), 3u);
  EXPECT_EQ(facts[1], "It was built to drive the media center program on a desktop machine.");
  EXPECT_EQ(facts[2].find("keyboard function keys") != std::string::npos, true);
  // Pool holds every distinct paragraph across the file.
  EXPECT_EQ(ds.passages.size(), 3u + 4u * 10u);
}

TEST(Hotpot, GeneratedExamplesHaveTwoToSixFacts) {
  TempDir dir;
  auto ds = load_hotpotqa(lcrr::testing::write_hotpot_fixture(dir.path(), 60));
  for (const auto& ex : ds.examples) {
    EXPECT_GE(ex.gold_fact_refs.size(), 2u);
    EXPECT_LE(ex.gold_fact_refs.size(), 6u);
  }
}

TEST(Hotpot, MissingSupportingTitleIsValidationErrorNamingExample) {
  TempDir dir;
  write_file(dir / "h.json", R"([{"_id": "bad1", "question": "q?", "answer": "a",
    "supporting_facts": [["Nope", 0]], "context": [["T", ["S a."]]]}])");
  try {
    load_hotpotqa(dir / "h.json");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("bad1"), std::string::npos);
  }
  std::vector<std::string> rejected;
  LoadOptions opts;
  opts.rejected = &rejected;
  auto ds = load_hotpotqa(dir / "h.json", opts);
  EXPECT_TRUE(ds.examples.empty());
  EXPECT_EQ(rejected.size(), 1u);
}

TEST(Hotpot, OutOfRangeIndexAndMalformedLayout) {
  TempDir dir;
  write_file(dir / "h.json", R"([{"_id": "bad2", "question": "q?", "answer": "a",
    "supporting_facts": [["T", 3]], "context": [["T", ["S a."]]]}])");
  EXPECT_THROW(load_hotpotqa(dir / "h.json"), ValidationError);
  write_file(dir / "m.json", R"([{"_id": "m", "question": "q?", "answer": "a",
    "supporting_facts": [], "context": [["T"]]}])");
  try {
    load_hotpotqa(dir / "m.json");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("$[0].context[0]"), std::string::npos);
  }
  write_file(dir / "x.json", "{not json");
  EXPECT_THROW(load_hotpotqa(dir / "x.json"), InputError);
  EXPECT_THROW(load_hotpotqa(dir / "absent.json"), InputError);
}

TEST(Squad, GoldFactIsFirstSentenceWithAnswer) {
  TempDir dir;
  write_file(dir / "s.json", R"({"data": [{"title": "Remote", "paragraphs": [{
    "context": "The remote is small. It works with the keyboard function keys too.  Also  with apps.",
    "qas": [{"id": "q1", "question": "What else controls it?",
             "answers": [{"text": "keyboard function keys", "answer_start": 40},
                         {"text": "keyboard function keys", "answer_start": 40},
                         {"text": "function keys", "answer_start": 49}]}]}]}]})");
  auto ds = load_squad(dir / "s.json");
  ASSERT_EQ(ds.examples.size(), 1u);
  const auto& ex = ds.examples[0];
  EXPECT_EQ(ex.kind, TaskKind::qa_squad);
  EXPECT_EQ(ex.answers, (std::vector<std::string>{"keyboard function keys", "function keys"}));
  EXPECT_EQ(ex.gold_facts(), std::vector<std::string>{"It works with the keyboard function keys too."});
  EXPECT_EQ(ex.gold_passages[0].text(),
            "The remote is small. It works with the keyboard function keys too. Also with apps.");
  EXPECT_EQ(ds.passages[0].title, "Remote");
}

TEST(Squad, ParagraphTitlesQualifiedAndErrorsPathed) {
  TempDir dir;
  auto ds = load_squad(lcrr::testing::write_squad_fixture(dir.path(), 2, 3));
  ASSERT_EQ(ds.passages.size(), 6u);
  EXPECT_EQ(ds.passages[1].title, "Article 0 (2)");
  for (const auto& ex : ds.examples) EXPECT_EQ(ex.gold_fact_refs.size(), 1u);

  write_file(dir / "bad.json", R"({"data": [{"title": "T", "paragraphs": [{"context": "x.", "qas": [{"id": "q"}]}]}]})");
  try {
    load_squad(dir / "bad.json");
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("$.data[0].paragraphs[0].qas[0]"), std::string::npos);
  }
  write_file(dir / "noans.json", R"({"data": [{"title": "T", "paragraphs": [{"context": "x y.",
    "qas": [{"id": "q9", "question": "?", "answers": [{"text": "zzz", "answer_start": 0}]}]}]}]})");
  EXPECT_THROW(load_squad(dir / "noans.json"), ValidationError);
}

TEST(QaJsonl, LoadsAndValidates) {
  TempDir dir;
  write_file(dir / "q.jsonl",
             R"({"id": "o1", "question": "Q?", "answers": ["A"], "gold_passages": [{"title": "P", "sentences": ["A is here.", "More."]}], "gold_fact_refs": [[0, 0]]})"
             "\n");
  auto ds = load_qa_jsonl(dir / "q.jsonl");
  ASSERT_EQ(ds.examples.size(), 1u);
  EXPECT_EQ(ds.examples[0].kind, TaskKind::qa_other);
  EXPECT_EQ(ds.examples[0].gold_facts(), std::vector<std::string>{"A is here."});
  write_file(dir / "b.jsonl",
             R"({"id": "o2", "question": "Q?", "answers": ["A"], "gold_passages": [{"title": "P", "sentences": ["A."]}], "gold_fact_refs": [[0, 5]]})"
             "\n");
  EXPECT_THROW(load_qa_jsonl(dir / "b.jsonl"), ValidationError);
}

TEST(QaInstance, LengthWindowGoldPresenceAndShuffle) {
  TempDir dir;
  auto ds = load_hotpotqa(lcrr::testing::write_hotpot_fixture(dir.path(), 200));
  for (std::size_t target : {4096u, 16384u}) {
    for (std::size_t e = 0; e < 5; ++e) {
      auto inst = build_qa_instance(ds.examples[e], target, ds.passages, e);
      const auto n = count_tokens(inst.context);
      EXPECT_LE(n, target);
      EXPECT_GE(static_cast<double>(n), 0.95 * static_cast<double>(target));
      validate_instance(inst);
      for (const auto& p : ds.examples[e].gold_passages)
        EXPECT_NE(inst.context.find("Title: " + p.title + "\n" + p.text() + "\n\n"), std::string::npos);
      EXPECT_EQ(inst.id, "qa-hotpot-" + ds.examples[e].id);
    }
  }
  auto a = build_qa_instance(ds.examples[1], 4096, ds.passages, 1);
  EXPECT_EQ(a, build_qa_instance(ds.examples[1], 4096, ds.passages, 1));
  EXPECT_NE(a.context, build_qa_instance(ds.examples[1], 4096, ds.passages, 2).context);
}

TEST(QaInstance, DistractorsNeverRepeatGoldTitles) {
  TempDir dir;
  auto ds = load_hotpotqa(lcrr::testing::write_hotpot_fixture(dir.path(), 100));
  auto inst = build_qa_instance(ds.examples[3], 8192, ds.passages, 3);
  for (const auto& p : ds.examples[3].gold_passages) {
    const std::string header = "Title: " + p.title + "\n";
    auto first = inst.context.find(header);
    ASSERT_NE(first, std::string::npos);
    EXPECT_EQ(inst.context.find(header, first + 1), std::string::npos);
  }
}

TEST(QaInstance, ZeroTargetIsGoldOnlyAndErrors) {
  TempDir dir;
  auto ds = load_hotpotqa(lcrr::testing::write_hotpot_fixture(dir.path(), 20));
  auto inst = build_qa_instance(ds.examples[0], 0, ds.passages, 0);
  EXPECT_EQ(inst.context.find("Streaming Box"), std::string::npos);
  EXPECT_NE(inst.context.find("Handheld Remote"), std::string::npos);
  EXPECT_THROW(build_qa_instance(ds.examples[0], 20, ds.passages, 0), ValidationError);
  EXPECT_THROW(build_qa_instance(ds.examples[0], 1 << 20, ds.passages, 0), ValidationError);
}

TEST(QaInstance, RenderPassageBlock) {
  Passage p{"T", {"One.", "", "Two."}};
  EXPECT_EQ(render_passage_block(p), "Title: T\nOne. Two.\n\n");
}
