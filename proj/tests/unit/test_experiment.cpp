#include <gtest/gtest.h>

#include <cstdlib>
#include <set>

#include "fixtures.hpp"
#include "lcrr/errors.hpp"
#include "lcrr/experiment.hpp"
#include "lcrr/jsonl.hpp"

using namespace lcrr;
using lcrr::testing::TempDir;
using lcrr::testing::read_file;
using lcrr::testing::write_file;
namespace fs = std::filesystem;

namespace {

std::vector<LongContextInstance> small_set(std::size_t per_cell = 4) {
  SynthSources sources(std::nullopt, SynthesisOptions{});
  std::vector<LongContextInstance> out;
  for (TaskKind t : {TaskKind::passkey2, TaskKind::mv_niah, TaskKind::s_niah})
    for (std::size_t len : {std::size_t{0}, std::size_t{4096}})
      for (auto& inst : synthesize_cell(sources, t, len, per_cell, 11)) out.push_back(std::move(inst));
  return out;
}

std::vector<nlohmann::ordered_json> stripped(const std::vector<RunRecord>& records) {
  std::vector<nlohmann::ordered_json> out;
  for (const auto& r : records) out.push_back(without_timing(r));
  return out;
}

}  // namespace

TEST(Runner, StagesPerStrategy) {
  const auto insts = small_set(1);
  for (auto [s, stages] : {std::pair{Strategy::DA, 1u}, {Strategy::RR, 2u}, {Strategy::QF, 1u},
                           {Strategy::S2A, 2u}}) {
    RunOptions opts;
    opts.strategy = s;
    Runner runner(opts);
    for (const auto& inst : insts) {
      const RunRecord r = runner.run_one(inst);
      ASSERT_FALSE(r.error) << *r.error;
      EXPECT_EQ(r.transcripts.size(), stages);
      EXPECT_EQ(r.em, 1) << inst.id << " " << to_string(s);
      EXPECT_EQ(r.retrieval_trace.has_value(), s != Strategy::DA);
      if (r.retrieval_trace) EXPECT_EQ(r.retrieval_trace->sentences, inst.gold_facts);
    }
  }
}

TEST(Runner, ParallelOrderMatchesSerial) {
  const auto insts = small_set(6);
  auto collect = [&](std::size_t workers) {
    RunOptions opts;
    opts.workers = workers;
    opts.backend.kind = BackendKind::scripted_hallucinator;
    opts.backend.hallucination_p = 0.5;
    opts.backend.seed = 4;
    Runner runner(opts);
    std::vector<RunRecord> out;
    runner.run(insts, [&](RunRecord&& r) { out.push_back(std::move(r)); });
    return out;
  };
  const auto serial = collect(1);
  ASSERT_EQ(serial.size(), insts.size());
  for (std::size_t i = 0; i < insts.size(); ++i) EXPECT_EQ(serial[i].instance_id, insts[i].id);
  EXPECT_EQ(stripped(collect(4)), stripped(serial));
}

TEST(Runner, PerInstanceFailureLandsInRecord) {
  ::setenv("LCRR_TEST_TOKEN", "t", 1);
  RunOptions opts;
  opts.backend.kind = BackendKind::http_chat;
  opts.backend.http.endpoint = "http://127.0.0.1:1/v1/chat/completions";
  opts.backend.http.model = "m";
  opts.backend.http.auth_env = "LCRR_TEST_TOKEN";
  opts.backend.http.max_attempts = 1;
  Runner runner(opts);
  const RunRecord r = runner.run_one(small_set(1).front());
  ASSERT_TRUE(r.error.has_value());
  EXPECT_EQ(r.em, 0);
  ::unsetenv("LCRR_TEST_TOKEN");
}

TEST(Runner, FixedOutputScoresZeroWithoutError) {
  RunOptions opts;
  opts.strategy = Strategy::QF;
  opts.backend.kind = BackendKind::scripted_fixed;
  opts.backend.fixed_text = "I do not know.";
  Runner runner(opts);
  const RunRecord r = runner.run_one(small_set(1).front());
  EXPECT_FALSE(r.error);
  EXPECT_EQ(r.em, 0);
  EXPECT_FALSE(r.answer_warnings.empty());
}

TEST(Runner, RejectsZeroWorkers) {
  RunOptions opts;
  opts.workers = 0;
  EXPECT_THROW(Runner{opts}, ConfigError);
}

TEST(RunRecord, JsonRoundTrip) {
  Runner runner(RunOptions{});
  const RunRecord r = runner.run_one(small_set(1).back());
  nlohmann::ordered_json j = r;
  const RunRecord back = j.get<RunRecord>();
  EXPECT_EQ(without_timing(back), without_timing(r));
  EXPECT_FALSE(without_timing(r).contains("wall_time_ms"));
}

TEST(RunToFile, ResumeEqualsUninterrupted) {
  TempDir dir;
  auto insts = small_set(5);
  RunOptions opts;
  opts.workers = 3;
  const auto full = dir / "full.jsonl";
  auto s = run_to_file(insts, opts, full);
  EXPECT_EQ(s.executed, insts.size());

  const auto resumed = dir / "resumed.jsonl";
  opts.limit = 7;
  s = run_to_file(insts, opts, resumed);
  EXPECT_EQ(s.executed, 7u);
  // Simulate a writer killed mid-line.
  {
    std::ofstream out(resumed, std::ios::app | std::ios::binary);
    out << R"({"instance_id": "half)";
  }
  opts.limit.reset();
  s = run_to_file(insts, opts, resumed);
  EXPECT_EQ(s.skipped, 7u);
  EXPECT_EQ(s.executed, insts.size() - 7);
  EXPECT_EQ(stripped(read_records(resumed)), stripped(read_records(full)));
  // Nothing left to do.
  s = run_to_file(insts, opts, resumed);
  EXPECT_EQ(s.executed, 0u);
}

TEST(RunToFile, RecoverTruncatesPartialTail) {
  TempDir dir;
  const auto path = dir / "r.jsonl";
  Runner runner(RunOptions{});
  const auto insts = small_set(1);
  nlohmann::ordered_json j = runner.run_one(insts[0]);
  write_file(path, j.dump() + "\n{\"instance_id\": \"x");
  const auto ids = recover_records_file(path);
  ASSERT_EQ(ids.size(), 1u);
  EXPECT_EQ(ids[0], insts[0].id);
  EXPECT_EQ(read_file(path), j.dump() + "\n");
  EXPECT_TRUE(recover_records_file(dir / "missing.jsonl").empty());
}

TEST(RunToFile, DuplicateInstanceIdsRejected) {
  TempDir dir;
  auto insts = small_set(1);
  insts.push_back(insts.front());
  EXPECT_THROW(run_to_file(insts, RunOptions{}, dir / "r.jsonl"), ValidationError);
}

TEST(Synth, DeterministicWithManifest) {
  TempDir a, b;
  SynthConfig cfg;
  cfg.tasks = {TaskKind::passkey1, TaskKind::mk_niah, TaskKind::qa_hotpot};
  cfg.lengths = {0, 4096};
  cfg.cases_per_cell = 3;
  cfg.seed = 21;
  cfg.hotpot = lcrr::testing::write_hotpot_fixture(a.path(), 30);
  cfg.out_dir = a / "out";
  const auto m1 = run_synth(cfg);
  cfg.out_dir = b / "out";
  const auto m2 = run_synth(cfg);
  EXPECT_EQ(m1.dump(), m2.dump());
  EXPECT_EQ(read_file(a / "out/manifest.json"), read_file(b / "out/manifest.json"));
  EXPECT_EQ(m1["instance_count"], 18);
  ASSERT_EQ(m1["cells"].size(), 6u);
  EXPECT_EQ(m1["cells"][1]["file"], "instances/passkey1_4K.jsonl");
  for (const auto& cell : m1["cells"]) {
    const auto path = a / ("out/" + cell["file"].get<std::string>());
    EXPECT_EQ(cell["sha256"], jsonl::sha256_file(path));
    const auto insts = read_instances(path);
    ASSERT_EQ(insts.size(), 3u);
    EXPECT_EQ(insts[2].id, cell["task"].get<std::string>() + "-" + cell["length"].get<std::string>() + "-00002");
  }
}

TEST(Synth, ShortDatasetNamesCell) {
  TempDir dir;
  SynthConfig cfg;
  cfg.tasks = {TaskKind::qa_squad};
  cfg.lengths = {4096};
  cfg.cases_per_cell = 50;
  cfg.squad = lcrr::testing::write_squad_fixture(dir.path(), 4);
  cfg.out_dir = dir / "out";
  try {
    run_synth(cfg);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("qa-squad/4K"), std::string::npos) << e.what();
  }
}

TEST(Synth, ConfigErrors) {
  SynthConfig cfg;
  cfg.out_dir = "/tmp/unused";
  EXPECT_THROW(run_synth(cfg), ConfigError);
  cfg.tasks = {TaskKind::qa_squad};
  cfg.lengths = {4096};
  EXPECT_THROW(run_synth(cfg), ConfigError);
}

TEST(Score, EmptyRecordSetIsAnError) {
  TempDir dir;
  write_file(dir / "records.jsonl", "");
  write_instances(dir / "inst.jsonl", small_set(1));
  const std::vector<fs::path> inputs = {dir / "inst.jsonl"};
  EXPECT_THROW(run_score(dir / "records.jsonl", inputs, dir / "out"), ValidationError);
  EXPECT_THROW(score_records({}, {}), ValidationError);
}

TEST(Score, BucketsAndOverall) {
  const auto insts = small_set(2);
  Runner runner(RunOptions{});
  std::vector<RunRecord> records;
  for (const auto& inst : insts) {
    if (inst.task_kind != TaskKind::s_niah) continue;
    RunRecord r = runner.run_one(inst);
    // One of the two 4K cases answers wrong.
    if (inst.target_tokens == 4096 && inst.id.ends_with("00001")) r.extracted_answer = "nope";
    records.push_back(std::move(r));
  }
  const auto report = score_records(records, insts);
  ASSERT_EQ(report.size(), 1u);
  const auto& rep = report.at(TaskKind::s_niah);
  EXPECT_DOUBLE_EQ(rep.per_bucket.at(0).em, 100.0);
  EXPECT_DOUBLE_EQ(rep.per_bucket.at(4096).em, 50.0);
  EXPECT_DOUBLE_EQ(rep.overall.em, 75.0);
  EXPECT_DOUBLE_EQ(*rep.overall.hallucination, 0.0);
}

TEST(Score, StreamingMatchesInMemoryAndWritesOutputs) {
  TempDir dir;
  const auto insts = small_set(3);
  RunOptions opts;
  opts.backend.kind = BackendKind::scripted_hallucinator;
  opts.backend.hallucination_p = 0.25;
  run_to_file(insts, opts, dir / "records.jsonl");
  write_instances(dir / "instances/a.jsonl", insts);
  const std::vector<fs::path> inputs = {dir.path()};
  const auto streamed = run_score(dir / "records.jsonl", inputs, dir / "score");
  const auto records = read_records(dir / "records.jsonl");
  EXPECT_EQ(score_to_json(streamed).dump(), score_to_json(score_records(records, insts)).dump());
  EXPECT_TRUE(fs::exists(dir / "score/metrics.json"));
  EXPECT_TRUE(fs::exists(dir / "score/score_manifest.json"));
  EXPECT_EQ(read_file(dir / "score/metrics.txt"), render_score_table(streamed));
  const auto back = score_from_json(nlohmann::ordered_json::parse(read_file(dir / "score/metrics.json")));
  EXPECT_EQ(score_to_json(back).dump(), score_to_json(streamed).dump());
}

TEST(Score, UnknownOrDuplicateRecordsRejected) {
  TempDir dir;
  const auto insts = small_set(1);
  write_instances(dir / "inst.jsonl", insts);
  Runner runner(RunOptions{});
  nlohmann::ordered_json j = runner.run_one(insts[0]);
  const std::vector<fs::path> inputs = {dir / "inst.jsonl"};
  write_file(dir / "dup.jsonl", j.dump() + "\n" + j.dump() + "\n");
  EXPECT_THROW(run_score(dir / "dup.jsonl", inputs, dir / "o"), ValidationError);
  j["instance_id"] = "ghost";
  write_file(dir / "ghost.jsonl", j.dump() + "\n");
  EXPECT_THROW(run_score(dir / "ghost.jsonl", inputs, dir / "o"), ValidationError);
}

TEST(Report, DashesForMissingBuckets) {
  TempDir dir;
  ScoreReport a, b;
  MetricReport ra;
  ra.per_bucket[4096].em = 80;
  ra.per_bucket[8192].em = 70;
  ra.overall.em = 75;
  a[TaskKind::s_niah] = ra;
  MetricReport rb;
  rb.per_bucket[4096].em = 60;
  rb.overall.em = 60;
  b[TaskKind::s_niah] = rb;
  write_file(dir / "a/metrics.json", score_to_json(a).dump());
  write_file(dir / "b.json", score_to_json(b).dump());
  const std::vector<std::pair<std::string, fs::path>> inputs = {{"full", dir / "a"},
                                                                {"capped", dir / "b.json"}};
  const std::string text = run_report(inputs, dir / "out");
  EXPECT_NE(text.find("[s-niah]"), std::string::npos) << text;
  EXPECT_NE(text.find("full EM"), std::string::npos) << text;
  EXPECT_NE(text.find("-"), std::string::npos);
  EXPECT_EQ(read_file(dir / "out/report.txt"), text);
  EXPECT_TRUE(fs::exists(dir / "out/report_manifest.json"));
  const std::vector<std::pair<std::string, fs::path>> twice = {{"x", dir / "a"}, {"x", dir / "b.json"}};
  EXPECT_THROW(run_report(twice, dir / "out2"), ConfigError);
  const std::vector<std::pair<std::string, fs::path>> none;
  EXPECT_THROW(run_report(none, dir / "out"), ConfigError);
}

TEST(Align, CountsRoundTripDeterminism) {
  TempDir a, b;
  AlignConfig cfg;
  cfg.hotpot = lcrr::testing::write_hotpot_fixture(a.path(), 150);
  cfg.squad = lcrr::testing::write_squad_fixture(a.path(), 120, 6);
  cfg.hotpot_count = 10;
  cfg.squad_count = 20;
  cfg.niah_count = 10;
  cfg.seed = 3;
  cfg.out_dir = a / "out";
  const auto m1 = run_align(cfg);
  cfg.out_dir = b / "out";
  const auto m2 = run_align(cfg);
  EXPECT_EQ(read_file(a / "out/alignment.jsonl"), read_file(b / "out/alignment.jsonl"));
  EXPECT_EQ(m1.dump(), m2.dump());
  EXPECT_EQ(m1["total"], 40);
  EXPECT_EQ(m1["bucket_totals"]["4K"], 4);
  EXPECT_EQ(m1["bucket_totals"]["32K"], 16);
  EXPECT_EQ(m1["counts"]["qa-squad"]["16K"], 6);

  std::set<std::string> ids;
  std::size_t n = 0;
  jsonl::for_each(a / "out/alignment.jsonl", [&](const nlohmann::ordered_json& j) {
    const auto ex = j.get<AlignmentExample>();
    ++n;
    EXPECT_TRUE(ids.insert(ex.instance_id).second);
    const auto bullets = parse_retrieval(Strategy::RR, ex.stage1_target).sentences.size();
    if (ex.source == TaskKind::qa_squad) EXPECT_EQ(bullets, 1u);
    if (ex.source == TaskKind::qa_hotpot) {
      EXPECT_GE(bullets, 2u);
      EXPECT_LE(bullets, 6u);
    }
  });
  EXPECT_EQ(n, 40u);
}

TEST(Align, PlanErrors) {
  AlignConfig cfg;
  EXPECT_THROW(plan_alignment(cfg), ConfigError);
  cfg.hotpot_count = 0;
  cfg.squad_count = 0;
  cfg.niah_count = 0;
  EXPECT_THROW(plan_alignment(cfg), ConfigError);
  cfg.niah_count = 1600;
  const auto plan = plan_alignment(cfg);
  ASSERT_EQ(plan.sources.size(), 1u);
  EXPECT_EQ(plan.sources[0].second, (std::array<std::size_t, 4>{160, 320, 480, 640}));
}

TEST(Align, ShortSourceNamesBucket) {
  TempDir dir;
  AlignConfig cfg;
  cfg.squad = lcrr::testing::write_squad_fixture(dir.path(), 2);
  cfg.hotpot_count = 0;
  cfg.niah_count = 0;
  cfg.squad_count = 30;
  cfg.out_dir = dir / "out";
  try {
    run_align(cfg);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("qa-squad"), std::string::npos) << e.what();
  }
}
