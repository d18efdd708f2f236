#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcrr/alignment.hpp"
#include "lcrr/backend.hpp"
#include "lcrr/corpus.hpp"
#include "lcrr/instance.hpp"
#include "lcrr/metrics.hpp"
#include "lcrr/prompts.hpp"
#include "lcrr/qa_ingest.hpp"
#include "lcrr/task_synthesis.hpp"

namespace lcrr {

inline constexpr std::size_t kDefaultCasesPerCell = 500;

// ---------------------------------------------------------------- records

// Result of one instance under one strategy and backend.
struct RunRecord {
  std::string instance_id;
  TaskKind task_kind = TaskKind::qa_other;
  std::size_t target_tokens = 0;
  Strategy strategy = Strategy::DA;
  std::vector<StageTranscript> transcripts;
  std::optional<RetrievalTrace> retrieval_trace;
  std::string extracted_answer;
  std::vector<std::string> answer_warnings;
  int em = 0;
  double wall_time_ms = 0;
  std::optional<std::string> error;
};

void to_json(nlohmann::ordered_json& j, const RunRecord& r);
void from_json(const nlohmann::ordered_json& j, RunRecord& r);

// Record JSON with wall-time fields removed, for reproducibility checks.
nlohmann::ordered_json without_timing(const RunRecord& r);

namespace detail {
// Instance files named by the inputs: files as given, directories expanded
// to their *.jsonl (or those of an instances/ subdirectory), sorted.
std::vector<std::filesystem::path> expand_instance_inputs(
    std::span<const std::filesystem::path> inputs);
}  // namespace detail

// ---------------------------------------------------------------- run

struct RunOptions {
  Strategy strategy = Strategy::RR;
  BackendConfig backend;
  RenderOptions render;
  std::size_t workers = 1;
  std::size_t retrieval_max_tokens = 1024;
  std::size_t answer_max_tokens = 256;
  double temperature = 0.0;
  // Stop after this many new records, as if interrupted.
  std::optional<std::size_t> limit;
};

// Executes dialogue plans against a backend. The backend is built (and the
// config validated) on construction, before any request is issued.
class Runner {
 public:
  explicit Runner(RunOptions options);

  const RunOptions& options() const { return options_; }

  // Never throws for per-instance failures; they land in RunRecord::error.
  RunRecord run_one(const LongContextInstance& inst);

  // Runs with a bounded worker pool; `sink` receives records in input order
  // on the calling thread. Returns the number of records produced.
  std::size_t run(std::span<const LongContextInstance> instances,
                  const std::function<void(RunRecord&&)>& sink);

 private:
  RunOptions options_;
  DialoguePlan plan_;
  std::shared_ptr<SideChannel> side_channel_;
  std::unique_ptr<Backend> backend_;
};

struct RunSummary {
  std::size_t total = 0;
  std::size_t skipped = 0;  // already present in the records file
  std::size_t executed = 0;
  std::size_t failed = 0;
};

// Ids of complete records in a records file. A truncated trailing line, as
// left by an interrupted writer, is cut from the file.
std::vector<std::string> recover_records_file(const std::filesystem::path& path);

// Sorts instances by id, skips ids already recorded, and appends new records
// to `records_path` in id order.
RunSummary run_to_file(std::vector<LongContextInstance> instances, const RunOptions& options,
                       const std::filesystem::path& records_path);

std::vector<RunRecord> read_records(const std::filesystem::path& path);

// The `run` step: records.jsonl plus run_manifest.json under out_dir.
nlohmann::ordered_json run_step(std::span<const std::filesystem::path> instance_inputs,
                                const RunOptions& options, const std::filesystem::path& out_dir);

// All instances from files or directories (every *.jsonl in a directory).
std::vector<LongContextInstance> load_instance_inputs(
    std::span<const std::filesystem::path> inputs);

// ---------------------------------------------------------------- synth

struct SynthConfig {
  std::vector<TaskKind> tasks;
  std::vector<std::size_t> lengths;
  std::size_t cases_per_cell = kDefaultCasesPerCell;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> corpus;
  CorpusFormat corpus_format = CorpusFormat::plain_text_dir;
  std::optional<std::filesystem::path> squad;
  std::optional<std::filesystem::path> hotpot;
  std::optional<std::filesystem::path> qa_other;
  SynthesisOptions synthesis;
  std::filesystem::path out_dir;
};

// Loaded inputs shared by every synthesized cell.
class SynthSources {
 public:
  SynthSources(std::optional<Corpus> corpus, SynthesisOptions options);

  void set_dataset(TaskKind kind, QaDataset dataset);
  const QaDataset& dataset(TaskKind kind) const;

  std::string filler(std::size_t budget, std::uint64_t seed) const;
  const SynthesisOptions& options() const { return options_; }

 private:
  std::optional<Corpus> corpus_;
  SynthesisOptions options_;
  std::map<TaskKind, QaDataset> datasets_;
};

SynthSources load_sources(const SynthConfig& config);

// Seed of case `index` in the (task, length) cell.
std::uint64_t case_seed(std::uint64_t seed, TaskKind task, std::size_t length, std::size_t index);
std::string case_id(TaskKind task, std::size_t length, std::size_t index);

LongContextInstance synthesize_case(const SynthSources& sources, TaskKind task,
                                    std::size_t length, std::size_t index, std::uint64_t seed);

std::vector<LongContextInstance> synthesize_cell(const SynthSources& sources, TaskKind task,
                                                 std::size_t length, std::size_t cases,
                                                 std::uint64_t seed);

// Writes instances/<task>_<label>.jsonl per cell plus manifest.json; returns
// the manifest.
nlohmann::ordered_json run_synth(const SynthConfig& config);

// ---------------------------------------------------------------- score

// Reports per task kind.
using ScoreReport = std::map<TaskKind, MetricReport>;

ScoreReport score_records(std::span<const RunRecord> records,
                          std::span<const LongContextInstance> instances);

// Streams records and instance files; writes metrics.json and metrics.txt
// into out_dir. Throws ValidationError for an empty record set.
ScoreReport run_score(const std::filesystem::path& records_path,
                      std::span<const std::filesystem::path> instance_inputs,
                      const std::filesystem::path& out_dir);

nlohmann::ordered_json score_to_json(const ScoreReport& report);
ScoreReport score_from_json(const nlohmann::ordered_json& j);

// One table section per task kind; rows are prefixed with each report's label.
std::string render_score_table(std::span<const std::pair<std::string, ScoreReport>> labelled);
std::string render_score_table(const ScoreReport& report);

// The `report` step: combines labelled metrics.json files into report.txt
// and report.json. Returns the rendered text.
std::string run_report(std::span<const std::pair<std::string, std::filesystem::path>> inputs,
                       const std::filesystem::path& out_dir);

// ---------------------------------------------------------------- align

struct AlignConfig {
  std::optional<std::filesystem::path> hotpot;
  std::optional<std::filesystem::path> squad;
  std::size_t hotpot_count = 5000;
  std::size_t squad_count = 25000;
  std::size_t niah_count = 1600;
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> corpus;
  CorpusFormat corpus_format = CorpusFormat::plain_text_dir;
  SynthesisOptions synthesis;
  RenderOptions render;
  std::filesystem::path out_dir;
};

struct AlignPlan {
  // source name (qa-hotpot, qa-squad, niah) -> count per bucket
  std::vector<std::pair<std::string, std::array<std::size_t, 4>>> sources;
  std::size_t total() const;
};

AlignPlan plan_alignment(const AlignConfig& config);

// Writes alignment.jsonl and align_manifest.json; returns the manifest.
// Every example is checked to parse back to its gold facts.
nlohmann::ordered_json run_align(const AlignConfig& config);

}  // namespace lcrr
