// lcrr: synthesize long-context tasks, run prompting strategies against a
// backend, score runs, build alignment data and render report tables.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "lcrr/errors.hpp"
#include "lcrr/experiment.hpp"

namespace fs = std::filesystem;
using namespace lcrr;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInput = 3;
constexpr int kExitBackend = 4;
constexpr int kExitInternal = 5;

constexpr const char* kDefaultAuthEnv = "LCRR_API_TOKEN";

std::vector<std::size_t> parse_lengths(const std::vector<std::string>& labels) {
  std::vector<std::size_t> out;
  for (const auto& l : labels) out.push_back(parse_length(l));
  return out;
}

std::vector<TaskKind> parse_tasks(const std::vector<std::string>& names) {
  std::vector<TaskKind> out;
  for (const auto& n : names) out.push_back(task_kind_from_string(n));
  return out;
}

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

struct SynthArgs {
  std::string out, corpus, corpus_format = "plain-text-dir", squad, hotpot, qa_jsonl;
  std::string tokenizer = "approximate-default";
  std::vector<std::string> tasks, lengths;
  std::size_t cases = kDefaultCasesPerCell;
  std::uint64_t seed = 0;
  std::size_t mk_needles = 4, mv_values = 4, mq_needles = 4, mq_queries = 2;
};

struct RunArgs {
  std::string out, strategy = "rr", backend = "scripted-oracle";
  std::vector<std::string> instances;
  std::string endpoint, model, auth_env = kDefaultAuthEnv, fixed_text;
  long timeout_ms = 600000;
  int max_attempts = 5;
  long backoff_ms = 1000, max_backoff_ms = 30000, delay_ms = 0;
  std::size_t workers = 1, max_in_flight = 8, retrieval_max_tokens = 1024, answer_max_tokens = 256;
  std::size_t limit = 0;
  double temperature = 0.0, hallucination_p = 0.0;
  std::uint64_t seed = 0;
  bool include_context = false;
};

struct ScoreArgs {
  std::string out, records;
  std::vector<std::string> instances;
};

struct AlignArgs {
  std::string out, hotpot, squad, corpus, corpus_format = "plain-text-dir";
  std::string tokenizer = "approximate-default";
  std::size_t hotpot_count = 5000, squad_count = 25000, niah_count = 1600;
  std::uint64_t seed = 0;
  bool include_context = false;
};

struct ReportArgs {
  std::string out;
  std::vector<std::string> inputs;
};

int cmd_synth(const SynthArgs& a) {
  SynthConfig c;
  c.tasks = parse_tasks(a.tasks);
  c.lengths = parse_lengths(a.lengths);
  c.cases_per_cell = a.cases;
  c.seed = a.seed;
  c.corpus = opt_path(a.corpus);
  c.corpus_format = corpus_format_from_string(a.corpus_format);
  c.squad = opt_path(a.squad);
  c.hotpot = opt_path(a.hotpot);
  c.qa_other = opt_path(a.qa_jsonl);
  c.synthesis.tokenizer = tokenizer_from_config(a.tokenizer);
  c.synthesis.mk_needles = a.mk_needles;
  c.synthesis.mv_values = a.mv_values;
  c.synthesis.mq_needles = a.mq_needles;
  c.synthesis.mq_queries = a.mq_queries;
  c.out_dir = a.out;
  const auto m = run_synth(c);
  std::printf("synth: %zu instances in %zu cells -> %s\n", m["instance_count"].get<std::size_t>(),
              m["cells"].size(), a.out.c_str());
  return 0;
}

int cmd_run(const RunArgs& a) {
  RunOptions o;
  o.strategy = strategy_from_string(a.strategy);
  o.backend.kind = backend_kind_from_string(a.backend);
  o.backend.http.endpoint = a.endpoint;
  o.backend.http.model = a.model;
  o.backend.http.auth_env = a.auth_env;
  o.backend.http.timeout = std::chrono::milliseconds(a.timeout_ms);
  o.backend.http.max_attempts = a.max_attempts;
  o.backend.http.initial_backoff = std::chrono::milliseconds(a.backoff_ms);
  o.backend.http.max_backoff = std::chrono::milliseconds(a.max_backoff_ms);
  o.backend.http.max_in_flight = a.max_in_flight;
  o.backend.fixed_text = a.fixed_text;
  o.backend.hallucination_p = a.hallucination_p;
  o.backend.seed = a.seed;
  o.backend.delay = std::chrono::milliseconds(a.delay_ms);
  o.render.include_context_in_stage2 = a.include_context;
  o.workers = a.workers;
  o.retrieval_max_tokens = a.retrieval_max_tokens;
  o.answer_max_tokens = a.answer_max_tokens;
  o.temperature = a.temperature;
  if (a.limit > 0) o.limit = a.limit;
  std::vector<fs::path> inputs(a.instances.begin(), a.instances.end());
  const auto m = run_step(inputs, o, a.out);
  std::printf("run: %zu total, %zu skipped, %zu executed, %zu failed -> %s\n",
              m["total"].get<std::size_t>(), m["skipped"].get<std::size_t>(),
              m["executed"].get<std::size_t>(), m["failed"].get<std::size_t>(),
              (fs::path(a.out) / "records.jsonl").c_str());
  return 0;
}

int cmd_score(const ScoreArgs& a) {
  const fs::path records = a.records.empty() ? fs::path(a.out) / "records.jsonl" : fs::path(a.records);
  std::vector<fs::path> inputs(a.instances.begin(), a.instances.end());
  const auto report = run_score(records, inputs, a.out);
  std::cout << render_score_table(report);
  return 0;
}

int cmd_align(const AlignArgs& a) {
  AlignConfig c;
  c.hotpot = opt_path(a.hotpot);
  c.squad = opt_path(a.squad);
  c.hotpot_count = a.hotpot_count;
  c.squad_count = a.squad_count;
  c.niah_count = a.niah_count;
  c.seed = a.seed;
  c.corpus = opt_path(a.corpus);
  c.corpus_format = corpus_format_from_string(a.corpus_format);
  c.synthesis.tokenizer = tokenizer_from_config(a.tokenizer);
  c.render.include_context_in_stage2 = a.include_context;
  c.out_dir = a.out;
  const auto m = run_align(c);
  std::printf("align: %zu examples -> %s\n", m["total"].get<std::size_t>(),
              (fs::path(a.out) / "alignment.jsonl").c_str());
  return 0;
}

int cmd_report(const ReportArgs& a) {
  std::vector<std::pair<std::string, fs::path>> inputs;
  for (const auto& spec : a.inputs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      // Unlabelled: name of the run directory.
      fs::path p = fs::path(spec).lexically_normal();
      if (p.filename().empty()) p = p.parent_path();
      const fs::path dir = fs::is_directory(p) ? p : p.parent_path();
      inputs.emplace_back(dir.filename().string(), spec);
    } else {
      inputs.emplace_back(spec.substr(0, eq), spec.substr(eq + 1));
    }
  }
  std::cout << run_report(inputs, a.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Long-context retrieve-then-reason evaluation harness"};
  app.set_config("--config", "", "Key-value config file (INI/TOML style; [section] per subcommand)");
  app.require_subcommand(1);

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Synthesize task instances per (task, length) cell");
  synth->add_option("--out", sa.out, "Output directory")->required();
  synth->add_option("--tasks", sa.tasks, "Task kinds, e.g. passkey1,s-niah,qa-hotpot")
      ->delimiter(',')->required();
  synth->add_option("--lengths", sa.lengths, "Length grid, e.g. 0K,4K,16K")->delimiter(',')->required();
  synth->add_option("--cases", sa.cases, "Cases per cell")->capture_default_str();
  synth->add_option("--seed", sa.seed, "Base seed")->capture_default_str();
  synth->add_option("--corpus", sa.corpus, "Filler corpus (default: synthetic filler)");
  synth->add_option("--corpus-format", sa.corpus_format, "plain-text-dir or jsonl")->capture_default_str();
  synth->add_option("--squad", sa.squad, "SQuAD v1.1 JSON file");
  synth->add_option("--hotpot", sa.hotpot, "HotpotQA distractor JSON file");
  synth->add_option("--qa-jsonl", sa.qa_jsonl, "Pre-flattened QA JSONL (task qa-other)");
  synth->add_option("--tokenizer", sa.tokenizer, "approximate-default or plugin:<name>")->capture_default_str();
  synth->add_option("--mk-needles", sa.mk_needles)->capture_default_str();
  synth->add_option("--mv-values", sa.mv_values)->capture_default_str();
  synth->add_option("--mq-needles", sa.mq_needles)->capture_default_str();
  synth->add_option("--mq-queries", sa.mq_queries)->capture_default_str();

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Run a prompting strategy over instances");
  run->add_option("--out", ra.out, "Output directory")->required();
  run->add_option("--instances", ra.instances, "Instance files or directories")->required();
  run->add_option("--strategy", ra.strategy, "da|rr|qf|s2a")->capture_default_str();
  run->add_option("--backend", ra.backend,
                  "http-chat|scripted-oracle|scripted-hallucinator|scripted-fixed")->capture_default_str();
  run->add_option("--endpoint", ra.endpoint, "Chat-completions URL (http-chat)");
  run->add_option("--model", ra.model, "Model name (http-chat)");
  run->add_option("--auth-env", ra.auth_env, "Env var holding the bearer token")->capture_default_str();
  run->add_option("--timeout-ms", ra.timeout_ms)->capture_default_str();
  run->add_option("--max-attempts", ra.max_attempts)->capture_default_str();
  run->add_option("--backoff-ms", ra.backoff_ms)->capture_default_str();
  run->add_option("--max-backoff-ms", ra.max_backoff_ms)->capture_default_str();
  run->add_option("--max-in-flight", ra.max_in_flight)->capture_default_str();
  run->add_option("--workers", ra.workers, "Concurrent instances")->capture_default_str();
  run->add_option("--seed", ra.seed)->capture_default_str();
  run->add_option("--hallucination-p", ra.hallucination_p, "Fraction of fabricated facts")->capture_default_str();
  run->add_option("--fixed-text", ra.fixed_text, "Output of scripted-fixed");
  run->add_option("--delay-ms", ra.delay_ms, "Simulated latency per scripted call")->capture_default_str();
  run->add_option("--limit", ra.limit, "Stop after this many new records (0: no limit)");
  run->add_option("--retrieval-max-tokens", ra.retrieval_max_tokens)->capture_default_str();
  run->add_option("--answer-max-tokens", ra.answer_max_tokens)->capture_default_str();
  run->add_option("--temperature", ra.temperature)->capture_default_str();
  run->add_flag("--include-context-in-stage2", ra.include_context,
                "Repeat the long context in the RR answer stage");

  ScoreArgs sc;
  auto* score = app.add_subcommand("score", "Score run records");
  score->add_option("--out", sc.out, "Output directory")->required();
  score->add_option("--records", sc.records, "Records file (default: <out>/records.jsonl)");
  score->add_option("--instances", sc.instances, "Instance files or directories")->required();

  AlignArgs al;
  auto* align = app.add_subcommand("align", "Build alignment training examples");
  align->add_option("--out", al.out, "Output directory")->required();
  align->add_option("--hotpot", al.hotpot, "HotpotQA distractor JSON file");
  align->add_option("--squad", al.squad, "SQuAD v1.1 JSON file");
  align->add_option("--hotpot-count", al.hotpot_count)->capture_default_str();
  align->add_option("--squad-count", al.squad_count)->capture_default_str();
  align->add_option("--niah-count", al.niah_count)->capture_default_str();
  align->add_option("--seed", al.seed)->capture_default_str();
  align->add_option("--corpus", al.corpus, "Filler corpus for NIAH examples");
  align->add_option("--corpus-format", al.corpus_format)->capture_default_str();
  align->add_option("--tokenizer", al.tokenizer)->capture_default_str();
  align->add_flag("--include-context-in-stage2", al.include_context);

  ReportArgs rp;
  auto* report = app.add_subcommand("report", "Combine metrics into one table");
  report->add_option("--out", rp.out, "Output directory")->required();
  report->add_option("--input", rp.inputs, "label=path/to/metrics.json (repeatable)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*synth) return cmd_synth(sa);
    if (*run) return cmd_run(ra);
    if (*score) return cmd_score(sc);
    if (*align) return cmd_align(al);
    if (*report) return cmd_report(rp);
  } catch (const ConfigError& e) {
    std::cerr << "lcrr: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const BackendError& e) {
    std::cerr << "lcrr: backend error: " << e.what() << "\n";
    return kExitBackend;
  } catch (const TimeoutError& e) {
    std::cerr << "lcrr: backend timeout: " << e.what() << "\n";
    return kExitBackend;
  } catch (const InternalError& e) {
    std::cerr << "lcrr: internal error: " << e.what() << "\n";
    return kExitInternal;
  } catch (const std::exception& e) {
    std::cerr << "lcrr: error: " << e.what() << "\n";
    return kExitInput;
  }
  return 0;
}
