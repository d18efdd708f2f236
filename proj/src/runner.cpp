#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>
#include <unordered_set>

#include "lcrr/errors.hpp"
#include "lcrr/experiment.hpp"
#include "lcrr/jsonl.hpp"

namespace lcrr {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since)
      .count();
}

ordered_json trace_json(const RetrievalTrace& t) {
  return {{"sentences", t.sentences}, {"parse_warnings", t.parse_warnings}};
}

std::size_t max_tokens_for(StageRole role, const RunOptions& o) {
  switch (role) {
    case StageRole::answer: return o.answer_max_tokens;
    case StageRole::retrieval: return o.retrieval_max_tokens;
    case StageRole::retrieval_and_answer: return o.retrieval_max_tokens + o.answer_max_tokens;
  }
  return o.answer_max_tokens;
}

}  // namespace

void to_json(ordered_json& j, const RunRecord& r) {
  j = ordered_json::object();
  j["instance_id"] = r.instance_id;
  j["task_kind"] = to_string(r.task_kind);
  j["target_tokens"] = r.target_tokens;
  j["strategy"] = to_string(r.strategy);
  ordered_json ts = ordered_json::array();
  for (const auto& t : r.transcripts) {
    ts.push_back({{"stage_index", t.stage_index},
                  {"rendered_prompt", t.rendered_prompt},
                  {"raw_output", t.raw_output},
                  {"wall_time_ms", t.wall_time_ms}});
  }
  j["transcripts"] = std::move(ts);
  j["retrieval_trace"] = r.retrieval_trace ? trace_json(*r.retrieval_trace) : ordered_json(nullptr);
  j["extracted_answer"] = r.extracted_answer;
  j["answer_warnings"] = r.answer_warnings;
  j["em"] = r.em;
  j["wall_time_ms"] = r.wall_time_ms;
  j["error"] = r.error ? ordered_json(*r.error) : ordered_json(nullptr);
}

void from_json(const ordered_json& j, RunRecord& r) {
  r = RunRecord{};
  r.instance_id = j.at("instance_id").get<std::string>();
  r.task_kind = task_kind_from_string(j.at("task_kind").get<std::string>());
  r.target_tokens = j.at("target_tokens").get<std::size_t>();
  r.strategy = strategy_from_string(j.at("strategy").get<std::string>());
  for (const auto& t : j.at("transcripts")) {
    r.transcripts.push_back({t.at("stage_index").get<std::size_t>(),
                             t.at("rendered_prompt").get<std::string>(),
                             t.at("raw_output").get<std::string>(),
                             t.value("wall_time_ms", 0.0)});
  }
  if (const auto& tr = j.at("retrieval_trace"); !tr.is_null()) {
    RetrievalTrace trace;
    trace.sentences = tr.at("sentences").get<std::vector<std::string>>();
    trace.parse_warnings = tr.at("parse_warnings").get<std::vector<std::string>>();
    r.retrieval_trace = std::move(trace);
  }
  r.extracted_answer = j.at("extracted_answer").get<std::string>();
  r.answer_warnings = j.at("answer_warnings").get<std::vector<std::string>>();
  r.em = j.at("em").get<int>();
  r.wall_time_ms = j.value("wall_time_ms", 0.0);
  if (const auto& e = j.at("error"); !e.is_null()) r.error = e.get<std::string>();
}

ordered_json without_timing(const RunRecord& r) {
  ordered_json j = r;
  j.erase("wall_time_ms");
  for (auto& t : j["transcripts"]) t.erase("wall_time_ms");
  return j;
}

Runner::Runner(RunOptions options)
    : options_(std::move(options)),
      plan_(plan_for(options_.strategy)),
      side_channel_(std::make_shared<SideChannel>()),
      backend_(make_backend(options_.backend, side_channel_)) {
  if (options_.workers == 0) throw ConfigError("workers must be >= 1");
}

RunRecord Runner::run_one(const LongContextInstance& inst) {
  RunRecord rec;
  rec.instance_id = inst.id;
  rec.task_kind = inst.task_kind;
  rec.target_tokens = inst.target_tokens;
  rec.strategy = options_.strategy;
  const auto start = std::chrono::steady_clock::now();
  try {
    for (std::size_t i = 0; i < plan_.stages.size(); ++i) {
      const auto stage_start = std::chrono::steady_clock::now();
      const StageSpec& spec = plan_.stages[i];
      std::string rendered = render_stage(plan_, i, inst, rec.transcripts, options_.render);

      GenerationRequest req;
      req.messages = stage_messages(plan_, i, rendered, rec.transcripts);
      req.max_output_tokens = max_tokens_for(spec.role, options_);
      req.temperature = options_.temperature;
      req.request_id = inst.id + "#" + std::string(to_string(options_.strategy)) + "#" +
                       std::to_string(i);
      side_channel_->put(req.request_id, {&inst, options_.strategy, i, spec.role});
      Generation g;
      try {
        g = generate(*backend_, req);
      } catch (...) {
        side_channel_->erase(req.request_id);
        throw;
      }
      side_channel_->erase(req.request_id);
      rec.transcripts.push_back({i, std::move(rendered), std::move(g.text), elapsed_ms(stage_start)});
    }

    if (plan_.strategy != Strategy::DA)
      rec.retrieval_trace = parse_retrieval(plan_.strategy, rec.transcripts.front().raw_output);
    ExtractedAnswer answer = extract_answer(plan_.strategy, rec.transcripts.back().raw_output);
    rec.extracted_answer = std::move(answer.text);
    rec.answer_warnings = std::move(answer.warnings);
    rec.em = score_answer(inst.task_kind, rec.extracted_answer, inst.gold_answers);
  } catch (const std::exception& e) {
    rec.error = e.what();
    rec.em = 0;
  }
  rec.wall_time_ms = elapsed_ms(start);
  return rec;
}

std::size_t Runner::run(std::span<const LongContextInstance> instances,
                        const std::function<void(RunRecord&&)>& sink) {
  std::size_t n = instances.size();
  if (options_.limit) n = std::min(n, *options_.limit);
  if (options_.workers <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) sink(run_one(instances[i]));
    return n;
  }

  // Workers claim indices; the calling thread emits them in order. The
  // window bounds how far workers may run ahead of the writer.
  const std::size_t window = options_.workers * 4;
  std::mutex mu;
  std::condition_variable cv;
  std::map<std::size_t, RunRecord> ready;
  std::size_t next_claim = 0;
  std::size_t next_emit = 0;
  bool stop = false;
  std::exception_ptr worker_error;

  auto work = [&] {
    for (;;) {
      std::size_t i;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return stop || next_claim >= n || next_claim < next_emit + window; });
        if (stop || next_claim >= n) return;
        i = next_claim++;
      }
      try {
        RunRecord rec = run_one(instances[i]);
        std::lock_guard lock(mu);
        ready.emplace(i, std::move(rec));
      } catch (...) {
        std::lock_guard lock(mu);
        if (!worker_error) worker_error = std::current_exception();
        stop = true;
      }
      cv.notify_all();
    }
  };

  std::vector<std::thread> threads;
  const std::size_t count = std::min(options_.workers, n);
  threads.reserve(count);
  for (std::size_t t = 0; t < count; ++t) threads.emplace_back(work);

  auto shutdown = [&] {
    {
      std::lock_guard lock(mu);
      stop = true;
    }
    cv.notify_all();
    for (auto& t : threads) t.join();
  };

  try {
    while (next_emit < n) {
      RunRecord rec;
      {
        std::unique_lock lock(mu);
        cv.wait(lock, [&] { return stop || ready.count(next_emit) > 0; });
        if (!ready.count(next_emit)) break;
        auto node = ready.extract(next_emit);
        rec = std::move(node.mapped());
        ++next_emit;
      }
      cv.notify_all();
      sink(std::move(rec));
    }
  } catch (...) {
    shutdown();
    throw;
  }
  shutdown();
  if (worker_error) std::rethrow_exception(worker_error);
  return next_emit;
}

std::vector<std::string> recover_records_file(const fs::path& path) {
  std::vector<std::string> ids;
  if (!fs::exists(path)) return ids;
  std::string text = jsonl::read_text(path);
  const auto last_newline = text.rfind('\n');
  const std::size_t complete = last_newline == std::string::npos ? 0 : last_newline + 1;
  if (complete < text.size()) {
    // Interrupted mid-line: drop the partial record.
    fs::resize_file(path, complete);
    text.resize(complete);
  }
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t end = text.find('\n', pos);
    const std::string_view line(text.data() + pos, end - pos);
    ++line_no;
    pos = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      ids.push_back(ordered_json::parse(line).at("instance_id").get<std::string>());
    } catch (const std::exception& e) {
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": unreadable record: " + e.what());
    }
  }
  return ids;
}

RunSummary run_to_file(std::vector<LongContextInstance> instances, const RunOptions& options,
                       const fs::path& records_path) {
  Runner runner(options);

  std::sort(instances.begin(), instances.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < instances.size(); ++i) {
    if (instances[i].id == instances[i - 1].id)
      throw ValidationError("duplicate instance id '" + instances[i].id + "'");
  }

  RunSummary summary;
  summary.total = instances.size();
  const auto done_ids = recover_records_file(records_path);
  const std::unordered_set<std::string> done(done_ids.begin(), done_ids.end());
  std::vector<LongContextInstance> pending;
  for (auto& inst : instances) {
    if (done.count(inst.id)) {
      ++summary.skipped;
    } else {
      pending.push_back(std::move(inst));
    }
  }

  if (records_path.has_parent_path()) fs::create_directories(records_path.parent_path());
  std::ofstream out(records_path, std::ios::binary | std::ios::app);
  if (!out) throw InputError("cannot open " + records_path.string() + " for writing");
  runner.run(pending, [&](RunRecord&& rec) {
    out << ordered_json(rec).dump() << '\n';
    out.flush();
    if (!out) throw InputError("write to " + records_path.string() + " failed");
    ++summary.executed;
    if (rec.error) ++summary.failed;
  });
  return summary;
}

std::vector<RunRecord> read_records(const fs::path& path) {
  std::vector<RunRecord> out;
  jsonl::for_each(path, [&](const ordered_json& j) { out.push_back(j.get<RunRecord>()); });
  return out;
}

namespace {

std::vector<fs::path> instance_files(const fs::path& input) {
  if (!fs::exists(input)) throw InputError("no such file or directory: " + input.string());
  if (!fs::is_directory(input)) return {input};
  fs::path dir = input;
  if (fs::is_directory(input / "instances")) dir = input / "instances";
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
      files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw InputError("no .jsonl instance files in " + dir.string());
  return files;
}

}  // namespace

std::vector<LongContextInstance> load_instance_inputs(std::span<const fs::path> inputs) {
  std::vector<LongContextInstance> out;
  for (const auto& input : inputs) {
    for (const auto& file : instance_files(input)) {
      auto part = read_instances(file);
      for (auto& inst : part) out.push_back(std::move(inst));
    }
  }
  return out;
}

std::vector<fs::path> detail::expand_instance_inputs(std::span<const fs::path> inputs) {
  std::vector<fs::path> files;
  for (const auto& input : inputs) {
    for (auto& f : instance_files(input)) files.push_back(std::move(f));
  }
  return files;
}

ordered_json run_step(std::span<const fs::path> instance_inputs, const RunOptions& options,
                      const fs::path& out_dir) {
  validate_config(options.backend);
  auto instances = load_instance_inputs(instance_inputs);
  if (instances.empty()) throw ValidationError("no instances to run");
  const fs::path records = out_dir / "records.jsonl";
  const RunSummary s = run_to_file(std::move(instances), options, records);

  ordered_json inputs = ordered_json::array();
  for (const auto& p : instance_inputs) inputs.push_back(p.generic_string());
  ordered_json m;
  m["step"] = "run";
  m["strategy"] = to_string(options.strategy);
  m["backend"] = to_string(options.backend.kind);
  if (options.backend.kind == BackendKind::http_chat) {
    m["endpoint"] = options.backend.http.endpoint;
    m["model"] = options.backend.http.model;
  }
  if (options.backend.kind == BackendKind::scripted_hallucinator)
    m["hallucination_p"] = options.backend.hallucination_p;
  m["seed"] = options.backend.seed;
  m["include_context_in_stage2"] = options.render.include_context_in_stage2;
  m["workers"] = options.workers;
  m["retrieval_max_tokens"] = options.retrieval_max_tokens;
  m["answer_max_tokens"] = options.answer_max_tokens;
  m["temperature"] = options.temperature;
  m["inputs"] = std::move(inputs);
  m["records"] = "records.jsonl";
  m["total"] = s.total;
  m["skipped"] = s.skipped;
  m["executed"] = s.executed;
  m["failed"] = s.failed;
  m["complete"] = s.skipped + s.executed == s.total;
  m["template_checksums"] = template_checksums();
  jsonl::write_text(out_dir / "run_manifest.json", m.dump(2) + "\n");
  return m;
}

}  // namespace lcrr
