#include <map>
#include <set>
#include <unordered_map>

#include "lcrr/errors.hpp"
#include "lcrr/experiment.hpp"
#include "lcrr/jsonl.hpp"

namespace lcrr {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// What scoring needs from a record, without its transcripts.
struct RecordSummary {
  TaskKind kind = TaskKind::qa_other;
  std::size_t bucket = 0;
  std::string extracted_answer;
  std::optional<RetrievalTrace> trace;
  bool failed = false;
  bool scored = false;
};

RecordSummary summarize(const RunRecord& r) {
  return {r.task_kind, r.target_tokens, r.extracted_answer, r.retrieval_trace,
          r.error.has_value(), false};
}

InstanceScore score_one(const RecordSummary& r, const LongContextInstance& inst) {
  if (inst.task_kind != r.kind)
    throw ValidationError("record for '" + inst.id + "' has task " +
                          std::string(to_string(r.kind)) + ", instance has " +
                          std::string(to_string(inst.task_kind)));
  const int em = r.failed ? 0 : score_answer(inst.task_kind, r.extracted_answer, inst.gold_answers);
  return score_instance(r.bucket, em, r.trace ? &*r.trace : nullptr, inst.context,
                        inst.gold_facts);
}

ScoreReport finish(std::map<TaskKind, std::vector<InstanceScore>>& scores,
                   const std::map<TaskKind, std::size_t>& failures) {
  ScoreReport out;
  for (auto& [kind, items] : scores) {
    MetricReport rep = aggregate(items);
    if (auto it = failures.find(kind); it != failures.end() && it->second > 0)
      rep.warnings.push_back(std::to_string(it->second) +
                             " record(s) carry errors and score EM 0");
    out.emplace(kind, std::move(rep));
  }
  return out;
}

}  // namespace

ScoreReport score_records(std::span<const RunRecord> records,
                          std::span<const LongContextInstance> instances) {
  if (records.empty()) throw ValidationError("no records to score");
  std::unordered_map<std::string_view, const LongContextInstance*> by_id;
  for (const auto& inst : instances) by_id.emplace(inst.id, &inst);

  std::map<TaskKind, std::vector<InstanceScore>> scores;
  std::map<TaskKind, std::size_t> failures;
  for (const auto& r : records) {
    auto it = by_id.find(r.instance_id);
    if (it == by_id.end())
      throw ValidationError("record '" + r.instance_id + "' has no matching instance");
    scores[r.task_kind].push_back(score_one(summarize(r), *it->second));
    if (r.error) ++failures[r.task_kind];
  }
  return finish(scores, failures);
}

ScoreReport run_score(const fs::path& records_path, std::span<const fs::path> instance_inputs,
                      const fs::path& out_dir) {
  std::unordered_map<std::string, RecordSummary> pending;
  std::vector<std::string> order;
  jsonl::for_each(records_path, [&](const ordered_json& j) {
    RunRecord r = j.get<RunRecord>();
    if (!pending.emplace(r.instance_id, summarize(r)).second)
      throw ValidationError("duplicate record for instance '" + r.instance_id + "'");
    order.push_back(r.instance_id);
  });
  if (pending.empty()) throw ValidationError("no records to score in " + records_path.string());

  // Scores are keyed by record position so aggregation order matches the
  // records file regardless of instance file order.
  std::vector<std::optional<InstanceScore>> by_position(order.size());
  std::unordered_map<std::string_view, std::size_t> position;
  for (std::size_t i = 0; i < order.size(); ++i) position.emplace(order[i], i);

  for (const auto& file : detail::expand_instance_inputs(instance_inputs)) {
    jsonl::for_each(file, [&](const ordered_json& j) {
      const auto id = j.at("id").get<std::string>();
      auto it = pending.find(id);
      if (it == pending.end() || it->second.scored) return;
      LongContextInstance inst = j.get<LongContextInstance>();
      by_position[position.at(id)] = score_one(it->second, inst);
      it->second.scored = true;
    });
  }

  std::map<TaskKind, std::vector<InstanceScore>> scores;
  std::map<TaskKind, std::size_t> failures;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const RecordSummary& r = pending.at(order[i]);
    if (!by_position[i])
      throw ValidationError("record '" + order[i] + "' has no matching instance");
    scores[r.kind].push_back(*by_position[i]);
    if (r.failed) ++failures[r.kind];
  }
  ScoreReport report = finish(scores, failures);

  fs::create_directories(out_dir);
  jsonl::write_text(out_dir / "metrics.json", score_to_json(report).dump(2) + "\n");
  jsonl::write_text(out_dir / "metrics.txt", render_score_table(report));

  ordered_json inputs = ordered_json::array();
  for (const auto& p : instance_inputs) inputs.push_back(p.generic_string());
  ordered_json m;
  m["step"] = "score";
  m["records"] = records_path.generic_string();
  m["records_sha256"] = jsonl::sha256_file(records_path);
  m["instances"] = std::move(inputs);
  m["record_count"] = order.size();
  m["outputs"] = {"metrics.json", "metrics.txt"};
  jsonl::write_text(out_dir / "score_manifest.json", m.dump(2) + "\n");
  return report;
}

ordered_json score_to_json(const ScoreReport& report) {
  ordered_json tasks = ordered_json::object();
  for (const auto& [kind, rep] : report) tasks[std::string(to_string(kind))] = report_to_json(rep);
  return {{"tasks", std::move(tasks)}};
}

ScoreReport score_from_json(const ordered_json& j) {
  ScoreReport out;
  for (const auto& [name, rep] : j.at("tasks").items())
    out.emplace(task_kind_from_string(name), report_from_json(rep));
  return out;
}

std::string render_score_table(std::span<const std::pair<std::string, ScoreReport>> labelled) {
  std::set<TaskKind> kinds;
  for (const auto& [label, rep] : labelled)
    for (const auto& [kind, r] : rep) kinds.insert(kind);

  std::string out;
  for (TaskKind kind : kinds) {
    std::vector<TableRow> rows;
    std::vector<std::string> warnings;
    for (const auto& [label, rep] : labelled) {
      auto it = rep.find(kind);
      if (it == rep.end()) continue;
      for (auto& row : report_rows(it->second, label)) rows.push_back(std::move(row));
      for (const auto& w : it->second.warnings)
        warnings.push_back(label.empty() ? w : label + ": " + w);
    }
    if (!out.empty()) out += "\n";
    out += "[" + std::string(to_string(kind)) + "]\n";
    out += render_table(rows);
    for (const auto& w : warnings) out += "warning: " + w + "\n";
  }
  return out;
}

std::string render_score_table(const ScoreReport& report) {
  const std::pair<std::string, ScoreReport> one{"", report};
  return render_score_table(std::span(&one, 1));
}

std::string run_report(std::span<const std::pair<std::string, fs::path>> inputs,
                       const fs::path& out_dir) {
  if (inputs.empty()) throw ConfigError("report: no metrics inputs");
  std::vector<std::pair<std::string, ScoreReport>> labelled;
  ordered_json combined = ordered_json::object();
  ordered_json sources = ordered_json::array();
  std::set<std::string> seen;
  for (const auto& [label, path] : inputs) {
    if (!seen.insert(label).second) throw ConfigError("report: duplicate label '" + label + "'");
    fs::path file = fs::is_directory(path) ? path / "metrics.json" : path;
    ordered_json j;
    try {
      j = ordered_json::parse(jsonl::read_text(file));
    } catch (const nlohmann::json::exception& e) {
      throw InputError(file.string() + ": " + e.what());
    }
    labelled.emplace_back(label, score_from_json(j));
    combined[label] = j;
    sources.push_back({{"label", label},
                       {"file", file.generic_string()},
                       {"sha256", jsonl::sha256_file(file)}});
  }
  std::string text = render_score_table(labelled);
  fs::create_directories(out_dir);
  jsonl::write_text(out_dir / "report.txt", text);
  jsonl::write_text(out_dir / "report.json", combined.dump(2) + "\n");
  ordered_json m;
  m["step"] = "report";
  m["inputs"] = std::move(sources);
  m["outputs"] = {"report.txt", "report.json"};
  jsonl::write_text(out_dir / "report_manifest.json", m.dump(2) + "\n");
  return text;
}

}  // namespace lcrr
