#include "lcrr/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>
#include <sstream>

#include "lcrr/prompts.hpp"
#include "lcrr/tokens.hpp"

namespace lcrr {

namespace {

bool is_ws(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_ws(s.back())) s.remove_suffix(1);
  return s;
}

bool is_article(std::string_view w) { return w == "a" || w == "an" || w == "the"; }

std::optional<double> mean_of(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  double sum = 0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

nlohmann::ordered_json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

std::optional<double> optional_from(const nlohmann::ordered_json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

nlohmann::ordered_json bucket_json(const BucketMetrics& m) {
  return {{"em", m.em},
          {"hallucination", optional_json(m.hallucination)},
          {"recall", optional_json(m.recall)},
          {"avg_retrieved", optional_json(m.avg_retrieved)},
          {"n", m.n}};
}

BucketMetrics bucket_from(const nlohmann::ordered_json& j) {
  BucketMetrics m;
  m.em = j.at("em").get<double>();
  m.hallucination = optional_from(j, "hallucination");
  m.recall = optional_from(j, "recall");
  m.avg_retrieved = optional_from(j, "avg_retrieved");
  m.n = j.at("n").get<std::size_t>();
  return m;
}

std::string format_number(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

}  // namespace

std::string normalize_answer(std::string_view s) {
  std::string no_punct;
  no_punct.reserve(s.size());
  for (char c : s) {
    auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::ispunct(u)) continue;
    no_punct.push_back(static_cast<char>(std::tolower(u)));
  }
  std::string out;
  std::size_t i = 0;
  while (i < no_punct.size()) {
    while (i < no_punct.size() && is_ws(no_punct[i])) ++i;
    std::size_t start = i;
    while (i < no_punct.size() && !is_ws(no_punct[i])) ++i;
    if (start == i) break;
    std::string_view word(no_punct.data() + start, i - start);
    if (is_article(word)) continue;
    if (!out.empty()) out.push_back(' ');
    out.append(word);
  }
  return out;
}

int exact_match(std::string_view prediction, std::span<const std::string> golds) {
  const std::string pred = normalize_answer(prediction);
  return std::any_of(golds.begin(), golds.end(),
                     [&](const std::string& g) { return normalize_answer(g) == pred; })
             ? 1
             : 0;
}

int match_all(std::string_view prediction, std::span<const std::string> golds) {
  if (golds.empty()) return 0;
  const std::string padded = " " + normalize_answer(prediction) + " ";
  for (const auto& g : golds) {
    std::string norm = normalize_answer(g);
    if (norm.empty() || padded.find(" " + norm + " ") == std::string::npos) return 0;
  }
  return 1;
}

int score_answer(TaskKind kind, std::string_view prediction,
                 std::span<const std::string> golds) {
  return requires_all_answers(kind) ? match_all(prediction, golds)
                                    : exact_match(prediction, golds);
}

std::vector<std::string> segment_sentences(std::string_view text) {
  std::vector<std::string> out;
  auto emit = [&](std::string_view piece) {
    piece = trim(piece);
    if (!piece.empty()) out.emplace_back(piece);
  };
  std::size_t start = 0;
  std::size_t i = 0;
  while (i < text.size()) {
    char c = text[i];
    if (c == '.' || c == '!' || c == '?') {
      std::size_t j = i + 1;
      while (j < text.size() && (text[j] == '.' || text[j] == '!' || text[j] == '?')) ++j;
      while (j < text.size() &&
             (text[j] == '"' || text[j] == '\'' || text[j] == ')' || text[j] == ']'))
        ++j;
      if (j == text.size() || is_ws(text[j])) {
        emit(text.substr(start, j - start));
        start = j;
      }
      i = j;
      continue;
    }
    ++i;
  }
  emit(text.substr(start));
  return out;
}

std::string collapse_whitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char c : text) {
    if (is_ws(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(c);
  }
  return out;
}

std::optional<double> hallucination_rate(std::span<const RetrievalTrace> traces,
                                         std::span<const std::string> contexts,
                                         std::vector<std::string>* warnings) {
  std::size_t total = 0;
  std::size_t matched = 0;
  const std::size_t n = std::min(traces.size(), contexts.size());
  if (traces.size() != contexts.size() && warnings)
    warnings->push_back("hallucination: traces and contexts differ in length");
  for (std::size_t i = 0; i < n; ++i) {
    if (traces[i].sentences.empty()) continue;
    const std::string context = collapse_whitespace(contexts[i]);
    for (const auto& sentence : traces[i].sentences) {
      ++total;
      if (context.find(collapse_whitespace(sentence)) != std::string::npos) ++matched;
    }
  }
  if (total == 0) {
    if (warnings) warnings->push_back("hallucination rate undefined: no retrieved sentences");
    return std::nullopt;
  }
  return 100.0 * (1.0 - static_cast<double>(matched) / static_cast<double>(total));
}

double retrieval_recall(std::span<const RetrievalTrace> traces,
                        std::span<const std::vector<std::string>> gold_facts) {
  double sum = 0;
  std::size_t instances = 0;
  const std::size_t n = std::min(traces.size(), gold_facts.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (gold_facts[i].empty()) continue;
    std::string joined;
    for (const auto& s : traces[i].sentences) {
      joined += s;
      joined += ' ';
    }
    joined = collapse_whitespace(joined);
    std::size_t found = 0;
    for (const auto& fact : gold_facts[i])
      if (joined.find(collapse_whitespace(fact)) != std::string::npos) ++found;
    sum += static_cast<double>(found) / static_cast<double>(gold_facts[i].size());
    ++instances;
  }
  return instances == 0 ? 0.0 : 100.0 * sum / static_cast<double>(instances);
}

double avg_retrieved(std::span<const RetrievalTrace> traces, std::vector<std::string>* warnings) {
  if (traces.empty()) {
    if (warnings) warnings->push_back("average retrieved size over an empty trace set");
    return 0.0;
  }
  std::size_t total = 0;
  for (const auto& t : traces) total += t.sentences.size();
  return static_cast<double>(total) / static_cast<double>(traces.size());
}

InstanceScore score_instance(std::size_t bucket, int em, const RetrievalTrace* trace,
                             std::string_view context,
                             std::span<const std::string> gold_facts) {
  InstanceScore s;
  s.bucket = bucket;
  s.em = em;
  if (!trace) return s;
  s.has_trace = true;
  s.retrieved = trace->sentences.size();
  if (!trace->sentences.empty()) {
    const std::string haystack = collapse_whitespace(context);
    for (const auto& sentence : trace->sentences)
      if (haystack.find(collapse_whitespace(sentence)) != std::string::npos)
        ++s.retrieved_in_context;
  }
  if (!gold_facts.empty()) {
    std::vector<std::string> facts(gold_facts.begin(), gold_facts.end());
    s.recall = retrieval_recall(std::span(trace, 1), std::span(&facts, 1)) / 100.0;
  }
  return s;
}

MetricReport aggregate(std::span<const InstanceScore> items) {
  MetricReport report;
  std::map<std::size_t, std::vector<const InstanceScore*>> buckets;
  for (const auto& item : items) buckets[item.bucket].push_back(&item);

  std::vector<double> em_values, hall_values, recall_values, size_values;
  for (const auto& [bucket, group] : buckets) {
    BucketMetrics m;
    m.n = group.size();
    std::size_t correct = 0, traced = 0, retrieved = 0, matched = 0;
    std::vector<double> recalls;
    for (const InstanceScore* item : group) {
      correct += item->em != 0 ? 1 : 0;
      if (!item->has_trace) continue;
      ++traced;
      retrieved += item->retrieved;
      matched += item->retrieved_in_context;
      if (item->recall) recalls.push_back(*item->recall * 100.0);
    }
    m.em = 100.0 * static_cast<double>(correct) / static_cast<double>(m.n);
    if (traced > 0) {
      if (retrieved > 0) {
        m.hallucination =
            100.0 * (1.0 - static_cast<double>(matched) / static_cast<double>(retrieved));
      } else {
        report.warnings.push_back(length_label(bucket) +
                                  ": hallucination rate undefined: no retrieved sentences");
      }
      m.avg_retrieved = static_cast<double>(retrieved) / static_cast<double>(traced);
    }
    m.recall = mean_of(recalls);

    em_values.push_back(m.em);
    if (m.hallucination) hall_values.push_back(*m.hallucination);
    if (m.recall) recall_values.push_back(*m.recall);
    if (m.avg_retrieved) size_values.push_back(*m.avg_retrieved);
    report.overall.n += m.n;
    report.per_bucket.emplace(bucket, m);
  }
  report.overall.em = mean_of(em_values).value_or(0.0);
  report.overall.hallucination = mean_of(hall_values);
  report.overall.recall = mean_of(recall_values);
  report.overall.avg_retrieved = mean_of(size_values);
  return report;
}

nlohmann::ordered_json report_to_json(const MetricReport& report) {
  auto buckets = nlohmann::ordered_json::array();
  for (const auto& [bucket, m] : report.per_bucket) {
    auto j = bucket_json(m);
    nlohmann::ordered_json entry{{"bucket", length_label(bucket)}, {"target_tokens", bucket}};
    entry.update(j);
    buckets.push_back(std::move(entry));
  }
  return {{"per_bucket", std::move(buckets)},
          {"overall", bucket_json(report.overall)},
          {"warnings", report.warnings}};
}

MetricReport report_from_json(const nlohmann::ordered_json& j) {
  MetricReport report;
  for (const auto& entry : j.at("per_bucket"))
    report.per_bucket.emplace(entry.at("target_tokens").get<std::size_t>(), bucket_from(entry));
  report.overall = bucket_from(j.at("overall"));
  report.warnings = j.value("warnings", std::vector<std::string>{});
  return report;
}

std::string render_table(std::span<const TableRow> rows, int precision) {
  std::set<std::size_t> columns;
  for (const auto& row : rows)
    for (const auto& [bucket, v] : row.cells) columns.insert(bucket);

  std::vector<std::string> header{""};
  for (std::size_t c : columns) header.push_back(length_label(c));
  header.push_back("Overall");

  std::vector<std::vector<std::string>> body;
  for (const auto& row : rows) {
    std::vector<std::string> line{row.label};
    bool complete = true;
    for (std::size_t c : columns) {
      auto it = row.cells.find(c);
      if (it == row.cells.end()) {
        line.push_back("-");
        complete = false;
      } else {
        line.push_back(format_number(it->second, precision));
      }
    }
    line.push_back(complete && row.overall ? format_number(*row.overall, precision) : "-");
    body.push_back(std::move(line));
  }

  std::vector<std::size_t> widths(header.size(), 0);
  for (std::size_t i = 0; i < header.size(); ++i) widths[i] = header[i].size();
  for (const auto& line : body)
    for (std::size_t i = 0; i < line.size(); ++i) widths[i] = std::max(widths[i], line[i].size());

  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& line) {
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (i == 0) {
        out << line[i] << std::string(widths[i] - line[i].size(), ' ');
      } else {
        out << (i + 1 == line.size() ? " | " : "  ")
            << std::string(widths[i] - line[i].size(), ' ') << line[i];
      }
    }
    out << '\n';
  };
  emit(header);
  std::size_t rule = widths[0] + 1;
  for (std::size_t i = 1; i < widths.size(); ++i) rule += widths[i] + 2;
  out << std::string(rule, '-') << '\n';
  for (const auto& line : body) emit(line);
  return out.str();
}

std::vector<TableRow> report_rows(const MetricReport& report, std::string_view prefix) {
  auto label = [&](std::string_view name) {
    return prefix.empty() ? std::string(name) : std::string(prefix) + " " + std::string(name);
  };
  TableRow em{label("EM"), {}, report.overall.em};
  TableRow hall{label("Hallucination"), {}, report.overall.hallucination};
  TableRow recall{label("Recall"), {}, report.overall.recall};
  TableRow size{label("AvgRetrieved"), {}, report.overall.avg_retrieved};
  for (const auto& [bucket, m] : report.per_bucket) {
    em.cells[bucket] = m.em;
    if (m.hallucination) hall.cells[bucket] = *m.hallucination;
    if (m.recall) recall.cells[bucket] = *m.recall;
    if (m.avg_retrieved) size.cells[bucket] = *m.avg_retrieved;
  }
  std::vector<TableRow> rows{em};
  if (!hall.cells.empty()) rows.push_back(hall);
  if (!recall.cells.empty()) rows.push_back(recall);
  if (!size.cells.empty()) rows.push_back(size);
  return rows;
}

}  // namespace lcrr
