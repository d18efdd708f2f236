#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lcrr/instance.hpp"

namespace lcrr {

struct RetrievalTrace;

// Lowercase, drop punctuation, drop the articles a/an/the, collapse spaces.
std::string normalize_answer(std::string_view s);

// 1 iff the normalized prediction equals some normalized gold.
int exact_match(std::string_view prediction, std::span<const std::string> golds);

// 1 iff every normalized gold occurs as a whole-word run inside the
// normalized prediction.
int match_all(std::string_view prediction, std::span<const std::string> golds);

// Picks match_all for mv/mq NIAH and exact_match otherwise.
int score_answer(TaskKind kind, std::string_view prediction,
                 std::span<const std::string> golds);

// Splits after '.', '!' or '?' (plus closing quotes/brackets) when followed
// by whitespace or end of text. Pieces are trimmed; empty pieces dropped.
std::vector<std::string> segment_sentences(std::string_view text);

std::string collapse_whitespace(std::string_view text);

// Percentage of pooled retrieved sentences absent from their instance's
// context (whitespace-collapsed substring test). nullopt when nothing was
// retrieved at all.
std::optional<double> hallucination_rate(std::span<const RetrievalTrace> traces,
                                         std::span<const std::string> contexts,
                                         std::vector<std::string>* warnings = nullptr);

// Mean over instances of the fraction of gold facts found in the joined
// retrieved sentences, as a percentage.
double retrieval_recall(std::span<const RetrievalTrace> traces,
                        std::span<const std::vector<std::string>> gold_facts);

double avg_retrieved(std::span<const RetrievalTrace> traces,
                     std::vector<std::string>* warnings = nullptr);

struct BucketMetrics {
  double em = 0;
  std::optional<double> hallucination;
  std::optional<double> recall;
  std::optional<double> avg_retrieved;
  std::size_t n = 0;
};

// Per context-length bucket (keyed by target tokens) plus an unweighted mean
// over buckets.
struct MetricReport {
  std::map<std::size_t, BucketMetrics> per_bucket;
  BucketMetrics overall;
  std::vector<std::string> warnings;
};

// Per-instance summary from which every bucket metric can be pooled, so
// contexts need not stay in memory while scoring large runs.
struct InstanceScore {
  std::size_t bucket = 0;
  int em = 0;
  bool has_trace = false;                // false for single-stage DA
  std::size_t retrieved = 0;             // sentences in the trace
  std::size_t retrieved_in_context = 0;  // of those, found in the context
  std::optional<double> recall;          // fraction in [0, 1]; needs gold facts
};

InstanceScore score_instance(std::size_t bucket, int em, const RetrievalTrace* trace,
                             std::string_view context,
                             std::span<const std::string> gold_facts);

// Hallucination pools sentences across the bucket; recall and retrieval size
// average over instances; overall is the unweighted mean over buckets.
MetricReport aggregate(std::span<const InstanceScore> items);

nlohmann::ordered_json report_to_json(const MetricReport& report);
MetricReport report_from_json(const nlohmann::ordered_json& j);

// A named table row: label plus value per bucket.
struct TableRow {
  std::string label;
  std::map<std::size_t, double> cells;
  std::optional<double> overall;
};

// Aligned plain-text table with one column per bucket (union over rows) and
// an Overall column. Absent cells render as "-"; a row missing any column
// also gets "-" for Overall.
std::string render_table(std::span<const TableRow> rows, int precision = 1);

// Rows for EM, Hallucination, Recall and AvgRetrieved.
std::vector<TableRow> report_rows(const MetricReport& report, std::string_view prefix = "");

}  // namespace lcrr
