#include "lcrr/alignment.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "lcrr/errors.hpp"
#include "lcrr/rng.hpp"

namespace lcrr {

namespace {

bool is_ws(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

}  // namespace

void to_json(nlohmann::ordered_json& j, const AlignmentExample& ex) {
  j = nlohmann::ordered_json{
      {"instance_id", ex.instance_id},
      {"source", to_string(ex.source)},
      {"bucket", length_label(ex.bucket)},
      {"target_tokens", ex.bucket},
      {"stage1_prompt", ex.stage1_prompt},
      {"stage1_target", ex.stage1_target},
      {"stage2_prompt", ex.stage2_prompt},
      {"stage2_target", ex.stage2_target},
      {"segments", {"stage1_prompt", "stage1_target", "stage2_prompt", "stage2_target"}},
      {"loss_spans", {"stage1_target", "stage2_target"}},
  };
}

void from_json(const nlohmann::ordered_json& j, AlignmentExample& ex) {
  ex.instance_id = j.at("instance_id").get<std::string>();
  ex.source = task_kind_from_string(j.at("source").get<std::string>());
  ex.bucket = j.at("target_tokens").get<std::size_t>();
  ex.stage1_prompt = j.at("stage1_prompt").get<std::string>();
  ex.stage1_target = j.at("stage1_target").get<std::string>();
  ex.stage2_prompt = j.at("stage2_prompt").get<std::string>();
  ex.stage2_target = j.at("stage2_target").get<std::string>();
}

std::string format_facts(std::span<const std::string> facts) {
  if (facts.empty()) throw ValidationError("cannot format an empty fact list");
  std::string out;
  for (const auto& fact : facts) {
    if (fact.empty()) throw ValidationError("empty fact");
    if (fact.find('\n') != std::string::npos || fact.find('\r') != std::string::npos)
      throw ValidationError("fact contains a line break: " + fact);
    if (is_ws(fact.front()) || is_ws(fact.back()))
      throw ValidationError("fact has surrounding whitespace: '" + fact + "'");
    if (!out.empty()) out.push_back('\n');
    out += "- ";
    out += fact;
  }
  return out;
}

AlignmentExample build_alignment_example(const LongContextInstance& inst,
                                         const RenderOptions& options,
                                         const Tokenizer& tokenizer) {
  if (inst.gold_facts.empty())
    throw ValidationError("instance '" + inst.id + "' has no gold facts");
  if (inst.gold_answers.empty())
    throw ValidationError("instance '" + inst.id + "' has no gold answers");
  const std::size_t tokens = tokenizer.count(inst.context);
  if (tokens > inst.target_tokens ||
      static_cast<double>(tokens) < 0.95 * static_cast<double>(inst.target_tokens))
    throw ValidationError("instance '" + inst.id + "' holds " + std::to_string(tokens) +
                          " tokens, inconsistent with bucket " + length_label(inst.target_tokens));

  const DialoguePlan plan = plan_for(Strategy::RR);
  AlignmentExample ex;
  ex.instance_id = inst.id;
  ex.source = inst.task_kind;
  ex.bucket = inst.target_tokens;
  ex.stage1_prompt = render_stage(plan, 0, inst, {}, options);
  ex.stage1_target = format_facts(inst.gold_facts);
  StageTranscript first{0, ex.stage1_prompt, ex.stage1_target, 0};
  ex.stage2_prompt = render_stage(plan, 1, inst, std::span(&first, 1), options);
  if (requires_all_answers(inst.task_kind)) {
    for (const auto& a : inst.gold_answers) {
      if (!ex.stage2_target.empty()) ex.stage2_target += ", ";
      ex.stage2_target += a;
    }
  } else {
    ex.stage2_target = inst.gold_answers.front();
  }
  return ex;
}

std::array<std::size_t, 4> bucket_counts(std::size_t total) {
  if (total % 10 != 0)
    throw ValidationError("alignment total " + std::to_string(total) + " is not divisible by 10");
  std::array<std::size_t, 4> counts{};
  for (std::size_t i = 0; i < counts.size(); ++i)
    counts[i] = total / 10 * kAlignmentBucketTenths[i];
  return counts;
}

std::vector<std::size_t> bucket_mix_indices(std::span<const std::size_t> buckets,
                                            std::size_t total, std::uint64_t seed) {
  const auto counts = bucket_counts(total);
  std::map<std::size_t, std::vector<std::size_t>> by_bucket;
  for (std::size_t i = 0; i < buckets.size(); ++i) by_bucket[buckets[i]].push_back(i);

  SeededRng rng(seed);
  std::vector<std::size_t> out;
  out.reserve(total);
  for (std::size_t b = 0; b < kAlignmentBuckets.size(); ++b) {
    auto& pool = by_bucket[kAlignmentBuckets[b]];
    if (pool.size() < counts[b])
      throw ValidationError("bucket " + length_label(kAlignmentBuckets[b]) + " has " +
                            std::to_string(pool.size()) + " examples, " +
                            std::to_string(counts[b]) + " required");
    // Partial Fisher-Yates: the first counts[b] slots become the sample.
    for (std::size_t i = 0; i < counts[b]; ++i) {
      std::size_t j = i + static_cast<std::size_t>(rng.index(pool.size() - i));
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
  }
  rng.shuffle(std::span(out));
  return out;
}

std::vector<AlignmentExample> bucket_mix(std::vector<AlignmentExample> supply,
                                         std::size_t total, std::uint64_t seed) {
  std::vector<std::size_t> buckets;
  buckets.reserve(supply.size());
  for (const auto& ex : supply) buckets.push_back(ex.bucket);
  std::vector<AlignmentExample> out;
  out.reserve(total);
  for (std::size_t i : bucket_mix_indices(buckets, total, seed)) out.push_back(std::move(supply[i]));
  return out;
}

}  // namespace lcrr
