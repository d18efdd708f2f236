#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcrr/instance.hpp"
#include "lcrr/prompts.hpp"
#include "lcrr/tokens.hpp"

namespace lcrr {

// Training-length buckets and their mixing weights (tenths).
inline constexpr std::array<std::size_t, 4> kAlignmentBuckets = {4096, 8192, 16384, 32768};
inline constexpr std::array<std::size_t, 4> kAlignmentBucketTenths = {1, 2, 3, 4};

// One training item for the joint retrieval + answer objective. The sequence
// is stage1_prompt, stage1_target, stage2_prompt, stage2_target; only the two
// targets carry loss.
struct AlignmentExample {
  std::string instance_id;
  TaskKind source = TaskKind::qa_other;
  std::size_t bucket = 0;  // target tokens of the context
  std::string stage1_prompt;
  std::string stage1_target;  // bulleted gold facts
  std::string stage2_prompt;
  std::string stage2_target;  // first gold answer (all values for mv/mq)

  bool operator==(const AlignmentExample&) const = default;
};

void to_json(nlohmann::ordered_json& j, const AlignmentExample& ex);
void from_json(const nlohmann::ordered_json& j, AlignmentExample& ex);

// "- fact" lines joined by newlines. Facts must be non-empty, single-line and
// free of surrounding whitespace (ValidationError otherwise).
std::string format_facts(std::span<const std::string> facts);

// Renders both RR stages for the instance with the gold targets. Throws
// ValidationError for empty gold facts or a bucket that does not match the
// context length.
AlignmentExample build_alignment_example(const LongContextInstance& inst,
                                         const RenderOptions& options = {},
                                         const Tokenizer& tokenizer = Tokenizer::approximate());

// Per-bucket counts total * (1, 2, 3, 4) / 10. total must be divisible by 10.
std::array<std::size_t, 4> bucket_counts(std::size_t total);

// Seeded sample with exact per-bucket counts, in shuffled order.
std::vector<AlignmentExample> bucket_mix(std::vector<AlignmentExample> supply,
                                         std::size_t total, std::uint64_t seed);

// Index form of bucket_mix: positions into `buckets` (the bucket of each
// supply item) in output order.
std::vector<std::size_t> bucket_mix_indices(std::span<const std::size_t> buckets,
                                            std::size_t total, std::uint64_t seed);

}  // namespace lcrr
