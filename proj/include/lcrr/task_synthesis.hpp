#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "lcrr/instance.hpp"
#include "lcrr/tokens.hpp"

namespace lcrr {

// Ten uppercase letters A-Z.
class Passkey {
 public:
  explicit Passkey(std::string value);
  const std::string& value() const { return value_; }
  std::string_view first_half() const { return std::string_view(value_).substr(0, 5); }
  std::string_view second_half() const { return std::string_view(value_).substr(5); }

 private:
  std::string value_;
};

Passkey gen_passkey(std::uint64_t seed);

enum class NiahVariant { s, mk, mv, mq };

NiahVariant niah_variant_from_string(std::string_view name);
TaskKind task_kind_of(NiahVariant variant);

inline constexpr std::string_view kNiahNeedleTemplate =
    "One of the special magic numbers for {KEY} is: {VALUE}";

std::string render_niah_needle(std::string_view key, std::string_view value);
std::string render_passkey_needle(std::string_view person, std::string_view key);

// Produces filler text holding at most `budget` tokens (and close to it).
using FillerSource = std::function<std::string(std::size_t budget)>;

// Serves prefixes of a fixed filler text.
FillerSource fixed_filler(std::string filler, const Tokenizer& tokenizer);

struct SynthesisOptions {
  Tokenizer tokenizer = Tokenizer::approximate();
  std::size_t mk_needles = 4;
  std::size_t mv_values = 4;
  std::size_t mq_needles = 4;
  std::size_t mq_queries = 2;
};

// Passkey tasks 1-3. Needles sit at 30% / 60% of the context, snapped to the
// nearest sentence boundary. Target 0 yields just the needle sentence(s).
LongContextInstance build_passkey_task(int level, const FillerSource& filler,
                                       std::size_t target_tokens, std::uint64_t seed,
                                       const SynthesisOptions& options = {});
LongContextInstance build_passkey_task(int level, std::string_view filler,
                                       std::size_t target_tokens, std::uint64_t seed,
                                       const SynthesisOptions& options = {});

// NIAH variants with needles at seeded uniform positions, snapped to
// sentence boundaries.
LongContextInstance build_niah(NiahVariant variant, const FillerSource& filler,
                               std::size_t target_tokens, std::uint64_t seed,
                               const SynthesisOptions& options = {});
LongContextInstance build_niah(NiahVariant variant, std::string_view filler,
                               std::size_t target_tokens, std::uint64_t seed,
                               const SynthesisOptions& options = {});

namespace detail {

struct PlacedNeedle {
  std::string text;
  double position;  // fraction of filler tokens, in [0, 1]
};

struct Assembly {
  std::string context;
  std::vector<NeedleSpan> spans;  // same order as the input needles
};

// Inserts needles into filler at sentence boundaries nearest to each
// requested position. Exposed for testing.
Assembly insert_needles(std::string_view filler, const std::vector<PlacedNeedle>& needles,
                        const Tokenizer& tokenizer);

// Sentence-start offsets in `text` (always includes 0).
std::vector<std::size_t> sentence_boundaries(std::string_view text);

}  // namespace detail

}  // namespace lcrr
