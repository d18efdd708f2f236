#include "lcrr/task_synthesis.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <optional>
#include <set>

#include "lcrr/errors.hpp"
#include "lcrr/rng.hpp"
#include "lcrr/wordlists.hpp"

namespace lcrr {

namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

bool is_closer(char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; }

std::string default_id(TaskKind kind, std::size_t target, std::uint64_t seed) {
  return std::string(to_string(kind)) + "-" + length_label(target) + "-s" + std::to_string(seed);
}

// Result of placing needles into a filler; nullopt when the filler happens to
// contain a forbidden string, so the caller can redraw needle values.
std::optional<detail::Assembly> assemble(const std::vector<detail::PlacedNeedle>& needles,
                                         const std::vector<std::string>& forbidden,
                                         const FillerSource& filler, std::size_t target,
                                         const Tokenizer& tokenizer) {
  if (target == 0) {
    std::vector<std::size_t> order(needles.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return needles[a].position < needles[b].position;
    });
    detail::Assembly out;
    out.spans.resize(needles.size());
    for (std::size_t i : order) {
      if (!out.context.empty()) out.context.push_back(' ');
      out.spans[i] = {needles[i].text, out.context.size()};
      out.context += needles[i].text;
    }
    return out;
  }

  std::size_t needle_tokens = 0;
  for (const auto& n : needles) needle_tokens += tokenizer.count(n.text);
  if (needle_tokens > target)
    throw ValidationError("target of " + std::to_string(target) +
                          " tokens cannot hold needles of " + std::to_string(needle_tokens) +
                          " tokens");

  std::size_t budget = target - needle_tokens;
  for (int attempt = 0; attempt < 16; ++attempt) {
    std::string text = filler(budget);
    for (const auto& f : forbidden)
      if (text.find(f) != std::string::npos) return std::nullopt;
    auto out = detail::insert_needles(text, needles, tokenizer);
    std::size_t n = tokenizer.count(out.context);
    if (n <= target) return out;
    std::size_t over = n - target;
    budget = budget > over ? budget - over : 0;
  }
  throw ValidationError("could not fit needles into " + std::to_string(target) + " tokens");
}

template <typename Draw>
LongContextInstance build_with_retries(Draw&& draw, const FillerSource& filler,
                                       std::size_t target, const Tokenizer& tokenizer) {
  for (int attempt = 0; attempt < 64; ++attempt) {
    auto [inst, needles, forbidden] = draw();
    auto assembled = assemble(needles, forbidden, filler, target, tokenizer);
    if (!assembled) continue;
    inst.context = std::move(assembled->context);
    inst.needle_spans = std::move(assembled->spans);
    inst.target_tokens = target;
    order_facts_by_occurrence(inst);
    return inst;
  }
  throw ValidationError("filler collides with every drawn needle value");
}

struct Draft {
  LongContextInstance inst;
  std::vector<detail::PlacedNeedle> needles;
  std::vector<std::string> forbidden;
};

std::string join_keys(const std::vector<std::string>& keys) {
  std::string out;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (i > 0) out += (i + 1 == keys.size()) ? " and " : ", ";
    out += keys[i];
  }
  return out;
}

}  // namespace

Passkey::Passkey(std::string value) : value_(std::move(value)) {
  if (value_.size() != 10 ||
      !std::all_of(value_.begin(), value_.end(), [](char c) { return c >= 'A' && c <= 'Z'; }))
    throw ValidationError("passkey must be 10 characters in A-Z: '" + value_ + "'");
}

Passkey gen_passkey(std::uint64_t seed) {
  SeededRng rng(seed);
  std::string value(10, 'A');
  for (auto& c : value) c = static_cast<char>('A' + rng.index(26));
  return Passkey(std::move(value));
}

NiahVariant niah_variant_from_string(std::string_view name) {
  if (name == "s" || name == "s-niah") return NiahVariant::s;
  if (name == "mk" || name == "mk-niah") return NiahVariant::mk;
  if (name == "mv" || name == "mv-niah") return NiahVariant::mv;
  if (name == "mq" || name == "mq-niah") return NiahVariant::mq;
  throw ConfigError("unknown NIAH variant '" + std::string(name) + "'");
}

TaskKind task_kind_of(NiahVariant variant) {
  switch (variant) {
    case NiahVariant::s: return TaskKind::s_niah;
    case NiahVariant::mk: return TaskKind::mk_niah;
    case NiahVariant::mv: return TaskKind::mv_niah;
    case NiahVariant::mq: return TaskKind::mq_niah;
  }
  throw InternalError("unknown NIAH variant");
}

std::string render_niah_needle(std::string_view key, std::string_view value) {
  std::string out(kNiahNeedleTemplate);
  out.replace(out.find("{KEY}"), 5, key);
  out.replace(out.find("{VALUE}"), 7, value);
  return out;
}

std::string render_passkey_needle(std::string_view person, std::string_view key) {
  return "The passkey of " + std::string(person) + " is " + std::string(key) + ".";
}

FillerSource fixed_filler(std::string filler, const Tokenizer& tokenizer) {
  return [filler = std::move(filler), tokenizer](std::size_t budget) {
    auto cut = tokenizer.take(filler, budget);
    if (tokenizer.count(cut) < budget && cut.size() == filler.size())
      throw ValidationError("filler holds " + std::to_string(tokenizer.count(filler)) +
                            " tokens, " + std::to_string(budget) + " required");
    return std::string(cut);
  };
}

LongContextInstance build_passkey_task(int level, const FillerSource& filler,
                                       std::size_t target_tokens, std::uint64_t seed,
                                       const SynthesisOptions& options) {
  if (level < 1 || level > 3)
    throw ValidationError("passkey level must be 1, 2 or 3, got " + std::to_string(level));
  const TaskKind kind = level == 1 ? TaskKind::passkey1
                        : level == 2 ? TaskKind::passkey2
                                     : TaskKind::passkey3;
  SeededRng rng(derive_seed(seed, "passkey-task"));

  auto draw = [&]() {
    Draft d;
    d.inst.id = default_id(kind, target_tokens, seed);
    d.inst.task_kind = kind;
    d.inst.seed = seed;
    Passkey key = gen_passkey(rng.next());
    d.forbidden.push_back(key.value());
    if (level == 1) {
      std::string needle = render_passkey_needle("Alice", key.value());
      double position = rng.index(2) == 0 ? 0.3 : 0.6;
      d.needles.push_back({needle, position});
      d.inst.question = "What is the passkey of Alice?";
      d.inst.gold_answers = {key.value()};
      d.inst.gold_facts = {needle};
      return d;
    }
    std::string alice_half(key.first_half());
    std::string bob_half(key.second_half());
    d.forbidden.push_back(alice_half);
    d.forbidden.push_back(bob_half);
    std::string alice = render_passkey_needle("Alice", alice_half);
    std::string bob = render_passkey_needle("Bob", bob_half);
    const bool alice_first = rng.index(2) == 0;
    d.needles.push_back({alice, alice_first ? 0.3 : 0.6});
    d.needles.push_back({bob, alice_first ? 0.6 : 0.3});
    if (level == 2) {
      const bool ask_alice = rng.index(2) == 0;
      d.inst.question = ask_alice ? "What is the passkey of Alice?" : "What is the passkey of Bob?";
      d.inst.gold_answers = {ask_alice ? alice_half : bob_half};
      d.inst.gold_facts = {ask_alice ? alice : bob};
    } else {
      d.inst.question =
          "What is the passkey of Alice concatenated with the passkey of Bob? "
          "Put Alice's passkey first and Bob's passkey second.";
      d.inst.gold_answers = {alice_half + bob_half};
      d.inst.gold_facts = {alice, bob};
    }
    return d;
  };
  return build_with_retries(
      [&] {
        Draft d = draw();
        return std::tuple{std::move(d.inst), std::move(d.needles), std::move(d.forbidden)};
      },
      filler, target_tokens, options.tokenizer);
}

LongContextInstance build_passkey_task(int level, std::string_view filler,
                                       std::size_t target_tokens, std::uint64_t seed,
                                       const SynthesisOptions& options) {
  return build_passkey_task(level, fixed_filler(std::string(filler), options.tokenizer),
                            target_tokens, seed, options);
}

LongContextInstance build_niah(NiahVariant variant, const FillerSource& filler,
                               std::size_t target_tokens, std::uint64_t seed,
                               const SynthesisOptions& options) {
  const TaskKind kind = task_kind_of(variant);
  const auto vocabulary = wordlists::needle_keys();
  std::size_t needle_count = 1;
  switch (variant) {
    case NiahVariant::s: needle_count = 1; break;
    case NiahVariant::mk: needle_count = options.mk_needles; break;
    case NiahVariant::mv: needle_count = options.mv_values; break;
    case NiahVariant::mq: needle_count = options.mq_needles; break;
  }
  if (needle_count == 0 || needle_count > vocabulary.size())
    throw ValidationError("invalid NIAH needle count " + std::to_string(needle_count));
  if (variant == NiahVariant::mk && needle_count < 2)
    throw ValidationError("mk-niah needs at least 2 needles");
  if (variant == NiahVariant::mq &&
      (options.mq_queries < 1 || options.mq_queries > needle_count))
    throw ValidationError("mq-niah queries must be in [1, needle count]");

  SeededRng rng(derive_seed(seed, "niah-task"));

  auto draw = [&]() {
    Draft d;
    d.inst.id = default_id(kind, target_tokens, seed);
    d.inst.task_kind = kind;
    d.inst.seed = seed;

    std::vector<std::string> keys;
    std::set<std::size_t> used_keys;
    const std::size_t distinct_keys = variant == NiahVariant::mv ? 1 : needle_count;
    while (keys.size() < distinct_keys) {
      std::size_t k = static_cast<std::size_t>(rng.index(vocabulary.size()));
      if (used_keys.insert(k).second) keys.emplace_back(vocabulary[k]);
    }
    std::vector<std::string> values;
    std::set<std::uint64_t> used_values;
    while (values.size() < needle_count) {
      std::uint64_t v = 1000000 + rng.index(9000000);
      if (used_values.insert(v).second) values.push_back(std::to_string(v));
    }
    std::vector<std::string> texts;
    for (std::size_t i = 0; i < needle_count; ++i) {
      const std::string& key = keys[variant == NiahVariant::mv ? 0 : i];
      texts.push_back(render_niah_needle(key, values[i]));
      d.needles.push_back({texts.back(), rng.unit()});
    }
    d.forbidden = values;

    switch (variant) {
      case NiahVariant::s:
      case NiahVariant::mk: {
        std::size_t q = variant == NiahVariant::s ? 0 : static_cast<std::size_t>(rng.index(needle_count));
        d.inst.question = "What is the special magic number for " + keys[q] +
                          " mentioned in the provided text?";
        d.inst.gold_answers = {values[q]};
        d.inst.gold_facts = {texts[q]};
        break;
      }
      case NiahVariant::mv:
        d.inst.question = "What are all the special magic numbers for " + keys[0] +
                          " mentioned in the provided text?";
        d.inst.gold_answers = values;
        d.inst.gold_facts = texts;
        break;
      case NiahVariant::mq: {
        std::vector<std::size_t> idx(needle_count);
        std::iota(idx.begin(), idx.end(), 0);
        rng.shuffle(std::span(idx));
        idx.resize(options.mq_queries);
        std::sort(idx.begin(), idx.end());
        std::vector<std::string> queried;
        for (std::size_t i : idx) {
          queried.push_back(keys[i]);
          d.inst.gold_answers.push_back(values[i]);
          d.inst.gold_facts.push_back(texts[i]);
        }
        d.inst.question = "What are all the special magic numbers for " + join_keys(queried) +
                          " mentioned in the provided text?";
        break;
      }
    }
    return std::tuple{std::move(d.inst), std::move(d.needles), std::move(d.forbidden)};
  };
  return build_with_retries(draw, filler, target_tokens, options.tokenizer);
}

LongContextInstance build_niah(NiahVariant variant, std::string_view filler,
                               std::size_t target_tokens, std::uint64_t seed,
                               const SynthesisOptions& options) {
  return build_niah(variant, fixed_filler(std::string(filler), options.tokenizer),
                    target_tokens, seed, options);
}

namespace detail {

std::vector<std::size_t> sentence_boundaries(std::string_view text) {
  std::vector<std::size_t> out{0};
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_space(text[i])) {
      ++i;
      continue;
    }
    const std::size_t ws_begin = i;
    bool newline = false;
    while (i < text.size() && is_space(text[i])) {
      newline |= text[i] == '\n';
      ++i;
    }
    if (i == text.size() || ws_begin == 0) continue;
    std::size_t j = ws_begin;
    while (j > 0 && is_closer(text[j - 1])) --j;
    if (newline || (j > 0 && is_terminator(text[j - 1]))) out.push_back(i);
  }
  return out;
}

Assembly insert_needles(std::string_view filler, const std::vector<PlacedNeedle>& needles,
                        const Tokenizer& tokenizer) {
  const std::size_t filler_tokens = tokenizer.count(filler);
  const auto boundaries = sentence_boundaries(filler);
  const std::size_t window = std::max<std::size_t>(64, filler.size() * 3 / 100);

  std::vector<std::size_t> positions(needles.size());
  for (std::size_t n = 0; n < needles.size(); ++n) {
    double frac = std::clamp(needles[n].position, 0.0, 1.0);
    auto k = static_cast<std::size_t>(std::llround(frac * static_cast<double>(filler_tokens)));
    const std::size_t want = tokenizer.take(filler, k).size();

    std::size_t best = filler.size();
    std::size_t best_dist = filler.size() - want;
    auto it = std::lower_bound(boundaries.begin(), boundaries.end(), want);
    if (it != boundaries.end() && *it - want < best_dist) {
      best = *it;
      best_dist = *it - want;
    }
    if (it != boundaries.begin() && want - *std::prev(it) < best_dist) {
      best = *std::prev(it);
      best_dist = want - best;
    }
    if (best_dist > window) {
      // No sentence break nearby: fall back to the next word start.
      best = want;
      while (best < filler.size() && is_space(filler[best])) ++best;
      if (best > 0 && best < filler.size() && !is_space(filler[best - 1])) best = filler.size();
    }
    positions[n] = best;
  }

  std::vector<std::size_t> order(needles.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return positions[a] < positions[b];
  });

  Assembly out;
  out.spans.resize(needles.size());
  std::size_t total = filler.size();
  for (const auto& n : needles) total += n.text.size() + 1;
  out.context.reserve(total);
  std::size_t copied = 0;
  for (std::size_t idx : order) {
    const std::size_t pos = positions[idx];
    out.context.append(filler.substr(copied, pos - copied));
    copied = pos;
    if (pos == filler.size()) {
      if (!out.context.empty() && !is_space(out.context.back())) out.context.push_back(' ');
      out.spans[idx] = {needles[idx].text, out.context.size()};
      out.context += needles[idx].text;
    } else {
      out.spans[idx] = {needles[idx].text, out.context.size()};
      out.context += needles[idx].text;
      out.context.push_back(' ');
    }
  }
  out.context.append(filler.substr(copied));
  return out;
}

}  // namespace detail

}  // namespace lcrr
