#include "lcrr/tokens.hpp"

#include <charconv>
#include <map>
#include <mutex>
#include <vector>

#include "lcrr/errors.hpp"

namespace lcrr {

namespace {

enum class CharClass { space, word, other };

CharClass classify(unsigned char c) {
  if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v')
    return CharClass::space;
  if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
      c >= 0x80)
    return CharClass::word;
  return CharClass::other;
}

std::size_t approximate_count(std::string_view text) {
  std::size_t n = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    switch (classify(c)) {
      case CharClass::space:
        in_word = false;
        break;
      case CharClass::word:
        if (!in_word) ++n;
        in_word = true;
        break;
      case CharClass::other:
        ++n;
        in_word = false;
        break;
    }
  }
  return n;
}

std::string_view approximate_take(std::string_view text, std::size_t budget) {
  std::size_t n = 0;
  std::size_t end = 0;
  bool in_word = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    switch (classify(static_cast<unsigned char>(text[i]))) {
      case CharClass::space:
        in_word = false;
        break;
      case CharClass::word:
        if (!in_word) {
          if (n == budget) return text.substr(0, end);
          ++n;
        }
        in_word = true;
        end = i + 1;
        break;
      case CharClass::other:
        if (n == budget) return text.substr(0, end);
        ++n;
        in_word = false;
        end = i + 1;
        break;
    }
  }
  return text;
}

struct Registry {
  std::mutex mu;
  std::map<std::string, Tokenizer::Counter, std::less<>> counters;
};

Registry& registry() {
  static Registry r;
  return r;
}

}  // namespace

Tokenizer Tokenizer::approximate() {
  return Tokenizer("approximate-default", TokenizerKind::approximate_default, {});
}

Tokenizer Tokenizer::plugin(std::string name, Counter counter) {
  if (!counter) throw ConfigError("tokenizer plugin '" + name + "' has no counter");
  return Tokenizer("plugin:" + name, TokenizerKind::plugin, std::move(counter));
}

std::size_t Tokenizer::count(std::string_view text) const {
  if (kind_ == TokenizerKind::approximate_default) return approximate_count(text);
  if (text.empty()) return 0;
  return counter_(text);
}

std::string_view Tokenizer::take(std::string_view text, std::size_t budget) const {
  if (kind_ == TokenizerKind::approximate_default) return approximate_take(text, budget);
  if (budget == 0 || text.empty()) return text.substr(0, 0);
  if (counter_(text) <= budget) return text;
  // Candidate cuts: ends of whitespace-delimited chunks.
  std::vector<std::size_t> cuts;
  for (std::size_t i = 0; i < text.size(); ++i) {
    bool here = classify(static_cast<unsigned char>(text[i])) != CharClass::space;
    bool next_space = i + 1 == text.size() ||
                      classify(static_cast<unsigned char>(text[i + 1])) == CharClass::space;
    if (here && next_space) cuts.push_back(i + 1);
  }
  std::size_t lo = 0, hi = cuts.size();  // answer is cuts[lo - 1], 0 means empty
  while (lo < hi) {
    std::size_t mid = (lo + hi + 1) / 2;
    if (counter_(text.substr(0, cuts[mid - 1])) <= budget)
      lo = mid;
    else
      hi = mid - 1;
  }
  return lo == 0 ? text.substr(0, 0) : text.substr(0, cuts[lo - 1]);
}

std::size_t count_tokens(std::string_view text) { return approximate_count(text); }

std::string_view take_tokens(std::string_view text, std::size_t budget) {
  return approximate_take(text, budget);
}

void register_tokenizer(const std::string& name, Tokenizer::Counter counter) {
  if (name.empty()) throw ConfigError("tokenizer plugin name must be non-empty");
  if (!counter) throw ConfigError("tokenizer plugin '" + name + "' has no counter");
  auto& r = registry();
  std::lock_guard lock(r.mu);
  r.counters[name] = std::move(counter);
}

bool unregister_tokenizer(const std::string& name) {
  auto& r = registry();
  std::lock_guard lock(r.mu);
  return r.counters.erase(name) > 0;
}

Tokenizer tokenizer_from_config(std::string_view key) {
  if (key.empty() || key == "approximate-default") return Tokenizer::approximate();
  constexpr std::string_view prefix = "plugin:";
  if (key.substr(0, prefix.size()) == prefix) {
    std::string name(key.substr(prefix.size()));
    auto& r = registry();
    std::lock_guard lock(r.mu);
    auto it = r.counters.find(name);
    if (it == r.counters.end())
      throw ConfigError("no tokenizer plugin registered under '" + name + "'");
    return Tokenizer::plugin(name, it->second);
  }
  throw ConfigError("unknown tokenizer '" + std::string(key) +
                    "' (expected approximate-default or plugin:<name>)");
}

std::size_t parse_length(std::string_view label) {
  std::size_t multiplier = 1;
  if (!label.empty() && (label.back() == 'K' || label.back() == 'k')) {
    multiplier = 1024;
    label.remove_suffix(1);
  }
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(label.data(), label.data() + label.size(), value);
  if (label.empty() || ec != std::errc() || ptr != label.data() + label.size())
    throw ConfigError("invalid context length '" + std::string(label) + "'");
  return value * multiplier;
}

std::string length_label(std::size_t tokens) {
  if (tokens % 1024 == 0) return std::to_string(tokens / 1024) + "K";
  return std::to_string(tokens);
}

}  // namespace lcrr
