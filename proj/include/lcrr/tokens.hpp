#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>

namespace lcrr {

enum class TokenizerKind { approximate_default, plugin };

// Token counting used wherever a context length is specified. The default
// rule: whitespace separates; every maximal run of letters/digits (bytes
// >= 0x80 count as letters, so UTF-8 sequences are never split) is one
// token; every other non-space byte is one token.
class Tokenizer {
 public:
  using Counter = std::function<std::size_t(std::string_view)>;

  static Tokenizer approximate();
  static Tokenizer plugin(std::string name, Counter counter);

  const std::string& name() const { return name_; }
  TokenizerKind kind() const { return kind_; }

  std::size_t count(std::string_view text) const;

  // Longest prefix holding at most `budget` tokens, cut only at token ends.
  // Returns the whole text when it fits.
  std::string_view take(std::string_view text, std::size_t budget) const;

 private:
  Tokenizer(std::string name, TokenizerKind kind, Counter counter)
      : name_(std::move(name)), kind_(kind), counter_(std::move(counter)) {}

  std::string name_;
  TokenizerKind kind_;
  Counter counter_;
};

std::size_t count_tokens(std::string_view text);
std::string_view take_tokens(std::string_view text, std::size_t budget);

// Plugin registry. Counters must be deterministic and monotone under
// concatenation; take() for plugins binary-searches whitespace cut points.
void register_tokenizer(const std::string& name, Tokenizer::Counter counter);
bool unregister_tokenizer(const std::string& name);

// Accepts "approximate-default" or "plugin:<name>".
Tokenizer tokenizer_from_config(std::string_view key);

// Parses length labels such as "4K", "128k", "0K" or "4096". K = 1024.
std::size_t parse_length(std::string_view label);
std::string length_label(std::size_t tokens);

}  // namespace lcrr
