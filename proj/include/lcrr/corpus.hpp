#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lcrr/tokens.hpp"

namespace lcrr {

struct Document {
  std::string id;
  std::string text;
};

enum class CorpusSource { user_file, synthetic };
enum class CorpusFormat { plain_text_dir, jsonl };

CorpusFormat corpus_format_from_string(std::string_view name);

// Haystack text source. Read-only after loading.
struct Corpus {
  std::vector<Document> documents;
  CorpusSource source = CorpusSource::user_file;
};

// plain-text-dir: one document per *.txt file, ordered by filename.
// jsonl: one {"id", "text"} object per line, in line order.
// Throws InputError for missing/unreadable input, ValidationError for an
// empty corpus, duplicate ids or empty texts.
Corpus load_corpus(const std::filesystem::path& location, CorpusFormat format);

// True if the text contains a phrase used by needle templates. Filler must
// never contain one.
bool contains_reserved_phrase(std::string_view text);

// Concatenates documents (blank-line separated) starting at a seeded document
// offset, cycling as needed, and cuts to `budget` tokens. Documents that
// contain a reserved phrase are skipped.
std::string slice_filler(const Corpus& corpus, std::size_t budget, std::uint64_t seed,
                         const Tokenizer& tokenizer = Tokenizer::approximate());

// Digit-free pseudo-prose from a fixed vocabulary, cut to `budget` tokens.
std::string synth_filler(std::size_t budget, std::uint64_t seed,
                         const Tokenizer& tokenizer = Tokenizer::approximate());

}  // namespace lcrr
