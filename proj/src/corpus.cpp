#include "lcrr/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lcrr/errors.hpp"
#include "lcrr/rng.hpp"
#include "lcrr/wordlists.hpp"

namespace lcrr {

namespace fs = std::filesystem;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool has_text(std::string_view s) {
  return std::any_of(s.begin(), s.end(),
                     [](unsigned char c) { return !std::isspace(c); });
}

void validate(const Corpus& corpus, const fs::path& location) {
  if (corpus.documents.empty())
    throw ValidationError("corpus at " + location.string() + " is empty");
  std::set<std::string_view> ids;
  for (const auto& doc : corpus.documents) {
    if (!has_text(doc.text))
      throw ValidationError("corpus document '" + doc.id + "' has no text");
    if (!ids.insert(doc.id).second)
      throw ValidationError("duplicate corpus document id '" + doc.id + "'");
  }
}

// Grows `out` with pieces from `next` until it holds at least `budget`
// tokens, then cuts it to exactly the budget.
template <typename NextPiece>
std::string fill_to_budget(std::size_t budget, const Tokenizer& tokenizer,
                           NextPiece&& next) {
  std::string out;
  if (budget == 0) return out;
  std::size_t estimate = 0;
  std::size_t stalled = 0;
  while (true) {
    while (estimate < budget) {
      std::string_view piece = next();
      std::size_t n = tokenizer.count(piece);
      if (n == 0) {
        if (++stalled > 1000) return out;
        continue;
      }
      stalled = 0;
      out.append(piece);
      estimate += n;
    }
    // Plugin counters need not be additive; confirm on the real text.
    std::size_t actual = tokenizer.count(out);
    if (actual >= budget) break;
    estimate = actual;
  }
  out.resize(tokenizer.take(out, budget).size());
  return out;
}

}  // namespace

CorpusFormat corpus_format_from_string(std::string_view name) {
  if (name == "plain-text-dir") return CorpusFormat::plain_text_dir;
  if (name == "jsonl") return CorpusFormat::jsonl;
  throw ConfigError("unknown corpus format '" + std::string(name) +
                    "' (expected plain-text-dir or jsonl)");
}

Corpus load_corpus(const fs::path& location, CorpusFormat format) {
  std::error_code ec;
  if (!fs::exists(location, ec)) throw InputError("corpus path " + location.string() + " does not exist");
  Corpus corpus;
  corpus.source = CorpusSource::user_file;
  if (format == CorpusFormat::plain_text_dir) {
    if (!fs::is_directory(location))
      throw InputError("corpus path " + location.string() + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(location)) {
      if (entry.is_regular_file() && entry.path().extension() == ".txt")
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) {
                return a.filename().string() < b.filename().string();
              });
    for (const auto& file : files)
      corpus.documents.push_back({file.stem().string(), read_file(file)});
  } else {
    std::ifstream in(location);
    if (!in) throw InputError("cannot read " + location.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!has_text(line)) continue;
      try {
        auto j = nlohmann::json::parse(line);
        corpus.documents.push_back(
            {j.at("id").get<std::string>(), j.at("text").get<std::string>()});
      } catch (const nlohmann::json::exception& e) {
        throw InputError(location.string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
  }
  validate(corpus, location);
  return corpus;
}

bool contains_reserved_phrase(std::string_view text) {
  static constexpr std::string_view kReserved[] = {"special magic number", "passkey"};
  std::string lowered(text);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return std::any_of(std::begin(kReserved), std::end(kReserved), [&](std::string_view p) {
    return lowered.find(p) != std::string::npos;
  });
}

std::string slice_filler(const Corpus& corpus, std::size_t budget, std::uint64_t seed,
                         const Tokenizer& tokenizer) {
  if (budget == 0) return {};
  std::vector<const Document*> usable;
  for (const auto& doc : corpus.documents) {
    if (!contains_reserved_phrase(doc.text)) usable.push_back(&doc);
  }
  if (usable.empty())
    throw ValidationError("every corpus document contains a reserved needle phrase");

  SeededRng rng(seed);
  std::size_t cursor = static_cast<std::size_t>(rng.index(usable.size()));
  // Start at a seeded sentence boundary of the first document.
  std::vector<std::size_t> starts{0};
  const std::string& head = usable[cursor]->text;
  for (std::size_t i = 0; i + 1 < head.size(); ++i) {
    const char c = head[i];
    if ((c == '.' || c == '!' || c == '?' || c == '\n') &&
        std::isspace(static_cast<unsigned char>(head[i + 1]))) {
      std::size_t j = i + 1;
      while (j < head.size() && std::isspace(static_cast<unsigned char>(head[j]))) ++j;
      if (j < head.size() && starts.back() != j) starts.push_back(j);
    }
  }
  std::size_t offset = starts[rng.index(starts.size())];
  bool first = true;
  std::string piece;
  return fill_to_budget(budget, tokenizer, [&]() -> std::string_view {
    piece.clear();
    if (!first) piece = "\n\n";
    first = false;
    piece += std::string_view(usable[cursor]->text).substr(offset);
    offset = 0;
    cursor = (cursor + 1) % usable.size();
    return piece;
  });
}

std::string synth_filler(std::size_t budget, std::uint64_t seed, const Tokenizer& tokenizer) {
  if (budget == 0) return {};
  const auto words = wordlists::filler_words();
  SeededRng rng(seed);
  bool first = true;
  std::string sentence;
  return fill_to_budget(budget, tokenizer, [&]() -> std::string_view {
    sentence.clear();
    if (!first) sentence.push_back(' ');
    first = false;
    const std::size_t length = 6 + static_cast<std::size_t>(rng.index(13));
    const std::size_t comma_at = length > 9 ? 3 + rng.index(length - 6) : length;
    for (std::size_t i = 0; i < length; ++i) {
      std::string_view w = words[rng.index(words.size())];
      if (i == 0) {
        sentence.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(w[0]))));
        sentence.append(w.substr(1));
      } else {
        sentence.push_back(' ');
        sentence.append(w);
      }
      if (i == comma_at) sentence.push_back(',');
    }
    sentence.push_back('.');
    return sentence;
  });
}

}  // namespace lcrr
