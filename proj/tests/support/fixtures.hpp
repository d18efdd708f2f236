#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

#include <json.hpp>

#include "lcrr/rng.hpp"
#include "lcrr/wordlists.hpp"

namespace lcrr::testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("lcrr-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Capitalized sentence of filler words ending in a period.
inline std::string make_sentence(SeededRng& rng, std::size_t min_words = 8, std::size_t max_words = 16) {
  const auto words = wordlists::filler_words();
  const std::size_t n = min_words + rng.index(max_words - min_words + 1);
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += words[rng.index(words.size())];
  }
  s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s + ".";
}

// HotpotQA distractor-layout file. Example 0 is a hand-written case about a
// remote control whose answer is "keyboard function keys"; the rest are
// generated with 2-6 supporting facts over two gold paragraphs and eight
// distractor paragraphs each.
inline fs::path write_hotpot_fixture(const fs::path& dir, std::size_t examples,
                                     std::uint64_t seed = 1) {
  using nlohmann::ordered_json;
  SeededRng rng(seed);
  ordered_json root = ordered_json::array();

  ordered_json remote;
  remote["_id"] = "remote-case";
  remote["question"] =
      "Besides the remote, what can be used to control the media program the remote was built for?";
  remote["answer"] = "keyboard function keys";
  remote["supporting_facts"] = ordered_json::array(
      {{"Handheld Remote", 0}, {"Handheld Remote", 1}, {"Media Center Program", 2}});
  ordered_json remote_ctx = ordered_json::array();
  remote_ctx.push_back({"Handheld Remote",
                        {"The handheld remote is an infrared controller sold for several home computers.",
                         " It was built to drive the media center program on a desktop machine.",
                         " Later models added a touch surface."}});
  remote_ctx.push_back({"Media Center Program",
                        {"The media center program plays music and films from a couch.",
                         " It was bundled with desktop machines for several years.",
                         " The program is operated with the handheld remote or the keyboard function keys."}});
  remote_ctx.push_back({"Streaming Box",
                        {"A newer touch remote shipped with the fourth streaming box.",
                         " Reviewers praised its battery life."}});
  remote["context"] = remote_ctx;
  root.push_back(remote);

  for (std::size_t e = 1; e < examples; ++e) {
    ordered_json ex;
    ex["_id"] = "hp" + std::to_string(e);
    ordered_json ctx = ordered_json::array();
    std::vector<std::size_t> sizes;
    for (std::size_t p = 0; p < 10; ++p) {
      const std::string title = "Hotpot " + std::to_string(e) + " part " + std::to_string(p);
      ordered_json sents = ordered_json::array();
      const std::size_t n = 3 + rng.index(4);
      for (std::size_t s = 0; s < n; ++s) sents.push_back(" " + make_sentence(rng));
      sizes.push_back(n);
      ctx.push_back({title, sents});
    }
    // Gold paragraphs 2 and 7; 2-6 facts split across them.
    const std::size_t k = 2 + rng.index(5);
    const std::size_t first = std::min<std::size_t>(1 + rng.index(k - 1), sizes[2]);
    const std::size_t second = std::min(k - first, sizes[7]);
    ordered_json facts = ordered_json::array();
    for (std::size_t i = 0; i < first; ++i) facts.push_back({ctx[2][0], i});
    for (std::size_t i = 0; i < second; ++i) facts.push_back({ctx[7][0], i});
    const std::string answer = std::string(wordlists::needle_keys()[rng.index(wordlists::needle_keys().size())]);
    std::string last = ctx[7][1][0].get<std::string>();
    last.pop_back();
    ctx[7][1][0] = last + " near the " + answer + ".";
    ex["question"] = "Which item is linked to " + ctx[2][0].get<std::string>() + "?";
    ex["answer"] = answer;
    ex["supporting_facts"] = facts;
    ex["context"] = ctx;
    root.push_back(ex);
  }
  const fs::path path = dir / "hotpot.json";
  write_file(path, root.dump());
  return path;
}

// SQuAD v1.1 layout: articles of several paragraphs, one question each.
inline fs::path write_squad_fixture(const fs::path& dir, std::size_t articles,
                                    std::size_t paragraphs = 3, std::uint64_t seed = 2) {
  using nlohmann::ordered_json;
  SeededRng rng(seed);
  ordered_json data = ordered_json::array();
  for (std::size_t a = 0; a < articles; ++a) {
    ordered_json art;
    art["title"] = "Article " + std::to_string(a);
    ordered_json paras = ordered_json::array();
    for (std::size_t p = 0; p < paragraphs; ++p) {
      std::vector<std::string> sents;
      const std::size_t n = 3 + rng.index(4);
      for (std::size_t s = 0; s < n; ++s) sents.push_back(make_sentence(rng));
      const std::size_t target = rng.index(n);
      const std::string answer = "marker" + std::to_string(a) + "x" + std::to_string(p);
      sents[target].pop_back();
      sents[target] += " by " + answer + ".";
      std::string context;
      for (const auto& s : sents) context += (context.empty() ? "" : " ") + s;
      ordered_json qa;
      qa["id"] = "sq" + std::to_string(a) + "-" + std::to_string(p);
      qa["question"] = "Who is named in paragraph " + std::to_string(p) + " of article " +
                       std::to_string(a) + "?";
      qa["answers"] = ordered_json::array(
          {{{"text", answer}, {"answer_start", context.find(answer)}}});
      paras.push_back({{"context", context}, {"qas", ordered_json::array({qa})}});
    }
    art["paragraphs"] = paras;
    data.push_back(art);
  }
  const fs::path path = dir / "squad.json";
  write_file(path, ordered_json{{"version", "1.1"}, {"data", data}}.dump());
  return path;
}

// Plain-text corpus directory of generated prose documents.
inline fs::path write_corpus_dir(const fs::path& dir, std::size_t docs, std::uint64_t seed = 3) {
  SeededRng rng(seed);
  const fs::path root = dir / "corpus";
  for (std::size_t d = 0; d < docs; ++d) {
    std::string text;
    const std::size_t n = 20 + rng.index(40);
    for (std::size_t s = 0; s < n; ++s) text += make_sentence(rng) + (s % 7 == 6 ? "\n\n" : " ");
    char name[32];
    std::snprintf(name, sizeof name, "doc%03zu.txt", d);
    write_file(root / name, text);
  }
  return root;
}

}  // namespace lcrr::testing
