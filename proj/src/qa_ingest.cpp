#include "lcrr/qa_ingest.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "lcrr/errors.hpp"
#include "lcrr/jsonl.hpp"
#include "lcrr/metrics.hpp"
#include "lcrr/rng.hpp"

namespace lcrr {

namespace fs = std::filesystem;

namespace {

using json = nlohmann::json;

std::string trimmed(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

json parse_file(const fs::path& location) {
  std::ifstream in(location);
  if (!in) throw InputError("cannot read " + location.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InputError(location.string() + ": " + e.what());
  }
}

// Resolves a JSON pointer-ish path for error messages.
const json& at(const json& j, std::string_view key, const std::string& where) {
  if (!j.is_object() || !j.contains(key))
    throw InputError("malformed layout at " + where + ": missing '" + std::string(key) + "'");
  return j.at(std::string(key));
}

template <typename T>
T get_as(const json& j, const std::string& where) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw InputError("malformed layout at " + where + ": " + e.what());
  }
}

void accept(QaDataset& out, QaExample ex, const LoadOptions& options) {
  try {
    validate_example(ex);
  } catch (const ValidationError& e) {
    if (!options.rejected) throw;
    options.rejected->push_back(e.what());
    return;
  }
  out.examples.push_back(std::move(ex));
}

void add_to_pool(QaDataset& out, std::unordered_set<std::string>& titles, const Passage& p) {
  if (p.sentences.empty()) return;
  if (titles.insert(p.title).second) out.passages.push_back(p);
}

class LazyPermutation {
 public:
  LazyPermutation(std::size_t n, std::uint64_t seed) : n_(n), rng_(seed) {}

  bool done() const { return drawn_ == n_; }

  // Next element of a uniformly random permutation of [0, n).
  std::size_t next() {
    std::size_t j = drawn_ + static_cast<std::size_t>(rng_.index(n_ - drawn_));
    std::size_t vj = value(j);
    swapped_[j] = value(drawn_);
    ++drawn_;
    return vj;
  }

 private:
  std::size_t value(std::size_t i) const {
    auto it = swapped_.find(i);
    return it == swapped_.end() ? i : it->second;
  }

  std::size_t n_;
  std::size_t drawn_ = 0;
  SeededRng rng_;
  std::unordered_map<std::size_t, std::size_t> swapped_;
};

}  // namespace

std::string Passage::text() const {
  std::string out;
  for (const auto& s : sentences) {
    if (s.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += s;
  }
  return out;
}

std::vector<std::string> QaExample::gold_facts() const {
  std::vector<std::string> facts;
  for (const auto& ref : gold_fact_refs)
    facts.push_back(gold_passages.at(ref.passage).sentences.at(ref.sentence));
  return facts;
}

void validate_example(const QaExample& ex) {
  auto fail = [&](const std::string& what) {
    throw ValidationError("example '" + ex.id + "': " + what);
  };
  if (ex.answers.empty()) fail("no answers");
  if (ex.gold_passages.empty()) fail("no gold passages");
  if (ex.gold_fact_refs.empty()) fail("no gold facts");
  for (const auto& ref : ex.gold_fact_refs) {
    if (ref.passage >= ex.gold_passages.size() ||
        ref.sentence >= ex.gold_passages[ref.passage].sentences.size())
      fail("gold fact ref (" + std::to_string(ref.passage) + ", " +
           std::to_string(ref.sentence) + ") does not index a sentence");
    const auto& s = ex.gold_passages[ref.passage].sentences[ref.sentence];
    if (s.empty() || s.find('\n') != std::string::npos)
      fail("gold fact sentence is empty or spans lines");
  }
}

QaDataset load_squad(const fs::path& location, const LoadOptions& options) {
  const json root = parse_file(location);
  QaDataset out;
  std::unordered_set<std::string> titles;
  const json& data = at(root, "data", "$");
  if (!data.is_array()) throw InputError("malformed layout at $.data: not an array");
  for (std::size_t a = 0; a < data.size(); ++a) {
    const std::string apath = "$.data[" + std::to_string(a) + "]";
    const std::string title = get_as<std::string>(at(data[a], "title", apath), apath + ".title");
    const json& paragraphs = at(data[a], "paragraphs", apath);
    for (std::size_t p = 0; p < paragraphs.size(); ++p) {
      const std::string ppath = apath + ".paragraphs[" + std::to_string(p) + "]";
      const auto context = get_as<std::string>(at(paragraphs[p], "context", ppath), ppath + ".context");
      Passage passage;
      // Paragraph-qualified titles keep every paragraph distinct in the pool.
      passage.title = paragraphs.size() > 1 ? title + " (" + std::to_string(p + 1) + ")" : title;
      for (auto& s : segment_sentences(context)) passage.sentences.push_back(trimmed(collapse_whitespace(s)));
      add_to_pool(out, titles, passage);

      const json& qas = at(paragraphs[p], "qas", ppath);
      for (std::size_t q = 0; q < qas.size(); ++q) {
        const std::string qpath = ppath + ".qas[" + std::to_string(q) + "]";
        QaExample ex;
        ex.kind = TaskKind::qa_squad;
        ex.id = get_as<std::string>(at(qas[q], "id", qpath), qpath + ".id");
        ex.question = get_as<std::string>(at(qas[q], "question", qpath), qpath + ".question");
        for (const auto& ans : at(qas[q], "answers", qpath)) {
          auto text = trimmed(get_as<std::string>(at(ans, "text", qpath), qpath + ".answers"));
          if (!text.empty() && std::find(ex.answers.begin(), ex.answers.end(), text) == ex.answers.end())
            ex.answers.push_back(std::move(text));
        }
        ex.gold_passages.push_back(passage);
        if (!ex.answers.empty()) {
          for (std::size_t s = 0; s < passage.sentences.size(); ++s) {
            if (passage.sentences[s].find(ex.answers.front()) != std::string::npos) {
              ex.gold_fact_refs.push_back({0, s});
              break;
            }
          }
        }
        if (ex.gold_fact_refs.empty() && !ex.answers.empty()) {
          std::string msg = "example '" + ex.id + "': answer '" + ex.answers.front() +
                            "' not contained in any single context sentence";
          if (!options.rejected) throw ValidationError(msg);
          options.rejected->push_back(msg);
          continue;
        }
        accept(out, std::move(ex), options);
      }
    }
  }
  return out;
}

QaDataset load_hotpotqa(const fs::path& location, const LoadOptions& options) {
  const json root = parse_file(location);
  if (!root.is_array()) throw InputError("malformed layout at $: expected an array of examples");
  QaDataset out;
  std::unordered_set<std::string> titles;
  for (std::size_t e = 0; e < root.size(); ++e) {
    const std::string epath = "$[" + std::to_string(e) + "]";
    const json& item = root[e];
    QaExample ex;
    ex.kind = TaskKind::qa_hotpot;
    ex.id = get_as<std::string>(at(item, "_id", epath), epath + "._id");
    ex.question = get_as<std::string>(at(item, "question", epath), epath + ".question");
    ex.answers = {trimmed(get_as<std::string>(at(item, "answer", epath), epath + ".answer"))};

    std::vector<Passage> context;
    const json& ctx = at(item, "context", epath);
    for (std::size_t c = 0; c < ctx.size(); ++c) {
      const std::string cpath = epath + ".context[" + std::to_string(c) + "]";
      if (!ctx[c].is_array() || ctx[c].size() != 2)
        throw InputError("malformed layout at " + cpath + ": expected [title, sentences]");
      Passage p;
      p.title = get_as<std::string>(ctx[c][0], cpath + "[0]");
      for (const auto& s : get_as<std::vector<std::string>>(ctx[c][1], cpath + "[1]"))
        p.sentences.push_back(trimmed(collapse_whitespace(s)));
      add_to_pool(out, titles, p);
      context.push_back(std::move(p));
    }

    const json& facts = at(item, "supporting_facts", epath);
    std::vector<std::pair<std::string, std::size_t>> refs;
    for (std::size_t f = 0; f < facts.size(); ++f) {
      const std::string fpath = epath + ".supporting_facts[" + std::to_string(f) + "]";
      if (!facts[f].is_array() || facts[f].size() != 2)
        throw InputError("malformed layout at " + fpath + ": expected [title, sentence_idx]");
      refs.emplace_back(get_as<std::string>(facts[f][0], fpath + "[0]"),
                        get_as<std::size_t>(facts[f][1], fpath + "[1]"));
    }

    std::string problem;
    for (const auto& [title, idx] : refs) {
      auto it = std::find_if(context.begin(), context.end(),
                             [&](const Passage& p) { return p.title == title; });
      if (it == context.end()) {
        problem = "supporting fact references missing title '" + title + "'";
        break;
      }
      if (idx >= it->sentences.size()) {
        problem = "supporting fact index " + std::to_string(idx) + " out of range for '" + title + "'";
        break;
      }
    }
    if (!problem.empty()) {
      std::string msg = "example '" + ex.id + "': " + problem;
      if (!options.rejected) throw ValidationError(msg);
      options.rejected->push_back(msg);
      continue;
    }

    // Gold passages in context order; refs keep supporting_facts order.
    for (const auto& p : context) {
      bool gold = std::any_of(refs.begin(), refs.end(),
                              [&](const auto& r) { return r.first == p.title; });
      if (gold) ex.gold_passages.push_back(p);
    }
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& [title, idx] : refs) {
      std::size_t pi = static_cast<std::size_t>(
          std::find_if(ex.gold_passages.begin(), ex.gold_passages.end(),
                       [&](const Passage& p) { return p.title == title; }) -
          ex.gold_passages.begin());
      if (seen.insert({pi, idx}).second) ex.gold_fact_refs.push_back({pi, idx});
    }
    accept(out, std::move(ex), options);
  }
  return out;
}

QaDataset load_qa_jsonl(const fs::path& location, const LoadOptions& options) {
  QaDataset out;
  std::unordered_set<std::string> titles;
  std::size_t line = 0;
  jsonl::for_each(location, [&](const nlohmann::ordered_json& j) {
    ++line;
    const std::string where = location.string() + " record " + std::to_string(line);
    QaExample ex;
    ex.kind = TaskKind::qa_other;
    try {
      ex.id = j.at("id").get<std::string>();
      ex.question = j.at("question").get<std::string>();
      ex.answers = j.at("answers").get<std::vector<std::string>>();
      for (const auto& p : j.at("gold_passages")) {
        Passage passage;
        passage.title = p.at("title").get<std::string>();
        for (const auto& s : p.at("sentences").get<std::vector<std::string>>())
          passage.sentences.push_back(trimmed(collapse_whitespace(s)));
        ex.gold_passages.push_back(std::move(passage));
      }
      for (const auto& r : j.at("gold_fact_refs"))
        ex.gold_fact_refs.push_back({r.at(0).get<std::size_t>(), r.at(1).get<std::size_t>()});
    } catch (const nlohmann::json::exception& e) {
      throw InputError("malformed layout at " + where + ": " + e.what());
    }
    for (const auto& p : ex.gold_passages) add_to_pool(out, titles, p);
    accept(out, std::move(ex), options);
  });
  return out;
}

std::string render_passage_block(const Passage& passage) {
  return "Title: " + passage.title + "\n" + passage.text() + "\n\n";
}

LongContextInstance build_qa_instance(const QaExample& ex, std::size_t target_tokens,
                                      std::span<const Passage> distractor_pool,
                                      std::uint64_t seed, const Tokenizer& tokenizer) {
  validate_example(ex);
  std::unordered_set<std::string_view> gold_titles;
  for (const auto& p : ex.gold_passages) gold_titles.insert(p.title);

  std::vector<std::string> blocks;
  std::size_t total = 0;
  for (const auto& p : ex.gold_passages) {
    blocks.push_back(render_passage_block(p));
    total += tokenizer.count(blocks.back());
  }
  // Target 0: gold passages only.
  const bool gold_only = target_tokens == 0;
  if (!gold_only && total > target_tokens)
    throw ValidationError("example '" + ex.id + "': gold passages need " + std::to_string(total) +
                          " tokens, target is " + std::to_string(target_tokens));

  const double floor = 0.95 * static_cast<double>(target_tokens);
  LazyPermutation order(distractor_pool.size(), derive_seed(seed, "distractors"));
  while (!gold_only && static_cast<double>(total) < floor && !order.done()) {
    const Passage& candidate = distractor_pool[order.next()];
    if (gold_titles.count(candidate.title) || candidate.sentences.empty()) continue;
    std::string block = render_passage_block(candidate);
    std::size_t n = tokenizer.count(block);
    if (total + n > target_tokens) continue;
    total += n;
    blocks.push_back(std::move(block));
  }
  if (!gold_only && static_cast<double>(total) < floor)
    throw ValidationError("example '" + ex.id + "': distractor pool exhausted at " +
                          std::to_string(total) + " of " + std::to_string(target_tokens) +
                          " tokens");

  SeededRng rng(derive_seed(seed, "passage-order"));
  rng.shuffle(std::span(blocks));

  LongContextInstance inst;
  inst.id = std::string(to_string(ex.kind)) + "-" + ex.id;
  inst.task_kind = ex.kind;
  inst.question = ex.question;
  inst.gold_answers = ex.answers;
  inst.gold_facts = ex.gold_facts();
  inst.target_tokens = target_tokens;
  inst.seed = seed;
  std::size_t size = 0;
  for (const auto& b : blocks) size += b.size();
  inst.context.reserve(size);
  for (const auto& b : blocks) inst.context += b;
  if (!gold_only && tokenizer.count(inst.context) > target_tokens)
    throw ValidationError("example '" + ex.id + "': assembled context exceeds the target "
                          "(tokenizer is not additive over passage blocks)");
  order_facts_by_occurrence(inst);
  return inst;
}

}  // namespace lcrr
