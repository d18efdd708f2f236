#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "lcrr/instance.hpp"
#include "lcrr/tokens.hpp"

namespace lcrr {

struct Passage {
  std::string title;
  std::vector<std::string> sentences;  // trimmed

  // Sentences joined by single spaces.
  std::string text() const;
};

struct FactRef {
  std::size_t passage = 0;
  std::size_t sentence = 0;
};

struct QaExample {
  std::string id;
  TaskKind kind = TaskKind::qa_other;
  std::string question;
  std::vector<std::string> answers;
  std::vector<Passage> gold_passages;
  std::vector<FactRef> gold_fact_refs;

  std::vector<std::string> gold_facts() const;
};

// Examples plus every passage in the file (deduplicated by title, first
// occurrence wins), which serves as the distractor pool.
struct QaDataset {
  std::vector<QaExample> examples;
  std::vector<Passage> passages;
};

struct LoadOptions {
  // When set, examples failing validation are skipped and described here
  // instead of aborting the load.
  std::vector<std::string>* rejected = nullptr;
};

// SQuAD v1.1 layout (data -> paragraphs -> qas). The gold fact is the first
// sentence containing the first answer text.
QaDataset load_squad(const std::filesystem::path& location, const LoadOptions& options = {});

// HotpotQA distractor layout. Gold passages are those named by
// supporting_facts, in context order.
QaDataset load_hotpotqa(const std::filesystem::path& location, const LoadOptions& options = {});

// Pre-flattened JSONL, one QaExample per line:
// {"id", "question", "answers": [...], "gold_passages": [{"title", "sentences"}],
//  "gold_fact_refs": [[passage, sentence], ...]}
QaDataset load_qa_jsonl(const std::filesystem::path& location, const LoadOptions& options = {});

// Checks fact refs and answers; throws ValidationError naming the example.
void validate_example(const QaExample& ex);

// Gold passages plus seeded distractors (titles distinct from the gold ones),
// shuffled and rendered as "Title: {title}\n{passage}\n\n" blocks, filling the
// token budget to within [0.95, 1.0] of the target.
LongContextInstance build_qa_instance(const QaExample& ex, std::size_t target_tokens,
                                      std::span<const Passage> distractor_pool,
                                      std::uint64_t seed,
                                      const Tokenizer& tokenizer = Tokenizer::approximate());

std::string render_passage_block(const Passage& passage);

}  // namespace lcrr
