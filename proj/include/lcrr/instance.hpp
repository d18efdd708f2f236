#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace lcrr {

enum class TaskKind {
  passkey1,
  passkey2,
  passkey3,
  s_niah,
  mk_niah,
  mv_niah,
  mq_niah,
  qa_squad,
  qa_hotpot,
  qa_other,
};

std::string_view to_string(TaskKind kind);
TaskKind task_kind_from_string(std::string_view name);

bool is_synthetic(TaskKind kind);

// mv/mq NIAH: a prediction must contain every gold value.
bool requires_all_answers(TaskKind kind);

struct NeedleSpan {
  std::string text;
  std::size_t char_offset = 0;  // byte offset into the context

  bool operator==(const NeedleSpan&) const = default;
};

// One test item: question, assembled long context, gold answers and the
// supporting facts sufficient to answer it.
struct LongContextInstance {
  std::string id;
  TaskKind task_kind = TaskKind::passkey1;
  std::string question;
  std::string context;
  std::vector<std::string> gold_answers;  // any one matches (all, for mv/mq)
  std::vector<std::string> gold_facts;    // in order of occurrence
  std::vector<NeedleSpan> needle_spans;
  std::size_t target_tokens = 0;
  std::uint64_t seed = 0;

  bool operator==(const LongContextInstance&) const = default;
};

void to_json(nlohmann::ordered_json& j, const LongContextInstance& inst);
void from_json(const nlohmann::ordered_json& j, LongContextInstance& inst);

// Checks the structural invariants every instance must satisfy: needle spans
// located verbatim, non-empty golds, gold facts present in the context.
// Throws ValidationError naming the instance.
void validate_instance(const LongContextInstance& inst);

// Sorts gold facts by first occurrence in the context.
void order_facts_by_occurrence(LongContextInstance& inst);

std::vector<LongContextInstance> read_instances(const std::filesystem::path& path);
void write_instances(const std::filesystem::path& path,
                     const std::vector<LongContextInstance>& instances);

}  // namespace lcrr
