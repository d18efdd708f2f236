#include "lcrr/instance.hpp"

#include <algorithm>
#include <array>
#include <utility>

#include "lcrr/errors.hpp"
#include "lcrr/jsonl.hpp"

namespace lcrr {

namespace {

constexpr std::array<std::pair<TaskKind, std::string_view>, 10> kTaskNames{{
    {TaskKind::passkey1, "passkey1"},
    {TaskKind::passkey2, "passkey2"},
    {TaskKind::passkey3, "passkey3"},
    {TaskKind::s_niah, "s-niah"},
    {TaskKind::mk_niah, "mk-niah"},
    {TaskKind::mv_niah, "mv-niah"},
    {TaskKind::mq_niah, "mq-niah"},
    {TaskKind::qa_squad, "qa-squad"},
    {TaskKind::qa_hotpot, "qa-hotpot"},
    {TaskKind::qa_other, "qa-other"},
}};

}  // namespace

std::string_view to_string(TaskKind kind) {
  for (const auto& [k, name] : kTaskNames)
    if (k == kind) return name;
  throw InternalError("unknown task kind");
}

TaskKind task_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kTaskNames)
    if (n == name) return k;
  throw ConfigError("unknown task kind '" + std::string(name) + "'");
}

bool is_synthetic(TaskKind kind) {
  return kind != TaskKind::qa_squad && kind != TaskKind::qa_hotpot &&
         kind != TaskKind::qa_other;
}

bool requires_all_answers(TaskKind kind) {
  return kind == TaskKind::mv_niah || kind == TaskKind::mq_niah;
}

void to_json(nlohmann::ordered_json& j, const LongContextInstance& inst) {
  auto spans = nlohmann::ordered_json::array();
  for (const auto& s : inst.needle_spans)
    spans.push_back({{"text", s.text}, {"char_offset", s.char_offset}});
  j = nlohmann::ordered_json{
      {"id", inst.id},
      {"task_kind", to_string(inst.task_kind)},
      {"question", inst.question},
      {"context", inst.context},
      {"gold_answers", inst.gold_answers},
      {"gold_facts", inst.gold_facts},
      {"needle_spans", std::move(spans)},
      {"target_tokens", inst.target_tokens},
      {"seed", inst.seed},
  };
}

void from_json(const nlohmann::ordered_json& j, LongContextInstance& inst) {
  inst.id = j.at("id").get<std::string>();
  inst.task_kind = task_kind_from_string(j.at("task_kind").get<std::string>());
  inst.question = j.at("question").get<std::string>();
  inst.context = j.at("context").get<std::string>();
  inst.gold_answers = j.at("gold_answers").get<std::vector<std::string>>();
  inst.gold_facts = j.value("gold_facts", std::vector<std::string>{});
  inst.needle_spans.clear();
  if (j.contains("needle_spans")) {
    for (const auto& s : j.at("needle_spans"))
      inst.needle_spans.push_back(
          {s.at("text").get<std::string>(), s.at("char_offset").get<std::size_t>()});
  }
  inst.target_tokens = j.value("target_tokens", std::size_t{0});
  inst.seed = j.value("seed", std::uint64_t{0});
}

void validate_instance(const LongContextInstance& inst) {
  auto fail = [&](const std::string& what) {
    throw ValidationError("instance '" + inst.id + "': " + what);
  };
  if (inst.gold_answers.empty()) fail("no gold answers");
  for (const auto& span : inst.needle_spans) {
    if (span.char_offset > inst.context.size() ||
        inst.context.compare(span.char_offset, span.text.size(), span.text) != 0)
      fail("needle not found at offset " + std::to_string(span.char_offset));
  }
  for (const auto& fact : inst.gold_facts) {
    if (inst.context.find(fact) == std::string::npos)
      fail("gold fact missing from context: " + fact);
  }
}

void order_facts_by_occurrence(LongContextInstance& inst) {
  std::vector<std::pair<std::size_t, std::string>> keyed;
  keyed.reserve(inst.gold_facts.size());
  for (auto& fact : inst.gold_facts)
    keyed.emplace_back(inst.context.find(fact), std::move(fact));
  std::stable_sort(keyed.begin(), keyed.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  inst.gold_facts.clear();
  for (auto& [pos, fact] : keyed) inst.gold_facts.push_back(std::move(fact));
}

std::vector<LongContextInstance> read_instances(const std::filesystem::path& path) {
  std::vector<LongContextInstance> out;
  jsonl::for_each(path, [&](const nlohmann::ordered_json& j) {
    try {
      out.push_back(j.get<LongContextInstance>());
    } catch (const nlohmann::json::exception& e) {
      throw InputError(path.string() + ": malformed instance: " + e.what());
    }
  });
  return out;
}

void write_instances(const std::filesystem::path& path,
                     const std::vector<LongContextInstance>& instances) {
  std::string text;
  for (const auto& inst : instances) {
    text += nlohmann::ordered_json(inst).dump();
    text += '\n';
  }
  jsonl::write_text(path, text);
}

}  // namespace lcrr
