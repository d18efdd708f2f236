#include "lcrr/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "lcrr/embedded_templates.hpp"
#include "lcrr/errors.hpp"
#include "lcrr/jsonl.hpp"
#include "lcrr/metrics.hpp"

namespace lcrr {

namespace {

struct TemplateEntry {
  std::string_view id;
  std::string_view text;
};

constexpr TemplateEntry kTemplates[] = {
    {"da", embedded::da},
    {"rr_stage1", embedded::rr_stage1},
    {"rr_stage2", embedded::rr_stage2},
    {"qf", embedded::qf},
    {"s2a_stage1", embedded::s2a_stage1},
    {"s2a_stage2", embedded::s2a_stage2},
};

constexpr std::string_view kContextBlockPrefix = "The following are given documents.\n\n";

std::string_view trim(std::string_view s) {
  auto is_ws = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  while (!s.empty() && is_ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_ws(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return lines;
}

using Bindings = std::map<std::string_view, std::string_view>;

std::string substitute(std::string_view id, std::string_view tpl, const Bindings& values) {
  for (const auto& [name, value] : values) {
    std::string placeholder = "{" + std::string(name) + "}";
    if (tpl.find(placeholder) == std::string_view::npos)
      throw InternalError("template '" + std::string(id) + "' lacks placeholder " + placeholder);
  }
  std::size_t extra = 0;
  for (const auto& [name, value] : values) extra += value.size();
  std::string out;
  out.reserve(tpl.size() + 2 * extra);
  std::size_t i = 0;
  while (i < tpl.size()) {
    if (tpl[i] == '{') {
      std::size_t close = tpl.find('}', i);
      if (close != std::string_view::npos) {
        auto it = values.find(tpl.substr(i + 1, close - i - 1));
        if (it != values.end()) {
          out.append(it->second);
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(tpl[i]);
    ++i;
  }
  return out;
}

std::string_view strip_quotes(std::string_view s) {
  constexpr std::string_view kOpen = "\xE2\x80\x9C";
  constexpr std::string_view kClose = "\xE2\x80\x9D";
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"') return s.substr(1, s.size() - 2);
  if (s.size() >= kOpen.size() + kClose.size() && s.substr(0, kOpen.size()) == kOpen &&
      s.substr(s.size() - kClose.size()) == kClose)
    return s.substr(kOpen.size(), s.size() - kOpen.size() - kClose.size());
  return s;
}

// Removes trailing citation markers such as " [1]." or "[1][2]".
std::string_view strip_citations(std::string_view s) {
  while (true) {
    s = trim(s);
    std::string_view body = s;
    if (!body.empty() && body.back() == '.') {
      body.remove_suffix(1);
      body = trim(body);
    }
    if (body.empty() || body.back() != ']') return s;
    std::size_t open = body.rfind('[');
    if (open == std::string_view::npos) return s;
    std::string_view digits = body.substr(open + 1, body.size() - open - 2);
    if (digits.empty() ||
        !std::all_of(digits.begin(), digits.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      return s;
    s = body.substr(0, open);
  }
}

RetrievalTrace parse_bullets(std::string_view output) {
  RetrievalTrace trace;
  std::vector<std::string> line_warnings;
  bool any_bullet = false;
  auto lines = split_lines(output);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    std::string_view line = trim(lines[n]);
    if (line.empty()) continue;
    if (line.front() == '-') {
      any_bullet = true;
      std::string_view content = trim(line.substr(1));
      if (content.empty())
        line_warnings.push_back("line " + std::to_string(n + 1) + ": empty bullet");
      else
        trace.sentences.emplace_back(content);
    } else {
      line_warnings.push_back("line " + std::to_string(n + 1) +
                              ": not a bulleted sentence: " + std::string(line.substr(0, 80)));
    }
  }
  if (!any_bullet)
    trace.parse_warnings.push_back("no bulleted sentences found");
  else
    trace.parse_warnings = std::move(line_warnings);
  return trace;
}

RetrievalTrace parse_quotes(std::string_view output) {
  RetrievalTrace trace;
  constexpr std::string_view kQuotes = "Relevant quotes:";
  constexpr std::string_view kAnswer = "Answer:";
  std::size_t start = output.find(kQuotes);
  if (start == std::string_view::npos) {
    trace.parse_warnings.push_back("no \"Relevant quotes:\" section found");
    return trace;
  }
  start += kQuotes.size();
  std::size_t end = output.find(kAnswer, start);
  if (end == std::string_view::npos) {
    trace.parse_warnings.push_back("no \"Answer:\" marker after quotes");
    end = output.size();
  }
  auto lines = split_lines(output.substr(start, end - start));
  for (std::size_t n = 0; n < lines.size(); ++n) {
    std::string_view line = trim(lines[n]);
    if (line.empty()) continue;
    std::size_t close = line.find(']');
    bool numbered = line.front() == '[' && close != std::string_view::npos && close > 1 &&
                    std::all_of(line.begin() + 1, line.begin() + static_cast<long>(close),
                                [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
    if (!numbered) {
      trace.parse_warnings.push_back("quote line " + std::to_string(n + 1) +
                                     " is not numbered: " + std::string(line.substr(0, 80)));
      continue;
    }
    std::string_view content = trim(strip_quotes(trim(line.substr(close + 1))));
    if (content.empty()) {
      trace.parse_warnings.push_back("quote line " + std::to_string(n + 1) + " is empty");
      continue;
    }
    trace.sentences.emplace_back(content);
  }
  if (trace.sentences.empty() && trace.parse_warnings.empty())
    trace.parse_warnings.push_back("no quotes found");
  return trace;
}

RetrievalTrace parse_compressed(std::string_view output) {
  RetrievalTrace trace;
  std::size_t label = output.find("Unbiased text context");
  if (label == std::string_view::npos) {
    trace.parse_warnings.push_back("no \"Unbiased text context\" section found");
    return trace;
  }
  std::size_t colon = output.find(':', label);
  std::size_t start = colon == std::string_view::npos ? label : colon + 1;
  std::size_t end = output.find("Question/Query", start);
  if (end == std::string_view::npos) end = output.size();
  for (std::string_view line : split_lines(output.substr(start, end - start)))
    for (auto& sentence : segment_sentences(line)) trace.sentences.push_back(std::move(sentence));
  if (trace.sentences.empty()) trace.parse_warnings.push_back("unbiased text context is empty");
  return trace;
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::DA: return "DA";
    case Strategy::RR: return "RR";
    case Strategy::QF: return "QF";
    case Strategy::S2A: return "S2A";
  }
  throw InternalError("unknown strategy");
}

Strategy strategy_from_string(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "da") return Strategy::DA;
  if (lower == "rr") return Strategy::RR;
  if (lower == "qf") return Strategy::QF;
  if (lower == "s2a") return Strategy::S2A;
  throw ConfigError("unknown strategy '" + std::string(name) + "' (expected da|rr|qf|s2a)");
}

std::string_view to_string(Role role) { return role == Role::user ? "user" : "assistant"; }

DialoguePlan plan_for(Strategy strategy) {
  switch (strategy) {
    case Strategy::DA:
      return {strategy, {{"da", HistoryPolicy::append, StageRole::answer}}};
    case Strategy::RR:
      return {strategy,
              {{"rr_stage1", HistoryPolicy::append, StageRole::retrieval},
               {"rr_stage2", HistoryPolicy::append, StageRole::answer}}};
    case Strategy::QF:
      return {strategy, {{"qf", HistoryPolicy::append, StageRole::retrieval_and_answer}}};
    case Strategy::S2A:
      return {strategy,
              {{"s2a_stage1", HistoryPolicy::append, StageRole::retrieval},
               {"s2a_stage2", HistoryPolicy::discard_prior, StageRole::answer}}};
  }
  throw InternalError("unknown strategy");
}

std::string_view template_text(std::string_view id) {
  for (const auto& t : kTemplates)
    if (t.id == id) return t.text;
  throw InternalError("unknown template '" + std::string(id) + "'");
}

std::vector<std::string> template_ids() {
  std::vector<std::string> ids;
  for (const auto& t : kTemplates) ids.emplace_back(t.id);
  return ids;
}

nlohmann::ordered_json template_checksums() {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& t : kTemplates) j[std::string(t.id)] = jsonl::sha256_hex(t.text);
  return j;
}

std::string render_stage(const DialoguePlan& plan, std::size_t stage,
                         const LongContextInstance& inst,
                         std::span<const StageTranscript> prior,
                         const RenderOptions& options) {
  if (stage >= plan.stages.size())
    throw InternalError("stage " + std::to_string(stage) + " out of range for " +
                        std::string(to_string(plan.strategy)));
  if (prior.size() < stage)
    throw InternalError("stage " + std::to_string(stage) + " rendered without prior transcripts");
  const std::string& id = plan.stages[stage].template_id;
  const std::string_view tpl = template_text(id);

  if (id == "s2a_stage2") return substitute(id, tpl, {{"COMPRESSED_TEXT", prior[0].raw_output}});
  if (id == "rr_stage2") {
    std::string turn = substitute(id, tpl, {{"QUERY", inst.question}});
    if (!options.include_context_in_stage2) return turn;
    std::string out(kContextBlockPrefix);
    out += inst.context;
    out += "\n\n";
    out += turn;
    return out;
  }
  return substitute(id, tpl, {{"CONTEXT", inst.context}, {"QUERY", inst.question}});
}

std::vector<ChatMessage> stage_messages(const DialoguePlan& plan, std::size_t stage,
                                        const std::string& rendered,
                                        std::span<const StageTranscript> prior) {
  std::vector<ChatMessage> messages;
  if (plan.stages.at(stage).history == HistoryPolicy::append) {
    for (std::size_t i = 0; i < stage && i < prior.size(); ++i) {
      messages.push_back({Role::user, prior[i].rendered_prompt});
      messages.push_back({Role::assistant, prior[i].raw_output});
    }
  }
  messages.push_back({Role::user, rendered});
  return messages;
}

RetrievalTrace parse_retrieval(Strategy strategy, std::string_view stage1_output) {
  switch (strategy) {
    case Strategy::RR: return parse_bullets(stage1_output);
    case Strategy::QF: return parse_quotes(stage1_output);
    case Strategy::S2A: return parse_compressed(stage1_output);
    case Strategy::DA: break;
  }
  throw InternalError("DA has no retrieval stage");
}

ExtractedAnswer extract_answer(Strategy strategy, std::string_view final_output) {
  ExtractedAnswer out;
  if (strategy != Strategy::QF) {
    out.text = trim(final_output);
    return out;
  }
  constexpr std::string_view kAnswer = "Answer:";
  std::size_t pos = final_output.rfind(kAnswer);
  if (pos == std::string_view::npos) {
    out.warnings.push_back("no \"Answer:\" marker; using the full output");
    out.text = trim(final_output);
    return out;
  }
  out.text = strip_citations(final_output.substr(pos + kAnswer.size()));
  return out;
}

}  // namespace lcrr
