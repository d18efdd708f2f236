#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lcrr/instance.hpp"

namespace lcrr {

enum class Strategy { DA, RR, QF, S2A };

std::string_view to_string(Strategy s);
Strategy strategy_from_string(std::string_view name);  // da|rr|qf|s2a, any case

enum class HistoryPolicy { append, discard_prior };

enum class StageRole {
  answer,               // output is the final answer
  retrieval,            // output is a retrieval list; an answer stage follows
  retrieval_and_answer  // quotes then "Answer:" in one output
};

struct StageSpec {
  std::string template_id;
  HistoryPolicy history = HistoryPolicy::append;
  StageRole role = StageRole::answer;
};

struct DialoguePlan {
  Strategy strategy = Strategy::DA;
  std::vector<StageSpec> stages;
};

// DA, QF: one stage. RR, S2A: two; S2A stage 2 discards prior history.
DialoguePlan plan_for(Strategy strategy);

struct StageTranscript {
  std::size_t stage_index = 0;
  std::string rendered_prompt;
  std::string raw_output;
  double wall_time_ms = 0;

  bool operator==(const StageTranscript&) const = default;
};

struct RetrievalTrace {
  std::vector<std::string> sentences;
  std::vector<std::string> parse_warnings;

  bool operator==(const RetrievalTrace&) const = default;
};

struct RenderOptions {
  // Re-include the long context in RR stage 2 (conditioning on c). Off by
  // default, matching the two-stage template literally.
  bool include_context_in_stage2 = false;
};

// Template text by id: da, rr_stage1, rr_stage2, qf, s2a_stage1, s2a_stage2.
std::string_view template_text(std::string_view id);
std::vector<std::string> template_ids();

// SHA-256 per template id.
nlohmann::ordered_json template_checksums();

// Substitutes {CONTEXT}, {QUERY} and {COMPRESSED_TEXT} in a single pass, so
// placeholder-like text inside the substituted values is left untouched.
// Throws InternalError if a placeholder the stage needs is missing.
std::string render_stage(const DialoguePlan& plan, std::size_t stage,
                         const LongContextInstance& inst,
                         std::span<const StageTranscript> prior,
                         const RenderOptions& options = {});

enum class Role { user, assistant };

struct ChatMessage {
  Role role = Role::user;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

std::string_view to_string(Role role);

// Message list for a stage: prior turns per the stage's history policy, then
// the rendered prompt as the final user turn.
std::vector<ChatMessage> stage_messages(const DialoguePlan& plan, std::size_t stage,
                                        const std::string& rendered,
                                        std::span<const StageTranscript> prior);

// RR: "- " bullet lines. QF: `[n] "quote"` lines between "Relevant quotes:"
// and "Answer:". S2A: sentences of the "Unbiased text context" section.
RetrievalTrace parse_retrieval(Strategy strategy, std::string_view stage1_output);

struct ExtractedAnswer {
  std::string text;
  std::vector<std::string> warnings;
};

ExtractedAnswer extract_answer(Strategy strategy, std::string_view final_output);

// Labels that the S2A compressed output is expected to carry.
inline constexpr std::string_view kS2AContextLabel =
    "Unbiased text context (includes all content except user’s bias):";
inline constexpr std::string_view kS2AQueryLabel =
    "Question/Query (does not include user bias/preference):";

}  // namespace lcrr
