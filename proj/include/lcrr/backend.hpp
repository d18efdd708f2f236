#pragma once

#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "lcrr/instance.hpp"
#include "lcrr/prompts.hpp"

namespace lcrr {

struct GenerationRequest {
  std::vector<ChatMessage> messages;
  std::size_t max_output_tokens = 256;
  double temperature = 0.0;
  std::string request_id;
};

struct TokenUsage {
  std::size_t prompt_tokens = 0;
  std::size_t completion_tokens = 0;
};

struct Generation {
  std::string text;
  TokenUsage usage;
};

enum class BackendKind { http_chat, scripted_oracle, scripted_hallucinator, scripted_fixed };

BackendKind backend_kind_from_string(std::string_view name);
std::string_view to_string(BackendKind kind);

struct HttpSettings {
  std::string endpoint;    // e.g. https://api.example.com/v1/chat/completions
  std::string model;
  std::string auth_env;    // name of the env var holding the bearer token
  std::chrono::milliseconds timeout{std::chrono::minutes(10)};
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{1000};
  std::chrono::milliseconds max_backoff{30000};
  std::size_t max_in_flight = 8;
};

struct BackendConfig {
  BackendKind kind = BackendKind::scripted_oracle;
  HttpSettings http;
  std::string fixed_text;          // scripted-fixed
  double hallucination_p = 0.0;    // scripted-hallucinator, in [0, 1]
  std::uint64_t seed = 0;
  std::chrono::milliseconds delay{0};  // scripted kinds: simulated latency
};

// Validates the config for its kind, including the http token variable;
// throws ConfigError.
void validate_config(const BackendConfig& cfg);

// Ground truth for scripted backends, keyed by request id. Prompts stay
// byte-faithful; the runner registers what the oracle needs to know here.
struct RequestContext {
  const LongContextInstance* instance = nullptr;
  Strategy strategy = Strategy::DA;
  std::size_t stage = 0;
  StageRole role = StageRole::answer;
};

class SideChannel {
 public:
  void put(const std::string& request_id, RequestContext ctx);
  std::optional<RequestContext> get(const std::string& request_id) const;
  void erase(const std::string& request_id);

 private:
  mutable std::mutex mu_;
  std::map<std::string, RequestContext> entries_;
};

class Backend {
 public:
  virtual ~Backend() = default;

  // Safe to call concurrently.
  virtual Generation generate(const GenerationRequest& request) = 0;
};

// Throws ConfigError for invalid configs (and, for http, a missing token).
std::unique_ptr<Backend> make_backend(const BackendConfig& cfg,
                                      std::shared_ptr<SideChannel> side_channel);

// Checks request well-formedness, then dispatches. Throws ValidationError.
Generation generate(Backend& backend, const GenerationRequest& request);

// Oracle answer text: the first gold answer, or every gold joined by ", " for
// tasks that require all values.
std::string oracle_answer(const LongContextInstance& inst);

// Replaces round(p * n) of the facts (seeded choice) with fabricated
// sentences absent from the context.
std::vector<std::string> hallucinate_facts(const std::vector<std::string>& facts,
                                           const std::string& context, double p,
                                           std::uint64_t seed);

// Stage output a perfect model would produce for the given role.
std::string scripted_stage_output(Strategy strategy, StageRole role,
                                  const LongContextInstance& inst,
                                  const std::vector<std::string>& facts);

namespace detail {

// Delay before retry number `retry` (1-based): initial * 2^(retry-1), capped.
std::chrono::milliseconds backoff_delay(const HttpSettings& s, int retry);
bool is_retryable_status(int status);

}  // namespace detail

}  // namespace lcrr
