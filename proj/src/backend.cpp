#include "lcrr/backend.hpp"

#include <cstdlib>
#include <semaphore>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "lcrr/alignment.hpp"
#include "lcrr/errors.hpp"
#include "lcrr/metrics.hpp"
#include "lcrr/rng.hpp"
#include "lcrr/tokens.hpp"
#include "lcrr/wordlists.hpp"

namespace lcrr {

namespace {

using json = nlohmann::json;

std::size_t count_messages(const GenerationRequest& req) {
  std::size_t n = 0;
  for (const auto& m : req.messages) n += count_tokens(m.content);
  return n;
}

struct ParsedUrl {
  std::string scheme_host_port;
  std::string path;
};

ParsedUrl parse_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("endpoint '" + url + "' must start with http:// or https://");
  std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https")
    throw ConfigError("endpoint '" + url + "' must use http or https");
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

class HttpChatBackend final : public Backend {
 public:
  explicit HttpChatBackend(HttpSettings settings)
      : settings_(std::move(settings)),
        url_(parse_url(settings_.endpoint)),
        in_flight_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, settings_.max_in_flight))) {
    if (!settings_.auth_env.empty()) {
      const char* token = std::getenv(settings_.auth_env.c_str());
      if (!token || !*token)
        throw ConfigError("environment variable " + settings_.auth_env + " is not set");
      token_ = token;
    }
  }

  Generation generate(const GenerationRequest& request) override {
    json body;
    body["model"] = settings_.model;
    body["messages"] = json::array();
    for (const auto& m : request.messages)
      body["messages"].push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
    body["max_tokens"] = request.max_output_tokens;
    body["temperature"] = request.temperature;
    const std::string payload = body.dump();

    httplib::Headers headers;
    if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
    if (!request.request_id.empty()) headers.emplace("X-Request-Id", request.request_id);

    in_flight_.acquire();
    struct Release {
      std::counting_semaphore<>& s;
      ~Release() { s.release(); }
    } release{in_flight_};

    std::string last_failure;
    const int attempts = std::max(1, settings_.max_attempts);
    for (int attempt = 1; attempt <= attempts; ++attempt) {
      httplib::Client client(url_.scheme_host_port);
      client.set_connection_timeout(std::min<std::chrono::milliseconds>(settings_.timeout, std::chrono::seconds(30)));
      client.set_read_timeout(settings_.timeout);
      client.set_write_timeout(settings_.timeout);
      auto res = client.Post(url_.path, headers, payload, "application/json");
      if (!res) {
        last_failure = "transport error: " + httplib::to_string(res.error());
      } else if (res->status >= 200 && res->status < 300) {
        return parse_response(res->body, res->status, request);
      } else if (detail::is_retryable_status(res->status)) {
        last_failure = "HTTP " + std::to_string(res->status);
      } else {
        throw BackendError(res->status, res->body);
      }
      if (attempt < attempts) std::this_thread::sleep_for(detail::backoff_delay(settings_, attempt));
    }
    throw TimeoutError("request " + request.request_id + " failed after " +
                       std::to_string(attempts) + " attempts: " + last_failure);
  }

 private:
  static Generation parse_response(const std::string& text, int status,
                                   const GenerationRequest& request) {
    try {
      json j = json::parse(text);
      Generation g;
      g.text = j.at("choices").at(0).at("message").at("content").get<std::string>();
      if (j.contains("usage") && j["usage"].is_object()) {
        g.usage.prompt_tokens = j["usage"].value("prompt_tokens", std::size_t{0});
        g.usage.completion_tokens = j["usage"].value("completion_tokens", std::size_t{0});
      } else {
        g.usage = {count_messages(request), count_tokens(g.text)};
      }
      return g;
    } catch (const json::exception& e) {
      throw BackendError(status, std::string("malformed chat response: ") + e.what());
    }
  }

  HttpSettings settings_;
  ParsedUrl url_;
  std::string token_;
  std::counting_semaphore<> in_flight_;
};

class ScriptedBackend final : public Backend {
 public:
  ScriptedBackend(BackendConfig cfg, std::shared_ptr<SideChannel> side_channel)
      : cfg_(std::move(cfg)), side_channel_(std::move(side_channel)) {}

  Generation generate(const GenerationRequest& request) override {
    if (cfg_.delay.count() > 0) std::this_thread::sleep_for(cfg_.delay);
    Generation g;
    if (cfg_.kind == BackendKind::scripted_fixed) {
      g.text = cfg_.fixed_text;
    } else {
      if (!side_channel_) throw ConfigError("scripted backend has no side channel");
      auto ctx = side_channel_->get(request.request_id);
      if (!ctx || !ctx->instance)
        throw InternalError("no ground truth registered for request '" + request.request_id + "'");
      const LongContextInstance& inst = *ctx->instance;
      std::vector<std::string> facts = inst.gold_facts;
      if (cfg_.kind == BackendKind::scripted_hallucinator)
        facts = hallucinate_facts(facts, inst.context, cfg_.hallucination_p,
                                  derive_seed(cfg_.seed, inst.id));
      g.text = scripted_stage_output(ctx->strategy, ctx->role, inst, facts);
    }
    g.usage = {count_messages(request), count_tokens(g.text)};
    return g;
  }

 private:
  BackendConfig cfg_;
  std::shared_ptr<SideChannel> side_channel_;
};

}  // namespace

BackendKind backend_kind_from_string(std::string_view name) {
  if (name == "http-chat") return BackendKind::http_chat;
  if (name == "scripted-oracle") return BackendKind::scripted_oracle;
  if (name == "scripted-hallucinator") return BackendKind::scripted_hallucinator;
  if (name == "scripted-fixed") return BackendKind::scripted_fixed;
  throw ConfigError("unknown backend kind '" + std::string(name) + "'");
}

std::string_view to_string(BackendKind kind) {
  switch (kind) {
    case BackendKind::http_chat: return "http-chat";
    case BackendKind::scripted_oracle: return "scripted-oracle";
    case BackendKind::scripted_hallucinator: return "scripted-hallucinator";
    case BackendKind::scripted_fixed: return "scripted-fixed";
  }
  throw InternalError("unknown backend kind");
}

void validate_config(const BackendConfig& cfg) {
  if (cfg.kind == BackendKind::http_chat) {
    if (cfg.http.endpoint.empty()) throw ConfigError("http-chat backend requires an endpoint");
    if (cfg.http.model.empty()) throw ConfigError("http-chat backend requires a model name");
    parse_url(cfg.http.endpoint);
    if (cfg.http.max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
    if (cfg.http.timeout.count() <= 0) throw ConfigError("timeout must be positive");
    if (cfg.http.max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
    if (!cfg.http.auth_env.empty()) {
      const char* token = std::getenv(cfg.http.auth_env.c_str());
      if (!token || !*token)
        throw ConfigError("environment variable " + cfg.http.auth_env + " is not set");
    }
  }
  if (cfg.kind == BackendKind::scripted_hallucinator &&
      !(cfg.hallucination_p >= 0.0 && cfg.hallucination_p <= 1.0))
    throw ConfigError("hallucination p must lie in [0, 1]");
}

void SideChannel::put(const std::string& request_id, RequestContext ctx) {
  std::lock_guard lock(mu_);
  entries_[request_id] = ctx;
}

std::optional<RequestContext> SideChannel::get(const std::string& request_id) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(request_id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void SideChannel::erase(const std::string& request_id) {
  std::lock_guard lock(mu_);
  entries_.erase(request_id);
}

std::unique_ptr<Backend> make_backend(const BackendConfig& cfg,
                                      std::shared_ptr<SideChannel> side_channel) {
  validate_config(cfg);
  if (cfg.kind == BackendKind::http_chat) return std::make_unique<HttpChatBackend>(cfg.http);
  return std::make_unique<ScriptedBackend>(cfg, std::move(side_channel));
}

Generation generate(Backend& backend, const GenerationRequest& request) {
  bool has_user = false;
  for (const auto& m : request.messages) {
    if (m.content.empty()) throw ValidationError("request '" + request.request_id + "' has an empty message");
    has_user |= m.role == Role::user;
  }
  if (!has_user) throw ValidationError("request '" + request.request_id + "' has no user message");
  return backend.generate(request);
}

std::string oracle_answer(const LongContextInstance& inst) {
  if (inst.gold_answers.empty()) return {};
  if (!requires_all_answers(inst.task_kind)) return inst.gold_answers.front();
  std::string out;
  for (const auto& a : inst.gold_answers) {
    if (!out.empty()) out += ", ";
    out += a;
  }
  return out;
}

std::vector<std::string> hallucinate_facts(const std::vector<std::string>& facts,
                                           const std::string& context, double p,
                                           std::uint64_t seed) {
  const std::size_t n = facts.size();
  const auto k = static_cast<std::size_t>(std::llround(p * static_cast<double>(n)));
  if (k == 0) return facts;
  SeededRng rng(seed);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  rng.shuffle(std::span(idx));

  const std::string haystack = collapse_whitespace(context);
  const auto words = wordlists::needle_keys();
  std::vector<std::string> out = facts;
  for (std::size_t r = 0; r < k && r < n; ++r) {
    std::string fabricated;
    for (std::size_t salt = 0;; ++salt) {
      fabricated = "Records from the " + std::string(words[rng.index(words.size())]) +
                   " archive list entry " + std::to_string(100000 + rng.index(900000)) +
                   (salt ? "-" + std::to_string(salt) : "") + " as unconfirmed.";
      if (haystack.find(fabricated) == std::string::npos) break;
    }
    out[idx[r]] = std::move(fabricated);
  }
  return out;
}

std::string scripted_stage_output(Strategy strategy, StageRole role,
                                  const LongContextInstance& inst,
                                  const std::vector<std::string>& facts) {
  switch (role) {
    case StageRole::answer:
      return oracle_answer(inst);
    case StageRole::retrieval:
      if (strategy == Strategy::S2A) {
        std::string out(kS2AContextLabel);
        out += "\n";
        for (std::size_t i = 0; i < facts.size(); ++i) {
          if (i > 0) out += '\n';
          out += facts[i];
        }
        out += "\n\n";
        out += kS2AQueryLabel;
        out += "\n";
        out += inst.question;
        return out;
      }
      return format_facts(facts);
    case StageRole::retrieval_and_answer: {
      std::string out = "Relevant quotes:\n";
      for (std::size_t i = 0; i < facts.size(); ++i)
        out += "[" + std::to_string(i + 1) + "] \"" + facts[i] + "\"\n";
      out += "\nAnswer:\n" + oracle_answer(inst);
      return out;
    }
  }
  throw InternalError("unknown stage role");
}

namespace detail {

std::chrono::milliseconds backoff_delay(const HttpSettings& s, int retry) {
  auto delay = s.initial_backoff;
  for (int i = 1; i < retry && delay < s.max_backoff; ++i) delay *= 2;
  return std::min(delay, s.max_backoff);
}

bool is_retryable_status(int status) {
  return status == 408 || status == 425 || status == 429 || status == 500 || status == 502 ||
         status == 503 || status == 504;
}

}  // namespace detail

}  // namespace lcrr
