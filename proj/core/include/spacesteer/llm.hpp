#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <string>
#include <variant>
#include <vector>

#include "spacesteer/error.hpp"
#include "spacesteer/prompt.hpp"

namespace spacesteer {

inline constexpr const char* kDefaultModel = "gpt-4o";
inline constexpr double kMaxTemperature = 2.0;

struct CompletionRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  std::string model = kDefaultModel;
  int max_attempts = 3;
};

// Empty when the request may be sent; otherwise why not.
std::string request_problem(const CompletionRequest& request);

// Digest over model, temperature and messages. Mock tables key on it.
std::string request_digest(const CompletionRequest& request);

struct CompletionResult {
  std::string text;
  int attempts_used = 0;
  std::chrono::milliseconds latency{0};
  std::string provider;
};

// A single, non-retrying attempt against some backend. Implementations throw
// ProviderFailure and must be safe to call from several threads.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::string complete(const CompletionRequest& request) = 0;
  virtual std::string name() const = 0;
  virtual bool is_mock() const { return false; }
};

// Exponential backoff: delay(k) = initial * multiplier^(k-1), scaled by a
// uniform factor in [1 - jitter, 1 + jitter], where k is the failed attempt.
struct RetryPolicy {
  std::chrono::milliseconds initial_delay{1000};
  double multiplier = 2.0;
  double jitter = 0.2;

  std::chrono::milliseconds nominal_delay(int failed_attempt) const;
};

struct GatewayOptions {
  RetryPolicy retry;
  int concurrency_cap = 4;
  std::uint64_t jitter_seed = 0x5eed;
  // Injected so tests can observe backoff without sleeping.
  std::function<void(std::chrono::milliseconds)> sleeper;
};

// Retrying front end over a Provider. Validates requests before any call,
// never retries AuthError or permanent ProviderError, and bounds in-flight
// calls by `concurrency_cap`.
class Gateway {
 public:
  explicit Gateway(std::shared_ptr<Provider> provider, GatewayOptions options = {});

  // Throws Error(InvalidRequest) or the last ProviderFailure.
  CompletionResult complete(const CompletionRequest& request) const;

  const Provider& provider() const { return *provider_; }
  bool is_mock() const { return provider_->is_mock(); }
  int concurrency_cap() const { return options_.concurrency_cap; }

 private:
  std::chrono::milliseconds jittered(int failed_attempt) const;

  std::shared_ptr<Provider> provider_;
  GatewayOptions options_;
  mutable std::counting_semaphore<> slots_;
  mutable std::mutex rng_mutex_;
  mutable std::mt19937_64 rng_;
};

// Deterministic offline provider. Resolution order per call: the next
// scripted step (if any remain), the digest table, then the responder.
class MockProvider : public Provider {
 public:
  struct Failure {
    ErrorCode code = ErrorCode::ProviderError;
    bool transient = true;
    std::string message = "scripted failure";
  };
  using Step = std::variant<std::string, Failure>;
  using Responder = std::function<std::string(const CompletionRequest&)>;

  MockProvider() = default;
  explicit MockProvider(Responder responder) : responder_(std::move(responder)) {}

  void set_response(const std::string& digest, std::string text);
  void set_response(const CompletionRequest& request, std::string text);
  void script(std::vector<Step> steps);
  void set_responder(Responder responder);

  std::string complete(const CompletionRequest& request) override;
  std::string name() const override { return "mock"; }
  bool is_mock() const override { return true; }

  int calls() const;
  std::vector<CompletionRequest> received() const;

  // Responder that returns the request's messages as wire JSON.
  static Responder echo();

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::string> table_;
  std::deque<Step> script_;
  Responder responder_;
  std::vector<CompletionRequest> received_;
};

struct ProviderConfig {
  std::string api_key;
  std::string base_url = "https://api.openai.com/v1";
  std::string model = kDefaultModel;
  std::chrono::seconds timeout{120};
};

// Reads LLM_API_KEY, LLM_BASE_URL and LLM_MODEL. nullopt when no key is set.
std::optional<ProviderConfig> provider_config_from_env();
// Model named by LLM_MODEL, else "gpt-4o".
std::string model_from_env();

// Chat-completions client (POST {base_url}/chat/completions).
class OpenAiProvider : public Provider {
 public:
  explicit OpenAiProvider(ProviderConfig config);

  std::string complete(const CompletionRequest& request) override;
  std::string name() const override { return "openai-compatible"; }

 private:
  ProviderConfig config_;
};

}  // namespace spacesteer
