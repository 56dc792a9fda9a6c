#include "spacesteer/llm.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include "json_io.hpp"
#include "spacesteer/digest.hpp"

namespace spacesteer {

std::string request_problem(const CompletionRequest& request) {
  if (request.messages.empty()) return "messages must be non-empty";
  if (!(request.temperature >= 0.0 && request.temperature <= kMaxTemperature)) {
    return "temperature " + detail::format_number(request.temperature) + " outside [0, 2]";
  }
  if (request.max_attempts < 1) return "max_attempts must be positive";
  if (request.model.empty()) return "model must be non-empty";
  return {};
}

std::string request_digest(const CompletionRequest& request) {
  detail::ordered_json j;
  j["model"] = request.model;
  j["temperature"] = request.temperature;
  j["messages"] = detail::ordered_json::parse(to_wire_json(request.messages));
  return sha256_hex(detail::dump(j));
}

std::chrono::milliseconds RetryPolicy::nominal_delay(int failed_attempt) const {
  const double ms = static_cast<double>(initial_delay.count()) *
                    std::pow(multiplier, std::max(0, failed_attempt - 1));
  return std::chrono::milliseconds(static_cast<std::int64_t>(std::llround(ms)));
}

Gateway::Gateway(std::shared_ptr<Provider> provider, GatewayOptions options)
    : provider_(std::move(provider)),
      options_(std::move(options)),
      slots_(std::max(1, options_.concurrency_cap)),
      rng_(options_.jitter_seed) {
  if (!provider_) throw std::invalid_argument("Gateway requires a provider");
  if (!options_.sleeper) {
    options_.sleeper = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }
}

std::chrono::milliseconds Gateway::jittered(int failed_attempt) const {
  const auto nominal = options_.retry.nominal_delay(failed_attempt);
  double factor = 1.0;
  if (options_.retry.jitter > 0) {
    std::uniform_real_distribution<double> dist(1.0 - options_.retry.jitter,
                                                1.0 + options_.retry.jitter);
    std::lock_guard lock(rng_mutex_);
    factor = dist(rng_);
  }
  return std::chrono::milliseconds(
      static_cast<std::int64_t>(std::llround(static_cast<double>(nominal.count()) * factor)));
}

CompletionResult Gateway::complete(const CompletionRequest& request) const {
  if (auto problem = request_problem(request); !problem.empty()) {
    throw Error(ErrorCode::InvalidRequest, problem);
  }

  const auto started = std::chrono::steady_clock::now();
  for (int attempt = 1;; ++attempt) {
    try {
      slots_.acquire();
      struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
      } release{slots_};
      std::string text = provider_->complete(request);
      return CompletionResult{
          std::move(text), attempt,
          std::chrono::duration_cast<std::chrono::milliseconds>(
              std::chrono::steady_clock::now() - started),
          provider_->name()};
    } catch (const ProviderFailure& failure) {
      const bool retryable = failure.transient() && failure.code() != ErrorCode::AuthError;
      if (!retryable || attempt >= request.max_attempts) throw;
    }
    options_.sleeper(jittered(attempt));
  }
}

void MockProvider::set_response(const std::string& digest, std::string text) {
  std::lock_guard lock(mutex_);
  table_[digest] = std::move(text);
}

void MockProvider::set_response(const CompletionRequest& request, std::string text) {
  set_response(request_digest(request), std::move(text));
}

void MockProvider::script(std::vector<Step> steps) {
  std::lock_guard lock(mutex_);
  script_.assign(steps.begin(), steps.end());
}

void MockProvider::set_responder(Responder responder) {
  std::lock_guard lock(mutex_);
  responder_ = std::move(responder);
}

std::string MockProvider::complete(const CompletionRequest& request) {
  Responder responder;
  {
    std::lock_guard lock(mutex_);
    received_.push_back(request);
    if (!script_.empty()) {
      Step step = std::move(script_.front());
      script_.pop_front();
      if (auto* failure = std::get_if<Failure>(&step)) {
        throw ProviderFailure(failure->code, failure->message, failure->transient);
      }
      return std::get<std::string>(std::move(step));
    }
    if (auto it = table_.find(request_digest(request)); it != table_.end()) return it->second;
    responder = responder_;
  }
  if (responder) return responder(request);
  throw ProviderFailure(ErrorCode::ProviderError,
                        "mock has no response for digest " + request_digest(request), false);
}

int MockProvider::calls() const {
  std::lock_guard lock(mutex_);
  return static_cast<int>(received_.size());
}

std::vector<CompletionRequest> MockProvider::received() const {
  std::lock_guard lock(mutex_);
  return received_;
}

MockProvider::Responder MockProvider::echo() {
  return [](const CompletionRequest& request) { return to_wire_json(request.messages); };
}

std::optional<ProviderConfig> provider_config_from_env() {
  const char* key = std::getenv("LLM_API_KEY");
  if (!key || !*key) return std::nullopt;
  ProviderConfig config;
  config.api_key = key;
  if (const char* url = std::getenv("LLM_BASE_URL"); url && *url) config.base_url = url;
  config.model = model_from_env();
  return config;
}

std::string model_from_env() {
  if (const char* model = std::getenv("LLM_MODEL"); model && *model) return model;
  return kDefaultModel;
}

}  // namespace spacesteer
