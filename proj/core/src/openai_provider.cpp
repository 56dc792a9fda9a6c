#include "httplib.h"
#include "json_io.hpp"
#include "spacesteer/llm.hpp"

namespace spacesteer {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;    // prefix without trailing slash
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::InvalidRequest, "LLM_BASE_URL must include a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  out.origin = url.substr(0, path_start);
  out.path = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
  return out;
}

}  // namespace

OpenAiProvider::OpenAiProvider(ProviderConfig config) : config_(std::move(config)) {}

std::string OpenAiProvider::complete(const CompletionRequest& request) {
  const SplitUrl url = split_url(config_.base_url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(std::chrono::seconds(10));
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);

  detail::ordered_json body;
  body["model"] = request.model;
  body["temperature"] = request.temperature;
  body["messages"] = detail::ordered_json::parse(to_wire_json(request.messages));

  httplib::Headers headers{{"Authorization", "Bearer " + config_.api_key}};
  auto res = client.Post(url.path + "/chat/completions", headers, detail::dump(body),
                         "application/json");
  if (!res) {
    const auto err = res.error();
    if (err == httplib::Error::Read || err == httplib::Error::Write ||
        err == httplib::Error::ConnectionTimeout) {
      throw ProviderFailure(ErrorCode::Timeout, "request timed out: " + httplib::to_string(err),
                            true);
    }
    throw ProviderFailure(ErrorCode::ProviderError, "transport error: " + httplib::to_string(err),
                          true);
  }
  const int status = res->status;
  if (status == 401 || status == 403) {
    throw ProviderFailure(ErrorCode::AuthError, "authentication rejected (HTTP " +
                                                    std::to_string(status) + ")",
                          false);
  }
  if (status == 429) {
    throw ProviderFailure(ErrorCode::RateLimited, "rate limited (HTTP 429)", true);
  }
  if (status == 408 || status == 504) {
    throw ProviderFailure(ErrorCode::Timeout, "upstream timeout (HTTP " + std::to_string(status) + ")",
                          true);
  }
  if (status >= 500) {
    throw ProviderFailure(ErrorCode::ProviderError, "server error (HTTP " + std::to_string(status) + ")",
                          true);
  }
  if (status != 200) {
    throw ProviderFailure(ErrorCode::ProviderError,
                          "HTTP " + std::to_string(status) + ": " + res->body.substr(0, 500), false);
  }
  try {
    const auto j = detail::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const detail::json::exception& e) {
    throw ProviderFailure(ErrorCode::ProviderError,
                          std::string("unexpected completion payload: ") + e.what(), false);
  }
}

}  // namespace spacesteer
