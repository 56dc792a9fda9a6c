#include <thread>

#include "httplib.h"
#include "json_io.hpp"
#include "spacesteer/error.hpp"
#include "spacesteer/service.hpp"

namespace spacesteer {

using detail::json;
using detail::ordered_json;

namespace {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownWorkspace:
    case ErrorCode::UnknownCondition:
    case ErrorCode::UnknownRun:
    case ErrorCode::InvalidPlan:
      return 404;
    case ErrorCode::MissingLayer:
    case ErrorCode::NoClusters:
    case ErrorCode::UnresolvedReference:
    case ErrorCode::DuplicateMembership:
    case ErrorCode::SpanOutOfRange:
    case ErrorCode::InvalidEdit:
    case ErrorCode::InvalidWorkspace:
      return 422;
    case ErrorCode::AuthError:
    case ErrorCode::RateLimited:
    case ErrorCode::ProviderError:
    case ErrorCode::Timeout:
      return 502;
    case ErrorCode::PersistenceFailure:
      return 500;
    default:
      return 400;
  }
}

void send_json(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body, "application/json");
}

void send_error(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  ordered_json j;
  j["error"]["code"] = std::string(code);
  j["error"]["message"] = message;
  send_json(res, status, detail::dump(j) + "\n");
}

template <typename F>
auto guarded(F handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const Error& e) {
      send_error(res, http_status(e.code()), to_string(e.code()), e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "MalformedRequest", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "InternalError", e.what());
    }
  };
}

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    throw Error(ErrorCode::InvalidRequest, "request body must be a JSON object");
  }
  return body;
}

ordered_json summary_json(const ConditionSummary& s) {
  ordered_json j;
  j["condition"] = s.condition;
  j["n"] = s.n;
  j["n_failed"] = s.n_failed;
  j["mean"] = round1(s.mean);
  j["median"] = round1(s.median);
  j["q1"] = round1(s.q1);
  j["q3"] = round1(s.q3);
  j["min"] = round1(s.min);
  j["max"] = round1(s.max);
  ordered_json cats = ordered_json::object();
  for (const auto& [c, v] : s.categories) cats[std::string(to_string(c))] = round1(v);
  j["categories"] = std::move(cats);
  return j;
}

}  // namespace

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;
  std::thread thread;

  explicit Impl(Service& s) : service(s) { routes(); }

  void routes() {
    server.Get(R"(/workspaces/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto snap = service.snapshot(req.matches[1]);
      json j;
      j["sequence"] = snap.sequence;
      j["workspace"] = detail::to_json(*snap.workspace);
      send_json(res, 200, detail::dump(j) + "\n");
    }));

    server.Post(R"(/workspaces/([^/]+)/edits)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      service.snapshot(id);  // 404 before parsing the edit
      const WorkspaceEdit edit = detail::edit_from_json(parse_body(req));
      const EditOutcome out = service.handle_edit(id, edit);
      json j;
      j["accepted"] = out.accepted;
      j["sequence"] = out.sequence;
      j["violations"] = json::array();
      for (const auto& v : out.violations) j["violations"].push_back(detail::to_json(v));
      if (out.error) j["code"] = std::string(to_string(*out.error));
      send_json(res, out.accepted ? 200 : 422, detail::dump(j) + "\n");
    }));

    server.Get(R"(/workspaces/([^/]+)/prompt)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      if (!req.has_param("condition")) {
        throw Error(ErrorCode::InvalidRequest, "missing 'condition' query parameter");
      }
      const auto preview = service.handle_prompt_preview(req.matches[1], req.get_param_value("condition"));
      json j = json::parse(bundle_to_json(preview.bundle));
      j["sequence"] = preview.sequence;
      send_json(res, 200, detail::dump(j) + "\n");
    }));

    server.Post(R"(/workspaces/([^/]+)/runs)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const json body = parse_body(req);
      if (!body.contains("condition") || !body["condition"].is_string()) {
        throw Error(ErrorCode::InvalidRequest, "'condition' must be a string");
      }
      std::optional<double> temperature;
      if (body.contains("temperature")) {
        if (!body["temperature"].is_number()) {
          throw Error(ErrorCode::InvalidRequest, "'temperature' must be a number");
        }
        temperature = body["temperature"].get<double>();
      }
      const RunRecord record =
          service.handle_run_and_grade(req.matches[1], body["condition"].get<std::string>(), temperature);
      send_json(res, record.ok() ? 201 : 502, record_to_json(record) + "\n");
    }));

    server.Get(R"(/runs/(.+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1];
      auto record = service.find_run(id);
      if (!record) throw Error(ErrorCode::UnknownRun, "unknown run '" + id + "'");
      send_json(res, 200, record_to_json(*record) + "\n");
    }));

    server.Get(R"(/plans/([^/]+)/stats)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      ordered_json arr = ordered_json::array();
      for (const auto& s : service.plan_stats(req.matches[1])) arr.push_back(summary_json(s));
      send_json(res, 200, detail::dump(arr) + "\n");
    }));
  }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(ErrorCode::InvalidRequest, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound;
}

bool HttpServer::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

void HttpServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace spacesteer
