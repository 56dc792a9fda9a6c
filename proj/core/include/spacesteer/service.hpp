#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include "spacesteer/analytics.hpp"
#include "spacesteer/harness.hpp"
#include "spacesteer/llm.hpp"
#include "spacesteer/prompt.hpp"
#include "spacesteer/rubric.hpp"
#include "spacesteer/workspace.hpp"

namespace spacesteer {

inline constexpr double kInteractiveTemperature = 0.7;

struct ServiceConfig {
  std::filesystem::path runs_dir = "runs";
  // Plan files served by GET /plans/:id/stats are looked up here as <id>.json.
  std::filesystem::path plans_dir = "plans";
  // When set, accepted edits are written back to <workspace_dir>/<id>.json.
  std::optional<std::filesystem::path> workspace_dir;
  PromptTemplate prompt_template;
  Rubric rubric;
  std::string model = kDefaultModel;
};

struct WorkspaceSnapshot {
  std::shared_ptr<const Workspace> workspace;
  std::uint64_t sequence = 0;
};

struct EditOutcome {
  bool accepted = false;
  std::uint64_t sequence = 0;
  std::vector<Violation> violations;  // empty when accepted
  std::optional<ErrorCode> error;     // the workspace-core error on rejection
};

struct PromptPreview {
  PromptBundle bundle;
  std::string digest;
  std::uint64_t sequence = 0;
};

// Session state behind the HTTP API. Reads see the latest committed snapshot;
// mutations to one workspace go through that workspace's writer lock, so
// concurrent edits apply in some total order with strictly increasing
// sequence numbers.
class Service {
 public:
  Service(ServiceConfig config, std::shared_ptr<Gateway> gateway);

  void load_workspace(const std::string& id, Workspace workspace);
  // Loads every *.json in `dir`; the file stem becomes the workspace id.
  void load_workspace_dir(const std::filesystem::path& dir);
  std::vector<std::string> workspace_ids() const;

  // Throws Error(UnknownWorkspace).
  WorkspaceSnapshot snapshot(const std::string& id) const;

  EditOutcome handle_edit(const std::string& id, const WorkspaceEdit& edit);

  // Throws Error(UnknownWorkspace | UnknownCondition) and compile errors.
  PromptPreview handle_prompt_preview(const std::string& id, const std::string& condition) const;

  // One summarize-and-grade cycle on the current snapshot, persisted under
  // runs/interactive-<id>/. Temperature defaults to 0.7.
  RunRecord handle_run_and_grade(const std::string& id, const std::string& condition,
                                 std::optional<double> temperature = std::nullopt);

  // Searches interactive stores, then plan stores under runs_dir.
  std::optional<RunRecord> find_run(const std::string& run_id) const;

  // Summaries for the plan's conditions from runs/<plan-id>/.
  std::vector<ConditionSummary> plan_stats(const std::string& plan_id) const;

  bool mock_mode() const { return gateway_->is_mock(); }
  const ServiceConfig& config() const { return config_; }

 private:
  struct Slot {
    std::mutex writer;
    mutable std::mutex read;
    std::shared_ptr<const Workspace> current;
    std::uint64_t sequence = 0;
  };

  Slot& slot(const std::string& id) const;
  RunStore& interactive_store(const std::string& workspace_id);

  ServiceConfig config_;
  std::shared_ptr<Gateway> gateway_;

  mutable std::shared_mutex slots_mutex_;
  std::map<std::string, std::unique_ptr<Slot>> slots_;

  mutable std::mutex stores_mutex_;
  std::map<std::string, std::unique_ptr<RunStore>> stores_;
};

// JSON-over-HTTP front end:
//   GET  /workspaces/:id
//   POST /workspaces/:id/edits
//   GET  /workspaces/:id/prompt?condition=E3
//   POST /workspaces/:id/runs          {"condition": "E3", "temperature"?: 0.4}
//   GET  /runs/:id
//   GET  /plans/:id/stats
// Errors come back as {"error": {"code", "message"}}.
class HttpServer {
 public:
  explicit HttpServer(Service& service);
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds to host:port (port 0 picks a free port) and serves on a background
  // thread. Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 8080);
  // Blocks serving on the calling thread.
  bool listen(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace spacesteer
