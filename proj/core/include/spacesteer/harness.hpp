#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spacesteer/condition.hpp"
#include "spacesteer/llm.hpp"
#include "spacesteer/prompt.hpp"
#include "spacesteer/rubric.hpp"
#include "spacesteer/workspace.hpp"

namespace spacesteer {

struct ExperimentPlan {
  std::string id;
  std::filesystem::path workspace_path;
  std::filesystem::path template_path;
  std::filesystem::path rubric_path;
  std::vector<Condition> conditions;
  int replications = 10;
  // schedule[i - 1] is the summarization temperature of replication i.
  std::vector<double> temperature_schedule;
  std::string model = kDefaultModel;
  std::filesystem::path runs_dir = "runs";
};

// Replication i in 1..n runs at i / 10.
std::vector<double> default_temperature_schedule(int replications);

// Empty when the plan is runnable; otherwise the first problem found.
std::string plan_problem(const ExperimentPlan& plan);

// Plan file: {id, workspace, template, rubric, conditions: ["E3" | {name,
// flags}], replications?, temperature_schedule?, model?, runs_dir?}. Paths
// are resolved against the plan file's directory. Throws Error(InvalidPlan).
ExperimentPlan load_plan(const std::filesystem::path& path);

enum class RunStatus { Ok, Failed };

std::string_view to_string(RunStatus status) noexcept;

struct GatewayMeta {
  std::string provider;
  std::string model;
  bool mock = false;
  int attempts_used = 0;
  std::int64_t latency_ms = 0;

  bool operator==(const GatewayMeta&) const = default;
};

// One summarize-and-grade cycle. Failed runs keep their prompt and carry
// `error` instead of a grade.
struct RunRecord {
  std::string id;
  std::string plan_id;
  std::string condition;
  int replication = 0;
  double temperature = 0;
  std::string prompt_digest;
  std::vector<ChatMessage> prompt;
  std::string output;
  std::optional<GradeAudit> grade;
  RunStatus status = RunStatus::Ok;
  std::string error;
  std::string started_at;   // ISO-8601 UTC
  std::string finished_at;  // ISO-8601 UTC
  GatewayMeta gateway;
  std::optional<std::string> regrade_of;

  bool ok() const { return status == RunStatus::Ok && grade.has_value(); }
  const GradeBreakdown* breakdown() const { return grade ? &grade->breakdown : nullptr; }

  bool operator==(const RunRecord&) const = default;
};

std::string record_to_json(const RunRecord& record);  // single line, no newline
// Throws Error(MalformedFile), including when the digest does not match the
// stored prompt.
RunRecord record_from_json(std::string_view line);

// Append-only JSONL store at <root>/<plan_id>/records.jsonl with an
// index.json beside it. Appends are serialized; ids are assigned on append as
// "<plan>:<condition>:r<replication>:<n>".
class RunStore {
 public:
  RunStore(std::filesystem::path root, std::string plan_id);

  const std::string& plan_id() const { return plan_id_; }
  std::filesystem::path directory() const { return root_ / plan_id_; }
  std::filesystem::path records_path() const { return directory() / "records.jsonl"; }
  std::filesystem::path index_path() const { return directory() / "index.json"; }

  // Assigns `record.id` when empty, then persists. Throws
  // Error(PersistenceFailure).
  void append(RunRecord& record);

  std::vector<RunRecord> load() const;
  std::optional<RunRecord> find(std::string_view id) const;

 private:
  struct IndexEntry {
    std::string id;
    std::size_t line = 0;
    std::string condition;
    int replication = 0;
    RunStatus status = RunStatus::Ok;
    std::optional<std::string> regrade_of;
  };

  void write_index() const;

  std::filesystem::path root_;
  std::string plan_id_;
  mutable std::mutex mutex_;
  std::vector<IndexEntry> index_;
  std::map<std::string, int> cell_counts_;
};

using Clock = std::function<std::string()>;  // returns ISO-8601 UTC
std::string utc_now_iso8601();

class Harness {
 public:
  Harness(ExperimentPlan plan, Workspace workspace, PromptTemplate prompt_template,
          Rubric rubric, RunStore& store, const Gateway& gateway, Clock clock = utc_now_iso8601);

  // Builds the harness from the plan's referenced files.
  static Harness from_plan(const ExperimentPlan& plan, RunStore& store, const Gateway& gateway);

  const ExperimentPlan& plan() const { return plan_; }
  const Workspace& workspace() const { return workspace_; }
  const PromptTemplate& prompt_template() const { return template_; }
  const Rubric& rubric() const { return rubric_; }

  // Replication is 1-based and selects the schedule temperature. Compile
  // errors propagate; gateway and grading failures yield a persisted record
  // with status Failed.
  RunRecord run_single(const Condition& condition, int replication);
  // Same cycle at an explicit temperature (replication 0 = ad hoc run).
  RunRecord run_at(const Condition& condition, double temperature, int replication = 0);

  // All conditions x replications, in parallel up to the gateway's
  // concurrency cap. Returned in condition-major, replication-minor order.
  std::vector<RunRecord> run_matrix();

 private:
  ExperimentPlan plan_;
  Workspace workspace_;
  PromptTemplate template_;
  Rubric rubric_;
  RunStore& store_;
  const Gateway& gateway_;
  Clock clock_;
};

// Regrades stored outputs under `rubric`. New records reference the
// originals through `regrade_of`. Throws Error(UnknownRun).
std::vector<RunRecord> regrade(RunStore& store, const std::vector<std::string>& run_ids,
                               const Rubric& rubric, const Gateway& gateway,
                               const Clock& clock = utc_now_iso8601);

// Deterministic offline stand-in for both the summarizer and the judge:
// summaries are derived from the request digest, answers from the report,
// and grades pick allowed scores of `rubric` by hashing the answers.
std::shared_ptr<MockProvider> make_offline_provider(const Rubric& rubric);

}  // namespace spacesteer
