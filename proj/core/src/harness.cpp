#include "spacesteer/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <ctime>
#include <exception>
#include <fstream>
#include <set>
#include <thread>

#include "rubric_json.hpp"
#include "spacesteer/digest.hpp"
#include "spacesteer/error.hpp"

namespace spacesteer {

namespace fs = std::filesystem;
using detail::json;

std::vector<double> default_temperature_schedule(int replications) {
  std::vector<double> out;
  for (int i = 1; i <= replications; ++i) out.push_back(i / 10.0);
  return out;
}

std::string plan_problem(const ExperimentPlan& plan) {
  if (plan.id.empty()) return "plan id must be non-empty";
  if (plan.id.find_first_of("/\\:") != std::string::npos || plan.id == "." || plan.id == "..") {
    return "plan id must not contain path separators or ':'";
  }
  if (plan.replications < 1) return "replications must be positive";
  if (static_cast<int>(plan.temperature_schedule.size()) != plan.replications) {
    return "temperature schedule has " + std::to_string(plan.temperature_schedule.size()) +
           " entries for " + std::to_string(plan.replications) + " replications";
  }
  for (double t : plan.temperature_schedule) {
    if (!(t >= 0.0 && t <= kMaxTemperature)) {
      return "temperature " + detail::format_number(t) + " outside [0, 2]";
    }
  }
  std::set<std::string> names;
  for (const auto& c : plan.conditions) {
    if (auto problem = condition_problem(c); !problem.empty()) return problem;
    if (c.name.find(':') != std::string::npos) return "condition names must not contain ':'";
    if (!names.insert(c.name).second) return "duplicate condition '" + c.name + "'";
  }
  if (plan.model.empty()) return "model must be non-empty";
  return {};
}

namespace {

[[noreturn]] void invalid_plan(const std::string& what) {
  throw Error(ErrorCode::InvalidPlan, "plan: " + what);
}

Condition condition_from_json(const json& j) {
  if (j.is_string()) {
    auto c = find_preset(j.get<std::string>());
    if (!c) invalid_plan("unknown preset '" + j.get<std::string>() + "'");
    return *c;
  }
  Condition c;
  c.name = j.at("name").get<std::string>();
  const json& f = j.at("flags");
  c.flags.filtering = f.value("filtering", false);
  c.flags.clustering = f.value("clustering", false);
  c.flags.cluster_names = f.value("cluster_names", false);
  c.flags.highlights = f.value("highlights", false);
  c.flags.annotations = f.value("annotations", false);
  c.flags.connections = f.value("connections", false);
  return c;
}

}  // namespace

ExperimentPlan load_plan(const fs::path& path) {
  std::string text;
  try {
    text = detail::read_file(path);
  } catch (const Error& e) {
    invalid_plan(e.what());
  }
  const fs::path base = path.has_parent_path() ? path.parent_path() : fs::path(".");
  auto resolve = [&](const std::string& p) {
    fs::path candidate(p);
    return candidate.is_absolute() ? candidate : (base / candidate).lexically_normal();
  };
  ExperimentPlan plan;
  try {
    const json j = json::parse(text);
    plan.id = j.at("id").get<std::string>();
    plan.workspace_path = resolve(j.at("workspace").get<std::string>());
    plan.template_path = resolve(j.at("template").get<std::string>());
    plan.rubric_path = resolve(j.at("rubric").get<std::string>());
    for (const auto& c : j.at("conditions")) plan.conditions.push_back(condition_from_json(c));
    plan.replications = j.value("replications", 10);
    if (auto it = j.find("temperature_schedule"); it != j.end()) {
      plan.temperature_schedule = it->get<std::vector<double>>();
    } else {
      plan.temperature_schedule = default_temperature_schedule(plan.replications);
    }
    plan.model = j.value("model", model_from_env());
    plan.runs_dir = resolve(j.value("runs_dir", std::string("runs")));
  } catch (const json::exception& e) {
    invalid_plan(e.what());
  }
  if (auto problem = plan_problem(plan); !problem.empty()) invalid_plan(problem);
  return plan;
}

std::string_view to_string(RunStatus status) noexcept {
  return status == RunStatus::Ok ? "ok" : "failed";
}

// ---------------------------------------------------------------------------
// Record (de)serialization.

std::string record_to_json(const RunRecord& r) {
  json j;
  j["id"] = r.id;
  j["plan_id"] = r.plan_id;
  j["condition"] = r.condition;
  j["replication"] = r.replication;
  j["temperature"] = r.temperature;
  j["prompt_digest"] = r.prompt_digest;
  j["prompt"] = json::parse(to_wire_json(r.prompt));
  j["output"] = r.output;
  j["grade"] = r.grade ? detail::to_json(*r.grade) : json(nullptr);
  j["status"] = std::string(to_string(r.status));
  j["error"] = r.error;
  j["started_at"] = r.started_at;
  j["finished_at"] = r.finished_at;
  j["gateway"] = json{{"provider", r.gateway.provider},
                      {"model", r.gateway.model},
                      {"mock", r.gateway.mock},
                      {"attempts_used", r.gateway.attempts_used},
                      {"latency_ms", r.gateway.latency_ms}};
  j["regrade_of"] = r.regrade_of ? json(*r.regrade_of) : json(nullptr);
  return detail::dump(j);
}

RunRecord record_from_json(std::string_view line) {
  RunRecord r;
  try {
    const json j = json::parse(line.begin(), line.end());
    r.id = j.at("id").get<std::string>();
    r.plan_id = j.at("plan_id").get<std::string>();
    r.condition = j.at("condition").get<std::string>();
    r.replication = j.at("replication").get<int>();
    r.temperature = j.at("temperature").get<double>();
    r.prompt_digest = j.at("prompt_digest").get<std::string>();
    r.prompt = messages_from_wire_json(detail::dump(j.at("prompt")));
    r.output = j.at("output").get<std::string>();
    if (!j.at("grade").is_null()) r.grade = detail::audit_from_json(j.at("grade"));
    const auto status = j.at("status").get<std::string>();
    if (status != "ok" && status != "failed") {
      throw Error(ErrorCode::MalformedFile, "unknown run status '" + status + "'");
    }
    r.status = status == "ok" ? RunStatus::Ok : RunStatus::Failed;
    r.error = j.at("error").get<std::string>();
    r.started_at = j.at("started_at").get<std::string>();
    r.finished_at = j.at("finished_at").get<std::string>();
    const json& g = j.at("gateway");
    r.gateway = GatewayMeta{g.at("provider").get<std::string>(), g.at("model").get<std::string>(),
                            g.at("mock").get<bool>(), g.at("attempts_used").get<int>(),
                            g.at("latency_ms").get<std::int64_t>()};
    if (!j.at("regrade_of").is_null()) r.regrade_of = j.at("regrade_of").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("malformed run record: ") + e.what());
  }
  if (prompt_digest(r.prompt) != r.prompt_digest) {
    throw Error(ErrorCode::MalformedFile, "run record " + r.id + ": prompt digest mismatch");
  }
  return r;
}

// ---------------------------------------------------------------------------
// RunStore

namespace {

std::vector<std::string> read_lines(const fs::path& path) {
  std::vector<std::string> lines;
  std::ifstream in(path, std::ios::binary);
  if (!in) return lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

std::string cell_key(const std::string& plan, const std::string& condition, int replication) {
  return plan + ":" + condition + ":r" + std::to_string(replication);
}

}  // namespace

RunStore::RunStore(fs::path root, std::string plan_id)
    : root_(std::move(root)), plan_id_(std::move(plan_id)) {
  const auto lines = read_lines(records_path());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const RunRecord r = record_from_json(lines[i]);
    index_.push_back({r.id, i, r.condition, r.replication, r.status, r.regrade_of});
    if (r.regrade_of) {
      ++cell_counts_[*r.regrade_of + "/regrade"];
    } else {
      ++cell_counts_[cell_key(plan_id_, r.condition, r.replication)];
    }
  }
}

void RunStore::write_index() const {
  json runs = json::array();
  for (const auto& e : index_) {
    runs.push_back({{"id", e.id},
                    {"line", e.line},
                    {"condition", e.condition},
                    {"replication", e.replication},
                    {"status", std::string(to_string(e.status))},
                    {"regrade_of", e.regrade_of ? json(*e.regrade_of) : json(nullptr)}});
  }
  detail::write_file_atomic(index_path(),
                            detail::dump(json{{"plan_id", plan_id_}, {"runs", runs}}, 2) + "\n");
}

void RunStore::append(RunRecord& record) {
  std::lock_guard lock(mutex_);
  if (record.id.empty()) {
    const std::string key = record.regrade_of
                                ? *record.regrade_of + "/regrade"
                                : cell_key(plan_id_, record.condition, record.replication);
    record.id = key + ":" + std::to_string(++cell_counts_[key]);
  }
  const std::string line = record_to_json(record);
  std::error_code ec;
  fs::create_directories(directory(), ec);
  {
    std::ofstream out(records_path(), std::ios::binary | std::ios::app);
    if (!out) {
      throw Error(ErrorCode::PersistenceFailure, "cannot open " + records_path().string());
    }
    out << line << '\n';
    out.flush();
    if (!out) {
      throw Error(ErrorCode::PersistenceFailure, "cannot append to " + records_path().string());
    }
  }
  index_.push_back(
      {record.id, index_.size(), record.condition, record.replication, record.status,
       record.regrade_of});
  write_index();
}

std::vector<RunRecord> RunStore::load() const {
  std::lock_guard lock(mutex_);
  std::vector<RunRecord> out;
  for (const auto& line : read_lines(records_path())) out.push_back(record_from_json(line));
  return out;
}

std::optional<RunRecord> RunStore::find(std::string_view id) const {
  std::size_t line_no = 0;
  {
    std::lock_guard lock(mutex_);
    auto it = std::find_if(index_.begin(), index_.end(),
                           [&](const IndexEntry& e) { return e.id == id; });
    if (it == index_.end()) return std::nullopt;
    line_no = it->line;
  }
  const auto lines = read_lines(records_path());
  if (line_no >= lines.size()) return std::nullopt;
  return record_from_json(lines[line_no]);
}

std::string utc_now_iso8601() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------------------
// Harness

Harness::Harness(ExperimentPlan plan, Workspace workspace, PromptTemplate prompt_template,
                 Rubric rubric, RunStore& store, const Gateway& gateway, Clock clock)
    : plan_(std::move(plan)),
      workspace_(std::move(workspace)),
      template_(std::move(prompt_template)),
      rubric_(std::move(rubric)),
      store_(store),
      gateway_(gateway),
      clock_(std::move(clock)) {
  if (auto problem = plan_problem(plan_); !problem.empty()) invalid_plan(problem);
  if (auto violations = validate(workspace_); !violations.empty()) {
    throw Error(ErrorCode::InvalidWorkspace, violations.front().entity + ": " +
                                                 violations.front().rule);
  }
}

Harness Harness::from_plan(const ExperimentPlan& plan, RunStore& store, const Gateway& gateway) {
  return Harness(plan, load_workspace(plan.workspace_path.string()),
                 load_prompt_template(plan.template_path.string()),
                 load_rubric(plan.rubric_path.string()), store, gateway);
}

RunRecord Harness::run_single(const Condition& condition, int replication) {
  if (replication < 1 || replication > plan_.replications) {
    invalid_plan("replication " + std::to_string(replication) + " outside 1.." +
                 std::to_string(plan_.replications));
  }
  return run_at(condition, plan_.temperature_schedule[static_cast<std::size_t>(replication - 1)],
                replication);
}

RunRecord Harness::run_at(const Condition& condition, double temperature, int replication) {
  const PromptBundle bundle = assemble_prompt(workspace_, condition, template_);

  RunRecord record;
  record.plan_id = plan_.id;
  record.condition = condition.name;
  record.replication = replication;
  record.temperature = temperature;
  record.prompt = bundle.messages;
  record.prompt_digest = prompt_digest(bundle.messages);
  record.started_at = clock_();
  record.gateway.provider = gateway_.provider().name();
  record.gateway.model = plan_.model;
  record.gateway.mock = gateway_.is_mock();

  try {
    const CompletionResult summary =
        gateway_.complete(CompletionRequest{bundle.messages, temperature, plan_.model});
    record.output = summary.text;
    record.gateway.attempts_used = summary.attempts_used;
    record.gateway.latency_ms = summary.latency.count();
    record.grade = grade_report(record.output, rubric_, gateway_, plan_.model);
    record.status = RunStatus::Ok;
  } catch (const Error& e) {
    record.status = RunStatus::Failed;
    record.grade.reset();
    record.error = std::string(to_string(e.code())) + ": " + e.what();
  }
  record.finished_at = clock_();
  store_.append(record);
  return record;
}

std::vector<RunRecord> Harness::run_matrix() {
  // Surface compile errors before anything is sent or persisted.
  for (const auto& c : plan_.conditions) (void)assemble_prompt(workspace_, c, template_);

  const std::size_t reps = static_cast<std::size_t>(plan_.replications);
  const std::size_t cells = plan_.conditions.size() * reps;
  std::vector<RunRecord> records(cells);
  if (cells == 0) return records;

  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < cells; i = next++) {
      try {
        records[i] = run_single(plan_.conditions[i / reps], static_cast<int>(i % reps) + 1);
      } catch (...) {
        std::lock_guard lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        next = cells;
      }
    }
  };
  const std::size_t workers =
      std::min<std::size_t>(cells, static_cast<std::size_t>(std::max(1, gateway_.concurrency_cap())));
  {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
  }
  if (fatal) std::rethrow_exception(fatal);
  return records;
}

std::vector<RunRecord> regrade(RunStore& store, const std::vector<std::string>& run_ids,
                               const Rubric& rubric, const Gateway& gateway, const Clock& clock) {
  std::vector<RunRecord> originals;
  for (const auto& id : run_ids) {
    auto r = store.find(id);
    if (!r) throw Error(ErrorCode::UnknownRun, "unknown run '" + id + "'");
    if (r->output.empty()) {
      throw Error(ErrorCode::UnknownRun, "run '" + id + "' has no stored output to regrade");
    }
    originals.push_back(std::move(*r));
  }
  std::vector<RunRecord> out;
  for (const auto& original : originals) {
    RunRecord r = original;
    r.id.clear();
    r.regrade_of = original.id;
    r.error.clear();
    r.started_at = clock();
    try {
      r.grade = grade_report(r.output, rubric, gateway, r.gateway.model);
      r.status = RunStatus::Ok;
    } catch (const Error& e) {
      r.grade.reset();
      r.status = RunStatus::Failed;
      r.error = std::string(to_string(e.code())) + ": " + e.what();
    }
    r.finished_at = clock();
    store.append(r);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace spacesteer
