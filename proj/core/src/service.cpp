#include "spacesteer/service.hpp"

#include <algorithm>

#include "json_io.hpp"
#include "spacesteer/error.hpp"

namespace spacesteer {

namespace fs = std::filesystem;

Service::Service(ServiceConfig config, std::shared_ptr<Gateway> gateway)
    : config_(std::move(config)), gateway_(std::move(gateway)) {
  if (!gateway_) throw std::invalid_argument("Service requires a gateway");
}

void Service::load_workspace(const std::string& id, Workspace workspace) {
  if (auto violations = validate(workspace); !violations.empty()) {
    throw Error(ErrorCode::InvalidWorkspace, "workspace '" + id + "': " +
                                                 violations.front().entity + ": " +
                                                 violations.front().rule);
  }
  auto s = std::make_unique<Slot>();
  s->current = std::make_shared<const Workspace>(std::move(workspace));
  std::unique_lock lock(slots_mutex_);
  slots_[id] = std::move(s);
}

void Service::load_workspace_dir(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) load_workspace(f.stem().string(), spacesteer::load_workspace(f.string()));
}

std::vector<std::string> Service::workspace_ids() const {
  std::shared_lock lock(slots_mutex_);
  std::vector<std::string> ids;
  for (const auto& [id, s] : slots_) ids.push_back(id);
  return ids;
}

Service::Slot& Service::slot(const std::string& id) const {
  std::shared_lock lock(slots_mutex_);
  auto it = slots_.find(id);
  if (it == slots_.end()) throw Error(ErrorCode::UnknownWorkspace, "unknown workspace '" + id + "'");
  return *it->second;
}

WorkspaceSnapshot Service::snapshot(const std::string& id) const {
  Slot& s = slot(id);
  std::lock_guard lock(s.read);
  return {s.current, s.sequence};
}

EditOutcome Service::handle_edit(const std::string& id, const WorkspaceEdit& edit) {
  Slot& s = slot(id);
  std::lock_guard writer(s.writer);
  std::shared_ptr<const Workspace> base;
  std::uint64_t sequence = 0;
  {
    std::lock_guard lock(s.read);
    base = s.current;
    sequence = s.sequence;
  }

  EditOutcome out;
  std::shared_ptr<const Workspace> next;
  try {
    next = std::make_shared<const Workspace>(apply_edit(*base, edit));
  } catch (const Error& e) {
    out.accepted = false;
    out.sequence = sequence;
    out.error = e.code();
    out.violations.push_back({std::string(edit_name(edit)), e.what()});
    return out;
  }
  if (config_.workspace_dir) save_workspace(*next, (*config_.workspace_dir / (id + ".json")).string());
  {
    std::lock_guard lock(s.read);
    s.current = next;
    out.sequence = ++s.sequence;
  }
  out.accepted = true;
  return out;
}

PromptPreview Service::handle_prompt_preview(const std::string& id,
                                             const std::string& condition) const {
  const WorkspaceSnapshot snap = snapshot(id);
  PromptPreview preview;
  preview.bundle = assemble_prompt(*snap.workspace, preset(condition), config_.prompt_template);
  preview.digest = prompt_digest(preview.bundle.messages);
  preview.sequence = snap.sequence;
  return preview;
}

RunStore& Service::interactive_store(const std::string& workspace_id) {
  std::lock_guard lock(stores_mutex_);
  auto& store = stores_["interactive-" + workspace_id];
  if (!store) store = std::make_unique<RunStore>(config_.runs_dir, "interactive-" + workspace_id);
  return *store;
}

RunRecord Service::handle_run_and_grade(const std::string& id, const std::string& condition,
                                        std::optional<double> temperature) {
  const WorkspaceSnapshot snap = snapshot(id);
  const Condition c = preset(condition);
  const double t = temperature.value_or(kInteractiveTemperature);

  ExperimentPlan plan;
  plan.id = "interactive-" + id;
  plan.conditions = {c};
  plan.replications = 1;
  plan.temperature_schedule = {t};
  plan.model = config_.model;
  plan.runs_dir = config_.runs_dir;
  if (auto problem = plan_problem(plan); !problem.empty()) {
    throw Error(ErrorCode::InvalidRequest, problem);
  }
  Harness harness(plan, *snap.workspace, config_.prompt_template, config_.rubric,
                  interactive_store(id), *gateway_);
  return harness.run_at(c, t, 0);
}

std::optional<RunRecord> Service::find_run(const std::string& run_id) const {
  const auto colon = run_id.find(':');
  if (colon == std::string::npos || colon == 0) return std::nullopt;
  const std::string plan_id = run_id.substr(0, colon);
  if (plan_id.find_first_of("/\\") != std::string::npos || plan_id == "..") return std::nullopt;
  {
    std::lock_guard lock(stores_mutex_);
    if (auto it = stores_.find(plan_id); it != stores_.end()) return it->second->find(run_id);
  }
  if (!fs::exists(config_.runs_dir / plan_id)) return std::nullopt;
  return RunStore(config_.runs_dir, plan_id).find(run_id);
}

std::vector<ConditionSummary> Service::plan_stats(const std::string& plan_id) const {
  if (plan_id.empty() || plan_id.find_first_of("/\\") != std::string::npos) {
    throw Error(ErrorCode::InvalidPlan, "bad plan id '" + plan_id + "'");
  }
  const fs::path plan_file = config_.plans_dir / (plan_id + ".json");
  if (!fs::exists(plan_file)) throw Error(ErrorCode::InvalidPlan, "unknown plan '" + plan_id + "'");
  const ExperimentPlan plan = load_plan(plan_file);
  RunStore store(plan.runs_dir, plan.id);
  std::vector<std::string> order;
  for (const auto& c : plan.conditions) order.push_back(c.name);
  return summarize(store.load(), order);
}

}  // namespace spacesteer
