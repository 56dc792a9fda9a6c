// spacesteer command line: import, compile, run, grade, regrade, stats, serve.
//
// Exit codes: 0 ok, 1 usage, 2 validation failure, 3 provider failure.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "spacesteer/analytics.hpp"
#include "spacesteer/board.hpp"
#include "spacesteer/condition.hpp"
#include "spacesteer/error.hpp"
#include "spacesteer/harness.hpp"
#include "spacesteer/llm.hpp"
#include "spacesteer/prompt.hpp"
#include "spacesteer/rubric.hpp"
#include "spacesteer/service.hpp"
#include "spacesteer/workspace.hpp"

namespace fs = std::filesystem;
using namespace spacesteer;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitProvider = 3;

std::string default_data(const std::string& name) { return std::string(SPACESTEER_DEFAULT_DATA_DIR) + "/" + name; }

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MalformedFile, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::PersistenceFailure, "cannot write " + path);
  out << text;
}

// Live provider only with a key in the environment and no --mock.
std::shared_ptr<Gateway> make_gateway(const Rubric& rubric, bool force_mock) {
  if (!force_mock) {
    if (auto config = provider_config_from_env()) {
      return std::make_shared<Gateway>(std::make_shared<OpenAiProvider>(*config));
    }
  }
  std::cerr << "note: using the offline mock provider\n";
  return std::make_shared<Gateway>(make_offline_provider(rubric));
}

int failed_runs(const std::vector<RunRecord>& records) {
  int failed = 0;
  for (const auto& r : records) {
    if (!r.ok()) {
      ++failed;
      std::cerr << r.id << ": " << r.error << "\n";
    }
  }
  return failed;
}

struct Opts {
  // import / export-board
  std::string board, workspace, output, report;
  bool degree_weights = false, relevant_only = false;
  // compile
  std::string condition = "E11", tmpl, format = "bundle", stats_format = "csv";
  // run / regrade / stats
  std::string plan, runs_dir, rubric;
  std::vector<std::string> conditions, ids;
  bool mock = false, all = false;
  // serve
  std::string host = "127.0.0.1", workspaces_dir, plans_dir;
  int port = 8080;
  bool persist = false;
};

ExperimentPlan plan_with_overrides(const Opts& o) {
  ExperimentPlan plan = load_plan(o.plan);
  if (!o.runs_dir.empty()) plan.runs_dir = o.runs_dir;
  if (!o.conditions.empty()) {
    std::vector<Condition> picked;
    for (const auto& name : o.conditions) {
      bool found = false;
      for (const auto& c : plan.conditions) {
        if (c.name == name) {
          picked.push_back(c);
          found = true;
        }
      }
      if (!found) throw Error(ErrorCode::UnknownCondition, "plan has no condition '" + name + "'");
    }
    plan.conditions = std::move(picked);
  }
  return plan;
}

int cmd_import(const Opts& o) {
  ImportOptions options;
  options.degree_weights = o.degree_weights;
  const ImportResult result = import_board(load_board_export(o.board), options);
  write_output(o.output, serialize(result.workspace));
  if (!o.report.empty()) write_output(o.report, mapping_report_to_json(result.report));
  return kExitOk;
}

int cmd_export_board(const Opts& o) {
  ExportOptions options;
  options.relevant_only = o.relevant_only;
  write_output(o.output, board_export_to_json(export_board(load_workspace(o.workspace), options)));
  return kExitOk;
}

int cmd_compile(const Opts& o) {
  const Workspace ws = load_workspace(o.workspace);
  const PromptTemplate tmpl = load_prompt_template(o.tmpl);
  const PromptBundle bundle = assemble_prompt(ws, preset(o.condition), tmpl);
  if (o.format == "wire") {
    write_output(o.output, to_wire_json(bundle.messages) + "\n");
  } else {
    write_output(o.output, bundle_to_json(bundle));
  }
  return kExitOk;
}

int cmd_run(const Opts& o) {
  const ExperimentPlan plan = plan_with_overrides(o);
  auto gateway = make_gateway(load_rubric(plan.rubric_path.string()), o.mock);
  RunStore store(plan.runs_dir, plan.id);
  Harness harness = Harness::from_plan(plan, store, *gateway);
  const auto records = harness.run_matrix();
  const int failed = failed_runs(records);
  std::cout << records.size() << " runs (" << failed << " failed) stored in "
            << store.records_path().string() << "\n";
  return failed ? kExitProvider : kExitOk;
}

int cmd_grade(const Opts& o) {
  const Rubric rubric = load_rubric(o.rubric);
  auto gateway = make_gateway(rubric, o.mock);
  const GradeAudit audit = grade_report(read_text(o.report), rubric, *gateway, model_from_env());
  write_output(o.output, grade_audit_to_json(audit));
  return kExitOk;
}

int cmd_regrade(const Opts& o) {
  const ExperimentPlan plan = plan_with_overrides(o);
  const Rubric rubric = load_rubric(o.rubric.empty() ? plan.rubric_path.string() : o.rubric);
  auto gateway = make_gateway(rubric, o.mock);
  RunStore store(plan.runs_dir, plan.id);
  std::vector<std::string> ids = o.ids;
  if (o.all) {
    for (const auto& r : store.load()) {
      if (r.ok() && !r.regrade_of) ids.push_back(r.id);
    }
  }
  if (ids.empty()) throw CLI::ValidationError("regrade", "give --id or --all");
  const auto records = regrade(store, ids, rubric, *gateway);
  const int failed = failed_runs(records);
  std::cout << records.size() << " regrades (" << failed << " failed)\n";
  return failed ? kExitProvider : kExitOk;
}

int cmd_stats(const Opts& o) {
  const ExperimentPlan plan = plan_with_overrides(o);
  RunStore store(plan.runs_dir, plan.id);
  std::vector<std::string> order;
  for (const auto& c : plan.conditions) order.push_back(c.name);
  const auto summaries = summarize(store.load(), order);
  if (summaries.empty()) throw Error(ErrorCode::NoData, "no successful runs for plan '" + plan.id + "'");
  write_output(o.output, export_summaries(summaries, export_format_from_string(o.stats_format)));
  return kExitOk;
}

HttpServer* g_server = nullptr;

int cmd_serve(const Opts& o) {
  ServiceConfig config;
  config.runs_dir = o.runs_dir.empty() ? "runs" : o.runs_dir;
  config.plans_dir = o.plans_dir;
  config.prompt_template = load_prompt_template(o.tmpl);
  config.rubric = load_rubric(o.rubric);
  config.model = model_from_env();
  if (o.persist) config.workspace_dir = o.workspaces_dir;
  Service service(config, make_gateway(config.rubric, o.mock));
  service.load_workspace_dir(o.workspaces_dir);

  HttpServer server(service);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  std::cerr << "serving " << service.workspace_ids().size() << " workspace(s) on " << o.host << ":"
            << o.port << (service.mock_mode() ? " (mock)" : "") << "\n";
  if (!server.listen(o.host, o.port)) {
    std::cerr << "error: cannot listen on " << o.host << ":" << o.port << "\n";
    return kExitUsage;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"space-steered summarization toolkit"};
  app.require_subcommand(1);
  Opts o;
  o.tmpl = default_data("template_crescent.json");
  o.rubric = default_data("rubric_default.json");
  o.workspaces_dir = default_data("workspaces");
  o.plans_dir = std::string(SPACESTEER_DEFAULT_DATA_DIR);

  auto* imp = app.add_subcommand("import", "board export -> workspace");
  imp->add_option("-b,--board", o.board, "board export JSON")->required()->check(CLI::ExistingFile);
  imp->add_option("-o,--output", o.output, "workspace file (default stdout)");
  imp->add_option("--report", o.report, "write the mapping report here");
  imp->add_flag("--degree-weights", o.degree_weights, "repeat marks touched by connectors");

  auto* exp = app.add_subcommand("export-board", "workspace -> board export");
  exp->add_option("-w,--workspace", o.workspace)->required()->check(CLI::ExistingFile);
  exp->add_option("-o,--output", o.output);
  exp->add_flag("--relevant-only", o.relevant_only);

  auto* comp = app.add_subcommand("compile", "assemble the prompt for one condition");
  comp->add_option("-w,--workspace", o.workspace)->required()->check(CLI::ExistingFile);
  comp->add_option("-c,--condition", o.condition, "preset name E1..E11")->capture_default_str();
  comp->add_option("-t,--template", o.tmpl)->check(CLI::ExistingFile)->capture_default_str();
  comp->add_option("-o,--output", o.output);
  comp->add_option("--format", o.format, "bundle or wire")
      ->check(CLI::IsMember({"bundle", "wire"}))
      ->capture_default_str();

  auto* run = app.add_subcommand("run", "run an experiment plan");
  run->add_option("-p,--plan", o.plan)->required()->check(CLI::ExistingFile);
  run->add_option("--runs-dir", o.runs_dir, "override the plan's runs_dir");
  run->add_option("--condition", o.conditions, "restrict to these conditions");
  run->add_flag("--mock", o.mock, "force the offline mock provider");

  auto* grade = app.add_subcommand("grade", "grade one report");
  grade->add_option("-r,--report", o.report)->required()->check(CLI::ExistingFile);
  grade->add_option("-R,--rubric", o.rubric)->check(CLI::ExistingFile)->capture_default_str();
  grade->add_option("-o,--output", o.output);
  grade->add_flag("--mock", o.mock);

  auto* reg = app.add_subcommand("regrade", "grade stored outputs again");
  reg->add_option("-p,--plan", o.plan)->required()->check(CLI::ExistingFile);
  reg->add_option("--runs-dir", o.runs_dir);
  auto* ids = reg->add_option("--id", o.ids, "run ids");
  reg->add_flag("--all", o.all, "every successful original run")->excludes(ids);
  auto* reg_rubric = reg->add_option("-R,--rubric", o.rubric, "defaults to the plan's rubric");
  reg_rubric->check(CLI::ExistingFile);
  reg->add_flag("--mock", o.mock);

  auto* stats = app.add_subcommand("stats", "summaries for a plan");
  stats->add_option("-p,--plan", o.plan)->required()->check(CLI::ExistingFile);
  stats->add_option("--runs-dir", o.runs_dir);
  stats->add_option("--format", o.stats_format)
      ->check(CLI::IsMember({"csv", "json", "boxplot-json"}))
      ->capture_default_str();
  stats->add_option("-o,--output", o.output);

  auto* serve = app.add_subcommand("serve", "HTTP API");
  serve->add_option("--host", o.host)->capture_default_str();
  serve->add_option("--port", o.port)->capture_default_str();
  serve->add_option("--workspaces", o.workspaces_dir, "directory of <id>.json workspaces")
      ->check(CLI::ExistingDirectory)
      ->capture_default_str();
  serve->add_option("--plans", o.plans_dir, "directory of <id>.json plans")->capture_default_str();
  serve->add_option("--runs-dir", o.runs_dir, "run store root (default ./runs)");
  serve->add_option("-t,--template", o.tmpl)->check(CLI::ExistingFile)->capture_default_str();
  serve->add_option("-R,--rubric", o.rubric)->check(CLI::ExistingFile)->capture_default_str();
  serve->add_flag("--persist", o.persist, "write accepted edits back to the workspace files");
  serve->add_flag("--mock", o.mock);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (app.got_subcommand(imp)) return cmd_import(o);
    if (app.got_subcommand(exp)) return cmd_export_board(o);
    if (app.got_subcommand(comp)) return cmd_compile(o);
    if (app.got_subcommand(run)) return cmd_run(o);
    if (app.got_subcommand(grade)) return cmd_grade(o);
    if (app.got_subcommand(reg)) {
      if (reg_rubric->count() == 0) o.rubric.clear();
      return cmd_regrade(o);
    }
    if (app.got_subcommand(stats)) return cmd_stats(o);
    if (app.got_subcommand(serve)) return cmd_serve(o);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ProviderFailure& e) {
    std::cerr << "provider error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return kExitProvider;
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return is_provider_error(e.code()) ? kExitProvider : kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitUsage;
}
