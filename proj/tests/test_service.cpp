#include <gtest/gtest.h>

#include <set>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "spacesteer/error.hpp"
#include "spacesteer/service.hpp"
#include "support.hpp"

using namespace spacesteer;
using namespace testing_support;
using nlohmann::json;

namespace {

ServiceConfig config_in(const TempDir& dir) {
  ServiceConfig c;
  c.runs_dir = dir / "runs";
  c.plans_dir = dir / "plans";
  c.prompt_template = load_prompt_template(crescent_template_path());
  c.rubric = load_rubric(rubric_path());
  return c;
}

std::shared_ptr<Gateway> offline_gateway() {
  return std::make_shared<Gateway>(make_offline_provider(load_rubric(rubric_path())));
}

json hl_edit(std::size_t start = 0) {
  const Workspace w = load_workspace(crescent_path());
  const auto& body = w.find_document("SI_2")->body;
  return json{{"type", "AddHighlight"}, {"document", "SI_2"}, {"start", start}, {"end", start + 4},
              {"text", body.substr(start, 4)}};
}

}  // namespace

TEST(Service, EditsAdvanceSequenceAndRejectionsDoNot) {
  TempDir dir;
  Service s(config_in(dir), offline_gateway());
  s.load_workspace("crescent", load_workspace(crescent_path()));
  EXPECT_EQ(s.snapshot("crescent").sequence, 0u);

  const auto ok = s.handle_edit("crescent", edit::SetRelevance{"CIA_9", true});
  EXPECT_TRUE(ok.accepted);
  EXPECT_EQ(ok.sequence, 1u);
  EXPECT_EQ(s.snapshot("crescent").workspace->relevant.size(), 24u);

  const auto bad = s.handle_edit("crescent", edit::AssignToCluster{"cluster1", "SI_99"});
  EXPECT_FALSE(bad.accepted);
  EXPECT_EQ(bad.sequence, 1u);
  EXPECT_EQ(bad.error, std::optional<ErrorCode>(ErrorCode::UnresolvedReference));
  ASSERT_EQ(bad.violations.size(), 1u);
  EXPECT_EQ(bad.violations[0].entity, "AssignToCluster");

  try {
    s.snapshot("nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownWorkspace);
  }
}

TEST(Service, SnapshotsAreImmutable) {
  TempDir dir;
  Service s(config_in(dir), offline_gateway());
  s.load_workspace("w", load_workspace(crescent_path()));
  const auto before = s.snapshot("w");
  s.handle_edit("w", edit::SetRelevance{"CIA_9", true});
  EXPECT_EQ(before.workspace->relevant.size(), 23u);
}

TEST(Service, PersistsAcceptedEdits) {
  TempDir dir;
  auto c = config_in(dir);
  c.workspace_dir = dir / "ws";
  fs::create_directories(*c.workspace_dir);
  Service s(c, offline_gateway());
  s.load_workspace("w", load_workspace(crescent_path()));
  s.handle_edit("w", edit::CreateCluster{"extra", std::string("Extra")});
  EXPECT_EQ(load_workspace((dir / "ws" / "w.json").string()), *s.snapshot("w").workspace);
}

TEST(Service, ConcurrentEditsGetStrictlyIncreasingSequences) {
  TempDir dir;
  Service s(config_in(dir), offline_gateway());
  s.load_workspace("w", load_workspace(crescent_path()));
  constexpr int kThreads = 4;
  constexpr int kEach = 25;
  std::vector<std::vector<std::uint64_t>> seen(kThreads);
  {
    std::vector<std::jthread> pool;
    for (int t = 0; t < kThreads; ++t) {
      pool.emplace_back([&, t] {
        for (int i = 0; i < kEach; ++i) {
          const auto out = s.handle_edit(
              "w", edit::AddAnnotation{{"SI_2", "note " + std::to_string(t) + "/" + std::to_string(i)}});
          seen[static_cast<std::size_t>(t)].push_back(out.sequence);
        }
      });
    }
  }
  std::set<std::uint64_t> all;
  for (const auto& v : seen) {
    EXPECT_TRUE(std::is_sorted(v.begin(), v.end()));
    for (std::size_t i = 1; i < v.size(); ++i) EXPECT_LT(v[i - 1], v[i]);
    all.insert(v.begin(), v.end());
  }
  EXPECT_EQ(all.size(), static_cast<std::size_t>(kThreads * kEach));
  EXPECT_EQ(*all.rbegin(), static_cast<std::uint64_t>(kThreads * kEach));
  EXPECT_EQ(s.snapshot("w").workspace->annotations.size(), 3u + kThreads * kEach);
}

TEST(Service, PreviewAndRun) {
  TempDir dir;
  Service s(config_in(dir), offline_gateway());
  s.load_workspace("crescent", load_workspace(crescent_path()));
  const auto p = s.handle_prompt_preview("crescent", "E11");
  EXPECT_EQ(p.digest, prompt_digest(p.bundle.messages));
  EXPECT_EQ(p.bundle.messages.size(), 4u);
  EXPECT_THROW(s.handle_prompt_preview("crescent", "E42"), Error);

  const auto r = s.handle_run_and_grade("crescent", "E11");
  EXPECT_TRUE(r.ok());
  EXPECT_DOUBLE_EQ(r.temperature, kInteractiveTemperature);
  EXPECT_EQ(r.prompt_digest, p.digest);
  EXPECT_EQ(r.id, "interactive-crescent:E11:r0:1");
  EXPECT_EQ(s.find_run(r.id), std::optional<RunRecord>(r));
  EXPECT_FALSE(s.find_run("../etc:x"));
  EXPECT_FALSE(s.find_run("nothing"));
  EXPECT_TRUE(s.mock_mode());
}

// Drives the HTTP API over a real socket.
class Http : public ::testing::Test {
 protected:
  void SetUp() override {
    service_ = std::make_unique<Service>(config_in(dir_), offline_gateway());
    service_->load_workspace("crescent", load_workspace(crescent_path()));
    server_ = std::make_unique<HttpServer>(*service_);
    port_ = server_->start("127.0.0.1", 0);
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
  }
  void TearDown() override { server_->stop(); }

  static void expect_error(const httplib::Result& r, int status, const std::string& code) {
    ASSERT_TRUE(r);
    EXPECT_EQ(r->status, status) << r->body;
    const auto j = json::parse(r->body);
    EXPECT_EQ(j["error"]["code"], code) << r->body;
    EXPECT_TRUE(j["error"]["message"].is_string());
    EXPECT_EQ(r->get_header_value("Content-Type"), "application/json");
  }

  httplib::Result post(const std::string& path, const json& body) {
    return client_->Post(path, body.dump(), "application/json");
  }

  TempDir dir_;
  std::unique_ptr<Service> service_;
  std::unique_ptr<HttpServer> server_;
  std::unique_ptr<httplib::Client> client_;
  int port_ = 0;
};

TEST_F(Http, GetWorkspace) {
  auto r = client_->Get("/workspaces/crescent");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  const auto j = json::parse(r->body);
  EXPECT_EQ(j["sequence"], 0);
  EXPECT_EQ(j["workspace"]["documents"].size(), 40u);
  expect_error(client_->Get("/workspaces/nope"), 404, "UnknownWorkspace");
}

TEST_F(Http, Edits) {
  auto r = post("/workspaces/crescent/edits", hl_edit());
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200) << r->body;
  auto j = json::parse(r->body);
  EXPECT_TRUE(j["accepted"].get<bool>());
  EXPECT_EQ(j["sequence"], 1);

  auto bad = hl_edit();
  bad["end"] = 100000;
  r = post("/workspaces/crescent/edits", bad);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 422);
  j = json::parse(r->body);
  EXPECT_FALSE(j["accepted"].get<bool>());
  EXPECT_EQ(j["sequence"], 1);
  EXPECT_EQ(j["code"], "SpanOutOfRange");
  EXPECT_EQ(j["violations"].size(), 1u);

  expect_error(post("/workspaces/crescent/edits", json{{"type", "Teleport"}}), 422, "InvalidEdit");
  expect_error(client_->Post("/workspaces/crescent/edits", "not json", "application/json"), 400,
               "InvalidRequest");
  expect_error(post("/workspaces/ghost/edits", hl_edit()), 404, "UnknownWorkspace");
}

TEST_F(Http, PromptPreviewTracksEdits) {
  auto r = client_->Get("/workspaces/crescent/prompt?condition=E4");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  const auto before = json::parse(r->body);
  EXPECT_EQ(before["sequence"], 0);
  EXPECT_EQ(before["digest"], service_->handle_prompt_preview("crescent", "E4").digest);

  ASSERT_EQ(post("/workspaces/crescent/edits", hl_edit(0))->status, 200);
  const auto after = json::parse(client_->Get("/workspaces/crescent/prompt?condition=E4")->body);
  EXPECT_EQ(after["sequence"], 1);
  EXPECT_NE(after["digest"], before["digest"]);

  expect_error(client_->Get("/workspaces/crescent/prompt"), 400, "InvalidRequest");
  expect_error(client_->Get("/workspaces/crescent/prompt?condition=E99"), 404, "UnknownCondition");
}

TEST_F(Http, MissingLayerIsUnprocessable) {
  ASSERT_EQ(post("/workspaces/crescent/edits", json{{"type", "RemoveAnnotation"}, {"index", 0}})->status, 200);
  ASSERT_EQ(post("/workspaces/crescent/edits", json{{"type", "RemoveAnnotation"}, {"index", 0}})->status, 200);
  ASSERT_EQ(post("/workspaces/crescent/edits", json{{"type", "RemoveAnnotation"}, {"index", 0}})->status, 200);
  expect_error(client_->Get("/workspaces/crescent/prompt?condition=E5"), 422, "MissingLayer");
}

TEST_F(Http, RunThenFetch) {
  auto r = post("/workspaces/crescent/runs", json{{"condition", "E3"}, {"temperature", 0.4}});
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 201) << r->body;
  const auto record = json::parse(r->body);
  EXPECT_EQ(record["status"], "ok");
  EXPECT_DOUBLE_EQ(record["temperature"].get<double>(), 0.4);
  EXPECT_TRUE(record["grade"]["breakdown"]["percentage"].is_number());

  const std::string id = record["id"];
  auto fetched = client_->Get("/runs/" + id);
  ASSERT_TRUE(fetched);
  EXPECT_EQ(fetched->status, 200);
  EXPECT_EQ(json::parse(fetched->body), record);

  expect_error(client_->Get("/runs/interactive-crescent:E3:r0:9"), 404, "UnknownRun");
  expect_error(post("/workspaces/crescent/runs", json{{"temperature", 0.4}}), 400, "InvalidRequest");
  expect_error(post("/workspaces/crescent/runs", json{{"condition", "E3"}, {"temperature", 3}}), 400,
               "InvalidRequest");
}

TEST_F(Http, ProviderFailureIs502) {
  auto mock = std::make_shared<MockProvider>();
  mock->script({MockProvider::Failure{ErrorCode::AuthError, false, "bad key"}});
  Service failing(config_in(dir_), std::make_shared<Gateway>(mock));
  failing.load_workspace("crescent", load_workspace(crescent_path()));
  HttpServer server(failing);
  httplib::Client client("127.0.0.1", server.start("127.0.0.1", 0));
  auto r = client.Post("/workspaces/crescent/runs", R"({"condition":"E1"})", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 502);
  const auto record = json::parse(r->body);
  EXPECT_EQ(record["status"], "failed");
  // Failed runs are still persisted and retrievable.
  EXPECT_EQ(client.Get("/runs/" + record["id"].get<std::string>())->status, 200);
  server.stop();
}

TEST_F(Http, PlanStats) {
  fs::create_directories(dir_ / "plans");
  spit(dir_ / "plans" / "small.json",
       json{{"id", "small"},
            {"workspace", crescent_path()},
            {"template", crescent_template_path()},
            {"rubric", rubric_path()},
            {"conditions", {"E1", "E11"}},
            {"replications", 3},
            {"runs_dir", (dir_ / "runs").string()}}
           .dump());
  // Nothing run yet: the plan exists but has no data.
  auto r = client_->Get("/plans/small/stats");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200);
  EXPECT_EQ(json::parse(r->body), json::array());

  const auto plan = load_plan(dir_ / "plans" / "small.json");
  RunStore store(plan.runs_dir, plan.id);
  Gateway g(make_offline_provider(load_rubric(rubric_path())));
  const auto records = Harness::from_plan(plan, store, g).run_matrix();

  r = client_->Get("/plans/small/stats");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 200) << r->body;
  const auto stats = json::parse(r->body);
  ASSERT_EQ(stats.size(), 2u);
  EXPECT_EQ(stats[0]["condition"], "E1");
  EXPECT_EQ(stats[0]["n"], 3);
  EXPECT_DOUBLE_EQ(stats[1]["mean"].get<double>(), round1(condition_summary(records, "E11").mean));

  expect_error(client_->Get("/plans/absent/stats"), 404, "InvalidPlan");
}
