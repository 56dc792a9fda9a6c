#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "json.hpp"
#include "spacesteer/condition.hpp"
#include "spacesteer/error.hpp"
#include "spacesteer/prompt.hpp"
#include "support.hpp"

using namespace spacesteer;
using namespace testing_support;
using nlohmann::json;

namespace {

const Workspace& crescent() {
  static const Workspace w = load_workspace(crescent_path());
  return w;
}

const PromptTemplate& crescent_template() {
  static const PromptTemplate t = load_prompt_template(crescent_template_path());
  return t;
}

ErrorCode error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidEdit;
}

// Document ids mentioned in part I, whatever its shape.
std::set<std::string> part_one_documents(const PromptBundle& b) {
  const json j = json::parse(b.messages.at(2).content);
  std::set<std::string> ids;
  const bool nested = b.has(Section::Clusters);
  for (const auto& [key, value] : j.items()) {
    if (nested) {
      for (const auto& [doc, body] : value.items()) ids.insert(doc);
    } else {
      ids.insert(key);
    }
  }
  return ids;
}

}  // namespace

TEST(Condition, PresetTable) {
  const auto& p = condition_presets();
  ASSERT_EQ(p.size(), 11u);
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(p[i].name, "E" + std::to_string(i + 1));
    EXPECT_TRUE(condition_problem(p[i]).empty()) << p[i].name;
  }
  EXPECT_EQ(preset("E1").flags, FeatureFlags{});
  EXPECT_TRUE(preset("E3").flags.subset_of(preset("E11").flags));
  EXPECT_FALSE(preset("E11").flags.connections);
  EXPECT_TRUE(preset("E10").flags.cluster_names);
  EXPECT_FALSE(find_preset("E12"));
  EXPECT_EQ(error_of([] { preset("E12"); }), ErrorCode::UnknownCondition);
}

TEST(Condition, DependencyRules) {
  EXPECT_FALSE(condition_problem({"x", {.clustering = true}}).empty());
  EXPECT_FALSE(condition_problem({"x", {.filtering = true, .cluster_names = true}}).empty());
  EXPECT_EQ(error_of([] { require_valid({"x", {.clustering = true}}); }), ErrorCode::InvalidCondition);
  EXPECT_EQ(error_of([] {
              assemble_prompt(crescent(), {"x", {.clustering = true}}, crescent_template());
            }),
            ErrorCode::InvalidCondition);
}

TEST(Compile, TextLevelFlatCountsRepeats) {
  const TextWeights t = compile_text_level(crescent(), WeightMethod::Flat);
  EXPECT_EQ(t.total(), static_cast<int>(crescent().highlights.size()));
  ASSERT_FALSE(t.flat.empty());
  EXPECT_EQ(t.flat[0], (std::pair<std::string, int>{"Hani al-Hallak", 2}));
  EXPECT_TRUE(t.by_cluster.empty());
}

TEST(Compile, TextLevelClusterEmbedded) {
  const TextWeights t = compile_text_level(crescent(), WeightMethod::ClusterEmbedded);
  EXPECT_EQ(t.total(), static_cast<int>(crescent().highlights.size()));
  ASSERT_EQ(t.by_cluster.size(), 4u);
  EXPECT_EQ(t.by_cluster[0].first, "cluster1");
  const WeightList expected_head = {{"Hani al-Hallak", 2}, {"Mark Davis,", 1}, {"Bagwant Dhaliwal", 1}};
  EXPECT_TRUE(std::equal(expected_head.begin(), expected_head.end(), t.by_cluster[0].second.begin()));
}

TEST(Compile, TextLevelUnclusteredBucketIsLast) {
  Workspace w;
  w.documents = {{"a", std::nullopt, "alpha beta"}, {"b", std::nullopt, "gamma"}};
  w.clusters = {{"k", std::nullopt, {"a"}}};
  w.highlights = {{"b", 0, 5, "gamma"}, {"a", 0, 5, "alpha"}};
  const TextWeights t = compile_text_level(w, WeightMethod::ClusterEmbedded);
  ASSERT_EQ(t.by_cluster.size(), 2u);
  EXPECT_EQ(t.by_cluster[0].first, "k");
  EXPECT_EQ(t.by_cluster[1].first, kUnclusteredKey);

  w.clusters.clear();
  EXPECT_EQ(error_of([&] { compile_text_level(w, WeightMethod::ClusterEmbedded); }), ErrorCode::NoClusters);
  EXPECT_TRUE(compile_text_level(Workspace{}, WeightMethod::Flat).empty());
}

TEST(Compile, StructureLevelNamesAndSyntheticKeys) {
  const auto named = compile_structure_level(crescent(), true);
  const auto plain = compile_structure_level(crescent(), false);
  ASSERT_EQ(named.size(), 4u);
  EXPECT_EQ(named[0].key, "NYSE");
  EXPECT_EQ(plain[0].key, "cluster_1");
  EXPECT_EQ(named[0].documents[0].first, "SI_2");
  EXPECT_EQ(named[0].documents, plain[0].documents);
}

TEST(Compile, StructureLevelSkipsEmptyAndDisambiguatesNames) {
  Workspace w;
  w.documents = {{"a", std::nullopt, "x"}, {"b", std::nullopt, "y"}};
  w.clusters = {{"e", std::string("Same"), {}}, {"k1", std::string("Same"), {"a"}}, {"k2", std::string("Same"), {"b"}}};
  const auto s = compile_structure_level(w, true);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].key, "Same");
  EXPECT_EQ(s[1].key, "Same (cluster_3)");

  w.clusters = {{"e", std::nullopt, {}}};
  EXPECT_EQ(error_of([&] { compile_structure_level(w, false); }), ErrorCode::NoClusters);
}

TEST(Compile, InsightsAndConnections) {
  const auto insights = compile_insight_level(crescent());
  ASSERT_FALSE(insights.empty());
  EXPECT_EQ(insights[0], (InsightEntry{"FBI_1", "Evidence for that Ramazi is the main coordinator"}));

  Workspace w;
  w.documents = {{"a", std::nullopt, "Hani"}, {"b", std::nullopt, "y"}};
  w.highlights = {{"a", 0, 4, "Hani"}};
  w.clusters = {{"k", std::nullopt, {"b"}}};
  w.connections = {{ObjectRef::text("Hani"), ObjectRef::cluster("k"), std::nullopt},
                   {ObjectRef::document("a"), ObjectRef::document("b"), std::string("next")}};
  const auto c = compile_connections(w);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0], (ConnectionTriple{"Hani", "k", ""}));
  EXPECT_EQ(c[1], (ConnectionTriple{"a", "b", "next"}));
}

TEST(Template, ParseErrors) {
  EXPECT_EQ(error_of([] { parse_prompt_template("{}"); }), ErrorCode::MalformedTemplate);
  EXPECT_EQ(error_of([] { parse_prompt_template("nope"); }), ErrorCode::MalformedTemplate);
  EXPECT_EQ(error_of([] {
              parse_prompt_template(R"({"system":"s","assistant":"a","lead_in":{"annotations":"",
                "highlights":"","connections":""},"highlight_method":"sideways"})");
            }),
            ErrorCode::MalformedTemplate);
  const auto t = parse_prompt_template(
      R"({"system":"s","assistant":"a","lead_in":{"annotations":"A","highlights":"H","connections":"C"},
          "highlight_method":"flat"})");
  EXPECT_EQ(t.highlight_method, WeightMethod::Flat);
}

TEST(Assemble, MessageLayout) {
  const auto e1 = assemble_prompt(crescent(), preset("E1"), crescent_template());
  ASSERT_EQ(e1.messages.size(), 3u);
  EXPECT_EQ(e1.messages[0].role, Role::System);
  EXPECT_EQ(e1.messages[1].role, Role::Assistant);
  EXPECT_EQ(e1.messages[2].role, Role::User);
  EXPECT_EQ(e1.manifest, std::vector<Section>{Section::Documents});

  const auto e11 = assemble_prompt(crescent(), preset("E11"), crescent_template());
  ASSERT_EQ(e11.messages.size(), 4u);
  EXPECT_EQ(e11.manifest, (std::vector<Section>{Section::Clusters, Section::ClusterNames,
                                                Section::Annotations, Section::Highlights}));
  const std::string& part2 = e11.messages[3].content;
  EXPECT_EQ(part2.rfind(crescent_template().lead_in.annotations + "\n\n[", 0), 0u);
  EXPECT_LT(part2.find("Annotation information:"), part2.find("Words and weights:"));
}

TEST(Assemble, PartOneDocumentSets) {
  for (const char* name : {"E1", "E4", "E5", "E6"}) {
    EXPECT_EQ(part_one_documents(assemble_prompt(crescent(), preset(name), crescent_template())).size(), 40u)
        << name;
  }
  const std::set<std::string> relevant(crescent().relevant.begin(), crescent().relevant.end());
  for (const char* name : {"E2", "E3", "E7", "E8", "E9", "E10", "E11"}) {
    EXPECT_EQ(part_one_documents(assemble_prompt(crescent(), preset(name), crescent_template())), relevant)
        << name;
  }
}

TEST(Assemble, MissingLayers) {
  Workspace bare;
  bare.documents = {{"a", std::nullopt, "x"}};
  const auto& t = crescent_template();
  EXPECT_EQ(error_of([&] { assemble_prompt(bare, preset("E2"), t); }), ErrorCode::MissingLayer);
  EXPECT_EQ(error_of([&] { assemble_prompt(bare, preset("E4"), t); }), ErrorCode::MissingLayer);
  EXPECT_EQ(error_of([&] { assemble_prompt(bare, preset("E5"), t); }), ErrorCode::MissingLayer);
  EXPECT_EQ(error_of([&] { assemble_prompt(bare, preset("E6"), t); }), ErrorCode::MissingLayer);
  bare.relevant = {"a"};
  EXPECT_EQ(error_of([&] { assemble_prompt(bare, preset("E3"), t); }), ErrorCode::NoClusters);
  EXPECT_NO_THROW(assemble_prompt(bare, preset("E1"), t));
}

TEST(Assemble, FlatWeightsWithoutClustering) {
  const auto e4 = assemble_prompt(crescent(), preset("E4"), crescent_template());
  const std::string& part2 = e4.messages[3].content;
  EXPECT_EQ(part2.find("cluster1"), std::string::npos);
  EXPECT_NE(part2.find("\"Hani al-Hallak\": 2"), std::string::npos);
}

TEST(Assemble, TemplateOverridesWeightMethod) {
  const Workspace lr = load_workspace(literature_path());
  const auto t = load_prompt_template(literature_template_path());
  const auto b = assemble_prompt(lr, preset("E7"), t);
  const json weights = json::parse(b.messages[3].content.substr(b.messages[3].content.find('{')));
  EXPECT_EQ(weights.size(), 3u);
  EXPECT_EQ(weights.begin().value(), 1);
}

// Sections of part II depend only on the flags that enable them (and on
// clustering for the weight method).
TEST(Assemble, Monotonicity) {
  const auto& presets = condition_presets();
  const auto& t = crescent_template();
  for (const auto& a : presets) {
    for (const auto& b : presets) {
      if (!a.flags.subset_of(b.flags)) continue;
      const auto pa = assemble_prompt(crescent(), a, t);
      const auto pb = assemble_prompt(crescent(), b, t);
      for (Section s : pa.manifest) {
        if (s == Section::Documents || s == Section::FilteredDocuments) continue;  // part I changes form
        EXPECT_TRUE(pb.has(s)) << a.name << " < " << b.name << " " << to_string(s);
      }
      const bool same_part_one = a.flags.filtering == b.flags.filtering &&
                                 a.flags.clustering == b.flags.clustering &&
                                 a.flags.cluster_names == b.flags.cluster_names;
      if (same_part_one) {
        EXPECT_EQ(pa.messages[2], pb.messages[2]) << a.name << " " << b.name;
      }
      if (pa.messages.size() == 4 && a.flags.clustering == b.flags.clustering) {
        EXPECT_NE(pb.messages.at(3).content.find(pa.messages[3].content.substr(0, 200)), std::string::npos)
            << a.name << " " << b.name;
      }
    }
  }
}

TEST(Assemble, Deterministic) {
  WorkspaceGen gen(99);
  const auto& t = crescent_template();
  for (int i = 0; i < 30; ++i) {
    const Workspace w = gen.workspace();
    for (const auto& c : condition_presets()) {
      std::optional<PromptBundle> first;
      try {
        first = assemble_prompt(w, c, t);
      } catch (const Error& e) {
        EXPECT_TRUE(e.code() == ErrorCode::MissingLayer || e.code() == ErrorCode::NoClusters);
        continue;
      }
      const Workspace copy = deserialize(serialize(w));
      EXPECT_EQ(assemble_prompt(copy, c, t), *first);
      EXPECT_EQ(prompt_digest(assemble_prompt(copy, c, t).messages), prompt_digest(first->messages));
    }
  }
}

TEST(Wire, RoundTripAndDigest) {
  const auto b = assemble_prompt(crescent(), preset("E11"), crescent_template());
  const std::string wire = to_wire_json(b.messages);
  EXPECT_EQ(messages_from_wire_json(wire), b.messages);
  EXPECT_EQ(wire.find('\n'), std::string::npos);
  EXPECT_EQ(prompt_digest(b.messages).size(), 64u);
  const json j = json::parse(bundle_to_json(b));
  EXPECT_EQ(j["digest"], prompt_digest(b.messages));
  EXPECT_EQ(j["manifest"][0], "clusters");
  EXPECT_EQ(j["messages"][0]["role"], "system");
}

class Golden : public ::testing::TestWithParam<std::string> {};

TEST_P(Golden, CrescentMatchesCommittedFile) {
  const std::string name = GetParam();
  const std::string expected = slurp(fixture_dir() / "golden" / ("crescent_" + name + ".json"));
  ASSERT_FALSE(expected.empty());
  EXPECT_EQ(bundle_to_json(assemble_prompt(crescent(), preset(name), crescent_template())), expected);
}

INSTANTIATE_TEST_SUITE_P(Presets, Golden,
                         ::testing::Values("E1", "E2", "E3", "E4", "E5", "E6", "E7", "E8", "E9",
                                           "E10", "E11"));

TEST(GoldenLiterature, MatchesCommittedFiles) {
  const Workspace lr = load_workspace(literature_path());
  const auto t = load_prompt_template(literature_template_path());
  for (const char* name : {"E2", "E7", "E8", "E11"}) {
    EXPECT_EQ(bundle_to_json(assemble_prompt(lr, preset(name), t)),
              slurp(fixture_dir() / "golden" / ("literature_review_" + std::string(name) + ".json")))
        << name;
  }
}

TEST(GoldenContent, E3AndE11Markers) {
  const json e3 = json::parse(slurp(fixture_dir() / "golden" / "crescent_E3.json"));
  EXPECT_EQ(e3["messages"][0]["content"].get<std::string>().rfind("Imagine you are a FBI agent", 0), 0u);
  EXPECT_NE(e3["messages"][1]["content"].get<std::string>().find("Bottom Line Up Front"), std::string::npos);
  const json part1 = json::parse(e3["messages"][2]["content"].get<std::string>());
  EXPECT_TRUE(part1["cluster_1"].contains("SI_2"));

  const json e11 = json::parse(slurp(fixture_dir() / "golden" / "crescent_E11.json"));
  const auto e11_part1 = nlohmann::ordered_json::parse(e11["messages"][2]["content"].get<std::string>());
  EXPECT_EQ(e11_part1.begin().key(), "NYSE");
  EXPECT_EQ(e11_part1["NYSE"].begin().key(), "SI_2");
  const std::string part2 = e11["messages"][3]["content"];
  EXPECT_NE(part2.find("\"node\": \"FBI_1\""), std::string::npos);
  EXPECT_NE(part2.find("\"Hani al-Hallak\": 2"), std::string::npos);
}
