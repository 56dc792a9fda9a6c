#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "json.hpp"
#include "spacesteer/analytics.hpp"
#include "spacesteer/error.hpp"
#include "support.hpp"

using namespace spacesteer;
using namespace testing_support;

namespace {

RunRecord graded(const Rubric& rubric, std::string condition, std::vector<double> awarded) {
  RunRecord r;
  r.condition = std::move(condition);
  r.grade = GradeAudit{"answers", {"{}"}, make_breakdown(rubric, awarded)};
  return r;
}

std::vector<double> random_scores(const Rubric& rubric, std::mt19937_64& rng) {
  std::vector<double> out;
  for (const auto& item : rubric.items) {
    std::uniform_int_distribution<std::size_t> pick(0, item.allowed_scores.size() - 1);
    out.push_back(item.allowed_scores[pick(rng)].score);
  }
  return out;
}

std::vector<RunRecord> sample(const Rubric& rubric, std::uint64_t seed,
                              const std::vector<std::string>& conditions, int per) {
  std::mt19937_64 rng(seed);
  std::vector<RunRecord> out;
  for (const auto& c : conditions) {
    for (int i = 0; i < per; ++i) out.push_back(graded(rubric, c, random_scores(rubric, rng)));
  }
  return out;
}

}  // namespace

TEST(Quantile, LinearInterpolation) {
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile({4, 1, 3, 2}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.75), 3.25);
  EXPECT_DOUBLE_EQ(quantile({7}, 0.3), 7);
  EXPECT_DOUBLE_EQ(quantile({1, 9}, 0.0), 1);
  EXPECT_DOUBLE_EQ(quantile({1, 9}, 1.0), 9);
  EXPECT_THROW(quantile({}, 0.5), Error);
}

TEST(Summary, KnownSample) {
  const Rubric rubric = load_rubric(rubric_path());
  std::vector<RunRecord> records;
  // Only who_a scores: 0..3 points gives 0, 3.0, 6.1, 9.1 percent.
  for (double a : {0.0, 1.0, 2.0, 3.0}) {
    std::vector<double> s(rubric.items.size(), 0.0);
    s[0] = a;
    records.push_back(graded(rubric, "E1", s));
  }
  RunRecord failed;
  failed.condition = "E1";
  failed.status = RunStatus::Failed;
  records.push_back(failed);
  RunRecord other = records[3];
  other.condition = "E2";
  records.push_back(other);
  RunRecord again = records[0];
  again.regrade_of = "x";
  records.push_back(again);

  const auto s = condition_summary(records, "E1");
  EXPECT_EQ(s.n, 4u);
  EXPECT_EQ(s.n_failed, 1u);
  EXPECT_DOUBLE_EQ(s.min, 0);
  EXPECT_DOUBLE_EQ(s.max, 9.1);
  EXPECT_DOUBLE_EQ(s.mean, (0 + 3.0 + 6.1 + 9.1) / 4);
  EXPECT_DOUBLE_EQ(s.median, (3.0 + 6.1) / 2);
  ASSERT_FALSE(s.categories.empty());
  EXPECT_EQ(s.categories[0].first, Category::Who);
  // Who holds 12 points; mean of 0,1,2,3 out of 12.
  EXPECT_NEAR(s.categories[0].second, (0 + 1 + 2 + 3) / 4.0 / 12.0 * 100.0, 1e-9);

  try {
    condition_summary(records, "E9");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoData);
  }
  const auto all = summarize(records, {"E9", "E2", "E1"});
  ASSERT_EQ(all.size(), 2u);
  EXPECT_EQ(all[0].condition, "E2");
  EXPECT_EQ(all[1].condition, "E1");
}

TEST(Summary, InvariantUnderPermutation) {
  const Rubric rubric = load_rubric(rubric_path());
  auto records = sample(rubric, 11, {"E1", "E11"}, 10);
  const auto base = summarize(records, {"E1", "E11"});
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    std::shuffle(records.begin(), records.end(), rng);
    EXPECT_EQ(summarize(records, {"E1", "E11"}), base);
  }
}

TEST(Summary, OrderedStatistics) {
  const Rubric rubric = load_rubric(rubric_path());
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto records = sample(rubric, seed, {"E3"}, 1 + static_cast<int>(seed % 10));
    const auto s = condition_summary(records, "E3");
    EXPECT_LE(s.min, s.q1);
    EXPECT_LE(s.q1, s.median);
    EXPECT_LE(s.median, s.q3);
    EXPECT_LE(s.q3, s.max);
    EXPECT_GE(s.mean, s.min);
    EXPECT_LE(s.mean, s.max);
  }
}

TEST(Export, CsvRoundTripsAtOneDecimal) {
  const Rubric rubric = load_rubric(rubric_path());
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto summaries = summarize(sample(rubric, seed, {"E1", "E2", "E10,x\"y"}, 7), {"E1", "E2", "E10,x\"y"});
    const std::string csv = export_summaries(summaries, ExportFormat::Csv);
    const auto back = import_summaries_csv(csv);
    ASSERT_EQ(back.size(), summaries.size());
    for (std::size_t i = 0; i < back.size(); ++i) {
      EXPECT_EQ(back[i].condition, summaries[i].condition);
      EXPECT_EQ(back[i].n, summaries[i].n);
      EXPECT_DOUBLE_EQ(back[i].mean, round1(summaries[i].mean));
      EXPECT_DOUBLE_EQ(back[i].q1, round1(summaries[i].q1));
      EXPECT_DOUBLE_EQ(back[i].max, round1(summaries[i].max));
      ASSERT_EQ(back[i].categories.size(), summaries[i].categories.size());
      for (std::size_t k = 0; k < back[i].categories.size(); ++k) {
        EXPECT_DOUBLE_EQ(back[i].categories[k].second, round1(summaries[i].categories[k].second));
      }
    }
    EXPECT_EQ(export_summaries(back, ExportFormat::Csv), csv);
  }
}

TEST(Export, CsvShape) {
  const Rubric rubric = load_rubric(rubric_path());
  const auto csv = export_summaries(summarize(sample(rubric, 1, {"E1"}, 3), {"E1"}), ExportFormat::Csv);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "condition,n,mean,median,q1,q3,min,max,Who,What,When,Where,Other");
  EXPECT_THROW(import_summaries_csv("a,b\n"), Error);
  EXPECT_THROW(import_summaries_csv(""), Error);
  EXPECT_THROW(import_summaries_csv(csv + "E2,1,x,1,1,1,1,1,,,,,\n"), Error);
}

TEST(Export, JsonAndBoxplot) {
  const Rubric rubric = load_rubric(rubric_path());
  const auto summaries = summarize(sample(rubric, 3, {"E1", "E11"}, 5), {"E1", "E11"});
  const auto box = nlohmann::json::parse(export_summaries(summaries, ExportFormat::BoxplotJson));
  ASSERT_EQ(box.size(), 2u);
  EXPECT_EQ(box[1]["condition"], "E11");
  for (const char* key : {"min", "q1", "median", "q3", "max", "n"}) EXPECT_TRUE(box[0].contains(key)) << key;
  EXPECT_FALSE(box[0].contains("mean"));

  const auto full = nlohmann::json::parse(export_summaries(summaries, ExportFormat::Json));
  EXPECT_TRUE(full[0].contains("mean"));
  EXPECT_TRUE(full[0]["categories"].contains("Who"));
  EXPECT_EQ(export_format_from_string("boxplot-json"), ExportFormat::BoxplotJson);
  EXPECT_THROW(export_format_from_string("xml"), Error);
}

TEST(Baseline, HumanPercentages) {
  EXPECT_DOUBLE_EQ(HumanBaseline::average_percent(), 57.6);
  EXPECT_DOUBLE_EQ(HumanBaseline::minimum_percent(), 33.3);
  EXPECT_DOUBLE_EQ(HumanBaseline::maximum_percent(), 87.9);
}
