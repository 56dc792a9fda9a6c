#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spacesteer/harness.hpp"
#include "spacesteer/rubric.hpp"

namespace spacesteer {

// Five-number summary plus mean of percentage scores for one condition.
// Quartiles use linear interpolation between order statistics at
// position p * (n - 1) (inclusive convention).
struct ConditionSummary {
  std::string condition;
  std::size_t n = 0;
  std::size_t n_failed = 0;
  double mean = 0;
  double median = 0;
  double q1 = 0;
  double q3 = 0;
  double min = 0;
  double max = 0;
  // Average category score as a percentage of that category's points.
  std::vector<std::pair<Category, double>> categories;

  bool operator==(const ConditionSummary&) const = default;
};

// Linear-interpolation quantile of `values` (need not be sorted), p in [0,1].
double quantile(std::vector<double> values, double p);

// Only original (non-regrade) records count. Throws Error(NoData) when the
// condition has no successful record.
ConditionSummary condition_summary(const std::vector<RunRecord>& records,
                                   std::string_view condition);

// Category -> mean over successful records of subtotal / category points * 100.
std::vector<std::pair<Category, double>> subitem_breakdown(const std::vector<RunRecord>& records,
                                                           std::string_view condition);

// One summary per condition in `order` that has data.
std::vector<ConditionSummary> summarize(const std::vector<RunRecord>& records,
                                        const std::vector<std::string>& order);

enum class ExportFormat { Csv, Json, BoxplotJson };

// Throws Error(InvalidRequest) for an unknown name.
ExportFormat export_format_from_string(std::string_view name);

// CSV columns: condition,n,mean,median,q1,q3,min,max,Who,What,When,Where,Other
// with one decimal place; empty category cells when the rubric lacks one.
std::string export_summaries(const std::vector<ConditionSummary>& summaries, ExportFormat format);
// Inverse of the CSV export. Throws Error(MalformedFile).
std::vector<ConditionSummary> import_summaries_csv(std::string_view csv);

// Human participants' correctness scores (raw points out of 33).
struct HumanBaseline {
  static constexpr double kAverage = 19;
  static constexpr double kMinimum = 11;
  static constexpr double kMaximum = 29;
  static constexpr int kParticipants = 8;
  static constexpr double kOutOf = 33;

  static double average_percent() { return percentage_of(kAverage, kOutOf); }
  static double minimum_percent() { return percentage_of(kMinimum, kOutOf); }
  static double maximum_percent() { return percentage_of(kMaximum, kOutOf); }
};

// Mean correctness the reference experiment reported per condition (percent).
// Reference values only; live sampling is not expected to reproduce them.
struct ReportedMean {
  std::string_view condition;
  double percent;
};
inline constexpr ReportedMean kReportedMeans[] = {
    {"E1", 34.4}, {"E2", 45.5}, {"E3", 65.2}, {"E10", 75.9}, {"E11", 84.2}};

}  // namespace spacesteer
