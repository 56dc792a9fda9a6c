#include "spacesteer/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "json_io.hpp"
#include "spacesteer/error.hpp"

namespace spacesteer {

using detail::ordered_json;

double quantile(std::vector<double> values, double p) {
  if (values.empty()) throw Error(ErrorCode::NoData, "quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

namespace {

bool counts(const RunRecord& r, std::string_view condition) {
  return r.condition == condition && !r.regrade_of;
}

std::vector<const RunRecord*> successful(const std::vector<RunRecord>& records,
                                         std::string_view condition) {
  std::vector<const RunRecord*> out;
  for (const auto& r : records) {
    if (counts(r, condition) && r.ok()) out.push_back(&r);
  }
  return out;
}

}  // namespace

std::vector<std::pair<Category, double>> subitem_breakdown(const std::vector<RunRecord>& records,
                                                           std::string_view condition) {
  const auto ok = successful(records, condition);
  if (ok.empty()) {
    throw Error(ErrorCode::NoData, "no successful runs for condition '" + std::string(condition) + "'");
  }
  std::vector<std::pair<Category, double>> out;
  for (auto c : kCategories) {
    std::vector<double> rates;
    for (const RunRecord* r : ok) {
      const auto score = r->breakdown()->category(c);
      if (!score || score->points <= 0) continue;
      rates.push_back(score->awarded / score->points * 100.0);
    }
    if (rates.empty()) continue;
    std::sort(rates.begin(), rates.end());
    out.emplace_back(c, std::accumulate(rates.begin(), rates.end(), 0.0) /
                            static_cast<double>(rates.size()));
  }
  return out;
}

ConditionSummary condition_summary(const std::vector<RunRecord>& records,
                                   std::string_view condition) {
  const auto ok = successful(records, condition);
  if (ok.empty()) {
    throw Error(ErrorCode::NoData, "no successful runs for condition '" + std::string(condition) + "'");
  }
  std::vector<double> scores;
  for (const RunRecord* r : ok) scores.push_back(r->breakdown()->percentage);

  ConditionSummary s;
  s.condition = std::string(condition);
  s.n = scores.size();
  s.n_failed = static_cast<std::size_t>(std::count_if(
      records.begin(), records.end(),
      [&](const RunRecord& r) { return counts(r, condition) && !r.ok(); }));
  // Sorted summation keeps the mean independent of record order.
  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(s.n);
  s.min = sorted.front();
  s.max = sorted.back();
  s.q1 = quantile(sorted, 0.25);
  s.median = quantile(sorted, 0.5);
  s.q3 = quantile(sorted, 0.75);
  s.categories = subitem_breakdown(records, condition);
  return s;
}

std::vector<ConditionSummary> summarize(const std::vector<RunRecord>& records,
                                        const std::vector<std::string>& order) {
  std::vector<ConditionSummary> out;
  for (const auto& name : order) {
    if (successful(records, name).empty()) continue;
    out.push_back(condition_summary(records, name));
  }
  return out;
}

ExportFormat export_format_from_string(std::string_view name) {
  if (name == "csv") return ExportFormat::Csv;
  if (name == "json") return ExportFormat::Json;
  if (name == "boxplot-json") return ExportFormat::BoxplotJson;
  throw Error(ErrorCode::InvalidRequest, "unknown export format '" + std::string(name) + "'");
}

namespace {

std::string fixed1(double v) {
  std::ostringstream ss;
  ss.setf(std::ios::fixed);
  ss.precision(1);
  ss << (round1(v) == 0.0 ? 0.0 : round1(v));
  return ss.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::optional<double> category_value(const ConditionSummary& s, Category c) {
  for (const auto& [cat, v] : s.categories) {
    if (cat == c) return v;
  }
  return std::nullopt;
}

}  // namespace

std::string export_summaries(const std::vector<ConditionSummary>& summaries, ExportFormat format) {
  if (format == ExportFormat::Csv) {
    std::string out = "condition,n,mean,median,q1,q3,min,max";
    for (auto c : kCategories) out += "," + std::string(to_string(c));
    out += "\n";
    for (const auto& s : summaries) {
      out += csv_field(s.condition) + "," + std::to_string(s.n);
      for (double v : {s.mean, s.median, s.q1, s.q3, s.min, s.max}) out += "," + fixed1(v);
      for (auto c : kCategories) {
        out += ",";
        if (auto v = category_value(s, c)) out += fixed1(*v);
      }
      out += "\n";
    }
    return out;
  }

  ordered_json arr = ordered_json::array();
  for (const auto& s : summaries) {
    ordered_json j;
    j["condition"] = s.condition;
    j["n"] = s.n;
    if (format == ExportFormat::Json) {
      j["n_failed"] = s.n_failed;
      j["mean"] = round1(s.mean);
    }
    j["min"] = round1(s.min);
    j["q1"] = round1(s.q1);
    j["median"] = round1(s.median);
    j["q3"] = round1(s.q3);
    j["max"] = round1(s.max);
    if (format == ExportFormat::Json) {
      ordered_json cats = ordered_json::object();
      for (const auto& [c, v] : s.categories) cats[std::string(to_string(c))] = round1(v);
      j["categories"] = std::move(cats);
    }
    arr.push_back(std::move(j));
  }
  return detail::dump(arr, 2) + "\n";
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

double parse_number(const std::string& s) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::MalformedFile, "bad numeric CSV field '" + s + "'");
  }
}

}  // namespace

std::vector<ConditionSummary> import_summaries_csv(std::string_view csv) {
  std::istringstream in{std::string(csv)};
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::MalformedFile, "empty CSV");
  const auto header = split_csv_line(line);
  constexpr std::size_t kColumns = 8 + kCategories.size();
  if (header.size() != kColumns || header[0] != "condition") {
    throw Error(ErrorCode::MalformedFile, "unexpected CSV header");
  }
  std::vector<ConditionSummary> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != kColumns) throw Error(ErrorCode::MalformedFile, "wrong CSV field count");
    ConditionSummary s;
    s.condition = f[0];
    s.n = static_cast<std::size_t>(parse_number(f[1]));
    s.mean = parse_number(f[2]);
    s.median = parse_number(f[3]);
    s.q1 = parse_number(f[4]);
    s.q3 = parse_number(f[5]);
    s.min = parse_number(f[6]);
    s.max = parse_number(f[7]);
    for (std::size_t i = 0; i < kCategories.size(); ++i) {
      if (!f[8 + i].empty()) s.categories.emplace_back(kCategories[i], parse_number(f[8 + i]));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace spacesteer
