#include "spacesteer/rubric.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "rubric_json.hpp"
#include "spacesteer/error.hpp"
#include "spacesteer/llm.hpp"

namespace spacesteer {

using detail::json;

namespace {

constexpr double kScoreEpsilon = 1e-9;

bool same_score(double a, double b) { return std::fabs(a - b) < kScoreEpsilon; }

[[noreturn]] void malformed_rubric(const std::string& what) {
  throw Error(ErrorCode::MalformedRubric, "rubric: " + what);
}

}  // namespace

std::string_view to_string(Category category) noexcept {
  switch (category) {
    case Category::Who: return "Who";
    case Category::What: return "What";
    case Category::When: return "When";
    case Category::Where: return "Where";
    case Category::Other: return "Other";
  }
  return "Other";
}

std::optional<Category> category_from_string(std::string_view name) {
  for (auto c : kCategories) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

bool RubricItem::allows(double score) const {
  return std::any_of(allowed_scores.begin(), allowed_scores.end(),
                     [&](const ScoreOption& o) { return same_score(o.score, score); });
}

double Rubric::category_points(Category category) const {
  double sum = 0;
  for (const auto& item : items) {
    if (item.category == category) sum += item.points;
  }
  return sum;
}

Rubric parse_rubric(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    malformed_rubric(e.what());
  }
  Rubric rubric;
  try {
    rubric.total = j.at("total").get<double>();
    std::set<std::string> ids;
    for (const auto& ij : j.at("items")) {
      RubricItem item;
      item.id = ij.at("id").get<std::string>();
      if (item.id.empty()) malformed_rubric("item id must be non-empty");
      if (!ids.insert(item.id).second) malformed_rubric("duplicate item id '" + item.id + "'");
      const auto category = category_from_string(ij.at("category").get<std::string>());
      if (!category) malformed_rubric("item '" + item.id + "' has an unknown category");
      item.category = *category;
      item.description = ij.at("description").get<std::string>();
      item.points = ij.at("points").get<double>();
      if (!(item.points > 0)) malformed_rubric("item '" + item.id + "' needs positive points");
      for (const auto& option : ij.at("allowed_scores")) {
        ScoreOption o;
        if (option.is_number()) {
          o.score = option.get<double>();
        } else {
          o.score = option.at("score").get<double>();
          o.label = option.value("label", "");
          if (auto it = option.find("source_score"); it != option.end()) {
            o.source_score = it->get<double>();
          }
        }
        if (o.score < -kScoreEpsilon || o.score > item.points + kScoreEpsilon) {
          malformed_rubric("item '" + item.id + "' allows a score outside [0, points]");
        }
        if (item.allows(o.score)) malformed_rubric("item '" + item.id + "' repeats a score");
        item.allowed_scores.push_back(std::move(o));
      }
      if (!item.allows(0) || !item.allows(item.points)) {
        malformed_rubric("item '" + item.id + "' must allow 0 and its full points");
      }
      item.question = ij.value("question", "");
      if (item.question.empty()) item.question = item.description;
      rubric.items.push_back(std::move(item));
    }
  } catch (const json::exception& e) {
    malformed_rubric(e.what());
  }
  double sum = 0;
  for (const auto& item : rubric.items) sum += item.points;
  if (!same_score(sum, rubric.total)) {
    throw Error(ErrorCode::TotalMismatch, "rubric items sum to " + detail::format_number(sum) +
                                              " but total is " +
                                              detail::format_number(rubric.total));
  }
  return rubric;
}

Rubric load_rubric(const std::string& path) {
  try {
    return parse_rubric(detail::read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedFile) throw Error(ErrorCode::MalformedRubric, e.what());
    throw;
  }
}

std::optional<CategoryScore> GradeBreakdown::category(Category c) const {
  for (const auto& s : categories) {
    if (s.category == c) return s;
  }
  return std::nullopt;
}

double round1(double value) { return std::round(value * 10.0) / 10.0; }

double percentage_of(double awarded, double total) {
  if (total <= 0) return 0.0;
  return round1(100.0 * awarded / total);
}

GradeBreakdown make_breakdown(const Rubric& rubric, const std::vector<double>& awarded) {
  if (awarded.size() < rubric.items.size()) {
    throw Error(ErrorCode::MissingItem, "expected " + std::to_string(rubric.items.size()) +
                                            " scores, got " + std::to_string(awarded.size()));
  }
  GradeBreakdown out;
  out.rubric_total = rubric.total;
  for (std::size_t i = 0; i < rubric.items.size(); ++i) {
    const auto& item = rubric.items[i];
    if (!item.allows(awarded[i])) {
      throw Error(ErrorCode::OffRubricValue, "Q" + std::to_string(i + 1) + " (" + item.id +
                                                 "): score " + detail::format_number(awarded[i]) +
                                                 " is not an allowed value");
    }
    out.items.push_back({item.id, item.category, awarded[i], item.points});
    out.total += awarded[i];
  }
  for (auto c : kCategories) {
    CategoryScore score{c, 0, 0};
    bool present = false;
    for (const auto& s : out.items) {
      if (s.category != c) continue;
      present = true;
      score.awarded += s.awarded;
      score.points += s.points;
    }
    if (present) out.categories.push_back(score);
  }
  out.percentage = percentage_of(out.total, out.rubric_total);
  return out;
}

PromptBundle build_question_prompt(std::string_view report, const Rubric& rubric) {
  if (report.empty()) throw Error(ErrorCode::InvalidRequest, "report must be non-empty");
  std::string questions = "Here are the question I want you to answer:";
  for (std::size_t i = 0; i < rubric.items.size(); ++i) {
    questions += "\n\nQ" + std::to_string(i + 1) + ". " + rubric.items[i].question;
  }
  PromptBundle bundle;
  bundle.messages = {{Role::System, std::string(kQuestionSystemPrompt)},
                     {Role::Assistant, std::move(questions)},
                     {Role::User, "Report:\n\n" + std::string(report)}};
  return bundle;
}

PromptBundle build_grading_prompt(std::string_view answers, const Rubric& rubric) {
  if (answers.empty()) throw Error(ErrorCode::InvalidRequest, "answers must be non-empty");
  std::string body = "Please grade the report according to the following rubrics:";
  for (std::size_t i = 0; i < rubric.items.size(); ++i) {
    const auto& item = rubric.items[i];
    body += "\n\nQ" + std::to_string(i + 1) + ". " + item.description + "\n";
    for (const auto& option : item.allowed_scores) {
      body += "\n* ";
      if (!option.label.empty()) body += option.label + " - ";
      body += detail::format_number(option.score);
    }
  }
  body += "\n\nReturn one JSON object whose keys are the question labels (Q1 to Q" +
          std::to_string(rubric.items.size()) + ") and whose values are the awarded scores.";
  PromptBundle bundle;
  bundle.messages = {{Role::System, std::string(kGradingSystemPrompt)},
                     {Role::Assistant, std::move(body)},
                     {Role::User, "Answers:\n\n" + std::string(answers)}};
  return bundle;
}

namespace {

// Index just past the '}' closing the object opened at `open`, or npos.
std::size_t match_object(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (ch == '\\') {
        escaped = true;
      } else if (ch == '"') {
        in_string = false;
      }
      continue;
    }
    if (ch == '"') {
      in_string = true;
    } else if (ch == '{') {
      ++depth;
    } else if (ch == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

std::optional<json> first_json_object(std::string_view text) {
  for (std::size_t open = text.find('{'); open != std::string_view::npos;
       open = text.find('{', open + 1)) {
    const std::size_t close = match_object(text, open);
    if (close == std::string_view::npos) continue;
    try {
      auto j = json::parse(text.substr(open, close - open));
      if (j.is_object()) return j;
    } catch (const json::parse_error&) {
    }
  }
  return std::nullopt;
}

// "Q3", "q3", "Q3." -> 3; 0 when the key is not a question label.
std::size_t question_number(const std::string& key) {
  if (key.size() < 2 || (key[0] != 'Q' && key[0] != 'q')) return 0;
  std::size_t n = 0;
  std::size_t i = 1;
  for (; i < key.size() && std::isdigit(static_cast<unsigned char>(key[i])); ++i) {
    n = n * 10 + static_cast<std::size_t>(key[i] - '0');
  }
  if (i == 1) return 0;
  for (; i < key.size(); ++i) {
    if (!std::ispunct(static_cast<unsigned char>(key[i])) &&
        !std::isspace(static_cast<unsigned char>(key[i]))) {
      return 0;
    }
  }
  return n;
}

std::optional<double> score_value(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      std::size_t used = 0;
      const auto s = v.get<std::string>();
      double d = std::stod(s, &used);
      if (used == s.size()) return d;
    } catch (const std::exception&) {
    }
    return std::nullopt;
  }
  if (v.is_object() && v.contains("score")) return score_value(v.at("score"));
  return std::nullopt;
}

}  // namespace

GradeBreakdown parse_grade_response(std::string_view text, const Rubric& rubric) {
  const auto object = first_json_object(text);
  if (!object) throw Error(ErrorCode::MalformedGrading, "no JSON object in grading response");
  std::vector<std::optional<double>> scores(rubric.items.size());
  for (const auto& [key, value] : object->items()) {
    const std::size_t n = question_number(key);
    if (n == 0 || n > rubric.items.size()) continue;
    const auto score = score_value(value);
    if (!score) {
      throw Error(ErrorCode::MalformedGrading, "score for " + key + " is not a number");
    }
    scores[n - 1] = score;
  }
  std::vector<double> awarded;
  awarded.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!scores[i]) {
      throw Error(ErrorCode::MissingItem, "grading response has no score for Q" +
                                              std::to_string(i + 1) + " (" + rubric.items[i].id +
                                              ")");
    }
    awarded.push_back(*scores[i]);
  }
  return make_breakdown(rubric, awarded);
}

GradeAudit grade_report(std::string_view report, const Rubric& rubric, const Gateway& gateway,
                        const std::string& model) {
  GradeAudit audit;
  CompletionRequest ask{build_question_prompt(report, rubric).messages, 0.0, model};
  audit.answers = gateway.complete(ask).text;

  CompletionRequest grade{build_grading_prompt(audit.answers, rubric).messages, 0.0, model};
  constexpr int kGradingAttempts = 2;
  for (int attempt = 1;; ++attempt) {
    audit.grading_raw.push_back(gateway.complete(grade).text);
    try {
      audit.breakdown = parse_grade_response(audit.grading_raw.back(), rubric);
      return audit;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::MalformedGrading || attempt >= kGradingAttempts) throw;
    }
  }
}

namespace detail {

json to_json(const GradeBreakdown& b) {
  json items = json::array();
  for (const auto& s : b.items) {
    items.push_back({{"id", s.id},
                     {"category", std::string(spacesteer::to_string(s.category))},
                     {"awarded", s.awarded},
                     {"points", s.points}});
  }
  json categories = json::array();
  for (const auto& c : b.categories) {
    categories.push_back({{"category", std::string(spacesteer::to_string(c.category))},
                          {"awarded", c.awarded},
                          {"points", c.points}});
  }
  return json{{"items", std::move(items)},        {"categories", std::move(categories)},
              {"total", b.total},                 {"rubric_total", b.rubric_total},
              {"percentage", b.percentage}};
}

namespace {

Category category_field(const json& j) {
  const auto c = category_from_string(j.at("category").get<std::string>());
  if (!c) throw Error(ErrorCode::MalformedFile, "unknown category in breakdown");
  return *c;
}

}  // namespace

GradeBreakdown breakdown_from_json(const json& j) {
  GradeBreakdown b;
  for (const auto& s : j.at("items")) {
    b.items.push_back({s.at("id").get<std::string>(), category_field(s),
                       s.at("awarded").get<double>(), s.at("points").get<double>()});
  }
  for (const auto& c : j.at("categories")) {
    b.categories.push_back(
        {category_field(c), c.at("awarded").get<double>(), c.at("points").get<double>()});
  }
  b.total = j.at("total").get<double>();
  b.rubric_total = j.at("rubric_total").get<double>();
  b.percentage = j.at("percentage").get<double>();
  return b;
}

json to_json(const GradeAudit& a) {
  return json{{"answers", a.answers},
              {"grading_raw", a.grading_raw},
              {"breakdown", to_json(a.breakdown)}};
}

GradeAudit audit_from_json(const json& j) {
  return GradeAudit{j.at("answers").get<std::string>(),
                    j.at("grading_raw").get<std::vector<std::string>>(),
                    breakdown_from_json(j.at("breakdown"))};
}

}  // namespace detail

std::string grade_audit_to_json(const GradeAudit& audit) {
  return detail::dump(detail::to_json(audit), 2) + "\n";
}

}  // namespace spacesteer
