#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spacesteer/prompt.hpp"

namespace spacesteer {

class Gateway;

enum class Category { Who, What, When, Where, Other };

inline constexpr std::array<Category, 5> kCategories = {
    Category::Who, Category::What, Category::When, Category::Where, Category::Other};

std::string_view to_string(Category category) noexcept;
std::optional<Category> category_from_string(std::string_view name);

inline constexpr double kDefaultRubricTotal = 33.0;

struct ScoreOption {
  double score = 0;
  std::string label;                  // shown in the grading prompt when present
  std::optional<double> source_score;  // original scale, documentation only
};

struct RubricItem {
  std::string id;
  Category category = Category::Other;
  std::string description;
  double points = 0;
  std::vector<ScoreOption> allowed_scores;
  std::string question;

  bool allows(double score) const;
};

struct Rubric {
  double total = 0;
  std::vector<RubricItem> items;

  double category_points(Category category) const;
};

// Validates ids, categories, positive points, allowed sets containing 0 and
// the full points, and sum(points) == total.
// Throws Error(MalformedRubric | TotalMismatch).
Rubric parse_rubric(std::string_view json_text);
Rubric load_rubric(const std::string& path);

struct ItemScore {
  std::string id;
  Category category = Category::Other;
  double awarded = 0;
  double points = 0;

  bool operator==(const ItemScore&) const = default;
};

struct CategoryScore {
  Category category = Category::Other;
  double awarded = 0;
  double points = 0;

  bool operator==(const CategoryScore&) const = default;
};

struct GradeBreakdown {
  std::vector<ItemScore> items;           // rubric item order
  std::vector<CategoryScore> categories;  // Who..Other, categories present only
  double total = 0;
  double rubric_total = 0;
  double percentage = 0;  // one decimal place

  bool operator==(const GradeBreakdown&) const = default;
  std::optional<CategoryScore> category(Category c) const;
};

// Rounds half away from zero to one decimal place.
double round1(double value);
// round1(100 * awarded / total).
double percentage_of(double awarded, double total);

// Builds a breakdown from per-item scores in rubric order.
// Throws Error(OffRubricValue | MissingItem).
GradeBreakdown make_breakdown(const Rubric& rubric, const std::vector<double>& awarded);

inline constexpr std::string_view kQuestionSystemPrompt =
    "Please read the report first, then answer the following questions.";
inline constexpr std::string_view kGradingSystemPrompt =
    "Please grade based on the given answers according to the following rubrics and return "
    "in JSON:";

// Stage one: system instruction, question list Q1..Qn as the assistant
// message, the report as the user message. Throws Error(InvalidRequest) on
// an empty report.
PromptBundle build_question_prompt(std::string_view report, const Rubric& rubric);
// Stage two: per-item scoring options verbatim from allowed_scores.
// Throws Error(InvalidRequest) on empty answers.
PromptBundle build_grading_prompt(std::string_view answers, const Rubric& rubric);

// Extracts the first JSON object in `text` (prose and code fences around it
// are tolerated) and maps "Qk" to item k.
// Throws Error(MalformedGrading | OffRubricValue | MissingItem).
GradeBreakdown parse_grade_response(std::string_view text, const Rubric& rubric);

struct GradeAudit {
  std::string answers;                    // stage-one output
  std::vector<std::string> grading_raw;  // stage-two outputs, one per attempt
  GradeBreakdown breakdown;

  bool operator==(const GradeAudit&) const = default;
};

// Two-stage LLM-as-judge grading, both calls at temperature 0. A malformed
// stage-two reply is retried once (stage two only) before MalformedGrading.
GradeAudit grade_report(std::string_view report, const Rubric& rubric, const Gateway& gateway,
                        const std::string& model = "gpt-4o");

// {"answers", "grading_raw": [...], "breakdown": {...}}
std::string grade_audit_to_json(const GradeAudit& audit);

}  // namespace spacesteer
