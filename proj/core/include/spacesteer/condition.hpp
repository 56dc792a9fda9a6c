#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace spacesteer {

// Which workspace layers enter the prompt.
struct FeatureFlags {
  bool filtering = false;
  bool clustering = false;
  bool cluster_names = false;
  bool highlights = false;
  bool annotations = false;
  bool connections = false;

  bool operator==(const FeatureFlags&) const = default;

  // True when every flag set here is also set in `other`.
  bool subset_of(const FeatureFlags& other) const;
};

struct Condition {
  std::string name;
  FeatureFlags flags;

  bool operator==(const Condition&) const = default;
};

// Empty when valid; otherwise the broken rule (clustering needs filtering,
// cluster names need clustering).
std::string condition_problem(const Condition& condition);
// Throws Error(InvalidCondition).
void require_valid(const Condition& condition);

// The ablation presets E1..E11 in order.
const std::vector<Condition>& condition_presets();
std::optional<Condition> find_preset(std::string_view name);
// Preset lookup that throws Error(UnknownCondition).
Condition preset(std::string_view name);

}  // namespace spacesteer
