#include "spacesteer/condition.hpp"

#include <algorithm>

#include "spacesteer/error.hpp"

namespace spacesteer {

bool FeatureFlags::subset_of(const FeatureFlags& o) const {
  auto implies = [](bool a, bool b) { return !a || b; };
  return implies(filtering, o.filtering) && implies(clustering, o.clustering) &&
         implies(cluster_names, o.cluster_names) && implies(highlights, o.highlights) &&
         implies(annotations, o.annotations) && implies(connections, o.connections);
}

std::string condition_problem(const Condition& c) {
  if (c.name.empty()) return "condition name must be non-empty";
  if (c.flags.clustering && !c.flags.filtering) return "clustering requires filtering";
  if (c.flags.cluster_names && !c.flags.clustering) return "cluster_names requires clustering";
  return {};
}

void require_valid(const Condition& c) {
  if (auto problem = condition_problem(c); !problem.empty()) {
    throw Error(ErrorCode::InvalidCondition, "condition '" + c.name + "': " + problem);
  }
}

const std::vector<Condition>& condition_presets() {
  static const std::vector<Condition> kPresets = [] {
    auto make = [](std::string name, FeatureFlags f) { return Condition{std::move(name), f}; };
    FeatureFlags none{};
    FeatureFlags filtered{.filtering = true};
    FeatureFlags clustered{.filtering = true, .clustering = true};
    return std::vector<Condition>{
        make("E1", none),
        make("E2", filtered),
        make("E3", clustered),
        make("E4", {.highlights = true}),
        make("E5", {.annotations = true}),
        make("E6", {.connections = true}),
        make("E7", {.filtering = true, .clustering = true, .highlights = true}),
        make("E8", {.filtering = true, .clustering = true, .annotations = true}),
        make("E9", {.filtering = true, .clustering = true, .connections = true}),
        make("E10", {.filtering = true, .clustering = true, .cluster_names = true}),
        // Everything except connections.
        make("E11", {.filtering = true,
                     .clustering = true,
                     .cluster_names = true,
                     .highlights = true,
                     .annotations = true}),
    };
  }();
  return kPresets;
}

std::optional<Condition> find_preset(std::string_view name) {
  const auto& presets = condition_presets();
  auto it = std::find_if(presets.begin(), presets.end(),
                         [&](const Condition& c) { return c.name == name; });
  if (it == presets.end()) return std::nullopt;
  return *it;
}

Condition preset(std::string_view name) {
  if (auto c = find_preset(name)) return *c;
  throw Error(ErrorCode::UnknownCondition, "unknown condition '" + std::string(name) + "'");
}

}  // namespace spacesteer
