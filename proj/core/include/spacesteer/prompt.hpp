#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "spacesteer/condition.hpp"
#include "spacesteer/workspace.hpp"

namespace spacesteer {

enum class Role { System, Assistant, User };

std::string_view to_string(Role role) noexcept;

struct ChatMessage {
  Role role = Role::User;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

// ---------------------------------------------------------------------------
// Per-layer compilation. All outputs keep workspace creation order.

enum class WeightMethod {
  Flat,             // text -> weight
  ClusterEmbedded,  // cluster id -> (text -> weight)
};

inline constexpr std::string_view kUnclusteredKey = "_unclustered";

using WeightList = std::vector<std::pair<std::string, int>>;

// Highlight frequencies. Exactly one of `flat` / `by_cluster` is populated,
// according to `method`. Every weight is >= 1.
struct TextWeights {
  WeightMethod method = WeightMethod::Flat;
  WeightList flat;
  std::vector<std::pair<std::string, WeightList>> by_cluster;

  bool empty() const;
  // Sum of all weights; equals the number of highlights compiled.
  int total() const;

  bool operator==(const TextWeights&) const = default;
};

// Throws Error(NoClusters) for ClusterEmbedded on a clusterless workspace.
TextWeights compile_text_level(const Workspace& workspace, WeightMethod method);

struct InsightEntry {
  std::string node;
  std::string annotation;

  bool operator==(const InsightEntry&) const = default;
};

std::vector<InsightEntry> compile_insight_level(const Workspace& workspace);

struct ClusterSection {
  std::string key;  // cluster name, or "cluster_<k>" (1-based creation index)
  std::vector<std::pair<std::string, std::string>> documents;  // id -> body

  bool operator==(const ClusterSection&) const = default;
};

// Empty clusters are skipped. Throws Error(NoClusters) when no cluster has
// members.
std::vector<ClusterSection> compile_structure_level(const Workspace& workspace,
                                                    bool use_names);

struct ConnectionTriple {
  std::string source;
  std::string target;
  std::string label;

  bool operator==(const ConnectionTriple&) const = default;
};

std::vector<ConnectionTriple> compile_connections(const Workspace& workspace);

// ---------------------------------------------------------------------------
// Prompt assembly.

struct PromptTemplate {
  std::string system;
  std::string assistant;
  struct LeadIns {
    std::string annotations;
    std::string highlights;
    std::string connections;
  } lead_in;
  // Overrides the default weight method (cluster-embedded when clustering).
  std::optional<WeightMethod> highlight_method;
};

// Template file: {system, assistant, lead_in: {annotations, highlights,
// connections}, highlight_method?: "flat" | "cluster_embedded"}.
// Throws Error(MalformedTemplate).
PromptTemplate parse_prompt_template(std::string_view json_text);
PromptTemplate load_prompt_template(const std::string& path);

enum class Section {
  Documents,          // every document, keyed by id
  FilteredDocuments,  // relevant documents only
  Clusters,           // structure-level map
  ClusterNames,       // structure keys are human cluster names
  Annotations,
  Highlights,
  Connections,
};

std::string_view to_string(Section section) noexcept;

struct PromptBundle {
  // system, assistant, user part I, then user part II when any
  // representation section is enabled.
  std::vector<ChatMessage> messages;
  std::vector<Section> manifest;

  bool has(Section section) const;
  bool operator==(const PromptBundle&) const = default;
};

// Throws Error(InvalidCondition | MissingLayer | NoClusters).
PromptBundle assemble_prompt(const Workspace& workspace, const Condition& condition,
                             const PromptTemplate& prompt_template);

// Standard chat-completion message array, compact JSON.
std::string to_wire_json(const std::vector<ChatMessage>& messages);
std::vector<ChatMessage> messages_from_wire_json(std::string_view json_text);
// SHA-256 of the wire JSON; what a run records as its prompt digest.
std::string prompt_digest(const std::vector<ChatMessage>& messages);

// {"digest", "manifest": [...], "messages": [...]}, pretty-printed.
std::string bundle_to_json(const PromptBundle& bundle);

}  // namespace spacesteer
