#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace spacesteer {

inline constexpr int kWorkspaceFormatVersion = 1;

struct Document {
  std::string id;
  std::optional<std::string> title;
  std::string body;

  bool operator==(const Document&) const = default;
};

// Half-open character range [start, end) into a document body; `text` is the
// covered substring. Repeated highlights of the same text are distinct acts.
struct Highlight {
  std::string doc_id;
  std::size_t start = 0;
  std::size_t end = 0;
  std::string text;

  bool operator==(const Highlight&) const = default;
};

// `target` names a document or a cluster; the two id spaces are disjoint.
struct Annotation {
  std::string target;
  std::string text;

  bool operator==(const Annotation&) const = default;
};

struct Cluster {
  std::string id;
  std::optional<std::string> name;
  std::vector<std::string> members;

  bool operator==(const Cluster&) const = default;
};

// Endpoint of a connection. Text endpoints must match the text of an existing
// highlight.
struct ObjectRef {
  enum class Kind { Document, Cluster, Text };

  Kind kind = Kind::Document;
  std::string value;

  static ObjectRef document(std::string id) { return {Kind::Document, std::move(id)}; }
  static ObjectRef cluster(std::string id) { return {Kind::Cluster, std::move(id)}; }
  static ObjectRef text(std::string t) { return {Kind::Text, std::move(t)}; }

  bool operator==(const ObjectRef&) const = default;
};

std::string_view to_string(ObjectRef::Kind kind) noexcept;

struct Connection {
  ObjectRef source;
  ObjectRef target;
  std::optional<std::string> label;

  bool operator==(const Connection&) const = default;
};

// The intermediate workspace: documents plus the four representation layers.
// All lists keep creation order; `relevant` is kept in document order.
struct Workspace {
  int version = kWorkspaceFormatVersion;
  std::vector<Document> documents;
  std::vector<std::string> relevant;
  std::vector<Highlight> highlights;
  std::vector<Annotation> annotations;
  std::vector<Cluster> clusters;
  std::vector<Connection> connections;

  bool operator==(const Workspace&) const = default;

  const Document* find_document(std::string_view id) const;
  const Cluster* find_cluster(std::string_view id) const;
  // Cluster containing `doc_id`, if any.
  const Cluster* cluster_of(std::string_view doc_id) const;
  bool is_relevant(std::string_view doc_id) const;
};

struct Violation {
  std::string entity;  // e.g. "highlight[3]", "cluster:NYSE"
  std::string rule;

  bool operator==(const Violation&) const = default;
};

std::vector<Violation> validate(const Workspace& workspace);

namespace edit {

struct AddDocument { Document document; };
struct SetRelevance { std::string doc_id; bool relevant = true; };
struct AddHighlight { Highlight highlight; };
struct RemoveHighlight { std::size_t index = 0; };
struct AddAnnotation { Annotation annotation; };
struct RemoveAnnotation { std::size_t index = 0; };
struct CreateCluster { std::string id; std::optional<std::string> name; };
struct RenameCluster { std::string id; std::optional<std::string> name; };
struct AssignToCluster { std::string cluster_id; std::string doc_id; };
struct RemoveFromCluster { std::string cluster_id; std::string doc_id; };
struct AddConnection { Connection connection; };
struct RemoveConnection { std::size_t index = 0; };

}  // namespace edit

using WorkspaceEdit =
    std::variant<edit::AddDocument, edit::SetRelevance, edit::AddHighlight,
                 edit::RemoveHighlight, edit::AddAnnotation, edit::RemoveAnnotation,
                 edit::CreateCluster, edit::RenameCluster, edit::AssignToCluster,
                 edit::RemoveFromCluster, edit::AddConnection, edit::RemoveConnection>;

std::string_view edit_name(const WorkspaceEdit& edit);

// Returns a new workspace with `edit` applied. Throws Error
// (UnresolvedReference, DuplicateMembership, SpanOutOfRange, InvalidEdit);
// the input is never modified.
Workspace apply_edit(const Workspace& workspace, const WorkspaceEdit& edit);

std::vector<Document> relevant_documents(const Workspace& workspace);

// Canonical UTF-8 JSON: sorted object keys, order-preserving arrays, 2-space
// indent, trailing newline. Throws Error(InvalidWorkspace) if `workspace` is invalid.
std::string serialize(const Workspace& workspace);
// Throws Error(MalformedFile | UnsupportedVersion).
Workspace deserialize(std::string_view bytes);

Workspace load_workspace(const std::string& path);
void save_workspace(const Workspace& workspace, const std::string& path);

}  // namespace spacesteer
