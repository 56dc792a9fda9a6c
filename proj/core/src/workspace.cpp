#include "spacesteer/workspace.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "json_io.hpp"
#include "spacesteer/error.hpp"

namespace spacesteer {

std::string_view to_string(ObjectRef::Kind kind) noexcept {
  switch (kind) {
    case ObjectRef::Kind::Document: return "document";
    case ObjectRef::Kind::Cluster: return "cluster";
    case ObjectRef::Kind::Text: return "text";
  }
  return "document";
}

const Document* Workspace::find_document(std::string_view id) const {
  auto it = std::find_if(documents.begin(), documents.end(),
                         [&](const Document& d) { return d.id == id; });
  return it == documents.end() ? nullptr : &*it;
}

const Cluster* Workspace::find_cluster(std::string_view id) const {
  auto it = std::find_if(clusters.begin(), clusters.end(),
                         [&](const Cluster& c) { return c.id == id; });
  return it == clusters.end() ? nullptr : &*it;
}

const Cluster* Workspace::cluster_of(std::string_view doc_id) const {
  for (const auto& c : clusters) {
    if (std::find(c.members.begin(), c.members.end(), doc_id) != c.members.end()) return &c;
  }
  return nullptr;
}

bool Workspace::is_relevant(std::string_view doc_id) const {
  return std::find(relevant.begin(), relevant.end(), doc_id) != relevant.end();
}

namespace {

bool has_highlight_text(const Workspace& w, std::string_view text) {
  return std::any_of(w.highlights.begin(), w.highlights.end(),
                     [&](const Highlight& h) { return h.text == text; });
}

bool resolves(const Workspace& w, const ObjectRef& ref) {
  switch (ref.kind) {
    case ObjectRef::Kind::Document: return w.find_document(ref.value) != nullptr;
    case ObjectRef::Kind::Cluster: return w.find_cluster(ref.value) != nullptr;
    case ObjectRef::Kind::Text: return has_highlight_text(w, ref.value);
  }
  return false;
}

std::string describe(const ObjectRef& ref) {
  return std::string(to_string(ref.kind)) + ":" + ref.value;
}

// Empty string when the span is valid for `w`, otherwise the broken rule.
std::string span_problem(const Workspace& w, const Highlight& h) {
  const Document* doc = w.find_document(h.doc_id);
  if (!doc) return "document '" + h.doc_id + "' does not exist";
  if (h.start >= h.end || h.end > doc->body.size()) {
    return "span [" + std::to_string(h.start) + "," + std::to_string(h.end) +
           ") outside body of length " + std::to_string(doc->body.size());
  }
  if (doc->body.compare(h.start, h.end - h.start, h.text) != 0) {
    return "text does not equal body[" + std::to_string(h.start) + ".." +
           std::to_string(h.end) + ")";
  }
  return {};
}

}  // namespace

std::vector<Violation> validate(const Workspace& w) {
  std::vector<Violation> out;
  auto add = [&](std::string entity, std::string rule) {
    out.push_back({std::move(entity), std::move(rule)});
  };

  if (w.version != kWorkspaceFormatVersion) {
    add("workspace", "version must be " + std::to_string(kWorkspaceFormatVersion));
  }

  std::set<std::string> doc_ids;
  for (std::size_t i = 0; i < w.documents.size(); ++i) {
    const auto& d = w.documents[i];
    const std::string entity = "document[" + std::to_string(i) + "]:" + d.id;
    if (d.id.empty()) add(entity, "id must be non-empty");
    if (!doc_ids.insert(d.id).second) add(entity, "duplicate document id");
    if (d.body.empty()) add(entity, "body must be non-empty");
  }

  std::set<std::string> cluster_ids;
  for (const auto& c : w.clusters) {
    const std::string entity = "cluster:" + c.id;
    if (c.id.empty()) add(entity, "id must be non-empty");
    if (!cluster_ids.insert(c.id).second) add(entity, "duplicate cluster id");
    if (doc_ids.count(c.id)) add(entity, "cluster id collides with a document id");
  }

  {
    std::set<std::string> seen;
    std::size_t last_pos = 0;
    bool ordered = true;
    for (const auto& id : w.relevant) {
      if (!seen.insert(id).second) {
        add("relevant:" + id, "listed twice");
        continue;
      }
      auto it = std::find_if(w.documents.begin(), w.documents.end(),
                             [&](const Document& d) { return d.id == id; });
      if (it == w.documents.end()) {
        add("relevant:" + id, "not a document id");
        continue;
      }
      const auto pos = static_cast<std::size_t>(it - w.documents.begin());
      if (pos < last_pos) ordered = false;
      last_pos = pos;
    }
    if (!ordered) add("relevant", "must follow document order");
  }

  for (std::size_t i = 0; i < w.highlights.size(); ++i) {
    if (auto problem = span_problem(w, w.highlights[i]); !problem.empty()) {
      add("highlight[" + std::to_string(i) + "]", problem);
    }
  }

  for (std::size_t i = 0; i < w.annotations.size(); ++i) {
    const auto& a = w.annotations[i];
    const std::string entity = "annotation[" + std::to_string(i) + "]";
    if (!w.find_document(a.target) && !w.find_cluster(a.target)) {
      add(entity, "target '" + a.target + "' does not resolve");
    }
    if (a.text.empty()) add(entity, "text must be non-empty");
  }

  std::map<std::string, std::string> owner;  // doc id -> first cluster id
  for (const auto& c : w.clusters) {
    std::set<std::string> members;
    for (const auto& m : c.members) {
      if (!w.find_document(m)) {
        add("cluster:" + c.id, "member '" + m + "' does not resolve");
        continue;
      }
      if (!members.insert(m).second) {
        add("cluster:" + c.id, "member '" + m + "' listed twice");
        continue;
      }
      auto [it, inserted] = owner.emplace(m, c.id);
      if (!inserted) {
        add("cluster:" + it->second + ",cluster:" + c.id,
            "document '" + m + "' belongs to more than one cluster");
      }
    }
  }

  for (std::size_t i = 0; i < w.connections.size(); ++i) {
    const auto& c = w.connections[i];
    const std::string entity = "connection[" + std::to_string(i) + "]";
    if (c.source == c.target) add(entity, "source equals target");
    if (!resolves(w, c.source)) add(entity, describe(c.source) + " does not resolve");
    if (!resolves(w, c.target)) add(entity, describe(c.target) + " does not resolve");
  }

  return out;
}

std::string_view edit_name(const WorkspaceEdit& edit) {
  static constexpr std::string_view kNames[] = {
      "AddDocument",     "SetRelevance",     "AddHighlight",    "RemoveHighlight",
      "AddAnnotation",   "RemoveAnnotation", "CreateCluster",   "RenameCluster",
      "AssignToCluster", "RemoveFromCluster", "AddConnection",  "RemoveConnection"};
  static_assert(std::size(kNames) == std::variant_size_v<WorkspaceEdit>);
  return kNames[edit.index()];
}

namespace {

[[noreturn]] void reject(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

Cluster& cluster_ref(Workspace& w, const std::string& id) {
  auto it = std::find_if(w.clusters.begin(), w.clusters.end(),
                         [&](const Cluster& c) { return c.id == id; });
  if (it == w.clusters.end()) {
    reject(ErrorCode::UnresolvedReference, "cluster '" + id + "' does not exist");
  }
  return *it;
}

void require_document(const Workspace& w, const std::string& id) {
  if (!w.find_document(id)) {
    reject(ErrorCode::UnresolvedReference, "document '" + id + "' does not exist");
  }
}

template <typename T>
void erase_at(std::vector<T>& items, std::size_t index, std::string_view what) {
  if (index >= items.size()) {
    reject(ErrorCode::InvalidEdit,
           std::string(what) + " index " + std::to_string(index) + " out of range");
  }
  items.erase(items.begin() + static_cast<std::ptrdiff_t>(index));
}

struct EditApplier {
  Workspace& w;

  void operator()(const edit::AddDocument& e) {
    if (e.document.id.empty()) reject(ErrorCode::InvalidEdit, "document id must be non-empty");
    if (e.document.body.empty()) reject(ErrorCode::InvalidEdit, "document body must be non-empty");
    if (w.find_document(e.document.id) || w.find_cluster(e.document.id)) {
      reject(ErrorCode::InvalidEdit, "id '" + e.document.id + "' already in use");
    }
    w.documents.push_back(e.document);
  }

  void operator()(const edit::SetRelevance& e) {
    require_document(w, e.doc_id);
    std::vector<std::string> relevant;
    for (const auto& d : w.documents) {
      const bool flagged = d.id == e.doc_id ? e.relevant : w.is_relevant(d.id);
      if (flagged) relevant.push_back(d.id);
    }
    w.relevant = std::move(relevant);
  }

  void operator()(const edit::AddHighlight& e) {
    require_document(w, e.highlight.doc_id);
    if (auto problem = span_problem(w, e.highlight); !problem.empty()) {
      reject(ErrorCode::SpanOutOfRange, "highlight on '" + e.highlight.doc_id + "': " + problem);
    }
    w.highlights.push_back(e.highlight);
  }

  void operator()(const edit::RemoveHighlight& e) { erase_at(w.highlights, e.index, "highlight"); }

  void operator()(const edit::AddAnnotation& e) {
    if (!w.find_document(e.annotation.target) && !w.find_cluster(e.annotation.target)) {
      reject(ErrorCode::UnresolvedReference,
             "annotation target '" + e.annotation.target + "' does not exist");
    }
    if (e.annotation.text.empty()) reject(ErrorCode::InvalidEdit, "annotation text is empty");
    w.annotations.push_back(e.annotation);
  }

  void operator()(const edit::RemoveAnnotation& e) {
    erase_at(w.annotations, e.index, "annotation");
  }

  void operator()(const edit::CreateCluster& e) {
    if (e.id.empty()) reject(ErrorCode::InvalidEdit, "cluster id must be non-empty");
    if (w.find_cluster(e.id) || w.find_document(e.id)) {
      reject(ErrorCode::InvalidEdit, "id '" + e.id + "' already in use");
    }
    w.clusters.push_back(Cluster{e.id, e.name, {}});
  }

  void operator()(const edit::RenameCluster& e) { cluster_ref(w, e.id).name = e.name; }

  void operator()(const edit::AssignToCluster& e) {
    Cluster& target = cluster_ref(w, e.cluster_id);
    require_document(w, e.doc_id);
    if (const Cluster* current = w.cluster_of(e.doc_id)) {
      if (current->id == e.cluster_id) {
        reject(ErrorCode::InvalidEdit,
               "document '" + e.doc_id + "' is already in cluster '" + e.cluster_id + "'");
      }
      reject(ErrorCode::DuplicateMembership, "document '" + e.doc_id +
                                                 "' already belongs to cluster '" +
                                                 current->id + "'");
    }
    target.members.push_back(e.doc_id);
  }

  void operator()(const edit::RemoveFromCluster& e) {
    Cluster& c = cluster_ref(w, e.cluster_id);
    require_document(w, e.doc_id);
    auto it = std::find(c.members.begin(), c.members.end(), e.doc_id);
    if (it == c.members.end()) {
      reject(ErrorCode::InvalidEdit,
             "document '" + e.doc_id + "' is not in cluster '" + e.cluster_id + "'");
    }
    c.members.erase(it);
  }

  void operator()(const edit::AddConnection& e) {
    for (const auto* end : {&e.connection.source, &e.connection.target}) {
      if (!resolves(w, *end)) {
        reject(ErrorCode::UnresolvedReference, describe(*end) + " does not exist");
      }
    }
    if (e.connection.source == e.connection.target) {
      reject(ErrorCode::InvalidEdit, "connection source equals target");
    }
    w.connections.push_back(e.connection);
  }

  void operator()(const edit::RemoveConnection& e) {
    erase_at(w.connections, e.index, "connection");
  }
};

}  // namespace

Workspace apply_edit(const Workspace& workspace, const WorkspaceEdit& edit) {
  Workspace next = workspace;
  std::visit(EditApplier{next}, edit);
  // Catches knock-on breakage, e.g. removing the last highlight a text
  // connection endpoint depends on.
  if (auto violations = validate(next); !violations.empty()) {
    reject(ErrorCode::InvalidEdit, std::string(edit_name(edit)) + " would leave " +
                                       violations.front().entity + " invalid: " +
                                       violations.front().rule);
  }
  return next;
}

std::vector<Document> relevant_documents(const Workspace& workspace) {
  std::vector<Document> out;
  for (const auto& d : workspace.documents) {
    if (workspace.is_relevant(d.id)) out.push_back(d);
  }
  return out;
}

std::string serialize(const Workspace& workspace) {
  if (auto violations = validate(workspace); !violations.empty()) {
    throw Error(ErrorCode::InvalidWorkspace, "cannot serialize invalid workspace: " +
                                                 violations.front().entity + ": " +
                                                 violations.front().rule);
  }
  return detail::dump(detail::to_json(workspace), 2) + "\n";
}

Workspace deserialize(std::string_view bytes) {
  detail::json j;
  try {
    j = detail::json::parse(bytes.begin(), bytes.end());
  } catch (const detail::json::parse_error& e) {
    throw Error(ErrorCode::MalformedFile, std::string("workspace is not valid JSON: ") + e.what());
  }
  return detail::workspace_from_json(j);
}

Workspace load_workspace(const std::string& path) { return deserialize(detail::read_file(path)); }

void save_workspace(const Workspace& workspace, const std::string& path) {
  detail::write_file_atomic(path, serialize(workspace));
}

}  // namespace spacesteer
