#include "json_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "spacesteer/error.hpp"

namespace spacesteer::detail {

namespace fs = std::filesystem;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::MalformedFile, "cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const fs::path& path, std::string_view bytes) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::PersistenceFailure, "cannot write " + tmp.string());
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      throw Error(ErrorCode::PersistenceFailure, "short write to " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    throw Error(ErrorCode::PersistenceFailure,
                "cannot replace " + path.string() + ": " + ec.message());
  }
}

std::string format_number(double value) {
  if (value == 0.0) return "0";  // also folds -0
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
  if (ec != std::errc{}) return std::to_string(value);
  return std::string(buf, end);
}

std::string dump(const json& value, int indent) {
  return value.dump(indent, ' ', false, json::error_handler_t::replace);
}

std::string dump(const ordered_json& value, int indent) {
  return value.dump(indent, ' ', false, ordered_json::error_handler_t::replace);
}

namespace {

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::MalformedFile, "malformed workspace: " + what);
}

ObjectRef::Kind kind_from_string(const std::string& s) {
  if (s == "document") return ObjectRef::Kind::Document;
  if (s == "cluster") return ObjectRef::Kind::Cluster;
  if (s == "text") return ObjectRef::Kind::Text;
  throw Error(ErrorCode::MalformedFile, "unknown object kind '" + s + "'");
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) {
    return it->get<std::string>();
  }
  return std::nullopt;
}

Document document_from_json(const json& j) {
  return Document{j.at("id").get<std::string>(), optional_string(j, "title"),
                  j.at("body").get<std::string>()};
}

json document_to_json(const Document& d) {
  json j{{"id", d.id}, {"body", d.body}};
  if (d.title) j["title"] = *d.title;
  return j;
}

Connection connection_from_json(const json& j) {
  return Connection{object_ref_from_json(j.at("source")),
                    object_ref_from_json(j.at("target")), optional_string(j, "label")};
}

json connection_to_json(const Connection& c) {
  json j{{"source", to_json(c.source)}, {"target", to_json(c.target)}};
  if (c.label) j["label"] = *c.label;
  return j;
}

}  // namespace

json to_json(const ObjectRef& ref) {
  return json{{"kind", std::string(to_string(ref.kind))}, {"value", ref.value}};
}

ObjectRef object_ref_from_json(const json& j) {
  return ObjectRef{kind_from_string(j.at("kind").get<std::string>()),
                   j.at("value").get<std::string>()};
}

json to_json(const Workspace& w) {
  json docs = json::array();
  for (const auto& d : w.documents) docs.push_back(document_to_json(d));

  json highlights = json::array();
  for (const auto& h : w.highlights) {
    highlights.push_back(
        {{"doc_id", h.doc_id}, {"start", h.start}, {"end", h.end}, {"text", h.text}});
  }

  json annotations = json::array();
  for (const auto& a : w.annotations) {
    annotations.push_back({{"target", a.target}, {"text", a.text}});
  }

  json clusters = json::array();
  for (const auto& c : w.clusters) {
    json cj{{"id", c.id}, {"members", c.members}};
    if (c.name) cj["name"] = *c.name;
    clusters.push_back(std::move(cj));
  }

  json connections = json::array();
  for (const auto& c : w.connections) connections.push_back(connection_to_json(c));

  return json{{"version", w.version},         {"documents", std::move(docs)},
              {"relevant", w.relevant},       {"highlights", std::move(highlights)},
              {"annotations", std::move(annotations)},
              {"clusters", std::move(clusters)},
              {"connections", std::move(connections)}};
}

Workspace workspace_from_json(const json& j) {
  if (!j.is_object()) malformed("top level is not an object");
  if (!j.contains("version")) malformed("missing version");
  if (!j.at("version").is_number_integer()) malformed("version is not an integer");
  const int version = j.at("version").get<int>();
  if (version != kWorkspaceFormatVersion) {
    throw Error(ErrorCode::UnsupportedVersion,
                "unsupported workspace version " + std::to_string(version));
  }
  try {
    Workspace w;
    w.version = version;
    for (const auto& d : j.at("documents")) w.documents.push_back(document_from_json(d));
    w.relevant = j.at("relevant").get<std::vector<std::string>>();
    for (const auto& h : j.at("highlights")) {
      w.highlights.push_back(Highlight{h.at("doc_id").get<std::string>(),
                                       h.at("start").get<std::size_t>(),
                                       h.at("end").get<std::size_t>(),
                                       h.at("text").get<std::string>()});
    }
    for (const auto& a : j.at("annotations")) {
      w.annotations.push_back(
          Annotation{a.at("target").get<std::string>(), a.at("text").get<std::string>()});
    }
    for (const auto& c : j.at("clusters")) {
      w.clusters.push_back(Cluster{c.at("id").get<std::string>(), optional_string(c, "name"),
                                   c.at("members").get<std::vector<std::string>>()});
    }
    for (const auto& c : j.at("connections")) {
      w.connections.push_back(connection_from_json(c));
    }
    return w;
  } catch (const json::exception& e) {
    malformed(e.what());
  }
}

json to_json(const WorkspaceEdit& edit) {
  json j = std::visit(
      [](const auto& e) -> json {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, edit::AddDocument>) {
          return {{"document", document_to_json(e.document)}};
        } else if constexpr (std::is_same_v<T, edit::SetRelevance>) {
          return {{"document", e.doc_id}, {"relevant", e.relevant}};
        } else if constexpr (std::is_same_v<T, edit::AddHighlight>) {
          return {{"document", e.highlight.doc_id},
                  {"start", e.highlight.start},
                  {"end", e.highlight.end},
                  {"text", e.highlight.text}};
        } else if constexpr (std::is_same_v<T, edit::AddAnnotation>) {
          return {{"target", e.annotation.target}, {"text", e.annotation.text}};
        } else if constexpr (std::is_same_v<T, edit::CreateCluster> ||
                             std::is_same_v<T, edit::RenameCluster>) {
          json out{{"cluster", e.id}};
          if (e.name) out["name"] = *e.name;
          return out;
        } else if constexpr (std::is_same_v<T, edit::AssignToCluster> ||
                             std::is_same_v<T, edit::RemoveFromCluster>) {
          return {{"cluster", e.cluster_id}, {"document", e.doc_id}};
        } else if constexpr (std::is_same_v<T, edit::AddConnection>) {
          return connection_to_json(e.connection);
        } else {
          return {{"index", e.index}};
        }
      },
      edit);
  j["type"] = std::string(edit_name(edit));
  return j;
}

WorkspaceEdit edit_from_json(const json& j) {
  try {
    const auto type = j.at("type").get<std::string>();
    auto str = [&](const char* key) { return j.at(key).get<std::string>(); };
    auto index = [&] { return j.at("index").get<std::size_t>(); };
    if (type == "AddDocument") return edit::AddDocument{document_from_json(j.at("document"))};
    if (type == "SetRelevance") {
      return edit::SetRelevance{str("document"), j.value("relevant", true)};
    }
    if (type == "AddHighlight") {
      return edit::AddHighlight{Highlight{str("document"), j.at("start").get<std::size_t>(),
                                          j.at("end").get<std::size_t>(), str("text")}};
    }
    if (type == "RemoveHighlight") return edit::RemoveHighlight{index()};
    if (type == "AddAnnotation") return edit::AddAnnotation{{str("target"), str("text")}};
    if (type == "RemoveAnnotation") return edit::RemoveAnnotation{index()};
    if (type == "CreateCluster") {
      return edit::CreateCluster{str("cluster"), optional_string(j, "name")};
    }
    if (type == "RenameCluster") {
      return edit::RenameCluster{str("cluster"), optional_string(j, "name")};
    }
    if (type == "AssignToCluster") return edit::AssignToCluster{str("cluster"), str("document")};
    if (type == "RemoveFromCluster") {
      return edit::RemoveFromCluster{str("cluster"), str("document")};
    }
    if (type == "AddConnection") return edit::AddConnection{connection_from_json(j)};
    if (type == "RemoveConnection") return edit::RemoveConnection{index()};
    throw Error(ErrorCode::InvalidEdit, "unknown edit type '" + type + "'");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidEdit, std::string("malformed edit: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedFile) throw Error(ErrorCode::InvalidEdit, e.what());
    throw;
  }
}

json to_json(const Violation& v) { return json{{"entity", v.entity}, {"rule", v.rule}}; }

}  // namespace spacesteer::detail
