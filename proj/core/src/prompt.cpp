#include "spacesteer/prompt.hpp"

#include <algorithm>
#include <set>

#include "json_io.hpp"
#include "spacesteer/digest.hpp"
#include "spacesteer/error.hpp"

namespace spacesteer {

using detail::json;
using detail::ordered_json;

std::string_view to_string(Role role) noexcept {
  switch (role) {
    case Role::System: return "system";
    case Role::Assistant: return "assistant";
    case Role::User: return "user";
  }
  return "user";
}

std::string_view to_string(Section section) noexcept {
  switch (section) {
    case Section::Documents: return "documents";
    case Section::FilteredDocuments: return "filtered_documents";
    case Section::Clusters: return "clusters";
    case Section::ClusterNames: return "cluster_names";
    case Section::Annotations: return "annotations";
    case Section::Highlights: return "highlights";
    case Section::Connections: return "connections";
  }
  return "documents";
}

bool TextWeights::empty() const { return flat.empty() && by_cluster.empty(); }

int TextWeights::total() const {
  int sum = 0;
  for (const auto& [text, w] : flat) sum += w;
  for (const auto& [key, list] : by_cluster) {
    for (const auto& [text, w] : list) sum += w;
  }
  return sum;
}

namespace {

void tally(WeightList& list, const std::string& text) {
  auto it = std::find_if(list.begin(), list.end(),
                         [&](const auto& entry) { return entry.first == text; });
  if (it == list.end()) {
    list.emplace_back(text, 1);
  } else {
    ++it->second;
  }
}

bool has_nonempty_cluster(const Workspace& w) {
  return std::any_of(w.clusters.begin(), w.clusters.end(),
                     [](const Cluster& c) { return !c.members.empty(); });
}

}  // namespace

TextWeights compile_text_level(const Workspace& w, WeightMethod method) {
  TextWeights out;
  out.method = method;
  if (method == WeightMethod::Flat) {
    for (const auto& h : w.highlights) tally(out.flat, h.text);
    return out;
  }
  if (w.clusters.empty()) {
    throw Error(ErrorCode::NoClusters, "cluster-embedded weights need at least one cluster");
  }
  std::vector<std::pair<std::string, WeightList>> per_cluster;
  for (const auto& c : w.clusters) per_cluster.emplace_back(c.id, WeightList{});
  WeightList unclustered;
  for (const auto& h : w.highlights) {
    if (const Cluster* c = w.cluster_of(h.doc_id)) {
      auto it = std::find_if(per_cluster.begin(), per_cluster.end(),
                             [&](const auto& entry) { return entry.first == c->id; });
      tally(it->second, h.text);
    } else {
      tally(unclustered, h.text);
    }
  }
  for (auto& entry : per_cluster) {
    if (!entry.second.empty()) out.by_cluster.push_back(std::move(entry));
  }
  if (!unclustered.empty()) {
    out.by_cluster.emplace_back(std::string(kUnclusteredKey), std::move(unclustered));
  }
  return out;
}

std::vector<InsightEntry> compile_insight_level(const Workspace& w) {
  std::vector<InsightEntry> out;
  out.reserve(w.annotations.size());
  for (const auto& a : w.annotations) out.push_back({a.target, a.text});
  return out;
}

std::vector<ClusterSection> compile_structure_level(const Workspace& w, bool use_names) {
  if (!has_nonempty_cluster(w)) {
    throw Error(ErrorCode::NoClusters, "workspace has no non-empty clusters");
  }
  std::vector<ClusterSection> out;
  std::set<std::string> used_keys;
  for (std::size_t i = 0; i < w.clusters.size(); ++i) {
    const Cluster& c = w.clusters[i];
    if (c.members.empty()) continue;
    const std::string synthetic = "cluster_" + std::to_string(i + 1);
    std::string key = (use_names && c.name && !c.name->empty()) ? *c.name : synthetic;
    // Two clusters sharing a name would collapse into one JSON key.
    if (!used_keys.insert(key).second) {
      key += " (" + synthetic + ")";
      used_keys.insert(key);
    }
    ClusterSection section{std::move(key), {}};
    for (const auto& member : c.members) {
      section.documents.emplace_back(member, w.find_document(member)->body);
    }
    out.push_back(std::move(section));
  }
  return out;
}

std::vector<ConnectionTriple> compile_connections(const Workspace& w) {
  std::vector<ConnectionTriple> out;
  out.reserve(w.connections.size());
  for (const auto& c : w.connections) {
    out.push_back({c.source.value, c.target.value, c.label.value_or("")});
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void bad_template(const std::string& what) {
  throw Error(ErrorCode::MalformedTemplate, "prompt template: " + what);
}

std::optional<WeightMethod> weight_method_from_string(const std::string& s) {
  if (s == "flat") return WeightMethod::Flat;
  if (s == "cluster_embedded") return WeightMethod::ClusterEmbedded;
  return std::nullopt;
}

}  // namespace

PromptTemplate parse_prompt_template(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    bad_template(e.what());
  }
  try {
    PromptTemplate t;
    t.system = j.at("system").get<std::string>();
    t.assistant = j.at("assistant").get<std::string>();
    const auto& lead = j.at("lead_in");
    t.lead_in.annotations = lead.at("annotations").get<std::string>();
    t.lead_in.highlights = lead.at("highlights").get<std::string>();
    t.lead_in.connections = lead.at("connections").get<std::string>();
    if (auto it = j.find("highlight_method"); it != j.end()) {
      t.highlight_method = weight_method_from_string(it->get<std::string>());
      if (!t.highlight_method) bad_template("unknown highlight_method");
    }
    return t;
  } catch (const json::exception& e) {
    bad_template(e.what());
  }
}

PromptTemplate load_prompt_template(const std::string& path) {
  try {
    return parse_prompt_template(detail::read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedFile) throw Error(ErrorCode::MalformedTemplate, e.what());
    throw;
  }
}

bool PromptBundle::has(Section section) const {
  return std::find(manifest.begin(), manifest.end(), section) != manifest.end();
}

namespace {

constexpr int kIndent = 2;

std::string render_documents(const std::vector<const Document*>& docs) {
  ordered_json j = ordered_json::object();
  for (const Document* d : docs) j[d->id] = d->body;
  return detail::dump(j, kIndent);
}

std::string render_structure(const std::vector<ClusterSection>& sections) {
  ordered_json j = ordered_json::object();
  for (const auto& s : sections) {
    ordered_json docs = ordered_json::object();
    for (const auto& [id, body] : s.documents) docs[id] = body;
    j[s.key] = std::move(docs);
  }
  return detail::dump(j, kIndent);
}

std::string render_insights(const std::vector<InsightEntry>& entries) {
  ordered_json j = ordered_json::array();
  for (const auto& e : entries) {
    j.push_back(ordered_json{{"node", e.node}, {"annotation", e.annotation}});
  }
  return detail::dump(j, kIndent);
}

ordered_json weight_object(const WeightList& list) {
  ordered_json j = ordered_json::object();
  for (const auto& [text, weight] : list) j[text] = weight;
  return j;
}

std::string render_weights(const TextWeights& weights) {
  if (weights.method == WeightMethod::Flat) return detail::dump(weight_object(weights.flat), kIndent);
  ordered_json j = ordered_json::object();
  for (const auto& [key, list] : weights.by_cluster) j[key] = weight_object(list);
  return detail::dump(j, kIndent);
}

std::string render_connections(const std::vector<ConnectionTriple>& triples) {
  ordered_json j = ordered_json::array();
  for (const auto& t : triples) j.push_back(ordered_json::array({t.source, t.target, t.label}));
  return detail::dump(j, kIndent);
}

[[noreturn]] void missing_layer(const Condition& c, std::string_view layer) {
  throw Error(ErrorCode::MissingLayer, "condition '" + c.name + "' enables " +
                                           std::string(layer) + " but the workspace has none");
}

}  // namespace

PromptBundle assemble_prompt(const Workspace& w, const Condition& condition,
                             const PromptTemplate& tmpl) {
  require_valid(condition);
  const FeatureFlags& f = condition.flags;

  if (f.filtering && w.relevant.empty()) missing_layer(condition, "filtering");
  if (f.highlights && w.highlights.empty()) missing_layer(condition, "highlights");
  if (f.annotations && w.annotations.empty()) missing_layer(condition, "annotations");
  if (f.connections && w.connections.empty()) missing_layer(condition, "connections");

  PromptBundle bundle;
  bundle.messages.push_back({Role::System, tmpl.system});
  bundle.messages.push_back({Role::Assistant, tmpl.assistant});

  if (f.clustering) {
    bundle.messages.push_back(
        {Role::User, render_structure(compile_structure_level(w, f.cluster_names))});
    bundle.manifest.push_back(Section::Clusters);
    if (f.cluster_names) bundle.manifest.push_back(Section::ClusterNames);
  } else {
    std::vector<const Document*> docs;
    for (const auto& d : w.documents) {
      if (!f.filtering || w.is_relevant(d.id)) docs.push_back(&d);
    }
    bundle.messages.push_back({Role::User, render_documents(docs)});
    bundle.manifest.push_back(f.filtering ? Section::FilteredDocuments : Section::Documents);
  }

  std::vector<std::string> part_two;
  auto section = [&](const std::string& lead_in, const std::string& body) {
    part_two.push_back(lead_in.empty() ? body : lead_in + "\n\n" + body);
  };
  if (f.annotations) {
    section(tmpl.lead_in.annotations, render_insights(compile_insight_level(w)));
    bundle.manifest.push_back(Section::Annotations);
  }
  if (f.highlights) {
    const WeightMethod method = tmpl.highlight_method.value_or(
        f.clustering ? WeightMethod::ClusterEmbedded : WeightMethod::Flat);
    section(tmpl.lead_in.highlights, render_weights(compile_text_level(w, method)));
    bundle.manifest.push_back(Section::Highlights);
  }
  if (f.connections) {
    section(tmpl.lead_in.connections, render_connections(compile_connections(w)));
    bundle.manifest.push_back(Section::Connections);
  }
  if (!part_two.empty()) {
    std::string content;
    for (std::size_t i = 0; i < part_two.size(); ++i) {
      if (i) content += "\n\n";
      content += part_two[i];
    }
    bundle.messages.push_back({Role::User, std::move(content)});
  }
  return bundle;
}

std::string to_wire_json(const std::vector<ChatMessage>& messages) {
  ordered_json j = ordered_json::array();
  for (const auto& m : messages) {
    j.push_back(ordered_json{{"role", std::string(to_string(m.role))}, {"content", m.content}});
  }
  return detail::dump(j);
}

std::vector<ChatMessage> messages_from_wire_json(std::string_view text) {
  try {
    const json j = json::parse(text.begin(), text.end());
    std::vector<ChatMessage> out;
    for (const auto& m : j) {
      const auto role = m.at("role").get<std::string>();
      Role r = Role::User;
      if (role == "system") {
        r = Role::System;
      } else if (role == "assistant") {
        r = Role::Assistant;
      } else if (role != "user") {
        throw Error(ErrorCode::MalformedFile, "unknown role '" + role + "'");
      }
      out.push_back({r, m.at("content").get<std::string>()});
    }
    return out;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("bad message array: ") + e.what());
  }
}

std::string prompt_digest(const std::vector<ChatMessage>& messages) {
  return sha256_hex(to_wire_json(messages));
}

std::string bundle_to_json(const PromptBundle& bundle) {
  ordered_json manifest = ordered_json::array();
  for (auto s : bundle.manifest) manifest.push_back(std::string(to_string(s)));
  ordered_json j;
  j["digest"] = prompt_digest(bundle.messages);
  j["manifest"] = std::move(manifest);
  j["messages"] = ordered_json::parse(to_wire_json(bundle.messages));
  return detail::dump(j, kIndent) + "\n";
}

}  // namespace spacesteer
