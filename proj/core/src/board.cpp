#include "spacesteer/board.hpp"

#include <algorithm>
#include <set>

#include "json_io.hpp"
#include "spacesteer/error.hpp"

namespace spacesteer {

using detail::json;

std::string_view to_string(ElementKind kind) noexcept {
  switch (kind) {
    case ElementKind::Card: return "card";
    case ElementKind::Sticky: return "sticky";
    case ElementKind::Frame: return "frame";
    case ElementKind::Connector: return "connector";
    case ElementKind::Mark: return "mark";
  }
  return "card";
}

std::string_view to_string(Disposition d) noexcept {
  switch (d) {
    case Disposition::Document: return "document";
    case Disposition::Highlight: return "highlight";
    case Disposition::Annotation: return "annotation";
    case Disposition::Cluster: return "cluster";
    case Disposition::Connection: return "connection";
    case Disposition::Skipped: return "skipped";
  }
  return "skipped";
}

bool Geometry::contains(const Geometry& in) const {
  return in.x >= x && in.y >= y && in.x + in.width <= x + width &&
         in.y + in.height <= y + height;
}

bool Geometry::overlaps(const Geometry& o) const {
  return x < o.x + o.width && o.x < x + width && y < o.y + o.height && o.y < y + height;
}

namespace {

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::MalformedExport, "board export: " + what);
}

ElementKind kind_from_string(const std::string& s) {
  for (auto k : {ElementKind::Card, ElementKind::Sticky, ElementKind::Frame,
                 ElementKind::Connector, ElementKind::Mark}) {
    if (to_string(k) == s) return k;
  }
  malformed("unknown element kind '" + s + "'");
}

std::optional<std::string> opt_string(const json& j, const char* key) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) return it->get<std::string>();
  return std::nullopt;
}

}  // namespace

BoardExport parse_board_export(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    malformed(e.what());
  }
  if (!j.is_array()) malformed("top level must be an array of elements");
  BoardExport board;
  try {
    for (const auto& ej : j) {
      BoardElement e;
      e.id = ej.at("id").get<std::string>();
      e.kind = kind_from_string(ej.at("kind").get<std::string>());
      if (auto g = ej.find("geometry"); g != ej.end()) {
        e.geometry = Geometry{g->value("x", 0.0), g->value("y", 0.0), g->value("width", 0.0),
                              g->value("height", 0.0)};
      }
      e.text = ej.value("text", "");
      e.title = ej.value("title", "");
      e.parent = opt_string(ej, "parent");
      e.start = opt_string(ej, "start");
      e.end = opt_string(ej, "end");
      if (auto s = ej.find("style"); s != ej.end()) {
        if (!s->is_object()) malformed("style of '" + e.id + "' must be an object");
        for (const auto& [key, value] : s->items()) {
          e.style[key] = value.is_string() ? value.get<std::string>() : detail::dump(value);
        }
      }
      board.elements.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    malformed(e.what());
  }
  return board;
}

BoardExport load_board_export(const std::string& path) {
  try {
    return parse_board_export(detail::read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedFile) throw Error(ErrorCode::MalformedExport, e.what());
    throw;
  }
}

std::string board_export_to_json(const BoardExport& board) {
  detail::ordered_json arr = detail::ordered_json::array();
  for (const auto& e : board.elements) {
    detail::ordered_json j;
    j["id"] = e.id;
    j["kind"] = std::string(to_string(e.kind));
    j["geometry"] = {{"x", e.geometry.x},
                     {"y", e.geometry.y},
                     {"width", e.geometry.width},
                     {"height", e.geometry.height}};
    if (!e.title.empty()) j["title"] = e.title;
    if (!e.text.empty()) j["text"] = e.text;
    if (e.parent) j["parent"] = *e.parent;
    if (e.start) j["start"] = *e.start;
    if (e.end) j["end"] = *e.end;
    if (!e.style.empty()) j["style"] = e.style;
    arr.push_back(std::move(j));
  }
  return detail::dump(arr, 2) + "\n";
}

std::string mapping_report_to_json(const MappingReport& report) {
  detail::ordered_json arr = detail::ordered_json::array();
  for (const auto& e : report.entries) {
    detail::ordered_json j;
    j["element"] = e.element_id;
    j["mapped_as"] = std::string(to_string(e.mapped_as));
    j[e.mapped_as == Disposition::Skipped ? "reason" : "target"] = e.target;
    arr.push_back(std::move(j));
  }
  return detail::dump(arr, 2) + "\n";
}

// ---------------------------------------------------------------------------

namespace {

bool is_document_element(const BoardElement& e) {
  if (e.kind == ElementKind::Card) return true;
  if (e.kind != ElementKind::Sticky) return false;
  auto it = e.style.find("role");
  return it != e.style.end() && it->second == "document";
}

std::optional<double> style_number(const BoardElement& e, const char* key) {
  auto it = e.style.find(key);
  if (it == e.style.end()) return std::nullopt;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    malformed("style." + std::string(key) + " of '" + e.id + "' is not a number");
  }
}

class Importer {
 public:
  Importer(const BoardExport& board, const ImportOptions& options)
      : board_(board), options_(options), report_(board.elements.size()) {}

  ImportResult run() {
    check_ids();
    for (std::size_t i = 0; i < elements().size(); ++i) report_[i].element_id = elements()[i].id;
    map_documents();
    map_frames();
    map_marks();
    map_stickies();
    map_connectors();

    for (const auto& d : ws_.documents) ws_.relevant.push_back(d.id);
    if (auto violations = validate(ws_); !violations.empty()) {
      malformed("imported workspace is invalid: " + violations.front().entity + ": " +
                violations.front().rule);
    }
    return {std::move(ws_), MappingReport{std::move(report_)}};
  }

 private:
  const std::vector<BoardElement>& elements() const { return board_.elements; }

  void set(std::size_t i, Disposition d, std::string target) {
    report_[i].mapped_as = d;
    report_[i].target = std::move(target);
  }
  void skip(std::size_t i, std::string reason) { set(i, Disposition::Skipped, std::move(reason)); }

  void check_ids() {
    for (std::size_t i = 0; i < elements().size(); ++i) {
      const auto& e = elements()[i];
      if (e.id.empty()) malformed("element " + std::to_string(i) + " has an empty id");
      if (!position_.emplace(e.id, i).second) malformed("duplicate element id '" + e.id + "'");
    }
    for (const auto& e : elements()) {
      if (e.parent && !position_.count(*e.parent)) {
        malformed("element '" + e.id + "' has unknown parent '" + *e.parent + "'");
      }
    }
  }

  const BoardElement* element(const std::optional<std::string>& id) const {
    if (!id) return nullptr;
    auto it = position_.find(*id);
    return it == position_.end() ? nullptr : &elements()[it->second];
  }

  void map_documents() {
    for (std::size_t i = 0; i < elements().size(); ++i) {
      const auto& e = elements()[i];
      if (!is_document_element(e)) continue;
      if (e.text.empty()) {
        skip(i, "empty card");
        continue;
      }
      Document d;
      d.id = e.title.empty() ? e.id : e.title;
      if (auto it = e.style.find("doc_title"); it != e.style.end()) d.title = it->second;
      d.body = e.text;
      if (ws_.find_document(d.id)) malformed("two cards name document '" + d.id + "'");
      doc_of_element_[e.id] = d.id;
      set(i, Disposition::Document, d.id);
      ws_.documents.push_back(std::move(d));
    }
  }

  void map_frames() {
    std::vector<std::pair<std::size_t, std::size_t>> frames;  // (element index, cluster index)
    for (std::size_t i = 0; i < elements().size(); ++i) {
      const auto& e = elements()[i];
      if (e.kind != ElementKind::Frame) continue;
      if (ws_.find_document(e.id)) malformed("frame id '" + e.id + "' collides with a document");
      Cluster c{e.id, e.title.empty() ? std::nullopt : std::optional<std::string>(e.title), {}};
      frames.emplace_back(i, ws_.clusters.size());
      set(i, Disposition::Cluster, c.id);
      ws_.clusters.push_back(std::move(c));
    }

    // (order key, element position, doc id) per cluster.
    std::vector<std::vector<std::tuple<double, std::size_t, std::string>>> members(
        ws_.clusters.size());
    for (std::size_t i = 0; i < elements().size(); ++i) {
      const auto& e = elements()[i];
      auto doc = doc_of_element_.find(e.id);
      if (doc == doc_of_element_.end()) continue;
      std::optional<std::size_t> cluster;
      const BoardElement* parent = element(e.parent);
      for (const auto& [frame_pos, cluster_idx] : frames) {
        const auto& frame = elements()[frame_pos];
        const bool by_parent = parent && parent->id == frame.id;
        const bool by_geometry = !parent && frame.geometry.contains(e.geometry) &&
                                 e.geometry.width > 0 && e.geometry.height > 0;
        if (by_parent || by_geometry) {
          cluster = cluster_idx;
          break;
        }
      }
      if (!cluster) continue;
      const double order = style_number(e, "order").value_or(static_cast<double>(i));
      members[*cluster].emplace_back(order, i, doc->second);
    }
    for (std::size_t c = 0; c < members.size(); ++c) {
      std::stable_sort(members[c].begin(), members[c].end());
      for (auto& m : members[c]) ws_.clusters[c].members.push_back(std::get<2>(m));
    }
  }

  void map_marks() {
    for (std::size_t i = 0; i < elements().size(); ++i) {
      const auto& e = elements()[i];
      if (e.kind != ElementKind::Mark) continue;
      const BoardElement* card = element(e.parent);
      auto doc = card ? doc_of_element_.find(card->id) : doc_of_element_.end();
      if (doc == doc_of_element_.end()) {
        skip(i, "mark without a document card");
        continue;
      }
      if (e.text.empty()) {
        skip(i, "empty mark");
        continue;
      }
      const std::string& body = card->text;
      std::size_t start = std::string::npos;
      if (auto offset = style_number(e, "offset")) {
        if (*offset >= 0) start = static_cast<std::size_t>(*offset);
      } else {
        start = body.find(e.text);
      }
      if (start == std::string::npos || start + e.text.size() > body.size() ||
          body.compare(start, e.text.size(), e.text) != 0) {
        skip(i, "mark text not found in card");
        continue;
      }
      Highlight h{doc->second, start, start + e.text.size(), e.text};
      mark_highlight_[e.id] = h;
      set(i, Disposition::Highlight, doc->second);
      ws_.highlights.push_back(std::move(h));
    }
  }

  void map_stickies() {
    for (std::size_t i = 0; i < elements().size(); ++i) {
      const auto& e = elements()[i];
      if (e.kind != ElementKind::Sticky || is_document_element(e)) continue;
      if (e.text.empty()) {
        skip(i, "empty note");
        continue;
      }
      std::optional<std::string> target;
      if (const BoardElement* parent = element(e.parent)) {
        if (auto doc = doc_of_element_.find(parent->id); doc != doc_of_element_.end()) {
          target = doc->second;
        } else if (parent->kind == ElementKind::Frame) {
          target = parent->id;
        }
      } else {
        std::vector<std::string> hits;
        for (const auto& other : elements()) {
          auto doc = doc_of_element_.find(other.id);
          if (doc != doc_of_element_.end() && other.geometry.overlaps(e.geometry)) {
            hits.push_back(doc->second);
          }
        }
        if (hits.size() > 1) {
          throw Error(ErrorCode::AmbiguousParent,
                      "sticky '" + e.id + "' overlaps " + std::to_string(hits.size()) +
                          " cards and has no explicit parent");
        }
        if (hits.size() == 1) target = hits.front();
      }
      if (!target) {
        skip(i, "floating note");
        continue;
      }
      set(i, Disposition::Annotation, *target);
      ws_.annotations.push_back({*target, e.text});
    }
  }

  std::optional<ObjectRef> endpoint(const std::optional<std::string>& id) const {
    const BoardElement* e = element(id);
    if (!e) return std::nullopt;
    if (auto doc = doc_of_element_.find(e->id); doc != doc_of_element_.end()) {
      return ObjectRef::document(doc->second);
    }
    if (e->kind == ElementKind::Frame) return ObjectRef::cluster(e->id);
    if (auto h = mark_highlight_.find(e->id); h != mark_highlight_.end()) {
      return ObjectRef::text(h->second.text);
    }
    return std::nullopt;
  }

  void map_connectors() {
    std::vector<Highlight> degree_extra;
    for (std::size_t i = 0; i < elements().size(); ++i) {
      const auto& e = elements()[i];
      if (e.kind != ElementKind::Connector) continue;
      const auto source = endpoint(e.start);
      const auto target = endpoint(e.end);
      if (!source || !target) {
        skip(i, "dangling connector");
        continue;
      }
      if (*source == *target) {
        skip(i, "self connection");
        continue;
      }
      Connection c{*source, *target,
                   e.text.empty() ? std::nullopt : std::optional<std::string>(e.text)};
      set(i, Disposition::Connection,
          source->value + " -> " + target->value);
      ws_.connections.push_back(std::move(c));
      if (options_.degree_weights) {
        for (const auto* end : {&e.start, &e.end}) {
          if (auto h = mark_highlight_.find(**end); h != mark_highlight_.end()) {
            degree_extra.push_back(h->second);
          }
        }
      }
    }
    ws_.highlights.insert(ws_.highlights.end(), degree_extra.begin(), degree_extra.end());
  }

  const BoardExport& board_;
  ImportOptions options_;
  std::vector<MappingEntry> report_;
  std::map<std::string, std::size_t> position_;
  std::map<std::string, std::string> doc_of_element_;
  std::map<std::string, Highlight> mark_highlight_;
  Workspace ws_;
};

}  // namespace

ImportResult import_board(const BoardExport& board, const ImportOptions& options) {
  return Importer(board, options).run();
}

// ---------------------------------------------------------------------------

namespace {

constexpr double kCardWidth = 240;
constexpr double kCardHeight = 160;
constexpr double kGap = 20;
constexpr int kCardsPerRow = 4;
constexpr double kFrameWidth = kCardsPerRow * (kCardWidth + kGap) + kGap;

Geometry card_slot(double origin_x, double origin_y, std::size_t k) {
  const auto row = static_cast<double>(k / kCardsPerRow);
  const auto col = static_cast<double>(k % kCardsPerRow);
  return {origin_x + kGap + col * (kCardWidth + kGap), origin_y + kGap + row * (kCardHeight + kGap),
          kCardWidth, kCardHeight};
}

double rows_height(std::size_t cards) {
  const auto rows = static_cast<double>((std::max<std::size_t>(cards, 1) + kCardsPerRow - 1) /
                                        kCardsPerRow);
  return kGap + rows * (kCardHeight + kGap);
}

}  // namespace

BoardExport export_board(const Workspace& w, const ExportOptions& options) {
  auto keep_doc = [&](const std::string& id) {
    return w.find_document(id) && (!options.relevant_only || w.is_relevant(id));
  };
  auto card_id = [](const std::string& doc) { return "card:" + doc; };

  BoardExport board;
  std::map<std::string, Geometry> card_geometry;

  double frame_x = 0;
  for (const auto& c : w.clusters) {
    std::vector<std::string> kept;
    for (const auto& m : c.members) {
      if (keep_doc(m)) kept.push_back(m);
    }
    BoardElement frame;
    frame.id = c.id;
    frame.kind = ElementKind::Frame;
    frame.title = c.name.value_or("");
    frame.geometry = {frame_x, 0, kFrameWidth, rows_height(kept.size())};
    for (std::size_t k = 0; k < kept.size(); ++k) {
      card_geometry[kept[k]] = card_slot(frame_x, 0, k);
    }
    frame_x += kFrameWidth + 4 * kGap;
    board.elements.push_back(std::move(frame));
  }

  // Unclustered cards sit below every frame.
  double below = 0;
  for (const auto& e : board.elements) below = std::max(below, e.geometry.y + e.geometry.height);
  below += 10 * kGap;
  std::size_t loose = 0;

  for (const auto& d : w.documents) {
    if (!keep_doc(d.id)) continue;
    BoardElement card;
    card.id = card_id(d.id);
    card.kind = ElementKind::Card;
    card.title = d.id;
    card.text = d.body;
    if (d.title) card.style["doc_title"] = *d.title;
    if (const Cluster* c = w.cluster_of(d.id)) {
      card.parent = c->id;
      const auto pos = std::find(c->members.begin(), c->members.end(), d.id) - c->members.begin();
      card.style["order"] = std::to_string(pos);
      card.geometry = card_geometry[d.id];
    } else {
      card.geometry = card_slot(0, below, loose++);
    }
    board.elements.push_back(std::move(card));
  }

  std::map<std::string, std::string> first_mark_for_text;
  std::size_t n = 0;
  for (const auto& h : w.highlights) {
    if (!keep_doc(h.doc_id)) continue;
    BoardElement mark;
    mark.id = "mark:" + std::to_string(++n);
    mark.kind = ElementKind::Mark;
    mark.parent = card_id(h.doc_id);
    mark.text = h.text;
    mark.style["offset"] = std::to_string(h.start);
    const Geometry& g = card_geometry.count(h.doc_id) ? card_geometry[h.doc_id] : Geometry{};
    mark.geometry = {g.x + kGap, g.y + kGap, kCardWidth / 2, 16};
    first_mark_for_text.emplace(h.text, mark.id);
    board.elements.push_back(std::move(mark));
  }

  n = 0;
  for (const auto& a : w.annotations) {
    const bool on_doc = w.find_document(a.target) != nullptr;
    if (on_doc && !keep_doc(a.target)) continue;
    BoardElement note;
    note.id = "note:" + std::to_string(++n);
    note.kind = ElementKind::Sticky;
    note.parent = on_doc ? card_id(a.target) : a.target;
    note.text = a.text;
    board.elements.push_back(std::move(note));
  }

  auto endpoint_id = [&](const ObjectRef& ref) -> std::optional<std::string> {
    switch (ref.kind) {
      case ObjectRef::Kind::Document:
        return keep_doc(ref.value) ? std::optional(card_id(ref.value)) : std::nullopt;
      case ObjectRef::Kind::Cluster: return ref.value;
      case ObjectRef::Kind::Text: {
        auto it = first_mark_for_text.find(ref.value);
        return it == first_mark_for_text.end() ? std::nullopt : std::optional(it->second);
      }
    }
    return std::nullopt;
  };
  n = 0;
  for (const auto& c : w.connections) {
    auto start = endpoint_id(c.source);
    auto end = endpoint_id(c.target);
    if (!start || !end) continue;
    BoardElement link;
    link.id = "link:" + std::to_string(++n);
    link.kind = ElementKind::Connector;
    link.start = start;
    link.end = end;
    link.text = c.label.value_or("");
    board.elements.push_back(std::move(link));
  }
  return board;
}

}  // namespace spacesteer
