#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spacesteer/workspace.hpp"

namespace spacesteer {

// Generic whiteboard export (a stand-in for commercial board APIs).
//
// Element kinds and how they map onto the workspace:
//   card       document; id from `title` (falls back to the element id), body
//              from `text`. A sticky with style.role == "document" counts too.
//   frame      cluster; id = element id, name = `title`; members are cards
//              whose `parent` is the frame, or unparented cards inside its
//              bounding box. Cards may carry style.order to fix member order.
//   mark       highlight over its parent card's text; style.offset pins the
//              span, otherwise the first occurrence of `text` is used.
//   sticky     annotation on its parent card or frame; an unparented sticky
//              attaches to the one card it overlaps.
//   connector  connection from `start` to `end` (cards, frames or marks),
//              label = `text`.
enum class ElementKind { Card, Sticky, Frame, Connector, Mark };

std::string_view to_string(ElementKind kind) noexcept;

struct Geometry {
  double x = 0;
  double y = 0;
  double width = 0;
  double height = 0;

  bool contains(const Geometry& inner) const;
  bool overlaps(const Geometry& other) const;
  bool operator==(const Geometry&) const = default;
};

struct BoardElement {
  std::string id;
  ElementKind kind = ElementKind::Card;
  Geometry geometry;
  std::string text;
  std::string title;
  std::optional<std::string> parent;
  std::optional<std::string> start;  // connectors only
  std::optional<std::string> end;    // connectors only
  std::map<std::string, std::string> style;

  bool operator==(const BoardElement&) const = default;
};

struct BoardExport {
  std::vector<BoardElement> elements;

  bool operator==(const BoardExport&) const = default;
};

// Board file: a JSON array of elements {id, kind, geometry: {x, y, width,
// height}, text?, title?, parent?, start?, end?, style?}.
// Throws Error(MalformedExport).
BoardExport parse_board_export(std::string_view json_text);
BoardExport load_board_export(const std::string& path);
std::string board_export_to_json(const BoardExport& board);

enum class Disposition { Document, Highlight, Annotation, Cluster, Connection, Skipped };

std::string_view to_string(Disposition disposition) noexcept;

struct MappingEntry {
  std::string element_id;
  Disposition mapped_as = Disposition::Skipped;
  std::string target;  // resulting object id, or the skip reason
};

// One entry per input element, in element order.
struct MappingReport {
  std::vector<MappingEntry> entries;
};

std::string mapping_report_to_json(const MappingReport& report);

struct ImportOptions {
  // Connectors touching a mark add one repeated highlight of that mark, so
  // graph degree shows up as highlight frequency.
  bool degree_weights = false;
};

struct ImportResult {
  Workspace workspace;
  MappingReport report;
};

// Every imported document is flagged relevant. Throws
// Error(MalformedExport | AmbiguousParent).
ImportResult import_board(const BoardExport& board, const ImportOptions& options = {});

struct ExportOptions {
  // Leave out documents that are not flagged relevant (and their layers).
  bool relevant_only = false;
};

// Lays a workspace out as a board that imports back to the same layers.
BoardExport export_board(const Workspace& workspace, const ExportOptions& options = {});

}  // namespace spacesteer
