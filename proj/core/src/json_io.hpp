#pragma once

// Private JSON and file helpers shared by the core translation units.

#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "spacesteer/workspace.hpp"

namespace spacesteer::detail {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string read_file(const std::filesystem::path& path);
// Writes via a sibling temp file and rename, so readers never see a torn file.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

// Shortest round-trip decimal rendering ("3", "1.5", "0.1").
std::string format_number(double value);

// Dump with UTF-8 passthrough; invalid sequences are replaced, never thrown.
std::string dump(const json& value, int indent = -1);
std::string dump(const ordered_json& value, int indent = -1);

json to_json(const ObjectRef& ref);
ObjectRef object_ref_from_json(const json& j);

json to_json(const Workspace& workspace);
Workspace workspace_from_json(const json& j);

json to_json(const WorkspaceEdit& edit);
WorkspaceEdit edit_from_json(const json& j);

json to_json(const Violation& violation);

}  // namespace spacesteer::detail
