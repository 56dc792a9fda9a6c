#pragma once

#include "json_io.hpp"
#include "spacesteer/rubric.hpp"

namespace spacesteer::detail {

json to_json(const GradeBreakdown& breakdown);
GradeBreakdown breakdown_from_json(const json& j);

json to_json(const GradeAudit& audit);
GradeAudit audit_from_json(const json& j);

}  // namespace spacesteer::detail
