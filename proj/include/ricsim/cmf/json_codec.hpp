#pragma once

#include "ricsim/cmf/conflict_resolution.hpp"

#include <json.hpp>

#include <filesystem>
#include <istream>
#include <vector>

namespace ricsim::cmf {

// Control message:
//   {"msg_id", "ts_ms", "xapp_id", "target": {"scope", "id"}, "changes": {..}, "span_ms"}
nlohmann::json to_json(const ControlRecord& rec);
ControlRecord control_record_from_json(const nlohmann::json& j);

// Verdict log line:
//   {"msg_id", "decision": "allow|block", "conflicts": [{"kind", "with": [..], "shared": [..]}]}
nlohmann::json verdict_to_json(MsgId msg_id, const Verdict& v);

// Parameter group file: [{"group_id", "scope", "members": [..]}, ...]
nlohmann::json to_json(const ParameterGroupDef& def);
ParameterGroupDef parameter_group_from_json(const nlohmann::json& j);
std::vector<ParameterGroupDef> parameter_groups_from_json(const nlohmann::json& j);
std::vector<ParameterGroupDef> load_parameter_groups(const std::filesystem::path& path);

/// Reads control messages, one JSON object per line. Blank lines are skipped.
std::vector<ControlRecord> read_control_log(std::istream& in);

}  // namespace ricsim::cmf
