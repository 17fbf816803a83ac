#include "ricsim/cmf/json_codec.hpp"

#include <fstream>
#include <string>

namespace ricsim::cmf {

using nlohmann::json;

json to_json(const ControlRecord& rec)
{
    json changes = json::object();
    for (const auto& [name, value] : rec.changes) changes[name] = value;
    return {
        {"msg_id", rec.msg_id},
        {"ts_ms", rec.ts},
        {"xapp_id", rec.xapp_id},
        {"target", {{"scope", std::string(to_string(rec.target.scope))}, {"id", rec.target.id}}},
        {"changes", std::move(changes)},
        {"span_ms", rec.span},
    };
}

ControlRecord control_record_from_json(const json& j)
{
    try {
        ControlRecord rec;
        rec.msg_id = j.at("msg_id").get<MsgId>();
        rec.ts = j.at("ts_ms").get<Millis>();
        rec.xapp_id = j.at("xapp_id").get<std::string>();
        const auto& t = j.at("target");
        rec.target.scope = parse_scope(t.at("scope").get<std::string>());
        rec.target.id = t.at("id").get<std::string>();
        for (const auto& [name, value] : j.at("changes").items()) rec.changes[name] = value.get<double>();
        rec.span = j.at("span_ms").get<Millis>();
        validate(rec);
        return rec;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed control message: ") + e.what());
    }
}

json verdict_to_json(MsgId msg_id, const Verdict& v)
{
    json conflicts = json::array();
    for (const auto& r : v.reports) {
        json shared = json::array();
        for (const auto& p : r.shared_parameters) shared.push_back(p);
        for (const auto& g : r.shared_groups) shared.push_back(g);
        conflicts.push_back({
            {"kind", std::string(to_string(r.kind))},
            {"with", r.conflicting_msg_ids},
            {"shared", std::move(shared)},
        });
    }
    return {
        {"msg_id", msg_id},
        {"decision", std::string(to_string(v.decision))},
        {"conflicts", std::move(conflicts)},
    };
}

json to_json(const ParameterGroupDef& def)
{
    return {
        {"group_id", def.group_id},
        {"scope", std::string(to_string(def.scope))},
        {"members", std::vector<std::string>(def.members.begin(), def.members.end())},
    };
}

ParameterGroupDef parameter_group_from_json(const json& j)
{
    try {
        ParameterGroupDef def;
        def.group_id = j.at("group_id").get<std::string>();
        def.scope = parse_scope(j.at("scope").get<std::string>());
        for (const auto& m : j.at("members")) def.members.insert(m.get<std::string>());
        validate(def);
        return def;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("malformed parameter group: ") + e.what());
    }
}

std::vector<ParameterGroupDef> parameter_groups_from_json(const json& j)
{
    if (!j.is_array()) throw ValidationError("parameter group definitions must be a JSON array");
    std::vector<ParameterGroupDef> out;
    for (const auto& item : j) {
        auto def = parameter_group_from_json(item);
        for (const auto& prev : out)
            if (prev.group_id == def.group_id)
                throw DuplicateError("parameter group '" + def.group_id + "' defined twice");
        out.push_back(std::move(def));
    }
    return out;
}

std::vector<ParameterGroupDef> load_parameter_groups(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open parameter group file " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return parameter_groups_from_json(j);
}

std::vector<ControlRecord> read_control_log(std::istream& in)
{
    std::vector<ControlRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
        }
        out.push_back(control_record_from_json(j));
    }
    return out;
}

}  // namespace ricsim::cmf
