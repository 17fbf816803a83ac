#include "ricsim/cmf/sdl_store.hpp"

#include <algorithm>
#include <cmath>

namespace ricsim::cmf {

std::string_view to_string(TargetScope scope)
{
    switch (scope) {
    case TargetScope::Cell: return "cell";
    case TargetScope::Ue: return "ue";
    case TargetScope::Bearer: return "bearer";
    }
    return "cell";
}

TargetScope parse_scope(std::string_view text)
{
    if (text == "cell") return TargetScope::Cell;
    if (text == "ue") return TargetScope::Ue;
    if (text == "bearer") return TargetScope::Bearer;
    throw ValidationError("unknown target scope '" + std::string(text) + "'");
}

std::string to_string(const ControlTarget& target)
{
    return std::string(to_string(target.scope)) + ":" + target.id;
}

std::string to_string(const CounterKey& key)
{
    std::string out = "{";
    for (std::size_t i = 0; i < key.xapp_ids.size(); ++i) {
        if (i) out += ",";
        out += key.xapp_ids[i];
    }
    out += "}/";
    out += key.kind == CorrelatedKind::Group ? "group:" : "param:";
    out += key.name + "@" + to_string(key.target);
    return out;
}

void validate(const ControlRecord& rec)
{
    if (rec.xapp_id.empty()) throw ValidationError("control record without xapp_id");
    if (rec.target.id.empty()) throw ValidationError("control target id is empty");
    if (rec.changes.empty())
        throw ValidationError("control record " + std::to_string(rec.msg_id) + " modifies nothing");
    for (const auto& [name, value] : rec.changes) {
        if (name.empty()) throw ValidationError("empty parameter name");
        if (!std::isfinite(value)) throw ValidationError("non-finite value for " + name);
    }
    if (rec.span <= 0) throw ValidationError("control span must be positive");
}

void validate(const ParameterGroupDef& def)
{
    if (def.group_id.empty()) throw ValidationError("parameter group without id");
    if (def.members.size() < 2)
        throw ValidationError("parameter group '" + def.group_id + "' needs at least 2 members");
    for (const auto& m : def.members)
        if (m.empty()) throw ValidationError("empty member in group '" + def.group_id + "'");
}

void SdlStore::record_control(const ControlRecord& rec)
{
    validate(rec);
    if (seen_msg_ids_.contains(rec.msg_id))
        throw DuplicateError("msg_id " + std::to_string(rec.msg_id) + " already recorded");
    seen_msg_ids_.insert(rec.msg_id);
    controls_.push_back(rec);
}

std::vector<ControlRecord> SdlStore::active_controls(const ControlTarget& target, Millis now) const
{
    std::vector<ControlRecord> out;
    for (const auto& rec : controls_)
        if (rec.target == target && rec.active_at(now)) out.push_back(rec);
    return out;
}

void SdlStore::supersede(const ControlRecord& incoming)
{
    for (auto& rec : controls_) {
        if (rec.xapp_id != incoming.xapp_id || rec.target != incoming.target ||
            !rec.active_at(incoming.ts))
            continue;
        for (const auto& [name, _] : incoming.changes) rec.changes.erase(name);
    }
    std::erase_if(controls_, [](const ControlRecord& r) { return r.changes.empty(); });
}

void SdlStore::record_group_change(const GroupChangeRecord& gc)
{
    if (gc.group_id.empty()) throw ValidationError("group change without group_id");
    if (gc.xapp_id.empty() || gc.target.id.empty())
        throw ValidationError("group change without source or target");
    if (gc.span <= 0) throw ValidationError("group change span must be positive");
    auto key = std::make_pair(gc.msg_id, gc.group_id);
    if (seen_group_changes_.contains(key))
        throw DuplicateError("group change (" + std::to_string(gc.msg_id) + ", " + gc.group_id +
                             ") already recorded");
    seen_group_changes_.insert(std::move(key));
    group_changes_.push_back(gc);
}

std::vector<GroupChangeRecord> SdlStore::active_group_changes(const ControlTarget& target,
                                                              std::string_view group_id,
                                                              Millis now) const
{
    std::vector<GroupChangeRecord> out;
    for (const auto& gc : group_changes_)
        if (gc.target == target && gc.group_id == group_id && gc.active_at(now)) out.push_back(gc);
    return out;
}

void SdlStore::supersede_groups(const ControlRecord& incoming, const std::vector<std::string>& groups)
{
    std::erase_if(group_changes_, [&](const GroupChangeRecord& gc) {
        return gc.xapp_id == incoming.xapp_id && gc.target == incoming.target &&
               gc.active_at(incoming.ts) &&
               std::find(groups.begin(), groups.end(), gc.group_id) != groups.end();
    });
}

void SdlStore::define_group(const ParameterGroupDef& def)
{
    validate(def);
    for (const auto& g : groups_)
        if (g.group_id == def.group_id)
            throw DuplicateError("parameter group '" + def.group_id + "' already defined");
    groups_.push_back(def);
}

std::uint64_t SdlStore::record_degradation(DegradationRecord rec)
{
    if (!(rec.magnitude > 0.0)) throw ValidationError("degradation magnitude must be positive");
    rec.event_id = next_event_id_++;
    degradations_.push_back(std::move(rec));
    return degradations_.back().event_id;
}

std::size_t SdlStore::purge_degradations(std::string_view cell_id, Millis before)
{
    return std::erase_if(degradations_, [&](const DegradationRecord& d) {
        return d.cell_id == cell_id && d.ts < before;
    });
}

std::size_t SdlStore::expire(Millis now)
{
    std::size_t purged = std::erase_if(controls_, [&](const ControlRecord& r) { return r.expiry() <= now; });
    purged += std::erase_if(group_changes_, [&](const GroupChangeRecord& g) { return g.expiry() <= now; });
    std::erase_if(degradations_, [&](const DegradationRecord& d) { return d.ts + degradation_horizon_ <= now; });
    return purged;
}

std::int64_t SdlStore::bump_counter(const CounterKey& key, Millis now, std::vector<MsgId> msg_ids)
{
    auto [it, inserted] = counters_.try_emplace(key);
    if (inserted) it->second.key = key;
    it->second.count += 1;
    it->second.last_update_ts = now;
    it->second.msg_ids = std::move(msg_ids);
    return it->second.count;
}

void SdlStore::reset_counter(const CounterKey& key)
{
    if (auto it = counters_.find(key); it != counters_.end()) it->second.count = 0;
}

std::vector<ImplicitCounter> SdlStore::counters_over(std::int64_t threshold) const
{
    if (threshold < 1) throw ValidationError("counter threshold must be >= 1");
    std::vector<ImplicitCounter> out;
    for (const auto& [_, c] : counters_)
        if (c.count >= threshold) out.push_back(c);
    return out;
}

std::optional<ImplicitCounter> SdlStore::counter(const CounterKey& key) const
{
    if (auto it = counters_.find(key); it != counters_.end()) return it->second;
    return std::nullopt;
}

}  // namespace ricsim::cmf
