#include "ricsim/cmf/conflict_detection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ricsim::cmf {

std::string_view to_string(ConflictKind kind)
{
    switch (kind) {
    case ConflictKind::Direct: return "direct";
    case ConflictKind::Indirect: return "indirect";
    case ConflictKind::Implicit: return "implicit";
    }
    return "direct";
}

std::vector<ConflictReport> detect_direct(const ControlRecord& incoming, const SdlStore& store)
{
    std::vector<ConflictReport> out;
    for (const auto& rec : store.active_controls(incoming.target, incoming.ts)) {
        if (rec.xapp_id == incoming.xapp_id) continue;
        std::set<std::string> shared;
        for (const auto& [name, _] : incoming.changes)
            if (rec.changes.contains(name)) shared.insert(name);
        if (shared.empty()) continue;

        ConflictReport r;
        r.kind = ConflictKind::Direct;
        r.incoming_msg_id = incoming.msg_id;
        r.conflicting_msg_ids = {rec.msg_id};
        r.xapp_ids = {incoming.xapp_id, rec.xapp_id};
        r.target = incoming.target;
        r.shared_parameters = std::move(shared);
        out.push_back(std::move(r));
    }
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.conflicting_msg_ids.front() < b.conflicting_msg_ids.front();
    });
    return out;
}

std::vector<std::string> map_parameter_groups(const ControlRecord& incoming,
                                              std::span<const ParameterGroupDef> defs)
{
    std::vector<std::string> out;
    for (const auto& def : defs) {
        if (def.scope != incoming.target.scope) continue;
        bool touches = std::any_of(incoming.changes.begin(), incoming.changes.end(),
                                   [&](const auto& kv) { return def.members.contains(kv.first); });
        if (touches) out.push_back(def.group_id);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

std::vector<ConflictReport> detect_indirect(const ControlRecord& incoming,
                                            std::span<const std::string> groups,
                                            const SdlStore& store,
                                            std::span<const ConflictReport> direct)
{
    std::set<MsgId> already_direct;
    for (const auto& d : direct)
        for (MsgId id : d.conflicting_msg_ids) already_direct.insert(id);

    // conflicting msg_id -> report under construction
    std::map<MsgId, ConflictReport> by_msg;
    for (const auto& group : groups) {
        for (const auto& gc : store.active_group_changes(incoming.target, group, incoming.ts)) {
            if (gc.xapp_id == incoming.xapp_id || already_direct.contains(gc.msg_id)) continue;
            auto [it, inserted] = by_msg.try_emplace(gc.msg_id);
            ConflictReport& r = it->second;
            if (inserted) {
                r.kind = ConflictKind::Indirect;
                r.incoming_msg_id = incoming.msg_id;
                r.conflicting_msg_ids = {gc.msg_id};
                r.xapp_ids = {incoming.xapp_id, gc.xapp_id};
                r.target = incoming.target;
            }
            r.shared_groups.insert(group);
        }
    }
    std::vector<ConflictReport> out;
    out.reserve(by_msg.size());
    for (auto& [_, r] : by_msg) out.push_back(std::move(r));
    return out;
}

// ---------------------------------------------------------------------------

std::map<std::string, AdverseDirection> PmonConfig::default_directions()
{
    return {
        {"mean_bs_load", AdverseDirection::HigherIsWorse},
        {"mean_user_satisfaction", AdverseDirection::LowerIsWorse},
        {"call_blockages", AdverseDirection::HigherIsWorse},
        {"rlfs", AdverseDirection::HigherIsWorse},
        {"handovers", AdverseDirection::HigherIsWorse},
        {"pingpong_handovers", AdverseDirection::HigherIsWorse},
    };
}

PerformanceMonitor::PerformanceMonitor(PmonConfig cfg) : cfg_(std::move(cfg))
{
    if (cfg_.window < 2) throw ValidationError("PMon window needs at least 2 samples");
    if (!(cfg_.k > 0.0)) throw ValidationError("PMon k must be positive");
    if (!(cfg_.stdev_floor > 0.0)) throw ValidationError("PMon stdev floor must be positive");
}

std::optional<DegradationEvent> PerformanceMonitor::observe(const KpiPoint& point, SdlStore& store)
{
    if (!std::isfinite(point.value))
        throw ValidationError("non-finite KPI value for " + point.kpi_name);
    auto dir_it = cfg_.directions.find(point.kpi_name);
    if (dir_it == cfg_.directions.end())
        throw ValidationError("no adverse direction configured for KPI '" + point.kpi_name + "'");

    Stream& s = streams_[{point.kpi_name, point.cell_id}];
    if (s.seen && point.ts < s.last_ts)
        throw ValidationError("KPI stream " + point.kpi_name + "/" + point.cell_id +
                              " went backwards in time");
    s.seen = true;
    s.last_ts = point.ts;

    std::optional<DegradationEvent> event;
    if (s.window.size() == cfg_.window) {
        const double n = static_cast<double>(s.window.size());
        const double mean = std::accumulate(s.window.begin(), s.window.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : s.window) ss += (v - mean) * (v - mean);
        const double stdev = std::max(std::sqrt(ss / (n - 1.0)), cfg_.stdev_floor);
        double z = (point.value - mean) / stdev;
        if (dir_it->second == AdverseDirection::LowerIsWorse) z = -z;
        if (z > cfg_.k) {
            DegradationEvent ev;
            ev.ts = point.ts;
            ev.kpi_name = point.kpi_name;
            ev.cell_id = point.cell_id;
            ev.magnitude = z;
            ev.window_mean = mean;
            ev.window_stdev = stdev;
            ev.event_id = store.record_degradation({0, ev.ts, ev.kpi_name, ev.cell_id, ev.magnitude});
            event = std::move(ev);
        }
        s.window.pop_front();
    }
    s.window.push_back(point.value);
    return event;
}

// ---------------------------------------------------------------------------

std::optional<std::string> cell_scope_only(const ControlTarget& target)
{
    if (target.scope == TargetScope::Cell) return target.id;
    return std::nullopt;
}

namespace {

struct Touch {
    std::set<std::string> xapps;
    std::set<MsgId> msgs;
};

bool in_lookback(Millis ts, Millis expiry, Millis event_ts, Millis lookback)
{
    return ts <= event_ts && event_ts < expiry + lookback;
}

}  // namespace

std::vector<CounterKey> correlate_implicit(const DegradationEvent& event, SdlStore& store,
                                           const ImplicitConfig& cfg, const CellResolver& resolve_cell)
{
    using Slot = std::tuple<ControlTarget, CorrelatedKind, std::string>;
    std::map<Slot, Touch> touched;

    auto attached = [&](const ControlTarget& t) {
        auto cell = resolve_cell(t);
        return cell && *cell == event.cell_id;
    };

    for (const auto& rec : store.controls()) {
        if (!in_lookback(rec.ts, rec.expiry(), event.ts, cfg.lookback) || !attached(rec.target))
            continue;
        for (const auto& [name, _] : rec.changes) {
            auto& t = touched[{rec.target, CorrelatedKind::Parameter, name}];
            t.xapps.insert(rec.xapp_id);
            t.msgs.insert(rec.msg_id);
        }
    }
    for (const auto& gc : store.group_changes()) {
        if (!in_lookback(gc.ts, gc.expiry(), event.ts, cfg.lookback) || !attached(gc.target))
            continue;
        auto& t = touched[{gc.target, CorrelatedKind::Group, gc.group_id}];
        t.xapps.insert(gc.xapp_id);
        t.msgs.insert(gc.msg_id);
    }

    std::vector<CounterKey> bumped;
    for (const auto& [slot, t] : touched) {
        if (t.xapps.size() < 2) continue;
        CounterKey key;
        key.xapp_ids.assign(t.xapps.begin(), t.xapps.end());
        key.target = std::get<0>(slot);
        key.kind = std::get<1>(slot);
        key.name = std::get<2>(slot);
        store.bump_counter(key, event.ts, std::vector<MsgId>(t.msgs.begin(), t.msgs.end()));
        bumped.push_back(std::move(key));
    }
    std::sort(bumped.begin(), bumped.end());
    return bumped;
}

std::vector<ConflictReport> check_thresholds(SdlStore& store, std::int64_t threshold,
                                             const DegradationEvent* trigger)
{
    std::vector<ConflictReport> out;
    for (const auto& c : store.counters_over(threshold)) {
        ConflictReport r;
        r.kind = ConflictKind::Implicit;
        r.conflicting_msg_ids = c.msg_ids;
        r.xapp_ids = {c.key.xapp_ids.begin(), c.key.xapp_ids.end()};
        r.target = c.key.target;
        if (c.key.kind == CorrelatedKind::Parameter)
            r.shared_parameters = {c.key.name};
        else
            r.shared_groups = {c.key.name};
        r.evidence = ImplicitEvidence{c.key, c.count};
        store.reset_counter(c.key);
        out.push_back(std::move(r));
    }
    if (trigger && !out.empty()) store.purge_degradations(trigger->cell_id, trigger->ts);
    return out;
}

}  // namespace ricsim::cmf
