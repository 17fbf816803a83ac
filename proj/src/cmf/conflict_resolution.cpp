#include "ricsim/cmf/conflict_resolution.hpp"

#include "ricsim/cmf/json_codec.hpp"

#include <algorithm>

namespace ricsim::cmf {

ResolutionPolicy ResolutionPolicy::prioritize(std::string xapp_id)
{
    if (xapp_id.empty()) throw ValidationError("prioritized xApp id is empty");
    return {Mode::Prioritize, std::move(xapp_id)};
}

std::string_view to_string(Decision d)
{
    return d == Decision::Allow ? "allow" : "block";
}

Verdict resolve(const ControlRecord& incoming, std::vector<ConflictReport> reports,
                const ResolutionPolicy& policy)
{
    Verdict v;
    v.reports = std::move(reports);
    if (policy.mode == ResolutionPolicy::Mode::Disabled || v.reports.empty() ||
        incoming.xapp_id == policy.prioritized)
        v.decision = Decision::Allow;
    else
        v.decision = Decision::Block;
    return v;
}

std::int64_t MitigatorStats::total_allowed() const
{
    std::int64_t n = 0;
    for (const auto& [_, c] : allowed) n += c;
    return n;
}

std::int64_t MitigatorStats::total_blocked() const
{
    std::int64_t n = 0;
    for (const auto& [_, c] : blocked) n += c;
    return n;
}

ConflictMitigator::ConflictMitigator(MitigatorConfig cfg, std::vector<ParameterGroupDef> groups,
                                     ResolutionPolicy policy)
    : cfg_(std::move(cfg)),
      store_(cfg_.degradation_horizon),
      policy_(std::move(policy)),
      pmon_(cfg_.pmon)
{
    if (cfg_.implicit.threshold < 1) throw ValidationError("implicit threshold must be >= 1");
    if (cfg_.implicit.lookback < 0) throw ValidationError("implicit lookback must be >= 0");
    if (policy_.mode == ResolutionPolicy::Mode::Prioritize && policy_.prioritized.empty())
        throw ValidationError("prioritize policy without xApp id");
    for (const auto& g : groups) store_.define_group(g);
}

bool ConflictMitigator::is_quarantined(const std::string& xapp_id, CorrelatedKind kind,
                                       const std::string& name, const ControlTarget& target,
                                       Millis now) const
{
    auto it = quarantine_.find({xapp_id, kind, name, target});
    return it != quarantine_.end() && now < it->second.first;
}

std::optional<ConflictReport> ConflictMitigator::quarantine_hit(
    const ControlRecord& incoming, const std::vector<std::string>& groups) const
{
    if (quarantine_.empty()) return std::nullopt;
    auto check = [&](CorrelatedKind kind, const std::string& name) -> std::optional<ConflictReport> {
        auto it = quarantine_.find({incoming.xapp_id, kind, name, incoming.target});
        if (it != quarantine_.end() && incoming.ts < it->second.first) return it->second.second;
        return std::nullopt;
    };
    for (const auto& [name, _] : incoming.changes)
        if (auto r = check(CorrelatedKind::Parameter, name)) return r;
    for (const auto& g : groups)
        if (auto r = check(CorrelatedKind::Group, g)) return r;
    return std::nullopt;
}

Verdict ConflictMitigator::process_control_message(const ControlRecord& incoming)
{
    validate(incoming);
    store_.expire(incoming.ts - cfg_.implicit.lookback);

    auto reports = detect_direct(incoming, store_);
    const auto groups = map_parameter_groups(incoming, store_.groups());
    auto indirect = detect_indirect(incoming, groups, store_, reports);
    stats_.direct += static_cast<std::int64_t>(reports.size());
    stats_.indirect += static_cast<std::int64_t>(indirect.size());
    reports.insert(reports.end(), std::make_move_iterator(indirect.begin()),
                   std::make_move_iterator(indirect.end()));

    Verdict v;
    if (auto hit = quarantine_hit(incoming, groups)) {
        reports.push_back(std::move(*hit));
        v.reports = std::move(reports);
        v.decision = Decision::Block;
        v.quarantined = true;
    } else {
        v = resolve(incoming, std::move(reports), policy_);
    }

    if (v.decision == Decision::Allow) {
        store_.supersede(incoming);
        store_.supersede_groups(incoming, groups);
        store_.record_control(incoming);
        for (const auto& g : groups)
            store_.record_group_change(
                {incoming.msg_id, g, incoming.ts, incoming.xapp_id, incoming.target, incoming.span});
        ++stats_.allowed[incoming.xapp_id];
    } else {
        ++stats_.blocked[incoming.xapp_id];
    }
    log_verdict(incoming, v);
    return v;
}

std::vector<std::pair<ConflictReport, Verdict>> ConflictMitigator::observe_kpi(
    const KpiPoint& point, const CellResolver& resolver)
{
    auto event = pmon_.observe(point, store_);
    if (!event) return {};
    ++stats_.degradations;
    if (!cfg_.implicit_enabled) return {};
    return on_degradation(*event, resolver);
}

std::vector<std::pair<ConflictReport, Verdict>> ConflictMitigator::on_degradation(
    const DegradationEvent& event, const CellResolver& resolver)
{
    correlate_implicit(event, store_, cfg_.implicit, resolver);
    auto reports = check_thresholds(store_, cfg_.implicit.threshold, &event);

    std::vector<std::pair<ConflictReport, Verdict>> out;
    for (auto& r : reports) {
        ++stats_.implicit;
        Verdict v;
        v.reports = {r};
        v.decision = Decision::Allow;
        if (policy_.mode == ResolutionPolicy::Mode::Prioritize) {
            const auto& key = r.evidence->key;
            for (const auto& x : key.xapp_ids) {
                if (x == policy_.prioritized) continue;
                quarantine_[{x, key.kind, key.name, key.target}] = {event.ts + cfg_.quarantine, r};
                v.decision = Decision::Block;
            }
        }
        if (verdict_log_) {
            auto j = verdict_to_json(0, v);
            j.erase("msg_id");
            j["event_id"] = event.event_id;
            j["ts_ms"] = event.ts;
            *verdict_log_ << j.dump() << '\n';
        }
        out.emplace_back(std::move(r), std::move(v));
    }
    // Bound memory: keep records needed for implicit lookback.
    store_.expire(event.ts - cfg_.implicit.lookback);
    return out;
}

void ConflictMitigator::log_verdict(const ControlRecord& incoming, const Verdict& v)
{
    if (!verdict_log_) return;
    *verdict_log_ << verdict_to_json(incoming.msg_id, v).dump() << '\n';
}

}  // namespace ricsim::cmf
