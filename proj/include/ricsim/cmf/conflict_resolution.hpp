#pragma once

#include "ricsim/cmf/conflict_detection.hpp"
#include "ricsim/cmf/sdl_store.hpp"

#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace ricsim::cmf {

struct ResolutionPolicy {
    enum class Mode { Disabled, Prioritize };

    Mode mode = Mode::Disabled;
    std::string prioritized;

    static ResolutionPolicy disabled() { return {}; }
    static ResolutionPolicy prioritize(std::string xapp_id);

    bool operator==(const ResolutionPolicy&) const = default;
};

enum class Decision { Allow, Block };

std::string_view to_string(Decision d);

struct Verdict {
    Decision decision = Decision::Allow;
    std::vector<ConflictReport> reports;
    /// Set when the block came from an implicit-conflict quarantine.
    bool quarantined = false;
};

/// CR Agent decision for pre-action reports. Any conflict blocks a sender
/// that is not the prioritized xApp.
Verdict resolve(const ControlRecord& incoming, std::vector<ConflictReport> reports,
                const ResolutionPolicy& policy);

struct MitigatorConfig {
    ImplicitConfig implicit;
    PmonConfig pmon;
    /// Runs correlation and threshold checks on PMon events.
    bool implicit_enabled = true;
    Millis quarantine = 10'000;
    Millis degradation_horizon = 60'000;
};

struct MitigatorStats {
    std::map<std::string, std::int64_t> allowed;
    std::map<std::string, std::int64_t> blocked;
    std::int64_t direct = 0;
    std::int64_t indirect = 0;
    std::int64_t implicit = 0;
    std::int64_t degradations = 0;

    std::int64_t total_allowed() const;
    std::int64_t total_blocked() const;
};

/// Conflict Mitigation component: the interception point every xApp control
/// message passes through, plus the PMon-triggered implicit path.
class ConflictMitigator {
public:
    ConflictMitigator(MitigatorConfig cfg, std::vector<ParameterGroupDef> groups,
                      ResolutionPolicy policy);

    /// detect_direct -> map groups -> detect_indirect -> quarantine check ->
    /// resolve -> record iff allowed.
    Verdict process_control_message(const ControlRecord& incoming);

    /// Feeds PMon. On degradation, runs the implicit path (if enabled).
    std::vector<std::pair<ConflictReport, Verdict>> observe_kpi(const KpiPoint& point,
                                                                const CellResolver& resolver);

    /// Correlates a degradation with recent decisions and reports counters
    /// that crossed the threshold. Under prioritization, the non-prioritized
    /// xApps of each report are quarantined for (name, target).
    std::vector<std::pair<ConflictReport, Verdict>> on_degradation(const DegradationEvent& event,
                                                                   const CellResolver& resolver);

    bool is_quarantined(const std::string& xapp_id, CorrelatedKind kind, const std::string& name,
                        const ControlTarget& target, Millis now) const;

    /// Structured JSON-lines verdict log. Null disables logging.
    void set_verdict_log(std::ostream* out) { verdict_log_ = out; }

    const SdlStore& store() const { return store_; }
    SdlStore& store() { return store_; }
    const ResolutionPolicy& policy() const { return policy_; }
    const MitigatorStats& stats() const { return stats_; }
    const MitigatorConfig& config() const { return cfg_; }

private:
    struct QuarantineKey {
        std::string xapp_id;
        CorrelatedKind kind;
        std::string name;
        ControlTarget target;
        auto operator<=>(const QuarantineKey&) const = default;
    };

    std::optional<ConflictReport> quarantine_hit(const ControlRecord& incoming,
                                                 const std::vector<std::string>& groups) const;
    void log_verdict(const ControlRecord& incoming, const Verdict& v);

    MitigatorConfig cfg_;
    SdlStore store_;
    ResolutionPolicy policy_;
    PerformanceMonitor pmon_;
    std::map<QuarantineKey, std::pair<Millis, ConflictReport>> quarantine_;
    MitigatorStats stats_;
    std::ostream* verdict_log_ = nullptr;
};

}  // namespace ricsim::cmf
