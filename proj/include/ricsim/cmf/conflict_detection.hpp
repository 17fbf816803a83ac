#pragma once

#include "ricsim/cmf/sdl_store.hpp"

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace ricsim::cmf {

enum class ConflictKind { Direct, Indirect, Implicit };

std::string_view to_string(ConflictKind kind);

struct ImplicitEvidence {
    CounterKey key;
    std::int64_t count = 0;

    bool operator==(const ImplicitEvidence&) const = default;
};

struct ConflictReport {
    ConflictKind kind = ConflictKind::Direct;
    std::optional<MsgId> incoming_msg_id;
    std::vector<MsgId> conflicting_msg_ids;
    std::set<std::string> xapp_ids;
    ControlTarget target;
    std::set<std::string> shared_parameters;
    std::set<std::string> shared_groups;
    std::optional<ImplicitEvidence> evidence;

    bool operator==(const ConflictReport&) const = default;
};

// ---------------------------------------------------------------------------
// Pre-action detection. Both functions run before `incoming` is recorded.

/// One Direct report per active record on the same target, from another
/// xApp, that modifies at least one of the same parameters. Ordered by the
/// conflicting msg_id.
std::vector<ConflictReport> detect_direct(const ControlRecord& incoming, const SdlStore& store);

/// Group ids whose scope matches the target and whose members intersect the
/// modified parameters, sorted.
std::vector<std::string> map_parameter_groups(const ControlRecord& incoming,
                                              std::span<const ParameterGroupDef> defs);

/// Indirect reports against active group changes of other xApps on the same
/// target. Messages already reported in `direct` are skipped. One report per
/// conflicting message, carrying every group the pair shares.
std::vector<ConflictReport> detect_indirect(const ControlRecord& incoming,
                                            std::span<const std::string> groups,
                                            const SdlStore& store,
                                            std::span<const ConflictReport> direct = {});

// ---------------------------------------------------------------------------
// Performance monitoring.

struct KpiPoint {
    Millis ts = 0;
    std::string kpi_name;
    std::string cell_id;
    double value = 0.0;
};

struct DegradationEvent {
    std::uint64_t event_id = 0;
    Millis ts = 0;
    std::string kpi_name;
    std::string cell_id;
    double magnitude = 0.0;  // adverse z-score
    double window_mean = 0.0;
    double window_stdev = 0.0;
};

enum class AdverseDirection { HigherIsWorse, LowerIsWorse };

struct PmonConfig {
    std::size_t window = 20;
    double k = 3.0;
    double stdev_floor = 1e-6;
    std::map<std::string, AdverseDirection> directions = default_directions();

    static std::map<std::string, AdverseDirection> default_directions();
};

/// Sliding-window z-score detector, one window per (kpi, cell) stream.
class PerformanceMonitor {
public:
    explicit PerformanceMonitor(PmonConfig cfg = {});

    /// Feeds one point. Emits (and persists into `store`) a degradation event
    /// when the window is full and the point deviates adversely by more
    /// than k standard deviations. The point then enters the window.
    std::optional<DegradationEvent> observe(const KpiPoint& point, SdlStore& store);

    const PmonConfig& config() const { return cfg_; }

private:
    struct Stream {
        std::deque<double> window;
        Millis last_ts = 0;
        bool seen = false;
    };

    PmonConfig cfg_;
    std::map<std::pair<std::string, std::string>, Stream> streams_;
};

// ---------------------------------------------------------------------------
// Implicit (post-action) detection.

struct ImplicitConfig {
    Millis lookback = 10'000;
    std::int64_t threshold = 3;
};

/// Maps a control target to the cell it currently belongs to. UE and bearer
/// targets resolve through their serving cell.
using CellResolver = std::function<std::optional<std::string>(const ControlTarget&)>;

/// Resolves Cell targets only.
std::optional<std::string> cell_scope_only(const ControlTarget& target);

/// For every (target, parameter|group) modified by >= 2 distinct xApps in
/// records effective within `lookback` before the event and attached to the
/// degraded cell, bumps the matching counter. Returns bumped keys in key order.
std::vector<CounterKey> correlate_implicit(const DegradationEvent& event, SdlStore& store,
                                           const ImplicitConfig& cfg,
                                           const CellResolver& resolve_cell = cell_scope_only);

/// One Implicit report per counter at or above threshold. Those counters
/// reset to zero. When `trigger` is given, degradation records of its cell
/// older than the trigger are purged.
std::vector<ConflictReport> check_thresholds(SdlStore& store, std::int64_t threshold,
                                             const DegradationEvent* trigger = nullptr);

}  // namespace ricsim::cmf
