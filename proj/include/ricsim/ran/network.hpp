#pragma once

#include "ricsim/cmf/sdl_store.hpp"
#include "ricsim/ran/config.hpp"
#include "ricsim/ran/geometry.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace ricsim::ran {

inline constexpr Millis kNever = std::numeric_limits<Millis>::max();

enum class MobilityClass { Pedestrian, Vehicle };
enum class Profile { Low = 0, Medium = 1, High = 2 };

std::string_view to_string(Profile p);

struct BaseStation {
    std::string cell_id;
    Vec2 position;
    double tx_power_dbm = 43.0;
    double capacity_units = 100.0;
    double hysteresis_db = 3.0;
    Millis ttt = 480;
    double cio_db = 0.0;  // advertised to every neighbour
};

struct Session {
    double demand_mbps = 0.0;
    Millis start_ts = 0;
    Millis end_ts = 0;
    double units = 0.0;  // resource units currently consumed
};

struct LastHandover {
    Millis ts = 0;
    std::size_t from_cell = 0;
};

struct UserEquipment {
    std::string ue_id;
    Vec2 position;
    Vec2 velocity;
    MobilityClass mobility = MobilityClass::Pedestrian;
    Profile profile = Profile::Low;
    std::size_t serving = 0;
    /// Time the A3 entry condition has held, per candidate cell; nullopt
    /// while the condition is not met.
    std::vector<std::optional<Millis>> a3_timer;
    Millis below_qout = 0;
    std::optional<Millis> reestablish_at;
    std::optional<Session> session;
    Millis next_arrival = kNever;
    std::optional<LastHandover> last_ho;

    // Random waypoint state. Without a waypoint the UE keeps its velocity.
    std::optional<Vec2> waypoint;
    double speed_mps = 0.0;
    Millis pause_until = 0;

    bool attached() const { return !reestablish_at.has_value(); }
};

struct HandoverEvent {
    Millis ts = 0;
    std::size_t ue = 0;
    std::size_t from = 0;
    std::size_t to = 0;
    bool pingpong = false;
};

struct RlfEvent {
    Millis ts = 0;
    std::size_t ue = 0;
    std::size_t cell = 0;
    bool dropped_session = false;
};

enum class Admission { Admitted, Blocked };

struct KpiSample {
    Millis end_ts = 0;
    double mean_bs_load = 0.0;
    double mean_user_satisfaction = 1.0;
    std::int64_t call_blockages = 0;
    std::int64_t rlfs = 0;
    std::int64_t handovers = 0;
    std::int64_t pingpong_handovers = 0;
};

struct CellKpiSample {
    std::string cell_id;
    KpiSample kpi;
};

struct NetworkKpis {
    KpiSample network;
    std::vector<CellKpiSample> cells;
};

/// Run-wide tallies, never reset.
struct NetworkCounters {
    std::int64_t handovers = 0;
    std::int64_t pingpongs = 0;
    std::int64_t rlfs = 0;
    std::int64_t call_blockages = 0;
    std::int64_t sessions_started = 0;
    std::int64_t sessions_completed = 0;
    std::int64_t sessions_dropped = 0;
};

/// Fixed-step simulator of the radio network: mobility, propagation, A3
/// handovers, RLF, session admission and KPI collection.
class Network {
public:
    /// Explicit topology. UEs must already carry a valid `serving` index.
    Network(ScenarioConfig cfg, std::vector<BaseStation> cells, std::vector<UserEquipment> ues,
            std::optional<Hexagon> area = std::nullopt);

    /// Hex-grid scenario with randomly placed UEs, deterministic in cfg.seed.
    static Network build_scenario(const ScenarioConfig& cfg);

    /// Advances the clock by one tick.
    void step();

    /// Received power of cell `bs` at UE `ue`, computed from current positions.
    double rsrp(std::size_t bs, std::size_t ue) const;
    /// Cached value from the last radio refresh.
    double cached_rsrp(std::size_t bs, std::size_t ue) const { return rsrp_[ue * cells_.size() + bs]; }
    double sinr_db(std::size_t ue) const;
    double pathloss_db(double distance_m) const;
    double shadowing_db(std::size_t bs, std::size_t ue, Vec2 at) const;

    /// Recomputes the RSRP cache for every UE.
    void refresh_radio();

    /// A3 evaluation for one UE over `dt`; performs the handover when triggered.
    std::optional<HandoverEvent> evaluate_handover(std::size_t ue, Millis dt);
    /// Link monitoring for one UE over `dt`; on failure the session drops and
    /// the UE re-establishes after the configured delay.
    std::optional<RlfEvent> detect_rlf(std::size_t ue, Millis dt);
    /// Admission of a new session at the UE's serving cell.
    Admission admit_session(std::size_t ue);

    /// KPIs of the window ending now; resets the window accumulators.
    NetworkKpis collect_kpis();

    /// Applies an allowed Cell-scope change of hysteresis, ttt or cio,
    /// clamped to the configured ranges.
    void apply_control(const cmf::ControlRecord& rec);

    /// Units needed to carry `demand_mbps` at the UE's current SINR.
    double units_for(std::size_t ue, double demand_mbps) const;
    double cell_load(std::size_t bs) const { return load_[bs]; }

    std::optional<std::size_t> cell_index(std::string_view cell_id) const;
    std::optional<std::string> serving_cell_of(std::string_view ue_id) const;
    std::size_t strongest_cell(std::size_t ue) const;

    /// Hash of the full mutable world state, for trajectory comparisons.
    std::uint64_t digest() const;

    Millis now() const { return now_; }
    const ScenarioConfig& config() const { return cfg_; }
    const Hexagon& area() const { return area_; }
    const std::vector<BaseStation>& cells() const { return cells_; }
    const std::vector<UserEquipment>& ues() const { return ues_; }
    std::vector<UserEquipment>& mutable_ues() { return ues_; }
    std::vector<BaseStation>& mutable_cells() { return cells_; }
    const NetworkCounters& counters() const { return counters_; }

    /// JSON-lines event log. Null disables it.
    void set_event_log(std::ostream* out) { log_ = out; }
    /// Adds one per-UE throughput line per tick to the event log.
    void set_throughput_trace(bool on) { trace_throughput_ = on; }

private:
    struct WindowAccumulator {
        std::int64_t handovers = 0, pingpongs = 0, rlfs = 0, blockages = 0;
        double load_sum = 0.0, satisfaction_sum = 0.0;
        std::int64_t ticks = 0;
    };

    void move(std::size_t ue, Millis dt);
    void pick_waypoint(std::size_t ue);
    Vec2 random_point_for(std::size_t ue);
    void refresh_ue(std::size_t ue);
    void update_loads();
    void sessions(std::size_t ue);
    void accumulate();
    Millis draw_exponential(std::size_t ue, Millis mean);
    void log(const nlohmann::json& line);

    ScenarioConfig cfg_;
    std::vector<BaseStation> cells_;
    std::vector<UserEquipment> ues_;
    Hexagon area_;
    Millis now_ = 0;

    std::vector<std::mt19937_64> rng_;  // one stream per UE
    std::vector<std::uint64_t> cell_hash_, ue_hash_;
    std::vector<double> rsrp_;            // ue-major
    std::vector<double> shadow_;          // ue-major, for the cached grid square
    std::vector<std::pair<std::int64_t, std::int64_t>> shadow_square_;
    std::vector<double> interference_mw_;  // total received power per UE, mW
    std::vector<double> load_;

    std::vector<WindowAccumulator> window_;
    WindowAccumulator network_window_;
    NetworkCounters counters_;

    std::ostream* log_ = nullptr;
    bool trace_throughput_ = false;
};

/// Stable 64-bit hash for strings (FNV-1a).
std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace ricsim::ran
