#include "ricsim/ran/config.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace ricsim::ran {

using nlohmann::json;
using cmf::ValidationError;

void validate(const ScenarioConfig& cfg)
{
    // Hex layouts with full rings: 1, 7, 19, 37, ...
    bool ring_count_ok = false;
    for (int r = 0; r < 10; ++r)
        if (cfg.n_bs == 1 + 3 * r * (r + 1)) ring_count_ok = true;
    if (!ring_count_ok) throw ValidationError("n_bs must fill complete hex rings (1, 7, 19, 37, ...)");
    if (!(cfg.isd_m > 0)) throw ValidationError("isd_m must be positive");
    if (cfg.n_ue < 0) throw ValidationError("n_ue must be non-negative");
    double sum = 0;
    for (double p : cfg.profile_probabilities) {
        if (p < 0) throw ValidationError("profile probabilities must be non-negative");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ValidationError("profile probabilities must sum to 1");
    if (cfg.tick <= 0) throw ValidationError("tick must be positive");
    if (cfg.duration <= 0 || cfg.duration % cfg.tick != 0)
        throw ValidationError("duration must be a positive multiple of tick");
    if (cfg.warmup < 0 || cfg.warmup >= cfg.duration) throw ValidationError("warmup must be in [0, duration)");
    if (cfg.kpi_window <= 0 || cfg.kpi_window % cfg.tick != 0)
        throw ValidationError("kpi_window must be a positive multiple of tick");

    const auto& r = cfg.radio;
    if (!(r.capacity_units > 0) || !(r.unit_throughput_mbps > 0) || !(r.max_spectral_efficiency > 0))
        throw ValidationError("radio capacity constants must be positive");
    if (!(r.min_distance_m > 0) || !(r.shadowing_grid_m > 0) || r.shadowing_sigma_db < 0)
        throw ValidationError("invalid propagation constants");

    const auto& m = cfg.mobility;
    if (m.pedestrian_speed_mps < 0 || m.vehicle_speed_mps < 0 || m.max_pause < 0)
        throw ValidationError("invalid mobility constants");
    if (m.vehicle_fraction < 0 || m.vehicle_fraction > 1)
        throw ValidationError("vehicle_fraction must be in [0, 1]");

    const auto& t = cfg.traffic;
    if (t.mean_interarrival <= 0 || t.mean_holding <= 0) throw ValidationError("traffic means must be positive");
    for (double b : t.bitrate_mbps)
        if (!(b > 0)) throw ValidationError("profile bitrates must be positive");

    const auto& h = cfg.handover;
    if (h.ttt_steps.empty() || !std::is_sorted(h.ttt_steps.begin(), h.ttt_steps.end()))
        throw ValidationError("ttt_steps must be a non-empty ascending list");
    if (h.min_hysteresis_db > h.max_hysteresis_db || h.min_cio_db > h.max_cio_db)
        throw ValidationError("parameter ranges are inverted");
    if (h.rlf_duration <= 0 || h.reestablish_delay < 0 || h.pingpong_window < 0)
        throw ValidationError("invalid link-monitoring durations");
}

namespace {

/// Reads optional keys from one JSON object and rejects leftovers.
class Section {
public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name))
    {
        if (!j_.is_object()) throw ValidationError("config section '" + name_ + "' must be an object");
    }

    template <typename T>
    void read(const char* key, T& field)
    {
        used_.insert(key);
        if (auto it = j_.find(key); it != j_.end()) {
            try {
                field = it->template get<T>();
            } catch (const json::exception& e) {
                throw ValidationError(name_ + "." + key + ": " + e.what());
            }
        }
    }

    const json* sub(const char* key)
    {
        used_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void finish() const
    {
        for (const auto& [k, _] : j_.items())
            if (!used_.contains(k)) throw ValidationError("unknown config key '" + name_ + "." + k + "'");
    }

private:
    const json& j_;
    std::string name_;
    std::set<std::string> used_;
};

}  // namespace

void merge_from_json(ScenarioConfig& cfg, const json& j)
{
    Section s(j, "scenario");
    s.read("n_bs", cfg.n_bs);
    s.read("isd_m", cfg.isd_m);
    s.read("n_ue", cfg.n_ue);
    s.read("profile_probabilities", cfg.profile_probabilities);
    s.read("duration_ms", cfg.duration);
    s.read("warmup_ms", cfg.warmup);
    s.read("tick_ms", cfg.tick);
    s.read("kpi_window_ms", cfg.kpi_window);
    s.read("seed", cfg.seed);

    if (const json* r = s.sub("radio")) {
        Section rs(*r, "radio");
        auto& c = cfg.radio;
        rs.read("tx_power_dbm", c.tx_power_dbm);
        rs.read("noise_dbm", c.noise_dbm);
        rs.read("capacity_units", c.capacity_units);
        rs.read("unit_throughput_mbps", c.unit_throughput_mbps);
        rs.read("max_spectral_efficiency", c.max_spectral_efficiency);
        rs.read("pathloss_intercept_db", c.pathloss_intercept_db);
        rs.read("pathloss_slope_db", c.pathloss_slope_db);
        rs.read("min_distance_m", c.min_distance_m);
        rs.read("shadowing_sigma_db", c.shadowing_sigma_db);
        rs.read("shadowing_grid_m", c.shadowing_grid_m);
        rs.finish();
    }
    if (const json* m = s.sub("mobility")) {
        Section ms(*m, "mobility");
        auto& c = cfg.mobility;
        ms.read("pedestrian_speed_mps", c.pedestrian_speed_mps);
        ms.read("vehicle_speed_mps", c.vehicle_speed_mps);
        ms.read("vehicle_fraction", c.vehicle_fraction);
        ms.read("max_pause_ms", c.max_pause);
        ms.finish();
    }
    if (const json* t = s.sub("traffic")) {
        Section ts(*t, "traffic");
        auto& c = cfg.traffic;
        ts.read("bitrate_mbps", c.bitrate_mbps);
        ts.read("mean_interarrival_ms", c.mean_interarrival);
        ts.read("mean_holding_ms", c.mean_holding);
        ts.finish();
    }
    if (const json* h = s.sub("handover")) {
        Section hs(*h, "handover");
        auto& c = cfg.handover;
        hs.read("pingpong_window_ms", c.pingpong_window);
        hs.read("q_out_db", c.q_out_db);
        hs.read("rlf_duration_ms", c.rlf_duration);
        hs.read("reestablish_delay_ms", c.reestablish_delay);
        hs.read("initial_hysteresis_db", c.initial_hysteresis_db);
        hs.read("initial_ttt_ms", c.initial_ttt);
        hs.read("initial_cio_db", c.initial_cio_db);
        hs.read("min_hysteresis_db", c.min_hysteresis_db);
        hs.read("max_hysteresis_db", c.max_hysteresis_db);
        hs.read("min_cio_db", c.min_cio_db);
        hs.read("max_cio_db", c.max_cio_db);
        hs.read("ttt_steps_ms", c.ttt_steps);
        hs.finish();
    }
    s.finish();
    validate(cfg);
}

json to_json(const ScenarioConfig& cfg)
{
    const auto& r = cfg.radio;
    const auto& m = cfg.mobility;
    const auto& t = cfg.traffic;
    const auto& h = cfg.handover;
    return {
        {"n_bs", cfg.n_bs},
        {"isd_m", cfg.isd_m},
        {"n_ue", cfg.n_ue},
        {"profile_probabilities", cfg.profile_probabilities},
        {"duration_ms", cfg.duration},
        {"warmup_ms", cfg.warmup},
        {"tick_ms", cfg.tick},
        {"kpi_window_ms", cfg.kpi_window},
        {"seed", cfg.seed},
        {"radio",
         {{"tx_power_dbm", r.tx_power_dbm},
          {"noise_dbm", r.noise_dbm},
          {"capacity_units", r.capacity_units},
          {"unit_throughput_mbps", r.unit_throughput_mbps},
          {"max_spectral_efficiency", r.max_spectral_efficiency},
          {"pathloss_intercept_db", r.pathloss_intercept_db},
          {"pathloss_slope_db", r.pathloss_slope_db},
          {"min_distance_m", r.min_distance_m},
          {"shadowing_sigma_db", r.shadowing_sigma_db},
          {"shadowing_grid_m", r.shadowing_grid_m}}},
        {"mobility",
         {{"pedestrian_speed_mps", m.pedestrian_speed_mps},
          {"vehicle_speed_mps", m.vehicle_speed_mps},
          {"vehicle_fraction", m.vehicle_fraction},
          {"max_pause_ms", m.max_pause}}},
        {"traffic",
         {{"bitrate_mbps", t.bitrate_mbps},
          {"mean_interarrival_ms", t.mean_interarrival},
          {"mean_holding_ms", t.mean_holding}}},
        {"handover",
         {{"pingpong_window_ms", h.pingpong_window},
          {"q_out_db", h.q_out_db},
          {"rlf_duration_ms", h.rlf_duration},
          {"reestablish_delay_ms", h.reestablish_delay},
          {"initial_hysteresis_db", h.initial_hysteresis_db},
          {"initial_ttt_ms", h.initial_ttt},
          {"initial_cio_db", h.initial_cio_db},
          {"min_hysteresis_db", h.min_hysteresis_db},
          {"max_hysteresis_db", h.max_hysteresis_db},
          {"min_cio_db", h.min_cio_db},
          {"max_cio_db", h.max_cio_db},
          {"ttt_steps_ms", h.ttt_steps}}},
    };
}

double clamp_hysteresis(const HandoverConfig& h, double value)
{
    return std::clamp(value, h.min_hysteresis_db, h.max_hysteresis_db);
}

double clamp_cio(const HandoverConfig& h, double value)
{
    return std::clamp(value, h.min_cio_db, h.max_cio_db);
}

Millis quantize_ttt(const HandoverConfig& h, double value)
{
    Millis best = h.ttt_steps.front();
    for (Millis s : h.ttt_steps)
        if (std::abs(static_cast<double>(s) - value) < std::abs(static_cast<double>(best) - value)) best = s;
    return best;
}

Millis step_ttt(const HandoverConfig& h, Millis current, int direction)
{
    const auto& steps = h.ttt_steps;
    auto it = std::find(steps.begin(), steps.end(), quantize_ttt(h, static_cast<double>(current)));
    auto idx = static_cast<std::ptrdiff_t>(it - steps.begin()) + direction;
    idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(steps.size()) - 1);
    return steps[static_cast<std::size_t>(idx)];
}

}  // namespace ricsim::ran
