#pragma once

#include "ricsim/cmf/sdl_store.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <vector>

namespace ricsim::ran {

using cmf::Millis;

struct RadioConfig {
    double tx_power_dbm = 43.0;
    double noise_dbm = -104.0;
    double capacity_units = 100.0;
    double unit_throughput_mbps = 0.18;  // per resource unit per bit/s/Hz
    double max_spectral_efficiency = 6.0;
    double pathloss_intercept_db = 128.1;
    double pathloss_slope_db = 37.6;
    double min_distance_m = 10.0;
    double shadowing_sigma_db = 6.0;
    double shadowing_grid_m = 10.0;
};

struct MobilityConfig {
    double pedestrian_speed_mps = 1.4;
    double vehicle_speed_mps = 13.9;
    double vehicle_fraction = 0.3;
    Millis max_pause = 10'000;
};

struct TrafficConfig {
    std::array<double, 3> bitrate_mbps{1.0, 5.0, 20.0};  // low, medium, high
    Millis mean_interarrival = 60'000;
    Millis mean_holding = 30'000;
};

/// Configurable handover and link-monitoring constants.
struct HandoverConfig {
    Millis pingpong_window = 3'000;
    double q_out_db = -8.0;
    Millis rlf_duration = 1'000;
    Millis reestablish_delay = 200;
    double initial_hysteresis_db = 3.0;
    Millis initial_ttt = 480;
    double initial_cio_db = 0.0;
    double min_hysteresis_db = 0.0;
    double max_hysteresis_db = 10.0;
    double min_cio_db = -6.0;
    double max_cio_db = 6.0;
    std::vector<Millis> ttt_steps{0, 40, 64, 80, 100, 128, 160, 256, 320, 480, 512, 640, 1024, 1280, 2560, 5120};
};

struct ScenarioConfig {
    int n_bs = 19;
    double isd_m = 600.0;
    int n_ue = 380;
    std::array<double, 3> profile_probabilities{0.6, 0.3, 0.1};
    Millis duration = 1'000'000;
    Millis warmup = 150'000;
    Millis tick = 100;
    Millis kpi_window = 5'000;
    std::uint64_t seed = 1;

    RadioConfig radio;
    MobilityConfig mobility;
    TrafficConfig traffic;
    HandoverConfig handover;
};

void validate(const ScenarioConfig& cfg);

/// Overlays keys present in `j` onto `cfg`. Unknown keys are rejected.
void merge_from_json(ScenarioConfig& cfg, const nlohmann::json& j);
nlohmann::json to_json(const ScenarioConfig& cfg);

// Parameter helpers shared with the xApps.
double clamp_hysteresis(const HandoverConfig& h, double value);
double clamp_cio(const HandoverConfig& h, double value);
/// Nearest configured TTT value.
Millis quantize_ttt(const HandoverConfig& h, double value);
/// Neighbouring TTT step (direction +1 or -1); clamps at the ends.
Millis step_ttt(const HandoverConfig& h, Millis current, int direction);

}  // namespace ricsim::ran
