#pragma once

#include "ricsim/cmf/sdl_store.hpp"
#include "ricsim/ran/config.hpp"

#include <json.hpp>

#include <deque>
#include <map>
#include <string>
#include <vector>

namespace ricsim::xapps {

using cmf::ControlRecord;
using cmf::Millis;

inline constexpr const char* kMroId = "mro";
inline constexpr const char* kMlbId = "mlb";

struct MroConfig {
    double pingpong_ratio_high = 0.1;
    double rlf_ratio_high = 0.05;
    double step_hysteresis_db = 0.5;
    int step_ttt = 1;  // quantization steps per decision
    /// KPI windows pooled when computing the ratios.
    std::size_t history_windows = 1;
};

struct MlbConfig {
    double load_high = 0.8;
    double load_low = 0.5;
    double step_cio_db = 1.0;
};

struct XappConfig {
    Millis decision_period = 5'000;
    /// MLB decides this long after MRO within each period.
    Millis mlb_phase = 2'500;
    MroConfig mro;
    MlbConfig mlb;
};

void validate(const XappConfig& cfg);
void merge_from_json(XappConfig& cfg, const nlohmann::json& j);
nlohmann::json to_json(const XappConfig& cfg);

/// What an xApp sees of one cell at decision time.
struct CellView {
    std::string cell_id;
    double hysteresis_db = 0.0;
    Millis ttt = 0;
    double cio_db = 0.0;
};

/// Per-cell handover statistics of one KPI window.
struct CellHandoverStats {
    std::string cell_id;
    std::int64_t handovers = 0;
    std::int64_t pingpongs = 0;
    std::int64_t rlfs = 0;
};

/// Mobility Robustness Optimization: steers hysteresis and TTT from
/// ping-pong and RLF ratios. Emitted records have msg_id 0; the message
/// infrastructure assigns ids.
class MroXapp {
public:
    MroXapp(MroConfig cfg, ran::HandoverConfig limits, Millis span);

    void observe(const std::vector<CellHandoverStats>& window);
    std::vector<ControlRecord> decide(const std::vector<CellView>& cells, Millis now) const;

    const MroConfig& config() const { return cfg_; }

private:
    MroConfig cfg_;
    ran::HandoverConfig limits_;
    Millis span_;
    std::map<std::string, std::deque<CellHandoverStats>> history_;
};

/// Mobility Load Balancing: lowers the CIO of overloaded cells and relaxes
/// it back towards zero once they are lightly loaded.
class MlbXapp {
public:
    MlbXapp(MlbConfig cfg, ran::HandoverConfig limits, Millis span);

    /// `loads` is indexed like `cells`.
    std::vector<ControlRecord> decide(const std::vector<CellView>& cells, const std::vector<double>& loads,
                                      Millis now) const;

    const MlbConfig& config() const { return cfg_; }

private:
    MlbConfig cfg_;
    ran::HandoverConfig limits_;
    Millis span_;
};

}  // namespace ricsim::xapps
