#include "ricsim/xapps/xapps.hpp"

#include <cmath>
#include <limits>

namespace ricsim::xapps {

using cmf::ValidationError;
using nlohmann::json;

void validate(const XappConfig& cfg)
{
    if (cfg.decision_period <= 0) throw ValidationError("decision_period must be positive");
    if (cfg.mlb_phase < 0 || cfg.mlb_phase >= cfg.decision_period)
        throw ValidationError("mlb_phase must lie in [0, decision_period)");
    auto unit = [](double v, const char* name) {
        if (!(v > 0.0 && v < 1.0)) throw ValidationError(std::string(name) + " must be in (0, 1)");
    };
    unit(cfg.mro.pingpong_ratio_high, "mro.pingpong_ratio_high");
    unit(cfg.mro.rlf_ratio_high, "mro.rlf_ratio_high");
    unit(cfg.mlb.load_high, "mlb.load_high");
    unit(cfg.mlb.load_low, "mlb.load_low");
    if (cfg.mlb.load_low >= cfg.mlb.load_high) throw ValidationError("mlb.load_low must be below load_high");
    if (!(cfg.mro.step_hysteresis_db > 0) || cfg.mro.step_ttt < 1 || !(cfg.mlb.step_cio_db > 0))
        throw ValidationError("xApp steps must be positive");
    if (cfg.mro.history_windows < 1) throw ValidationError("mro.history_windows must be >= 1");
}

void merge_from_json(XappConfig& cfg, const json& j)
{
    auto read = [](const json& obj, const char* key, auto& field) {
        if (auto it = obj.find(key); it != obj.end()) field = it->get<std::decay_t<decltype(field)>>();
    };
    auto check_keys = [](const json& obj, std::initializer_list<const char*> keys, const char* section) {
        for (const auto& [k, _] : obj.items()) {
            bool known = false;
            for (const char* key : keys) known |= (k == key);
            if (!known) throw ValidationError(std::string("unknown config key '") + section + "." + k + "'");
        }
    };
    try {
        check_keys(j, {"decision_period_ms", "mlb_phase_ms", "mro", "mlb"}, "xapps");
        read(j, "decision_period_ms", cfg.decision_period);
        read(j, "mlb_phase_ms", cfg.mlb_phase);
        if (auto it = j.find("mro"); it != j.end()) {
            check_keys(*it, {"pingpong_ratio_high", "rlf_ratio_high", "step_hysteresis_db", "step_ttt",
                             "history_windows"},
                       "xapps.mro");
            read(*it, "pingpong_ratio_high", cfg.mro.pingpong_ratio_high);
            read(*it, "rlf_ratio_high", cfg.mro.rlf_ratio_high);
            read(*it, "step_hysteresis_db", cfg.mro.step_hysteresis_db);
            read(*it, "step_ttt", cfg.mro.step_ttt);
            read(*it, "history_windows", cfg.mro.history_windows);
        }
        if (auto it = j.find("mlb"); it != j.end()) {
            check_keys(*it, {"load_high", "load_low", "step_cio_db"}, "xapps.mlb");
            read(*it, "load_high", cfg.mlb.load_high);
            read(*it, "load_low", cfg.mlb.load_low);
            read(*it, "step_cio_db", cfg.mlb.step_cio_db);
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("xapps config: ") + e.what());
    }
    validate(cfg);
}

json to_json(const XappConfig& cfg)
{
    return {
        {"decision_period_ms", cfg.decision_period},
        {"mlb_phase_ms", cfg.mlb_phase},
        {"mro",
         {{"pingpong_ratio_high", cfg.mro.pingpong_ratio_high},
          {"rlf_ratio_high", cfg.mro.rlf_ratio_high},
          {"step_hysteresis_db", cfg.mro.step_hysteresis_db},
          {"step_ttt", cfg.mro.step_ttt},
          {"history_windows", cfg.mro.history_windows}}},
        {"mlb",
         {{"load_high", cfg.mlb.load_high},
          {"load_low", cfg.mlb.load_low},
          {"step_cio_db", cfg.mlb.step_cio_db}}},
    };
}

// ---------------------------------------------------------------------------

MroXapp::MroXapp(MroConfig cfg, ran::HandoverConfig limits, Millis span)
    : cfg_(cfg), limits_(std::move(limits)), span_(span)
{
}

void MroXapp::observe(const std::vector<CellHandoverStats>& window)
{
    for (const auto& s : window) {
        auto& h = history_[s.cell_id];
        h.push_back(s);
        while (h.size() > cfg_.history_windows) h.pop_front();
    }
}

std::vector<ControlRecord> MroXapp::decide(const std::vector<CellView>& cells, Millis now) const
{
    std::vector<ControlRecord> out;
    for (const auto& cell : cells) {
        auto it = history_.find(cell.cell_id);
        if (it == history_.end() || it->second.empty()) continue;
        std::int64_t ho = 0, pp = 0, rlf = 0;
        for (const auto& s : it->second) {
            ho += s.handovers;
            pp += s.pingpongs;
            rlf += s.rlfs;
        }
        const double pp_ratio = ho ? static_cast<double>(pp) / static_cast<double>(ho) : 0.0;
        const double rlf_ratio = ho ? static_cast<double>(rlf) / static_cast<double>(ho)
                                    : (rlf ? std::numeric_limits<double>::infinity() : 0.0);

        int direction = 0;
        if (pp_ratio > cfg_.pingpong_ratio_high) direction = +1;
        else if (rlf_ratio > cfg_.rlf_ratio_high) direction = -1;
        if (direction == 0) continue;

        const double hys = ran::clamp_hysteresis(limits_, cell.hysteresis_db + direction * cfg_.step_hysteresis_db);
        Millis ttt = cell.ttt;
        for (int i = 0; i < cfg_.step_ttt; ++i) ttt = ran::step_ttt(limits_, ttt, direction);

        ControlRecord rec;
        rec.ts = now;
        rec.xapp_id = kMroId;
        rec.target = cmf::ControlTarget::cell(cell.cell_id);
        rec.span = span_;
        if (hys != cell.hysteresis_db) rec.changes["hysteresis"] = hys;
        if (ttt != cell.ttt) rec.changes["ttt"] = static_cast<double>(ttt);
        if (!rec.changes.empty()) out.push_back(std::move(rec));
    }
    return out;
}

MlbXapp::MlbXapp(MlbConfig cfg, ran::HandoverConfig limits, Millis span)
    : cfg_(cfg), limits_(std::move(limits)), span_(span)
{
}

std::vector<ControlRecord> MlbXapp::decide(const std::vector<CellView>& cells, const std::vector<double>& loads,
                                           Millis now) const
{
    if (loads.size() != cells.size()) throw ValidationError("MLB needs one load per cell");
    std::vector<ControlRecord> out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& cell = cells[i];
        double cio = cell.cio_db;
        if (loads[i] > cfg_.load_high) cio = ran::clamp_cio(limits_, cio - cfg_.step_cio_db);
        else if (loads[i] < cfg_.load_low && cio < 0.0) cio = std::min(0.0, cio + cfg_.step_cio_db);
        if (cio == cell.cio_db) continue;

        ControlRecord rec;
        rec.ts = now;
        rec.xapp_id = kMlbId;
        rec.target = cmf::ControlTarget::cell(cell.cell_id);
        rec.span = span_;
        rec.changes["cio"] = cio;
        out.push_back(std::move(rec));
    }
    return out;
}

}  // namespace ricsim::xapps
