#pragma once

#include "ricsim/cmf/conflict_resolution.hpp"
#include "ricsim/ran/config.hpp"
#include "ricsim/ran/network.hpp"
#include "ricsim/xapps/xapps.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace ricsim::harness {

using cmf::Millis;

enum class CmfMode { Disabled, PrioritizeMro, PrioritizeMlb };

std::string_view to_string(CmfMode mode);
CmfMode parse_mode(std::string_view text);
inline constexpr std::array<CmfMode, 3> kAllModes{CmfMode::Disabled, CmfMode::PrioritizeMro,
                                                   CmfMode::PrioritizeMlb};
cmf::ResolutionPolicy policy_for(CmfMode mode);

/// Pipeline sends every xApp message through the conflict mitigator; Bypass
/// applies messages directly, as if the mitigator were not deployed.
enum class ControlPath { Pipeline, Bypass };

struct ExperimentConfig {
    ran::ScenarioConfig scenario;
    xapps::XappConfig xapps;
    cmf::MitigatorConfig cmf;
    std::vector<cmf::ParameterGroupDef> groups = default_parameter_groups();
    /// Delay between interception and the change reaching the network.
    Millis processing_delay = 0;

    static std::vector<cmf::ParameterGroupDef> default_parameter_groups();
};

/// Overlays a JSON document with optional sections "scenario", "xapps",
/// "cmf", and "parameter_groups" (inline array) or "parameter_groups_file".
void merge_from_json(ExperimentConfig& cfg, const nlohmann::json& j,
                     const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

inline constexpr std::array<const char*, 6> kKpiNames{
    "mean_bs_load", "mean_user_satisfaction", "call_blockages", "rlfs", "handovers", "pingpong_handovers"};

/// Six KPIs over the post-warmup part of a run: loads and satisfaction are
/// means over KPI windows, the rest are totals.
struct KpiTotals {
    double mean_bs_load = 0.0;
    double mean_user_satisfaction = 0.0;
    std::int64_t call_blockages = 0;
    std::int64_t rlfs = 0;
    std::int64_t handovers = 0;
    std::int64_t pingpong_handovers = 0;

    double value(std::string_view kpi) const;
    bool operator==(const KpiTotals&) const = default;
};

struct AppliedChange {
    Millis ts = 0;
    cmf::ControlRecord record;
};

struct RunResult {
    CmfMode mode = CmfMode::Disabled;
    std::uint64_t seed = 0;
    KpiTotals kpis;
    std::map<std::string, std::int64_t> allowed;
    std::map<std::string, std::int64_t> blocked;
    std::int64_t direct_conflicts = 0;
    std::int64_t indirect_conflicts = 0;
    std::int64_t implicit_conflicts = 0;
    std::int64_t degradations = 0;
    Millis simulated = 0;
    ran::NetworkCounters counters;

    // Filled when RunOptions::record_trajectory is set.
    std::vector<std::uint64_t> trajectory;
    std::vector<AppliedChange> applied;

    std::int64_t total_allowed() const;
    std::int64_t total_blocked() const;
};

struct RunOptions {
    ControlPath path = ControlPath::Pipeline;
    std::ostream* event_log = nullptr;
    std::ostream* verdict_log = nullptr;
    bool record_trajectory = false;
    /// When set, these messages replace the xApps and are submitted at their ts.
    const std::vector<cmf::ControlRecord>* replay = nullptr;
};

/// One deterministic simulation of the scenario under `mode`.
RunResult run(const ExperimentConfig& cfg, CmfMode mode, std::uint64_t seed, const RunOptions& opts = {});

/// Runs every (mode, seed) pair; results come back in (mode, seed) order.
/// When `log_dir` is set, each run writes events_<mode>_<seed>.jsonl and
/// verdicts_<mode>_<seed>.jsonl there.
std::vector<RunResult> sweep(const ExperimentConfig& cfg, const std::vector<CmfMode>& modes,
                             const std::vector<std::uint64_t>& seeds, unsigned jobs = 1,
                             const std::filesystem::path& log_dir = {});

struct KpiComparison {
    double mean = 0.0;
    double sd = 0.0;
    double mean_delta_pct = 0.0;  // 100 (mode - disabled) / disabled, averaged over seeds
    double sd_delta_pct = 0.0;
    std::size_t n = 0;
};

struct ComparisonTable {
    std::map<CmfMode, std::map<std::string, KpiComparison>> rows;

    const KpiComparison& at(CmfMode mode, std::string_view kpi) const;
};

ComparisonTable compare(const std::vector<RunResult>& results);

/// Sample standard deviation; 0 for fewer than two values.
double sample_sd(const std::vector<double>& v);

void write_runs_csv(std::ostream& out, const std::vector<RunResult>& results);
void write_comparison_csv(std::ostream& out, const ComparisonTable& table);
void print_table(std::ostream& out, const ComparisonTable& table);

}  // namespace ricsim::harness
