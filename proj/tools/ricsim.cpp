// ricsim: O-RAN network simulator with a Near-RT RIC conflict mitigation
// pipeline between the MRO/MLB xApps and the RAN.

#include "ricsim/cmf/json_codec.hpp"
#include "ricsim/harness/experiment.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace ricsim;

namespace {

harness::ExperimentConfig config_from(const std::string& path)
{
    return path.empty() ? harness::ExperimentConfig{} : harness::load_config(path);
}

std::ofstream open_out(const fs::path& p)
{
    std::ofstream out(p);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    return out;
}

int cmd_run(const std::string& mode_name, std::uint64_t seed, const std::string& config, const fs::path& out_dir)
{
    const auto cfg = config_from(config);
    const auto mode = harness::parse_mode(mode_name);
    fs::create_directories(out_dir);
    const std::string stem = std::string(harness::to_string(mode)) + "_" + std::to_string(seed);
    auto events = open_out(out_dir / ("events_" + stem + ".jsonl"));
    auto verdicts = open_out(out_dir / ("verdicts_" + stem + ".jsonl"));

    harness::RunOptions opts;
    opts.event_log = &events;
    opts.verdict_log = &verdicts;
    const auto result = harness::run(cfg, mode, seed, opts);

    auto csv = open_out(out_dir / "runs.csv");
    harness::write_runs_csv(csv, {result});
    harness::write_runs_csv(std::cout, {result});
    return 0;
}

int cmd_sweep(const std::string& modes_arg, unsigned n_seeds, std::uint64_t first_seed, const std::string& config,
              const fs::path& out_dir, unsigned jobs, bool logs)
{
    const auto cfg = config_from(config);
    std::vector<harness::CmfMode> modes;
    if (modes_arg == "all") {
        modes.assign(harness::kAllModes.begin(), harness::kAllModes.end());
    } else {
        std::stringstream ss(modes_arg);
        for (std::string m; std::getline(ss, m, ',');) modes.push_back(harness::parse_mode(m));
    }
    std::vector<std::uint64_t> seeds(n_seeds);
    std::iota(seeds.begin(), seeds.end(), first_seed);
    fs::create_directories(out_dir);

    const auto start = std::chrono::steady_clock::now();
    const auto results = harness::sweep(cfg, modes, seeds, jobs, logs ? out_dir : fs::path{});
    const auto table = harness::compare(results);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    auto runs_csv = open_out(out_dir / "runs.csv");
    harness::write_runs_csv(runs_csv, results);
    auto cmp_csv = open_out(out_dir / "comparison.csv");
    harness::write_comparison_csv(cmp_csv, table);
    harness::print_table(std::cout, table);
    std::cout << results.size() << " runs in " << secs << " s; results in " << out_dir << "\n";
    return 0;
}

int cmd_replay(const fs::path& messages, const std::string& groups_path, const std::string& policy_arg)
{
    std::ifstream in(messages);
    if (!in) throw std::runtime_error("cannot open " + messages.string());
    const auto records = cmf::read_control_log(in);
    auto groups = groups_path.empty() ? harness::ExperimentConfig::default_parameter_groups()
                                      : cmf::load_parameter_groups(groups_path);
    cmf::ResolutionPolicy policy = policy_arg == "disabled" ? cmf::ResolutionPolicy::disabled()
                                                            : cmf::ResolutionPolicy::prioritize(policy_arg);
    cmf::ConflictMitigator cm({}, std::move(groups), policy);
    cm.set_verdict_log(&std::cout);
    for (const auto& rec : records) cm.process_control_message(rec);
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"O-RAN simulator with Near-RT RIC conflict mitigation"};
    app.require_subcommand(1);

    std::string mode = "disabled", config, modes = "all", groups, policy = "disabled";
    std::uint64_t seed = 1, first_seed = 1;
    unsigned n_seeds = 10, jobs = std::max(1u, std::thread::hardware_concurrency());
    fs::path out_dir = "out", messages;
    bool logs = false;

    auto* run = app.add_subcommand("run", "Run one scenario");
    run->add_option("--mode", mode, "disabled | prioritize-mro | prioritize-mlb")->capture_default_str();
    run->add_option("--seed", seed)->capture_default_str();
    run->add_option("--config", config, "JSON config overriding defaults")->check(CLI::ExistingFile);
    run->add_option("--out", out_dir, "Output directory")->capture_default_str();

    auto* sw = app.add_subcommand("sweep", "Run all modes over several seeds and compare");
    sw->add_option("--modes", modes, "all, or a comma-separated list of modes")->capture_default_str();
    sw->add_option("--seeds", n_seeds, "Number of seeds")->capture_default_str()->check(CLI::PositiveNumber);
    sw->add_option("--first-seed", first_seed)->capture_default_str();
    sw->add_option("--config", config, "JSON config overriding defaults")->check(CLI::ExistingFile);
    sw->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sw->add_option("--jobs", jobs, "Parallel runs")->capture_default_str();
    sw->add_flag("--logs", logs, "Write per-run event and verdict logs");

    auto* rp = app.add_subcommand("replay", "Pass a control-message log through the conflict mitigator");
    rp->add_option("messages", messages, "JSON-lines control messages")->required()->check(CLI::ExistingFile);
    rp->add_option("--groups", groups, "Parameter group definitions (JSON)")->check(CLI::ExistingFile);
    rp->add_option("--policy", policy, "disabled, or the xApp id to prioritize")->capture_default_str();

    auto* dump = app.add_subcommand("config", "Print the effective configuration as JSON");
    dump->add_option("--config", config)->check(CLI::ExistingFile);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(mode, seed, config, out_dir);
        if (*sw) return cmd_sweep(modes, n_seeds, first_seed, config, out_dir, jobs, logs);
        if (*rp) return cmd_replay(messages, groups, policy);
        if (*dump) {
            std::cout << harness::to_json(config_from(config)).dump(2) << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "ricsim: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
