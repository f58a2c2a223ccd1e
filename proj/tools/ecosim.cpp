// ecosim: eco-driving simulation runner.
//
//   ecosim run --config PATH --seed N --out DIR
//   ecosim compare --config PATH --runs N --out DIR
//   ecosim validate --config PATH
//
// Exit codes: 0 ok, 2 config error, 3 runtime failure.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ecosmpc/config.hpp"
#include "ecosmpc/harness.hpp"

namespace fs = std::filesystem;
using namespace ecosmpc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::string timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

void write_manifest(const SimConfig& cfg, std::uint64_t seed, const fs::path& out_dir,
                    const std::string& config_path, const std::vector<std::string>& outputs) {
    nlohmann::json manifest = run_manifest(cfg, seed, outputs);
    manifest["config_path"] = config_path;
    manifest["timestamp"] = timestamp();
    manifest["tool"] = "ecosim";
    std::ofstream mf(out_dir / "manifest.json");
    mf << manifest.dump(2) << '\n';
}

int cmd_run(const std::string& config_path, std::uint64_t seed, const fs::path& out_dir) {
    const SimConfig cfg = load_config(config_path);
    fs::create_directories(out_dir);

    const TrajectoryLog log = run_simulation(cfg, seed);

    std::ofstream jsonl(out_dir / "trajectory.jsonl");
    write_jsonl(log, jsonl);

    std::ofstream csv(out_dir / "summary.csv");
    write_summary_csv_header(csv);
    write_summary_csv_rows(log, 0, csv);

    std::ofstream sched(out_dir / "schedule.json");
    sched << to_json(log.schedule).dump(2) << '\n';

    write_manifest(cfg, seed, out_dir, config_path,
                   {"trajectory.jsonl", "summary.csv", "schedule.json"});

    for (std::size_t i = 0; i < log.summaries.size(); ++i) {
        const auto& s = log.summaries[i];
        std::cout << "vehicle " << i << " (" << to_string(s.kind) << "): " << s.mpg
                  << " mpg, " << s.fuel_ml << " ml over " << s.distance_m
                  << " m, idle " << s.idle_s << " s, red violations " << s.red_violations
                  << '\n';
    }
    return kExitOk;
}

int cmd_compare(const std::string& config_path, std::size_t runs, const fs::path& out_dir) {
    SimConfig cfg = load_config(config_path);
    fs::create_directories(out_dir);

    const std::vector<ControllerKind> kinds = {
        ControllerKind::Ideal, ControllerKind::Passive, ControllerKind::ScenarioSmpc,
        ControllerKind::CertaintyEquivalence, ControllerKind::FrozenTime};

    std::ofstream csv(out_dir / "mpg_per_run.csv");
    csv << "run,controller,vehicle,mpg\n";

    // Paired seeds: every controller kind sees the same seed sequence,
    // hence the same light realizations and driver error draws.
    std::vector<MonteCarloReport> reports;
    for (const auto kind : kinds) {
        SimConfig variant = cfg;
        for (auto& k : variant.kinds) k = kind;
        MonteCarloReport rep = monte_carlo(variant, runs);
        for (std::size_t r = 0; r < rep.mpg.size(); ++r)
            for (std::size_t i = 0; i < rep.mpg[r].size(); ++i)
                csv << r << ',' << to_string(kind) << ',' << i << ',' << rep.mpg[r][i] << '\n';
        reports.push_back(std::move(rep));
    }

    std::ofstream table(out_dir / "summary_table.csv");
    table << "vehicle";
    for (const auto kind : kinds) table << ',' << to_string(kind) << "_mean_mpg";
    table << '\n';
    std::cout << "mean mpg over " << runs << " runs:\n";
    for (std::size_t i = 0; i < cfg.n_vehicles; ++i) {
        table << i;
        std::cout << "  vehicle " << i << ":";
        for (std::size_t k = 0; k < kinds.size(); ++k) {
            table << ',' << reports[k].per_vehicle[i].mean;
            std::cout << ' ' << to_string(kinds[k]) << '=' << reports[k].per_vehicle[i].mean;
        }
        table << '\n';
        std::cout << '\n';
    }

    write_manifest(cfg, cfg.master_seed, out_dir, config_path,
                   {"mpg_per_run.csv", "summary_table.csv"});
    return kExitOk;
}

int cmd_validate(const std::string& config_path) {
    const SimConfig cfg = load_config(config_path);
    std::cout << "config ok: " << cfg.n_vehicles << " vehicles, "
              << cfg.total_steps() << " steps, horizon M=" << cfg.horizon_steps() << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-vehicle eco-driving simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::uint64_t seed = 1;
    std::size_t runs = 30;

    auto* run = app.add_subcommand("run", "Single closed-loop simulation");
    run->add_option("--config", config_path, "TOML config path")->required();
    run->add_option("--seed", seed, "Master seed");
    run->add_option("--out", out_dir, "Output directory");

    auto* compare = app.add_subcommand("compare", "Monte Carlo controller comparison");
    compare->add_option("--config", config_path, "TOML config path")->required();
    compare->add_option("--runs", runs, "Number of Monte Carlo runs");
    compare->add_option("--out", out_dir, "Output directory");

    auto* validate = app.add_subcommand("validate", "Parse and validate a config");
    validate->add_option("--config", config_path, "TOML config path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, seed, out_dir);
        if (compare->parsed()) return cmd_compare(config_path, runs, out_dir);
        if (validate->parsed()) return cmd_validate(config_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}
