// fmec: desk-scale multi-UAV edge offloading laboratory.
//
// Subcommands:
//   gen      write a scenario JSON from a config (or defaults)
//   train    train the learned agent (prioritized or uniform replay)
//   eval     replay a checkpoint over a pool of taking-off points
//   cat      run the alternating assignment/trajectory optimizer
//   compare  run every policy on one scenario, summary CSV
//   trace    dump per-slot logs of one policy for plotting
//
// FMEC_THREADS caps the worker pool used by compare / multi-seed eval.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "fmec/baselines.hpp"
#include "fmec/cat.hpp"
#include "fmec/csv.hpp"
#include "fmec/rat.hpp"
#include "fmec/scenario.hpp"

namespace {

using namespace fmec;

std::size_t worker_cap() {
    if (const char* env = std::getenv("FMEC_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<std::size_t>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1;
}

// Run jobs indexed 0..n-1 on up to worker_cap() threads; results are
// written by index, so the merge order never depends on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& job) {
    const std::size_t workers = std::min(worker_cap(), std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) job(i);
        return;
    }
    std::vector<std::thread> pool;
    std::size_t next = 0;
    std::mutex mu;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (;;) {
                std::size_t i;
                {
                    std::lock_guard<std::mutex> lock(mu);
                    if (next >= n) return;
                    i = next++;
                }
                job(i);
            }
        });
    for (auto& t : pool) t.join();
}

Scenario load_scenario(const std::string& path) {
    return scenario_from_json(load_json(path));
}

ScenarioConfig load_config_or_default(const std::string& path) {
    if (path.empty()) return ScenarioConfig{};
    return config_from_json(load_json(path));
}

// Taking-off points not seen during training: a fresh substream.
std::vector<std::vector<Vec2>> holdout_takeoffs(const Scenario& sc, int pool) {
    std::mt19937_64 rng(substream(sc.cfg.seed, 3));
    std::uniform_real_distribution<double> ux(0.0, sc.cfg.sys.x_max);
    std::uniform_real_distribution<double> uy(0.0, sc.cfg.sys.y_max);
    std::vector<std::vector<Vec2>> out(static_cast<std::size_t>(pool));
    for (auto& row : out) {
        row.resize(static_cast<std::size_t>(sc.cfg.n_uavs));
        for (auto& p : row) p = {ux(rng), uy(rng)};
    }
    return out;
}

int cmd_gen(const std::string& config_path, const std::string& out,
            std::uint64_t seed_override) {
    ScenarioConfig cfg = load_config_or_default(config_path);
    if (seed_override) cfg.seed = seed_override;
    const auto sc = generate_scenario(cfg);
    save_json(scenario_to_json(sc), out);
    std::cout << "wrote " << out << " (" << cfg.n_ues << " UEs, " << cfg.n_uavs
              << " UAVs, " << cfg.slots << " slots)\n";
    return 0;
}

int cmd_train(const std::string& scenario_path, const std::string& out_dir,
              std::uint64_t seed, bool uniform, int epochs_override) {
    Scenario sc = load_scenario(scenario_path);
    sc.cfg.rat.uniform_replay = uniform;
    if (epochs_override > 0) sc.cfg.rat.epochs = epochs_override;

    RatAgent agent(sc.cfg, seed);
    CsvWriter trace(out_dir + "/trace.csv",
                    {"epoch", "sum_energy_J", "sum_reward", "noise_rho",
                     "critic_loss"});
    const bool atg = sc.cfg.mode == ChannelMode::Atg3d;
    std::unique_ptr<CsvWriter> battery;
    if (atg)
        battery = std::make_unique<CsvWriter>(
            out_dir + "/battery.csv",
            std::vector<std::string>{"epoch", "slot", "uav", "battery_j"});

    for (int epoch = 1; epoch <= sc.cfg.rat.epochs; ++epoch) {
        const auto& takeoff =
            sc.takeoffs[static_cast<std::size_t>(epoch - 1) % sc.takeoffs.size()];
        double mean_loss = 0.0;
        const auto log = agent.run_training_episode(sc, takeoff, &mean_loss);
        trace.row({std::to_string(epoch), fmt_double(log.sum_energy),
                   fmt_double(log.sum_reward), fmt_double(agent.noise()),
                   fmt_double(mean_loss)});
        if (battery)
            for (std::size_t t = 0; t < log.uav_states.size(); ++t)
                for (std::size_t j = 0; j < log.uav_states[t].size(); ++j)
                    battery->row({std::to_string(epoch), std::to_string(t + 1),
                                  std::to_string(j),
                                  fmt_double(log.uav_states[t][j].battery_j)});
    }
    save_json(agent.checkpoint(), out_dir + "/checkpoint.json");
    std::cout << "wrote " << out_dir << "/trace.csv and checkpoint.json\n";
    return 0;
}

int cmd_eval(const std::string& scenario_path, const std::string& checkpoint,
             const std::string& out, int pool, bool holdout) {
    Scenario sc = load_scenario(scenario_path);
    RatAgent agent(sc.cfg, 0);
    agent.restore(load_json(checkpoint));
    auto takeoffs = holdout ? holdout_takeoffs(sc, pool) : sc.takeoffs;
    if (pool > 0 && static_cast<std::size_t>(pool) < takeoffs.size())
        takeoffs.resize(static_cast<std::size_t>(pool));

    std::vector<EpisodeLog> logs(takeoffs.size());
    // the greedy rollout is noise-free, so per-index evaluation is
    // independent and safe to fan out (each worker gets its own agent)
    const auto cp = agent.checkpoint();
    parallel_for(takeoffs.size(), [&](std::size_t i) {
        RatAgent worker(sc.cfg, 0);
        worker.restore(cp);
        logs[i] = worker.evaluate(sc, takeoffs[i]);
    });

    CsvWriter csv(out, {"index", "sum_energy_J", "sum_reward"});
    for (std::size_t i = 0; i < logs.size(); ++i)
        csv.row({std::to_string(i), fmt_double(logs[i].sum_energy),
                 fmt_double(logs[i].sum_reward)});
    std::cout << "wrote " << out << " (" << logs.size() << " rollouts)\n";
    return 0;
}

int cmd_cat(const std::string& scenario_path, const std::string& out,
            const std::string& init, double radius, int clusters,
            std::uint64_t seed) {
    const Scenario sc = load_scenario(scenario_path);
    const auto slots = static_cast<std::size_t>(sc.cfg.slots);
    const auto m = static_cast<std::size_t>(sc.cfg.n_uavs);
    Trajectory start;
    if (init == "circle")
        start = circle_trajectory(sc.ues, radius, slots, m, sc.cfg.sys);
    else if (init == "cluster")
        start = cluster_trajectory(sc.ues, clusters, slots, m, sc.cfg.sys, seed);
    else
        throw CLI::ValidationError("--init must be circle or cluster");

    const auto trace = run_cat(start, sc.tasks, sc.ues, sc.cfg.sys);
    CsvWriter csv(out, {"iter", "objective_J", "wall_ms"});
    for (std::size_t r = 0; r < trace.objective.size(); ++r)
        csv.row({std::to_string(r), fmt_double(trace.objective[r]),
                 fmt_double(trace.wall_ms[r])});
    std::cout << "wrote " << out << " (" << trace.objective.size()
              << " iterations, final " << fmt_double(trace.objective.back())
              << " J)\n";
    return 0;
}

int cmd_compare(const std::string& scenario_path, const std::string& out,
                const std::string& checkpoint, int seeds, int clusters,
                double cat_radius) {
    const Scenario sc = load_scenario(scenario_path);
    const auto n_seeds = static_cast<std::size_t>(std::max(seeds, 1));

    struct Algo {
        std::string name;
        std::function<double(std::uint64_t)> run;  // seed -> episode energy
        bool seeded = true;
    };
    std::vector<Algo> algos;
    algos.push_back({"le", [&](std::uint64_t) { return run_le(sc); }, false});
    algos.push_back({"rm", [&](std::uint64_t s) {
                         const auto& takeoff =
                             sc.takeoffs[s % sc.takeoffs.size()];
                         return run_rm(sc, takeoff, s).sum_energy;
                     }, true});
    algos.push_back({"cm", [&](std::uint64_t s) {
                         const auto& takeoff =
                             sc.takeoffs[s % sc.takeoffs.size()];
                         return run_cm(sc, takeoff, clusters, s).sum_energy;
                     }, true});
    algos.push_back({"cat", [&](std::uint64_t) {
                         const auto slots =
                             static_cast<std::size_t>(sc.cfg.slots);
                         const auto m = static_cast<std::size_t>(sc.cfg.n_uavs);
                         const auto start = circle_trajectory(
                             sc.ues, cat_radius, slots, m, sc.cfg.sys);
                         return run_cat(start, sc.tasks, sc.ues, sc.cfg.sys)
                             .objective.back();
                     }, false});
    nlohmann::json cp;
    if (!checkpoint.empty()) {
        cp = load_json(checkpoint);
        algos.push_back({"rat", [&, cp](std::uint64_t s) {
                             RatAgent agent(sc.cfg, 0);
                             agent.restore(cp);
                             const auto& takeoff =
                                 sc.takeoffs[s % sc.takeoffs.size()];
                             return agent.evaluate(sc, takeoff).sum_energy;
                         }, true});
    }

    // flatten (algorithm, seed) jobs; merge is by index so the output
    // order is stable regardless of thread scheduling
    struct Job { std::size_t algo; std::uint64_t seed; };
    std::vector<Job> jobs;
    for (std::size_t a = 0; a < algos.size(); ++a) {
        const std::size_t reps = algos[a].seeded ? n_seeds : 1;
        for (std::uint64_t s = 0; s < reps; ++s) jobs.push_back({a, s});
    }
    std::vector<double> energy(jobs.size());
    parallel_for(jobs.size(), [&](std::size_t i) {
        energy[i] = algos[jobs[i].algo].run(jobs[i].seed);
    });

    CsvWriter csv(out, {"algorithm", "runs", "mean_energy_J", "std_energy_J"});
    std::size_t cursor = 0;
    for (std::size_t a = 0; a < algos.size(); ++a) {
        const std::size_t reps = algos[a].seeded ? n_seeds : 1;
        double mean = 0.0;
        for (std::size_t s = 0; s < reps; ++s) mean += energy[cursor + s];
        mean /= static_cast<double>(reps);
        double var = 0.0;
        for (std::size_t s = 0; s < reps; ++s) {
            const double d = energy[cursor + s] - mean;
            var += d * d;
        }
        var /= static_cast<double>(reps);
        csv.row({algos[a].name, std::to_string(reps), fmt_double(mean),
                 fmt_double(std::sqrt(var))});
        cursor += reps;
    }
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_trace(const std::string& scenario_path, const std::string& out,
              const std::string& policy, const std::string& checkpoint,
              std::uint64_t seed, int clusters) {
    const Scenario sc = load_scenario(scenario_path);
    const auto& takeoff = sc.takeoffs[seed % sc.takeoffs.size()];
    EpisodeLog log;
    if (policy == "rm") {
        log = run_rm(sc, takeoff, seed);
    } else if (policy == "cm") {
        log = run_cm(sc, takeoff, clusters, seed);
    } else if (policy == "rat") {
        if (checkpoint.empty())
            throw CLI::ValidationError("--checkpoint required for policy rat");
        RatAgent agent(sc.cfg, 0);
        agent.restore(load_json(checkpoint));
        log = agent.evaluate(sc, takeoff);
    } else {
        throw CLI::ValidationError("--policy must be rm, cm or rat");
    }

    CsvWriter csv(out, {"slot", "uav", "x", "y", "z", "battery_j",
                        "slot_energy_J", "slot_reward", "violations"});
    for (std::size_t t = 0; t < log.slots.size(); ++t)
        for (std::size_t j = 0; j < log.uav_states[t].size(); ++j) {
            const auto& u = log.uav_states[t][j];
            csv.row({std::to_string(t + 1), std::to_string(j), fmt_double(u.x),
                     fmt_double(u.y), fmt_double(u.z), fmt_double(u.battery_j),
                     fmt_double(log.slots[t].energy),
                     fmt_double(log.slots[t].reward),
                     std::to_string(log.slots[t].violations)});
        }
    std::cout << "wrote " << out << " (" << log.slots.size() << " slots, "
              << fmt_double(log.sum_energy) << " J total)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"desk-scale multi-UAV edge offloading laboratory"};
    app.require_subcommand(1);

    std::string config_path, scenario_path, out, out_dir, checkpoint;
    std::string init = "circle", policy = "rm";
    std::uint64_t seed = 0;
    bool uniform = false, holdout = false;
    int epochs = 0, pool = 0, seeds = 5, clusters = 6;
    double radius = 100.0;

    auto* gen = app.add_subcommand("gen", "generate a scenario file");
    gen->add_option("--config", config_path, "config JSON (defaults if omitted)");
    gen->add_option("--out", out, "output scenario JSON")->required();
    gen->add_option("--seed", seed, "override the config seed");

    auto* train = app.add_subcommand("train", "train the learned agent");
    train->add_option("--scenario", scenario_path, "scenario JSON")->required();
    train->add_option("--out-dir", out_dir, "output directory")->required();
    train->add_option("--seed", seed, "training seed");
    train->add_option("--epochs", epochs, "override epoch count");
    train->add_flag("--uniform", uniform, "uniform replay instead of prioritized");

    auto* eval = app.add_subcommand("eval", "replay a checkpoint");
    eval->add_option("--scenario", scenario_path, "scenario JSON")->required();
    eval->add_option("--checkpoint", checkpoint, "checkpoint JSON")->required();
    eval->add_option("--out", out, "output CSV")->required();
    eval->add_option("--pool", pool, "number of taking-off points (0 = all)");
    eval->add_flag("--holdout", holdout, "use held-out taking-off points");

    auto* cat = app.add_subcommand("cat", "run the alternating optimizer");
    cat->add_option("--scenario", scenario_path, "scenario JSON")->required();
    cat->add_option("--out", out, "trace CSV")->required();
    cat->add_option("--init", init, "initial trajectory: circle|cluster");
    cat->add_option("--radius", radius, "circle radius, m");
    cat->add_option("--clusters", clusters, "cluster count for --init cluster");
    cat->add_option("--seed", seed, "clustering seed");

    auto* compare = app.add_subcommand("compare", "summary over all policies");
    compare->add_option("--scenario", scenario_path, "scenario JSON")->required();
    compare->add_option("--out", out, "summary CSV")->required();
    compare->add_option("--checkpoint", checkpoint, "include the learned agent");
    compare->add_option("--seeds", seeds, "seeds per stochastic policy");
    compare->add_option("--clusters", clusters, "cluster-moving route size");
    compare->add_option("--radius", radius, "circle radius for the optimizer");

    auto* trace = app.add_subcommand("trace", "per-slot log of one policy");
    trace->add_option("--scenario", scenario_path, "scenario JSON")->required();
    trace->add_option("--out", out, "trace CSV")->required();
    trace->add_option("--policy", policy, "rm|cm|rat");
    trace->add_option("--checkpoint", checkpoint, "checkpoint for policy rat");
    trace->add_option("--seed", seed, "episode seed");
    trace->add_option("--clusters", clusters, "cluster-moving route size");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(config_path, out, seed);
        if (train->parsed())
            return cmd_train(scenario_path, out_dir, seed, uniform, epochs);
        if (eval->parsed())
            return cmd_eval(scenario_path, checkpoint, out, pool, holdout);
        if (cat->parsed())
            return cmd_cat(scenario_path, out, init, radius, clusters, seed);
        if (compare->parsed())
            return cmd_compare(scenario_path, out, checkpoint, seeds, clusters,
                               radius);
        if (trace->parsed())
            return cmd_trace(scenario_path, out, policy, checkpoint, seed,
                             clusters);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
