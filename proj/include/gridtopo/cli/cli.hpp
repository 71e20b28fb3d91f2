#pragma once
#include <algorithm>
#include <chrono>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <tuple>
#include <optional>
#include <string>
#include <vector>
#include <CLI11.hpp>
#include <gridtopo/io/manifest.hpp>
#include <gridtopo/io/measurement_io.hpp>
#include <gridtopo/io/network_io.hpp>
#include <gridtopo/io/report.hpp>
#include <gridtopo/io/scenario_io.hpp>
#include <gridtopo/metrics/metrics.hpp>
#include <gridtopo/simulator/diagnostics.hpp>
#include <gridtopo/simulator/scenario.hpp>
#include <gridtopo/topology/estimate.hpp>

namespace gridtopo::cli {

namespace fs = std::filesystem;
using io::json;

/// Process exit codes; every failure also prints a JSON error object on stderr.
enum exit_code : int {
    ok = 0,
    failure = 1,
    usage = 2,
    bad_input = 3,
    io_failure = 4,
    insufficient = 5,
};

inline int exit_for(errc c)
{
    switch (c) {
        case errc::invalid_argument:
        case errc::unknown_network:
        case errc::mode_mismatch: return usage;
        case errc::parse_error:
        case errc::duplicate_branch:
        case errc::disconnected_network: return bad_input;
        case errc::io_error: return io_failure;
        case errc::insufficient_data: return insufficient;
        default: return failure;
    }
}

namespace detail {

using clock = std::chrono::steady_clock;

inline double since(clock::time_point t0)
{
    return std::chrono::duration<double>(clock::now() - t0).count();
}

/// Built-in name, or a network CSV when the argument names an existing file or ends in .csv.
inline NetworkModel resolve_network(const std::string& arg, bus_t slack, io::RunManifest* m)
{
    const fs::path p = io::resolve_data_path(arg);
    if (fs::exists(p) || p.extension() == ".csv") {
        auto net = io::load_network(p, slack);
        if (m) m->add_input(p);
        return net;
    }
    auto net = sim::builtin_network(arg);
    if (slack != net.slack()) throw error(errc::invalid_argument, "built-in networks have their slack at bus 0");
    return net;
}

inline std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    for (auto f : io::detail::split(s, ',')) {
        if (!f.empty()) out.emplace_back(f);
    }
    return out;
}

/// Estimation flags shared by estimate, path and sweep.
struct EstimateFlags
{
    std::string rule = "and-or";
    std::string selection = "weighted";
    double weight = 0.3;
    std::size_t cap = 0;
    std::size_t path_points = 50;
    double path_ratio = 1e-3;
    std::string prescreen;
    bool joint = false;
    bool split_complex = false;
    std::optional<bus_t> slack;
    bool include_slack = false;
    std::size_t jobs = 1;

    void add(CLI::App* app, bool with_rule = true)
    {
        if (with_rule) {
            app->add_option("--rule", rule, "Combination rule: and, or, and-or")->capture_default_str();
            app->add_flag("--joint", joint, "Single joint solve (and/or rules, magnitude panels)");
        }
        app->add_option("--selection", selection, "Lambda selection: weighted, min-bic")->capture_default_str();
        app->add_option("--weight", weight, "Per-group BIC weight of the weighted rule")->capture_default_str();
        app->add_option("--cap", cap, "Sparsity cap on active groups (0 = none)")->capture_default_str();
        app->add_option("--path-points", path_points, "Lambda grid size")->capture_default_str();
        app->add_option("--path-ratio", path_ratio, "Smallest lambda as a fraction of lambda_max")->capture_default_str();
        app->add_option("--prescreen", prescreen, "Top-K candidates per bus: an integer or 'auto' (ceil(sqrt(M)))");
        app->add_flag("--split-complex", split_complex, "Phasor panels: ungrouped real/imaginary penalties");
        app->add_option("--slack", slack, "Slack bus id (default 0)");
        app->add_flag("--include-slack", include_slack, "Treat the slack column as an ordinary bus");
        app->add_option("--jobs", jobs, "Worker threads for per-bus problems")->capture_default_str();
    }

    bus_t slack_id() const { return slack.value_or(0); }

    topo::TopologyConfig config(std::size_t bus_count) const
    {
        topo::TopologyConfig c;
        c.rule = topo::parse_rule(rule);
        c.mode = joint ? topo::Mode::joint : topo::Mode::per_bus;
        c.neighbor.path_points = path_points;
        c.neighbor.path_ratio = path_ratio;
        c.neighbor.selection.rule = solver::parse_selection_rule(selection);
        c.neighbor.selection.weight = weight;
        if (cap > 0) c.neighbor.selection.sparsity_cap = cap;
        c.neighbor.slack = slack_id();
        c.neighbor.include_slack = include_slack;
        c.neighbor.split_complex = split_complex;
        if (jobs == 0) throw error(errc::invalid_argument, "--jobs must be at least 1");
        c.jobs = jobs;
        if (prescreen == "auto") {
            c.prescreen_k = conn::default_prescreen_k(bus_count);
        } else if (!prescreen.empty()) {
            c.prescreen_k = io::parse_integer<std::size_t>(prescreen, 0);
            if (*c.prescreen_k == 0) throw error(errc::invalid_argument, "--prescreen must be positive");
        }
        return c;
    }

    json to_json() const
    {
        return {{"rule", rule},         {"selection", selection},         {"weight", weight},
                {"cap", cap},           {"path_points", path_points},     {"path_ratio", path_ratio},
                {"prescreen", prescreen}, {"joint", joint},               {"split_complex", split_complex},
                {"slack", slack_id()},  {"include_slack", include_slack}};
    }
};

/// Scenario flags shared by simulate, diagnose and sweep; a scenario file is read first, flags override.
struct ScenarioFlags
{
    std::string scenario_file;
    std::optional<std::string> network;
    std::optional<Eigen::Index> T;
    std::optional<double> sigma;
    std::optional<double> base_load;
    std::optional<double> noise;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> mode;

    void add(CLI::App* app, bool with_grid_axes = true)
    {
        app->add_option("--scenario", scenario_file, "Scenario key-value file");
        app->add_option("--network", network, "Built-in network name or network CSV");
        if (with_grid_axes) {
            app->add_option("--T", T, "Sample count");
            app->add_option("--noise", noise, "Relative meter noise std");
            app->add_option("--seed", seed, "Random seed");
        }
        app->add_option("--sigma", sigma, "Injection deviation std (per-unit)");
        app->add_option("--base-load", base_load, "Mean injected current per bus (per-unit)");
        app->add_option("--mode", mode, "Panel mode: magnitude, phasor");
    }

    sim::ScenarioConfig config(io::RunManifest* m) const
    {
        sim::ScenarioConfig c;
        if (!scenario_file.empty()) {
            const fs::path p = io::resolve_data_path(scenario_file);
            c = io::load_scenario(p);
            if (m) m->add_input(p);
        }
        if (network) c.network = *network;
        if (T) c.T = *T;
        if (sigma) c.injection_sigma = *sigma;
        if (base_load) c.base_load = *base_load;
        if (noise) c.noise_level = *noise;
        if (seed) c.seed = *seed;
        if (mode) c.mode = io::parse_mode(*mode);
        c.validate();
        return c;
    }
};

inline json scenario_json(const sim::ScenarioConfig& c)
{
    return {{"network", c.network},   {"T", c.T},
            {"injection_sigma", c.injection_sigma}, {"base_load", c.base_load},
            {"base_loads", c.base_loads}, {"noise_level", c.noise_level},
            {"seed", c.seed},         {"mode", to_string(c.mode)}};
}

inline MeasurementPanel read_panel(const std::string& path, const std::string& mode, io::RunManifest& m)
{
    const fs::path p = io::resolve_data_path(path);
    auto panel = io::load_measurements(p, io::parse_mode(mode));
    m.add_input(p);
    return panel;
}

inline void finish(io::RunManifest& m, const fs::path& dir, std::ostream& out, json summary)
{
    const std::string name = m.subcommand + "_manifest.json";
    io::write_file(dir / name, io::dump(m.to_json()));
    summary["manifest"] = (dir / name).string();
    out << summary.dump() << "\n";
}

/// Report objects carry the name of the manifest that accompanies them.
inline std::string report(const io::RunManifest& m, json body)
{
    body["manifest"] = m.subcommand + "_manifest.json";
    return io::dump(body);
}

} // namespace detail

/**
 * Entry point of the gridtopo tool. `args` excludes the program name.
 * Results go to files under --out plus a one-line JSON summary on `out`;
 * failures print {"error": {...}} on `err` and return a nonzero code.
 */
inline int run_cli(std::vector<std::string> args, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    using namespace detail;
    CLI::App app{"Distribution grid topology estimation from voltage measurements", "gridtopo"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(io::tool_version));

    std::string out_dir = ".";
    io::RunManifest man;
    // Arguments that reproduce this run, minus the output directory.
    std::vector<std::string> replay;
    for (std::size_t i = 1; i < args.size(); ++i) {
        if (args[i] == "--out") {
            ++i;
            continue;
        }
        if (args[i].rfind("--out=", 0) == 0) continue;
        replay.push_back(args[i]);
    }
    std::function<void()> action;

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "Simulate a measurement panel with ground truth");
    ScenarioFlags sim_flags;
    sim_flags.add(sim_cmd);
    sim_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sim_cmd->callback([&] {
        action = [&] {
            auto t0 = clock::now();
            const auto cfg = sim_flags.config(&man);
            const auto net = resolve_network(cfg.network, 0, &man);
            const auto sc = sim::simulate(cfg, net);
            man.timings_s["simulate"] = since(t0);
            man.config = scenario_json(cfg);
            man.seed = cfg.seed;
            const fs::path dir = io::resolve_data_path(out_dir);
            man.emit(dir, "panel.csv", io::format_measurements(sc.panel));
            man.emit(dir, "network.csv", io::format_network(net));
            man.emit(dir, "truth_edges.csv", io::format_edges(net.edges_among(net.non_slack_buses())));
            man.emit(dir, "scenario.txt", io::format_scenario(cfg));
            finish(man, dir, out, {{"command", "simulate"}, {"T", cfg.T}, {"buses", net.bus_count()},
                                   {"branches", net.branches().size()}, {"out", dir.string()}});
        };
    });

    // estimate
    auto* est_cmd = app.add_subcommand("estimate", "Estimate the topology from a measurement panel");
    std::string panel_path, mode = "magnitude", net_arg;
    EstimateFlags est_flags;
    est_cmd->add_option("--panel", panel_path, "Measurement CSV")->required();
    est_cmd->add_option("--mode", mode, "Panel mode: magnitude, phasor")->capture_default_str();
    est_cmd->add_option("--network", net_arg, "Optional network (name or CSV) for bus coverage checks");
    est_flags.add(est_cmd);
    est_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
    est_cmd->callback([&] {
        action = [&] {
            auto panel = read_panel(panel_path, mode, man);
            std::vector<std::string> notes;
            std::size_t bus_count = static_cast<std::size_t>(panel.cols());
            if (!net_arg.empty()) {
                const auto net = resolve_network(net_arg, est_flags.slack_id(), &man);
                bus_count = net.bus_count();
                std::vector<bus_t> keep;
                for (auto b : panel.buses()) {
                    if (b < net.bus_count()) keep.push_back(b);
                    else notes.push_back("bus " + std::to_string(b) + ": not in network, excluded");
                }
                for (bus_t b = 0; b < net.bus_count(); ++b) {
                    if (b != net.slack() && !panel.column_of(b)) {
                        notes.push_back("bus " + std::to_string(b) + ": no measurements, excluded from estimation");
                    }
                }
                if (keep.size() != panel.buses().size()) panel = panel.select(keep);
            }
            const auto cfg = est_flags.config(bus_count);
            auto t0 = clock::now();
            auto res = topo::estimate_topology(panel, cfg);
            man.timings_s["total"] = since(t0);
            man.timings_s["prescreen"] = res.timings.prescreen_s;
            man.timings_s["estimate"] = res.timings.estimate_s;
            man.timings_s["combine"] = res.timings.combine_s;
            notes.insert(notes.end(), res.warnings.begin(), res.warnings.end());
            res.warnings = notes;
            man.config = est_flags.to_json();
            man.config["mode"] = mode;
            json body = io::to_json(res);
            body["config"] = man.config;
            body["T"] = panel.rows();
            const fs::path dir = io::resolve_data_path(out_dir);
            man.emit(dir, "estimate.json", report(man, body));
            finish(man, dir, out, {{"command", "estimate"}, {"edges", res.edges.size()}, {"warnings", res.warnings.size()}});
        };
    });

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "Score an estimate against the true network");
    std::string estimate_path, truth_path;
    std::optional<bus_t> eval_slack;
    bool eval_with_slack = false;
    std::optional<std::uint64_t> eval_seed;
    eval_cmd->add_option("--estimate", estimate_path, "estimate.json written by 'estimate'")->required();
    auto* eval_net = eval_cmd->add_option("--network", net_arg, "True network (name or CSV)");
    eval_cmd->add_option("--truth", truth_path, "True edge list CSV (a,b)")->excludes(eval_net);
    eval_cmd->add_option("--slack", eval_slack, "Slack bus id (default 0)");
    eval_cmd->add_flag("--include-slack", eval_with_slack, "Count branches at the slack bus");
    eval_cmd->add_option("--seed", eval_seed, "Seed recorded in the trial metadata");
    eval_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
    eval_cmd->callback([&] {
        action = [&] {
            const fs::path ep = io::resolve_data_path(estimate_path);
            json est;
            try {
                est = json::parse(io::read_file(ep));
            } catch (const json::parse_error& ex) {
                throw error(errc::parse_error, ep.string() + ": " + ex.what());
            }
            man.add_input(ep);
            const EdgeSet estimate = io::edges_from_json(est.at("edges"));
            EdgeSet truth;
            if (!truth_path.empty()) {
                const fs::path tp = io::resolve_data_path(truth_path);
                truth = io::parse_edges(io::read_file(tp));
                man.add_input(tp);
            } else if (!net_arg.empty()) {
                const auto net = resolve_network(net_arg, eval_slack.value_or(0), &man);
                truth = eval_with_slack ? net.edges() : net.edges_among(net.non_slack_buses());
            } else {
                throw error(errc::invalid_argument, "evaluate needs --network or --truth");
            }
            auto rep = metrics::edge_error_rate(truth, estimate);
            rep.trial.seed = eval_seed.value_or(0);
            if (est.contains("T")) rep.trial.T = est["T"].get<long long>();
            if (est.contains("config")) rep.trial.rule = est["config"].value("rule", std::string());
            man.config = {{"include_slack", eval_with_slack}};
            man.seed = eval_seed;
            const fs::path dir = io::resolve_data_path(out_dir);
            man.emit(dir, "evaluation.json", report(man, io::to_json(rep)));
            finish(man, dir, out, {{"command", "evaluate"}, {"error_rate", rep.error_rate},
                                   {"false_edges", rep.false_edges.size()}, {"missing_edges", rep.missing_edges.size()}});
        };
    });

    // path
    auto* path_cmd = app.add_subcommand("path", "Export the lambda path and BIC trace of one bus");
    bus_t path_bus = 1;
    EstimateFlags path_flags;
    path_cmd->add_option("--panel", panel_path, "Measurement CSV")->required();
    path_cmd->add_option("--mode", mode, "Panel mode: magnitude, phasor")->capture_default_str();
    path_cmd->add_option("--bus", path_bus, "Target bus")->required();
    path_flags.add(path_cmd, false);
    path_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
    path_cmd->callback([&] {
        action = [&] {
            const auto panel = read_panel(panel_path, mode, man);
            const auto cfg = path_flags.config(static_cast<std::size_t>(panel.cols()));
            const DeltaPanel delta = difference_panel(panel);
            const conn::PanelGram gram(delta);
            const auto targets = topo::estimated_buses(panel.buses(), cfg.neighbor);
            if (std::find(targets.begin(), targets.end(), path_bus) == targets.end()) {
                throw error(errc::invalid_argument, "bus " + std::to_string(path_bus) + " is not an estimated bus");
            }
            std::vector<bus_t> pool;
            for (auto b : targets) {
                if (b != path_bus) pool.push_back(b);
            }
            if (cfg.prescreen_k) {
                pool = conn::prescreen_topk(gram, path_bus, pool, std::min(*cfg.prescreen_k, pool.size())).candidates;
                std::sort(pool.begin(), pool.end());
            }
            const auto est = conn::estimate_neighbors(gram, path_bus, pool, cfg.neighbor);
            man.config = path_flags.to_json();
            man.config["mode"] = mode;
            man.config["bus"] = path_bus;
            json body{{"bus", path_bus},
                      {"candidates", pool},
                      {"trace", io::to_json(est.trace)},
                      {"selected", est.selected},
                      {"lambda", est.lambda},
                      {"neighbors", est.neighbors.members()},
                      {"cap_exceeded", est.cap_exceeded}};
            const fs::path dir = io::resolve_data_path(out_dir);
            man.emit(dir, "path.json", report(man, body));
            finish(man, dir, out, {{"command", "path"}, {"points", est.trace.size()}, {"selected", est.selected}});
        };
    });

    // diagnose
    auto* diag_cmd = app.add_subcommand("diagnose", "Mutual information, autocorrelation and conditional correlation");
    ScenarioFlags diag_flags;
    std::string what = "mi,autocorr,condcorr", conditioning = "neighbors";
    std::size_t maxlag = 20;
    diag_cmd->add_option("--panel", panel_path, "Measurement CSV (otherwise a scenario is simulated)");
    diag_flags.add(diag_cmd);
    diag_cmd->add_option("--what", what, "Comma list of mi, autocorr, condcorr")->capture_default_str();
    diag_cmd->add_option("--maxlag", maxlag, "Largest autocorrelation lag")->capture_default_str();
    diag_cmd->add_option("--conditioning", conditioning, "Conditioning set: neighbors, two-hop")->capture_default_str();
    diag_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
    diag_cmd->callback([&] {
        action = [&] {
            std::optional<NetworkModel> net;
            std::optional<MeasurementPanel> panel;
            std::optional<Eigen::MatrixXcd> injections;
            json body;
            if (!panel_path.empty()) {
                panel = read_panel(panel_path, diag_flags.mode.value_or("magnitude"), man);
                if (diag_flags.network) net = resolve_network(*diag_flags.network, 0, &man);
                body["source"] = "panel";
            } else {
                const auto cfg = diag_flags.config(&man);
                net = resolve_network(cfg.network, 0, &man);
                auto sc = sim::simulate(cfg, *net);
                panel = std::move(sc.panel);
                injections = std::move(sc.injections);
                man.config = scenario_json(cfg);
                man.seed = cfg.seed;
                body["source"] = "simulated";
            }
            std::vector<bus_t> buses;
            for (auto b : panel->buses()) {
                if (!net || b != net->slack()) buses.push_back(b);
            }
            const DeltaPanel delta = difference_panel(panel->select(buses));
            const auto items = split_list(what);
            for (const auto& w : items) {
                if (w == "mi") {
                    // Injection deviations when simulated, voltage increments otherwise.
                    if (injections) {
                        body["mi"] = {{"series", "injection"}, {"buses", buses}, {"matrix", io::to_json(sim::mi_matrix(*injections))}};
                    } else {
                        body["mi"] = {{"series", "voltage_increment"}, {"buses", buses},
                                      {"matrix", io::to_json(sim::diagnostic_mi_matrix(delta))}};
                    }
                } else if (w == "autocorr") {
                    json per = json::object();
                    std::vector<double> mean(maxlag + 1, 0.0);
                    for (std::size_t j = 0; j < buses.size(); ++j) {
                        const auto jj = static_cast<Eigen::Index>(j);
                        const auto r = injections ? sim::diagnostic_autocorr(Eigen::VectorXcd(injections->col(jj)), maxlag)
                                       : delta.mode() == PanelMode::magnitude
                                           ? sim::diagnostic_autocorr(Eigen::VectorXd(delta.real().col(jj).tail(delta.rows() - 1)), maxlag)
                                           : sim::diagnostic_autocorr(Eigen::VectorXcd(delta.complex().col(jj).tail(delta.rows() - 1)), maxlag);
                        per[std::to_string(buses[j])] = r;
                        for (std::size_t l = 0; l <= maxlag; ++l) mean[l] += r[l] / static_cast<double>(buses.size());
                    }
                    body["autocorr"] = {{"series", injections ? "injection" : "voltage_increment"},
                                        {"per_bus", per}, {"mean", mean}};
                } else if (w == "condcorr") {
                    if (!net) throw error(errc::invalid_argument, "condcorr needs --network");
                    sim::Conditioning cm;
                    if (conditioning == "neighbors") cm = sim::Conditioning::neighbors;
                    else if (conditioning == "two-hop") cm = sim::Conditioning::two_hop;
                    else throw error(errc::invalid_argument, "unknown conditioning '" + conditioning + "'");
                    const auto pairs = sim::conditional_correlation(delta, *net, cm);
                    json rows = json::array();
                    for (const auto& p : pairs) rows.push_back({{"i", p.i}, {"k", p.k}, {"hops", p.hops}, {"value", p.value}});
                    const auto h = sim::summarize_by_hops(pairs);
                    body["condcorr"] = {{"conditioning", conditioning},
                                        {"pairs", rows},
                                        {"mean_by_hops", {{"neighbor", h.neighbor}, {"two_hop", h.two_hop}, {"distant", h.distant}}}};
                } else {
                    throw error(errc::invalid_argument, "unknown diagnostic '" + w + "'");
                }
            }
            const fs::path dir = io::resolve_data_path(out_dir);
            man.emit(dir, "diagnose.json", report(man, body));
            finish(man, dir, out, {{"command", "diagnose"}, {"items", items}});
        };
    });

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "Error rate over a grid of T, noise level and rule");
    ScenarioFlags sweep_flags;
    EstimateFlags sweep_est;
    std::string t_list = "50,200,1000,5000", noise_list = "0", rule_list = "and,or,and-or";
    std::size_t seeds = 10;
    std::uint64_t first_seed = 1;
    sweep_flags.add(sweep_cmd, false);
    sweep_est.add(sweep_cmd, false);
    sweep_cmd->add_option("--T", t_list, "Comma list of sample counts")->capture_default_str();
    sweep_cmd->add_option("--noise", noise_list, "Comma list of noise levels")->capture_default_str();
    sweep_cmd->add_option("--rules", rule_list, "Comma list of rules")->capture_default_str();
    sweep_cmd->add_option("--seeds", seeds, "Number of seeds")->capture_default_str();
    sweep_cmd->add_option("--first-seed", first_seed, "First seed")->capture_default_str();
    sweep_cmd->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sweep_cmd->callback([&] {
        action = [&] {
            auto base = sweep_flags.config(&man);
            const auto net = resolve_network(base.network, 0, &man);
            std::vector<Eigen::Index> Ts;
            for (const auto& s : split_list(t_list)) Ts.push_back(io::parse_integer<Eigen::Index>(s, 0));
            std::vector<double> noises;
            for (const auto& s : split_list(noise_list)) noises.push_back(io::parse_double(s, 0));
            const auto rules = split_list(rule_list);
            if (Ts.empty() || noises.empty() || rules.empty() || seeds == 0) {
                throw error(errc::invalid_argument, "sweep needs at least one T, noise level, rule and seed");
            }
            for (const auto& r : rules) topo::parse_rule(r);
            const Eigen::Index Tmax = *std::max_element(Ts.begin(), Ts.end());
            const EdgeSet truth = net.edges_among(net.non_slack_buses());

            auto t0 = clock::now();
            json rows = json::array();
            std::map<std::tuple<Eigen::Index, double, std::string>, std::vector<double>> cells;
            std::string csv = "T,noise,rule,seed,error_rate,false_edges,missing_edges\n";
            for (std::size_t s = 0; s < seeds; ++s) {
                const std::uint64_t seed = first_seed + s;
                // One simulation per seed at the largest T; shorter runs use its leading rows.
                auto cfg = base;
                cfg.T = Tmax;
                cfg.seed = seed;
                cfg.noise_level = 0.0;
                const auto clean = sim::simulate(cfg, net).panel;
                for (double nz : noises) {
                    const auto noisy = sim::add_meter_noise(clean, nz, seed);
                    for (auto T : Ts) {
                        const auto panel = noisy.head(T);
                        for (const auto& r : rules) {
                            auto flags = sweep_est;
                            flags.rule = r;
                            const auto res = topo::estimate_topology(panel, flags.config(net.bus_count()));
                            auto rep = metrics::edge_error_rate(truth, res.edges);
                            rows.push_back({{"T", T}, {"noise", nz}, {"rule", r}, {"seed", seed},
                                            {"error_rate", rep.error_rate},
                                            {"false_edges", rep.false_edges.size()},
                                            {"missing_edges", rep.missing_edges.size()}});
                            csv += std::to_string(T) + "," + io::format_double(nz) + "," + r + "," + std::to_string(seed) +
                                   "," + io::format_double(rep.error_rate) + "," + std::to_string(rep.false_edges.size()) +
                                   "," + std::to_string(rep.missing_edges.size()) + "\n";
                            cells[{T, nz, r}].push_back(rep.error_rate);
                        }
                    }
                }
            }
            man.timings_s["sweep"] = since(t0);
            json summary = json::array();
            for (auto& [key, v] : cells) {
                auto sorted = v;
                std::sort(sorted.begin(), sorted.end());
                const std::size_t n = sorted.size();
                const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
                double mean = 0.0;
                for (double x : v) mean += x / static_cast<double>(n);
                const auto zeros = static_cast<std::size_t>(std::count(v.begin(), v.end(), 0.0));
                summary.push_back({{"T", std::get<0>(key)}, {"noise", std::get<1>(key)}, {"rule", std::get<2>(key)},
                                   {"median_error_rate", median}, {"mean_error_rate", mean}, {"zero_error_runs", zeros},
                                   {"runs", n}});
            }
            man.config = scenario_json(base);
            man.config["estimate"] = sweep_est.to_json();
            man.config["T_list"] = Ts;
            man.config["noise_list"] = noises;
            man.config["rules"] = rules;
            man.config["seeds"] = seeds;
            man.config["first_seed"] = first_seed;
            man.seed = first_seed;
            const fs::path dir = io::resolve_data_path(out_dir);
            man.emit(dir, "sweep.json", report(man, {{"rows", rows}, {"summary", summary}, {"network", base.network}}));
            man.emit(dir, "sweep.csv", csv);
            finish(man, dir, out, {{"command", "sweep"}, {"runs", rows.size()}});
        };
    });

    // rerun
    auto* rerun_cmd = app.add_subcommand("rerun", "Repeat a run from its manifest and compare the outputs");
    std::string manifest_path;
    rerun_cmd->add_option("--manifest", manifest_path, "Manifest written by an earlier run")->required();
    rerun_cmd->add_option("--out", out_dir, "Output directory for the repeated run")->capture_default_str();
    rerun_cmd->callback([&] {
        action = [&] {
            const fs::path mp = io::resolve_data_path(manifest_path);
            const auto old = io::load_manifest(mp);
            if (old.subcommand == "rerun") throw error(errc::invalid_argument, "cannot rerun a rerun manifest");
            for (const auto& [path, digest] : old.inputs) {
                if (io::file_sha256(path) != digest) throw error(errc::invalid_argument, "input '" + path + "' changed since the run");
            }
            std::vector<std::string> again{old.subcommand};
            again.insert(again.end(), old.args.begin(), old.args.end());
            again.push_back("--out");
            again.push_back(out_dir);
            std::ostringstream inner_out, inner_err;
            const int rc = run_cli(again, inner_out, inner_err);
            if (rc != ok) {
                err << inner_err.str();
                throw error(errc::invalid_argument, "repeated run failed");
            }
            const fs::path dir = io::resolve_data_path(out_dir);
            json files = json::object();
            bool identical = true;
            for (const auto& [name, digest] : old.outputs) {
                const bool same = fs::exists(dir / name) && io::file_sha256(dir / name) == digest;
                files[name] = same;
                identical = identical && same;
            }
            out << json{{"command", "rerun"}, {"identical", identical}, {"files", files}}.dump() << "\n";
            if (!identical) throw error(errc::invalid_argument, "outputs differ from the manifest");
        };
    });

    auto fail = [&](errc code, const std::string& msg, int rc) {
        err << json{{"error", {{"code", to_string(code)}, {"message", msg}, {"exit_code", rc}}}}.dump() << "\n";
        return rc;
    };
    try {
        std::vector<std::string> rev(args.rbegin(), args.rend());
        app.parse(rev);
        if (!args.empty()) {
            man.subcommand = args[0];
            man.args = replay;
        }
        if (action) action();
        return ok;
    } catch (const CLI::Success& e) {
        // --help / --version
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        return fail(errc::invalid_argument, e.what(), usage);
    } catch (const error& e) {
        return fail(e.code(), e.what(), exit_for(e.code()));
    } catch (const std::exception& e) {
        return fail(errc::invalid_argument, e.what(), failure);
    }
}

inline int run_cli(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    return run_cli(std::vector<std::string>(argv + 1, argv + argc), out, err);
}

} // namespace gridtopo::cli
