// Acceptance run: one PASS/FAIL line per criterion, exit status 0 only if all pass.
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>
#include <unistd.h>
#include <gridtopo/cli/cli.hpp>
#include <gridtopo/metrics/metrics.hpp>
#include <gridtopo/simulator/diagnostics.hpp>
#include <gridtopo/simulator/scenario.hpp>
#include <gridtopo/solver/group_lasso.hpp>
#include <gridtopo/topology/estimate.hpp>

using namespace gridtopo;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds(clock_type::time_point t0)
{
    return std::chrono::duration<double>(clock_type::now() - t0).count();
}

int failures = 0;

void report(int n, bool pass, const std::string& detail)
{
    std::printf("criterion %2d: %s  %s\n", n, pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
    failures += !pass;
}

std::string fmt(const char* f, double a = 0, double b = 0, double c = 0, double d = 0)
{
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

EdgeSet truth_of(const NetworkModel& net)
{
    return net.edges_among(net.non_slack_buses());
}

topo::TopologyConfig config(topo::Rule rule)
{
    topo::TopologyConfig c;
    c.rule = rule;
    c.neighbor.slack = 0;
    return c;
}

// FISTA on the Gram form; the step is 1/L with L = 2 * lambda_max(G).
Eigen::VectorXd fista(const solver::GramProblem& p, double lambda, int iters)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(p.gram);
    const double L = 2.0 * es.eigenvalues().maxCoeff();
    const Eigen::Index n = p.n_cols();
    Eigen::VectorXd x = Eigen::VectorXd::Zero(n), y = x, prev = x;
    double t = 1.0;
    for (int it = 0; it < iters; ++it) {
        const Eigen::VectorXd g = 2.0 * (p.gram * y - p.xty);
        Eigen::VectorXd z = y - g / L;
        for (const auto& grp : p.groups) {
            z.segment(grp.start, grp.size) = solver::group_soft_threshold(z.segment(grp.start, grp.size), lambda / L);
        }
        prev = x;
        x = z;
        const double tn = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = x + ((t - 1.0) / tn) * (x - prev);
        t = tn;
    }
    return x;
}

void criterion1()
{
    const auto t0 = clock_type::now();
    std::mt19937_64 gen(2024);
    std::normal_distribution<double> nd;
    int ok = 0;
    double worst_gap = -1e300, worst_kkt = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
        const Eigen::Index T = 5 + static_cast<Eigen::Index>(gen() % 46);
        const std::size_t G = 1 + gen() % 10;
        std::vector<solver::Group> groups;
        Eigen::Index cols = 0;
        for (std::size_t g = 0; g < G; ++g) {
            const Eigen::Index s = 1 + static_cast<Eigen::Index>(gen() % 3);
            groups.push_back({cols, s});
            cols += s;
        }
        Eigen::MatrixXd X(T, cols);
        Eigen::VectorXd z(T);
        for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = nd(gen);
        for (Eigen::Index i = 0; i < T; ++i) z(i) = nd(gen);
        solver::GramProblem p;
        p.gram = X.transpose() * X;
        p.xty = X.transpose() * z;
        p.yty = z.squaredNorm();
        p.n_obs = T;
        p.groups = groups;
        const double lam = solver::lambda_max(p) * std::uniform_real_distribution<double>(0.01, 0.9)(gen);
        const auto est = solver::fit_group_lasso(p, lam);
        const Eigen::VectorXd oracle = fista(p, lam, 20000);
        const double gap = solver::objective(p, est.flat(), lam) - solver::objective(p, oracle, lam);
        worst_gap = std::max(worst_gap, gap);
        worst_kkt = std::max(worst_kkt, est.kkt_residual);
        ok += gap <= 1e-8 && est.kkt_residual <= 1e-6;
    }
    const double secs = seconds(t0);
    report(1, ok == 100 && secs < 5.0,
           fmt("%.0f/100 instances within 1e-8 of the oracle objective and KKT <= 1e-6 (worst gap %.2e, worst KKT %.2e)", ok,
               worst_gap, worst_kkt) +
               fmt(", solver+oracle %.2f s", secs));
}

void criterion2()
{
    const auto t0 = clock_type::now();
    bool pass = true;
    std::string detail;
    for (std::string name : {"eightbus_radial", "eightbus_mesh3"}) {
        const auto net = sim::builtin_network(name);
        const auto truth = truth_of(net);
        std::vector<double> er[3];
        int zero = 0;
        for (std::uint64_t s = 1; s <= 20; ++s) {
            sim::ScenarioConfig c;
            c.T = 2000;
            c.seed = s;
            const auto sc = sim::simulate(c, net);
            for (int r = 0; r < 3; ++r) {
                const auto rule = static_cast<topo::Rule>(r);
                const double e = metrics::edge_error_rate(truth, topo::estimate_topology(sc.panel, config(rule)).edges).error_rate;
                er[r].push_back(e);
                if (rule == topo::Rule::and_or && e == 0.0) ++zero;
            }
        }
        const double mand = median(er[0]), mor = median(er[1]), mao = median(er[2]);
        pass = pass && zero >= 19 && mao <= mor && mao <= mand;
        detail += name + fmt(": AND-OR 0%% in %.0f/20, median AND %.2f OR %.2f AND-OR %.2f; ", zero, mand, mor, mao);
    }
    const double secs = seconds(t0);
    report(2, pass && secs < 30.0, detail + fmt("%.1f s", secs));
}

void criterion3()
{
    const auto net = sim::builtin_network("feeder_50_5");
    const auto truth = truth_of(net);
    int ok = 0;
    std::size_t tg = 0, tp = 0;
    for (std::uint64_t s = 1; s <= 20; ++s) {
        sim::ScenarioConfig c;
        c.T = 2000;
        c.seed = s;
        c.mode = PanelMode::phasor;
        const auto sc = sim::simulate(c, net);
        auto cfg = config(topo::Rule::and_or);
        cfg.jobs = 4;
        const auto g = metrics::edge_error_rate(truth, topo::estimate_topology(sc.panel, cfg).edges).error_count();
        cfg.neighbor.split_complex = true;
        const auto p = metrics::edge_error_rate(truth, topo::estimate_topology(sc.panel, cfg).edges).error_count();
        ok += g <= p;
        tg += g;
        tp += p;
    }
    report(3, ok >= 18,
           fmt("feeder_50_5 phasor: group <= ungrouped in %.0f/20 seeds (total errors %.0f vs %.0f)", ok,
               static_cast<double>(tg), static_cast<double>(tp)));
}

void criterion4()
{
    const auto net = sim::builtin_network("chainloop_30_3");
    const auto truth = truth_of(net);
    int ok = 0;
    std::vector<double> er;
    for (std::uint64_t s = 1; s <= 20; ++s) {
        sim::ScenarioConfig c;
        c.T = 5000;
        c.seed = s;
        c.noise_level = 0.005;
        const auto sc = sim::simulate(c, net);
        auto cfg = config(topo::Rule::and_or);
        cfg.jobs = 4;
        const double e = metrics::edge_error_rate(truth, topo::estimate_topology(sc.panel, cfg).edges).error_rate;
        er.push_back(e);
        ok += e <= 5.0;
    }
    report(4, ok >= 18, fmt("chainloop_30_3, T=5000, noise 0.5%%: AND-OR ER <= 5%% in %.0f/20 seeds (median ER %.1f%%)", ok,
                            median(er)));
}

void criterion5()
{
    const auto net = sim::builtin_network("eightbus_mesh3");
    const auto truth = truth_of(net);
    const std::vector<Eigen::Index> Ts{50, 200, 1000, 5000};
    std::vector<std::vector<double>> er(Ts.size());
    for (std::uint64_t s = 1; s <= 10; ++s) {
        sim::ScenarioConfig c;
        c.T = 5000;
        c.seed = s;
        const auto sc = sim::simulate(c, net);
        for (std::size_t j = 0; j < Ts.size(); ++j) {
            const auto panel = sc.panel.head(Ts[j]);
            er[j].push_back(metrics::edge_error_rate(truth, topo::estimate_topology(panel, config(topo::Rule::and_or)).edges).error_rate);
        }
    }
    std::vector<double> med;
    for (const auto& v : er) med.push_back(median(v));
    bool mono = true;
    for (std::size_t j = 1; j < med.size(); ++j) mono = mono && med[j] <= med[j - 1];
    report(5, mono && med.back() == 0.0,
           fmt("eightbus_mesh3 median AND-OR ER at T=50/200/1000/5000: %.1f / %.1f / %.1f / %.1f", med[0], med[1], med[2], med[3]));
}

void criterion6()
{
    std::mt19937_64 gen(6);
    std::size_t violations = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t M = 2 + gen() % 12;
        std::vector<NeighborSet> sets;
        std::map<bus_t, double> mean;
        for (bus_t i = 0; i < M; ++i) {
            NeighborSet ns(i);
            for (bus_t k = 0; k < M; ++k) {
                if (k != i && gen() % 3 == 0) ns.add(k);
            }
            sets.push_back(ns);
            mean[i] = std::uniform_real_distribution<double>(0.9, 1.0)(gen);
        }
        const auto a = topo::combine_and(sets);
        const auto o = topo::combine_or(sets);
        const auto ao = topo::combine_and_or(sets, mean).edges;
        violations += !a.is_subset_of(ao);
        violations += !ao.is_subset_of(a.united(o));
        violations += !a.is_subset_of(o);
    }
    report(6, violations == 0, fmt("1000 random neighbor-set inputs, %.0f subset violations", static_cast<double>(violations)));
}

void criterion7()
{
    const auto net = sim::builtin_network("feeder_40_3");
    sim::ScenarioConfig c;
    c.T = 10000;
    c.seed = 1;
    c.mode = PanelMode::phasor;
    const auto sc = sim::simulate(c, net);
    const auto delta = difference_panel(sc.panel.select(net.non_slack_buses()));
    const auto h = sim::summarize_by_hops(sim::conditional_correlation(delta, net, sim::Conditioning::two_hop));
    const auto hn = sim::summarize_by_hops(sim::conditional_correlation(delta, net, sim::Conditioning::neighbors));
    const bool pass = h.neighbor > h.two_hop && h.two_hop > h.distant && h.distant <= 0.1;
    report(7, pass,
           fmt("feeder_40_3, T=10000, mean |partial corr| given N(i) u N2(i): neighbor %.3f, two-hop %.3f, distant %.3f", h.neighbor,
               h.two_hop, h.distant) +
               fmt(" (given N(i) only: %.3f / %.3f / %.3f)", hn.neighbor, hn.two_hop, hn.distant));
}

void criterion8()
{
    const auto t0 = clock_type::now();
    const auto net = sim::builtin_network("composite_large");
    sim::ScenarioConfig c;
    c.T = 2000;
    c.seed = 1;
    const auto sc = sim::simulate(c, net);
    auto cfg = config(topo::Rule::and_or);
    // Best of three runs for each variant damps scheduler noise.
    double full_s = 1e300, pre_s = 1e300;
    EdgeSet full, pre;
    for (int rep = 0; rep < 3; ++rep) {
        auto t = clock_type::now();
        full = topo::estimate_topology(sc.panel, cfg).edges;
        full_s = std::min(full_s, seconds(t));
    }
    cfg.prescreen_k = conn::default_prescreen_k(net.bus_count());
    for (int rep = 0; rep < 3; ++rep) {
        auto t = clock_type::now();
        pre = topo::estimate_topology(sc.panel, cfg).edges;
        pre_s = std::min(pre_s, seconds(t));
    }
    const double speed = full_s / pre_s;
    const double total = seconds(t0);
    const double er = metrics::edge_error_rate(truth_of(net), pre).error_rate;
    report(8, full.same_edges(pre) && speed >= 3.0 && total < 300.0,
           fmt("composite_large (%.0f buses), K=%.0f: ", static_cast<double>(net.bus_count()), static_cast<double>(*cfg.prescreen_k)) +
               "same edge set " + (full.same_edges(pre) ? "yes" : "no") + fmt(", full %.2f s, prescreened %.2f s", full_s, pre_s) +
               fmt(", speedup %.1fx, ER %.1f%%, %.1f s total", speed, er, total));
}

void criterion9()
{
    const std::vector<std::string> nets{"chain_3", "chain_4", "chain_5", "chain_6", "chain_7", "chain_8",
                                        "eightbus_radial", "eightbus_mesh3", "chainloop_8_1"};
    bool pass = true;
    std::string detail;
    for (const auto& name : nets) {
        const auto net = sim::builtin_network(name);
        int same = 0;
        for (std::uint64_t s = 1; s <= 10; ++s) {
            sim::ScenarioConfig c;
            c.T = 2000;
            c.seed = s;
            const auto sc = sim::simulate(c, net);
            auto cfg = config(topo::Rule::and_rule);
            const auto per_bus = topo::estimate_topology(sc.panel, cfg).edges;
            cfg.mode = topo::Mode::joint;
            same += per_bus.same_edges(topo::estimate_topology(sc.panel, cfg).edges);
        }
        pass = pass && same == 10;
        detail += name + " " + std::to_string(same) + "/10 ";
    }
    report(9, pass, "joint AND == per-bus AND: " + detail);
}

void criterion10()
{
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / ("gridtopo_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    std::ostringstream out, err;
    const int rc1 = cli::run_cli({"sweep", "--network", "eightbus_mesh3", "--T", "200,1000", "--noise", "0,0.001", "--rules",
                                  "and,and-or", "--seeds", "3", "--out", (root / "a").string()},
                                 out, err);
    std::ostringstream out2, err2;
    const int rc2 = rc1 == 0 ? cli::run_cli({"rerun", "--manifest", (root / "a" / "sweep_manifest.json").string(), "--out",
                                             (root / "b").string()},
                                            out2, err2)
                             : -1;
    bool same = rc2 == 0;
    for (const char* f : {"sweep.json", "sweep.csv"}) {
        same = same && fs::exists(root / "b" / f) && io::read_file(root / "a" / f) == io::read_file(root / "b" / f);
    }
    fs::remove_all(root);
    report(10, same, std::string("sweep rerun from its manifest: reports ") + (same ? "byte-identical" : "differ") +
                         (rc1 != 0 ? " (sweep failed: " + err.str() + ")" : "") + (rc2 > 0 ? " (rerun failed: " + err2.str() + ")" : ""));
}

} // namespace

int main()
{
    criterion1();
    criterion2();
    criterion3();
    criterion4();
    criterion5();
    criterion6();
    criterion7();
    criterion8();
    criterion9();
    criterion10();
    std::printf("%d of 10 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
