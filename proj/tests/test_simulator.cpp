#include <random>
#include <gtest/gtest.h>
#include <gridtopo/connectivity/design.hpp>
#include <gridtopo/core/admittance.hpp>
#include <gridtopo/simulator/diagnostics.hpp>
#include <gridtopo/simulator/networks.hpp>
#include <gridtopo/simulator/scenario.hpp>
#include "oracles.hpp"

using namespace gridtopo;
using namespace gridtopo::sim;

namespace {

ScenarioConfig config(Eigen::Index T, std::uint64_t seed, PanelMode mode = PanelMode::magnitude)
{
    ScenarioConfig c;
    c.T = T;
    c.seed = seed;
    c.mode = mode;
    return c;
}

} // namespace

TEST(Networks, BuiltinShapes)
{
    EXPECT_EQ(builtin_network("eightbus_radial").bus_count(), 8u);
    EXPECT_EQ(builtin_network("eightbus_radial").branches().size(), 7u);
    EXPECT_EQ(builtin_network("eightbus_mesh3").branches().size(), 10u);
    EXPECT_TRUE(builtin_network("eightbus_radial").edges().is_subset_of(builtin_network("eightbus_mesh3").edges()));
    const auto c5 = builtin_network("chain_5");
    EXPECT_EQ(c5.branches().size(), 4u);
    for (bus_t i = 1; i < 5; ++i) EXPECT_TRUE(c5.has_branch(i - 1, i));
    EXPECT_EQ(builtin_network("composite_large").bus_count(), 121u);
    EXPECT_EQ(builtin_network("composite_large").neighbors(0).size(), 8u);
    EXPECT_EQ(builtin_network("chainloop_30_3").branches().size(), 32u);
    EXPECT_EQ(builtin_network("feeder_40_3").branches().size(), 42u);
    EXPECT_EQ(builtin_network("lv_suburban_style").branches().size(), 114u);
    EXPECT_EQ(builtin_network("mv_urban_style").branches().size(), 34u);
    for (std::string bad : {"nine_bus", "chain_1", "chain_x", "feeder_10"}) {
        try {
            builtin_network(bad);
            FAIL() << bad;
        } catch (const error& e) {
            EXPECT_EQ(e.code(), errc::unknown_network) << bad;
        }
    }
}

TEST(Networks, AdmittanceValues)
{
    // Per-unit conversion of the published impedances.
    EXPECT_NEAR(std::abs(lv_admittance() - 1.0 / complex_t(0.019, 0.01)), 0.0, 1e-9);
    EXPECT_NEAR(std::abs(mv_admittance() - 1.0 / complex_t(0.0211, 0.0111)), 0.0, 1e-9);
    const auto mv = builtin_network("mv_urban_style");
    for (const auto& b : mv.branches()) EXPECT_EQ(b.admittance, mv_admittance());
}

TEST(Networks, EdgeSetIsAdmittanceSupport)
{
    for (std::string name : {"eightbus_mesh3", "chainloop_30_3", "feeder_50_5", "composite_large"}) {
        const auto net = builtin_network(name);
        const Eigen::MatrixXcd Y(build_admittance(net));
        EdgeSet support;
        for (Eigen::Index i = 0; i < Y.rows(); ++i) {
            for (Eigen::Index k = i + 1; k < Y.cols(); ++k) {
                if (Y(i, k) != complex_t{}) support.insert(static_cast<bus_t>(i), static_cast<bus_t>(k));
            }
        }
        EXPECT_TRUE(support.same_edges(net.edges())) << name;
    }
}

TEST(Injections, DeterministicAndIndependent)
{
    const auto cfg = config(10000, 42);
    const auto a = synth_injections(cfg, 5);
    EXPECT_EQ(a, synth_injections(cfg, 5));
    EXPECT_NE(a, synth_injections(config(10000, 43), 5));
    const Eigen::MatrixXd re = a.real();
    for (Eigen::Index i = 0; i < 5; ++i) {
        for (Eigen::Index k = i + 1; k < 5; ++k) {
            EXPECT_LE(std::abs(conn::sample_correlation(re.col(i), re.col(k))), 0.05);
        }
        EXPECT_LE(std::abs(diagnostic_autocorr(Eigen::VectorXcd(a.col(i)), 1)[1]), 0.05);
    }
    // E|xi|^2 = sigma^2.
    EXPECT_NEAR(std::sqrt(a.cwiseAbs2().mean()), cfg.injection_sigma, 0.02 * cfg.injection_sigma);
}

TEST(Voltages, MonotoneDropAlongChain)
{
    const auto net = builtin_network("chain_6");
    const auto cfg = config(3, 1);
    const auto p = solve_voltages(net, Eigen::MatrixXcd::Zero(3, 5), cfg);
    const Eigen::VectorXd m = p.mean_magnitudes();
    for (Eigen::Index i = 1; i < 6; ++i) EXPECT_LT(m(i), m(i - 1));
    EXPECT_EQ(m(0), 1.0);
}

TEST(Voltages, IncrementsSolveTheCircuitEquation)
{
    const auto net = builtin_network("eightbus_mesh3");
    const auto cfg = config(50, 3, PanelMode::phasor);
    const auto xi = synth_injections(cfg, 7);
    const auto panel = solve_voltages(net, xi, cfg);
    const Eigen::MatrixXcd dv = difference_panel(panel.select(net.non_slack_buses())).complex();
    const ReducedSystem sys(net);
    const Eigen::MatrixXcd Y(sys.matrix());
    for (Eigen::Index t = 1; t < 50; ++t) {
        const Eigen::VectorXcd dI = (xi.row(t) - xi.row(t - 1)).transpose();
        EXPECT_LT((Y * dv.row(t).transpose() - dI).cwiseAbs().maxCoeff(), 1e-10) << t;
    }
}

TEST(Voltages, LinearInInjections)
{
    const auto net = builtin_network("eightbus_radial");
    const auto cfg = config(20, 4, PanelMode::phasor);
    const auto xi = synth_injections(cfg, 7);
    const Eigen::MatrixXcd base = solve_voltages(net, Eigen::MatrixXcd::Zero(20, 7), cfg).phasors();
    const Eigen::MatrixXcd one = solve_voltages(net, xi, cfg).phasors() - base;
    const Eigen::MatrixXcd two = solve_voltages(net, 2.0 * xi, cfg).phasors() - base;
    EXPECT_LT((two - 2.0 * one).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Voltages, RejectsShapeMismatch)
{
    EXPECT_THROW(solve_voltages(builtin_network("chain_3"), Eigen::MatrixXcd::Zero(4, 3), config(4, 1)), error);
}

TEST(MeterNoise, LevelsAndDeterminism)
{
    const auto net = builtin_network("chain_3");
    auto cfg = config(4, 1, PanelMode::phasor);
    const auto clean = solve_voltages(net, Eigen::MatrixXcd::Zero(4, 2), cfg);
    EXPECT_EQ(add_meter_noise(clean, 0.0, 5).magnitudes(), clean.magnitudes());
    const auto noisy = add_meter_noise(clean, 0.01, 5);
    EXPECT_EQ(noisy.magnitudes(), add_meter_noise(clean, 0.01, 5).magnitudes());
    EXPECT_EQ(noisy.angles_deg(), clean.angles_deg());
    EXPECT_THROW(add_meter_noise(clean, -0.1, 5), error);
}

TEST(MeterNoise, RelativeStdOverAMillionEntries)
{
    std::vector<bus_t> ids(100);
    for (bus_t i = 0; i < 100; ++i) ids[i] = i;
    const auto clean = MeasurementPanel::from_magnitudes(Eigen::MatrixXd::Constant(10000, 100, 0.98), ids);
    const Eigen::ArrayXXd rel = add_meter_noise(clean, 0.005, 11).magnitudes().array() / 0.98 - 1.0;
    const double sd = std::sqrt((rel - rel.mean()).square().mean());
    EXPECT_GE(sd, 0.004);
    EXPECT_LE(sd, 0.006);
}

TEST(Simulate, SeededDeterminism)
{
    const auto a = simulate(config(100, 8, PanelMode::phasor));
    const auto b = simulate(config(100, 8, PanelMode::phasor));
    EXPECT_EQ(a.panel.magnitudes(), b.panel.magnitudes());
    EXPECT_EQ(a.panel.angles_deg(), b.panel.angles_deg());
    EXPECT_EQ(a.injections, b.injections);
    EXPECT_THROW(simulate(config(1, 8)), error);
    auto bad = config(10, 1);
    bad.injection_sigma = 0.0;
    EXPECT_THROW(simulate(bad), error);
}

TEST(Diagnostics, MiMatrix)
{
    const auto xi = synth_injections(config(10000, 12), 6);
    Eigen::MatrixXd x = xi.real();
    const auto mi = mi_matrix(x);
    EXPECT_TRUE(mi.isApprox(mi.transpose(), 0.0));
    for (Eigen::Index i = 0; i < 6; ++i) {
        EXPECT_EQ(mi(i, i), conn::mi_cap);
        for (Eigen::Index k = 0; k < 6; ++k) {
            if (i != k) {
                EXPECT_LE(mi(i, k), 0.01);
            }
        }
    }
    x.col(4) = x.col(1);
    EXPECT_EQ(mi_matrix(x)(1, 4), conn::mi_cap);
    EXPECT_NEAR(mi_matrix(xi)(0, 1), conn::mi_from_correlation(std::abs(
        (xi.col(0).array() - xi.col(0).mean()).matrix().dot((xi.col(1).array() - xi.col(1).mean()).matrix()) /
        std::sqrt((xi.col(0).array() - xi.col(0).mean()).abs2().sum() * (xi.col(1).array() - xi.col(1).mean()).abs2().sum()))),
        1e-12);
}

TEST(Diagnostics, MiMatrixOnIncrements)
{
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(5, 2);
    d.col(0) << 0, 1, 2, 3, 5;
    d.col(1) << 0, 2, 4, 6, 10;
    const auto mi = diagnostic_mi_matrix(DeltaPanel::magnitude(d, {1, 2}));
    EXPECT_EQ(mi(0, 1), conn::mi_cap);
}

TEST(Diagnostics, Autocorrelation)
{
    const auto xi = synth_injections(config(10000, 13), 1);
    const Eigen::VectorXd x = xi.col(0).real();
    const auto r = diagnostic_autocorr(x, 20);
    EXPECT_EQ(r[0], 1.0);
    for (std::size_t l = 1; l <= 20; ++l) EXPECT_LE(std::abs(r[l]), 0.05) << l;

    Eigen::VectorXd alt(10000);
    for (Eigen::Index t = 0; t < alt.size(); ++t) alt(t) = t % 2 ? -1.0 : 1.0;
    const auto ra = diagnostic_autocorr(alt, 1);
    // The standard estimator divides the lag sum by the full-length sum: -(T-1)/T.
    EXPECT_NEAR(ra[1], -1.0, 1e-4);
    EXPECT_DOUBLE_EQ(ra[1], -9999.0 / 10000.0);

    EXPECT_THROW(diagnostic_autocorr(Eigen::VectorXd(x.head(5)), 5), error);
    try {
        diagnostic_autocorr(Eigen::VectorXd(Eigen::VectorXd::Ones(10)), 2);
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::undefined_statistic);
    }
}

TEST(Diagnostics, PartialCorrelationMatchesResidualOracle)
{
    std::mt19937_64 gen(14);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(400, 5);
    for (Eigen::Index t = 1; t < 400; ++t) {
        for (Eigen::Index c = 0; c < 5; ++c) d(t, c) = nd(gen);
        d(t, 1) += 0.7 * d(t, 0);
        d(t, 2) += 0.5 * d(t, 1) + 0.3 * d(t, 3);
    }
    const DeltaPanel delta = DeltaPanel::magnitude(d, {1, 2, 3, 4, 5});
    const conn::PanelGram gram(delta);
    for (const std::vector<Eigen::Index>& cond : std::vector<std::vector<Eigen::Index>>{{}, {1}, {1, 3}, {3, 4, 1}}) {
        EXPECT_NEAR(partial_correlation(gram, 0, 2, cond), std::abs(oracle::partial_correlation(d, 0, 2, cond)), 1e-10);
    }
    EXPECT_EQ(partial_correlation(gram, 2, 2, {1}), 1.0);
    d.col(4) = d.col(3);
    const conn::PanelGram dup(DeltaPanel::magnitude(d, {1, 2, 3, 4, 5}));
    try {
        partial_correlation(dup, 0, 2, {3, 4});
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::rank_deficient);
    }
}

TEST(Diagnostics, ConditionalCorrelationOnChain)
{
    const auto net = builtin_network("chain_10");
    const auto panel = simulate(config(10000, 15, PanelMode::phasor), net).panel;
    const auto delta = difference_panel(panel.select(net.non_slack_buses()));
    for (auto mode : {Conditioning::neighbors, Conditioning::two_hop}) {
        const auto pairs = conditional_correlation(delta, net, mode);
        EXPECT_EQ(pairs.size(), 81u);
        for (const auto& p : pairs) {
            if (p.hops == 0) {
                EXPECT_EQ(p.value, 1.0);
            }
            if (p.hops == 1) {
                EXPECT_GE(p.value, 0.5) << p.i << "," << p.k;
            }
        }
    }
    // Given the two-hop blanket, pairs three or more hops apart decouple.
    for (const auto& p : conditional_correlation(delta, net, Conditioning::two_hop)) {
        if (p.hops >= 3) {
            EXPECT_LE(p.value, 0.1) << p.i << "," << p.k;
        }
    }
    const auto h = summarize_by_hops(conditional_correlation(delta, net, Conditioning::two_hop));
    EXPECT_GT(h.neighbor, h.two_hop);
    EXPECT_GT(h.two_hop, h.distant);
}

TEST(Diagnostics, HopSummary)
{
    const std::vector<PairCorrelation> p{{1, 1, 0, 1.0}, {1, 2, 1, 0.8}, {2, 1, 1, 0.6}, {1, 3, 2, 0.2}, {1, 4, 3, 0.05},
                                         {1, 5, 7, 0.03}};
    const auto h = summarize_by_hops(p);
    EXPECT_DOUBLE_EQ(h.neighbor, 0.7);
    EXPECT_DOUBLE_EQ(h.two_hop, 0.2);
    EXPECT_DOUBLE_EQ(h.distant, 0.04);
}
