#include <random>
#include <gtest/gtest.h>
#include <gridtopo/connectivity/mutual_information.hpp>
#include <gridtopo/connectivity/neighbors.hpp>
#include <gridtopo/simulator/scenario.hpp>

using namespace gridtopo;
using namespace gridtopo::conn;

namespace {

/// Delta panel whose rows after the first are iid complex Gaussian.
DeltaPanel random_complex_delta(std::mt19937_64& gen, Eigen::Index T, Eigen::Index M)
{
    std::normal_distribution<double> nd;
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(T, M);
    for (Eigen::Index t = 1; t < T; ++t) {
        for (Eigen::Index j = 0; j < M; ++j) d(t, j) = {nd(gen), nd(gen)};
    }
    std::vector<bus_t> ids(static_cast<std::size_t>(M));
    for (std::size_t j = 0; j < ids.size(); ++j) ids[j] = j + 1;
    return DeltaPanel::phasor(std::move(d), ids);
}

DeltaPanel random_real_delta(std::mt19937_64& gen, Eigen::Index T, Eigen::Index M)
{
    std::normal_distribution<double> nd;
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(T, M);
    for (Eigen::Index t = 1; t < T; ++t) {
        for (Eigen::Index j = 0; j < M; ++j) d(t, j) = nd(gen);
    }
    std::vector<bus_t> ids(static_cast<std::size_t>(M));
    for (std::size_t j = 0; j < ids.size(); ++j) ids[j] = j + 1;
    return DeltaPanel::magnitude(std::move(d), ids);
}

NeighborConfig slack0()
{
    NeighborConfig c;
    c.slack = 0;
    return c;
}

std::set<bus_t> true_neighbors(const NetworkModel& net, bus_t i)
{
    std::set<bus_t> out;
    for (auto k : net.neighbors(i)) {
        if (k != net.slack()) out.insert(k);
    }
    return out;
}

std::set<bus_t> members(const NeighborSet& s)
{
    const auto m = s.members();
    return {m.begin(), m.end()};
}

} // namespace

TEST(ComplexDesign, SingleSampleBlock)
{
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(2, 2);
    d(1, 0) = {0.5, 0.0};
    d(1, 1) = {1.0, 2.0};
    const auto g = build_complex_design(DeltaPanel::phasor(d, {1, 2}), 1, {2});
    ASSERT_EQ(g.design().rows(), 4);
    ASSERT_EQ(g.design().cols(), 2);
    EXPECT_EQ(g.design()(1, 0), 1.0);
    EXPECT_EQ(g.design()(1, 1), -2.0);
    EXPECT_EQ(g.design()(3, 0), 2.0);
    EXPECT_EQ(g.design()(3, 1), 1.0);
    EXPECT_EQ(g.response()(1), 0.5);
    EXPECT_EQ(g.groups().size(), 1u);
    EXPECT_EQ(g.groups()[0].size, 2);
}

TEST(ComplexDesign, ZeroAndRealPanels)
{
    const auto z = build_complex_design(DeltaPanel::phasor(Eigen::MatrixXcd::Zero(5, 3), {1, 2, 3}), 2, {1, 3});
    EXPECT_TRUE(z.design().isZero(0.0));
    EXPECT_TRUE(z.response().isZero(0.0));

    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(6, 2);
    d.bottomRows(5).real().setRandom();
    const auto r = build_complex_design(DeltaPanel::phasor(d, {1, 2}), 1, {2});
    EXPECT_TRUE(r.response().tail(6).isZero(0.0));
    EXPECT_THROW(build_complex_design(DeltaPanel::magnitude(Eigen::MatrixXd::Zero(3, 2), {1, 2}), 1, {2}), error);
}

TEST(ComplexDesign, PanelGramMatchesExplicitDesign)
{
    std::mt19937_64 gen(21);
    Eigen::MatrixXcd d = random_complex_delta(gen, 30, 4).complex();
    // Zero-mean columns, so the centering inside PanelGram is a no-op.
    d.bottomRows(29).rowwise() -= d.bottomRows(29).colwise().mean();
    const DeltaPanel delta = DeltaPanel::phasor(d, {1, 2, 3, 4});
    const auto p = PanelGram(delta).problem(2, {1, 3, 4});
    const auto q = solver::GramProblem::from_design(build_complex_design(delta, 2, {1, 3, 4}));
    EXPECT_LT((p.gram - q.gram).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((p.xty - q.xty).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(p.yty, q.yty, 1e-10);
}

TEST(Neighbors, ExactLinearDependence)
{
    std::mt19937_64 gen(22);
    auto base = random_complex_delta(gen, 200, 3);
    Eigen::MatrixXcd d = base.complex();
    d.col(0) = 0.5 * d.col(1);
    const auto n = estimate_neighbors_complex(DeltaPanel::phasor(d, {1, 2, 3}), 1);
    EXPECT_EQ(members(n), (std::set<bus_t>{2}));
    EXPECT_NEAR(std::abs(n.coefficients.at(2) - complex_t(0.5, 0.0)), 0.0, 1e-3);
}

TEST(Neighbors, ZeroTargetHasNoNeighbors)
{
    std::mt19937_64 gen(23);
    Eigen::MatrixXcd d = random_complex_delta(gen, 50, 3).complex();
    d.col(0).setZero();
    EXPECT_EQ(estimate_neighbors_complex(DeltaPanel::phasor(d, {1, 2, 3}), 1).size(), 0u);
    Eigen::MatrixXd r = random_real_delta(gen, 50, 3).real();
    r.col(2).setZero();
    EXPECT_EQ(estimate_neighbors_magnitude(DeltaPanel::magnitude(r, {1, 2, 3}), 3).size(), 0u);
}

TEST(Neighbors, ModeMismatch)
{
    std::mt19937_64 gen(24);
    const auto r = random_real_delta(gen, 10, 3);
    const auto c = random_complex_delta(gen, 10, 3);
    EXPECT_THROW(estimate_neighbors_complex(r, 1), error);
    EXPECT_THROW(estimate_neighbors_magnitude(c, 1), error);
}

TEST(Neighbors, EightBusPhasorRecoversEveryNeighborSet)
{
    const auto net = sim::builtin_network("eightbus_mesh3");
    sim::ScenarioConfig cfg;
    cfg.T = 2000;
    cfg.mode = PanelMode::phasor;
    for (std::uint64_t seed : {1, 2, 3}) {
        cfg.seed = seed;
        const auto delta = difference_panel(sim::simulate(cfg, net).panel);
        for (auto i : net.non_slack_buses()) {
            const auto n = estimate_neighbors_complex(delta, i, slack0());
            EXPECT_EQ(members(n), true_neighbors(net, i)) << "bus " << i << " seed " << seed;
            // Grouping: real and imaginary parts are zero or nonzero together.
            for (const auto& [k, b] : n.coefficients) {
                EXPECT_TRUE(b.real() != 0.0 && b.imag() != 0.0) << "bus " << i << " member " << k;
            }
        }
    }
}

TEST(Neighbors, ThreeBusChainMagnitude)
{
    const auto net = sim::builtin_network("chain_3");
    sim::ScenarioConfig cfg;
    cfg.T = 1000;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        cfg.seed = seed;
        const auto delta = difference_panel(sim::simulate(cfg, net).panel);
        EXPECT_EQ(members(estimate_neighbors_magnitude(delta, 1, slack0())), (std::set<bus_t>{2}));
        EXPECT_EQ(members(estimate_neighbors_magnitude(delta, 2, slack0())), (std::set<bus_t>{1}));
    }
}

TEST(Neighbors, SizeOneGroupsGiveLassoObjective)
{
    std::mt19937_64 gen(25);
    const auto delta = random_real_delta(gen, 40, 5);
    const auto d = build_magnitude_design(delta, 1, {2, 3, 4, 5});
    const auto p = solver::GramProblem::from_design(d);
    const Eigen::VectorXd b = Eigen::VectorXd::Random(4);
    const double lam = 0.7;
    const double lasso = (d.response() - d.design() * b).squaredNorm() + lam * b.lpNorm<1>();
    EXPECT_NEAR(solver::objective(p, b, lam), lasso, 1e-12 * std::max(1.0, lasso));
}

TEST(Neighbors, DuplicateColumnsFlaggedAmbiguous)
{
    std::mt19937_64 gen(26);
    Eigen::MatrixXd d = random_real_delta(gen, 100, 4).real();
    d.col(3) = 2.0 * d.col(2);
    d.col(0) = 0.4 * d.col(1) + 0.3 * d.col(2) + 0.01 * random_real_delta(gen, 100, 1).real().col(0);
    const auto n = estimate_neighbors_magnitude(DeltaPanel::magnitude(d, {1, 2, 3, 4}), 1);
    EXPECT_FALSE(n.contains(3) && n.contains(4));
    EXPECT_EQ(n.ambiguous, (std::set<bus_t>{4}));
}

TEST(Neighbors, Deterministic)
{
    const auto net = sim::builtin_network("eightbus_radial");
    sim::ScenarioConfig cfg;
    cfg.seed = 5;
    const auto delta = difference_panel(sim::simulate(cfg, net).panel);
    for (auto i : net.non_slack_buses()) {
        const auto a = estimate_neighbors_magnitude(delta, i, slack0());
        const auto b = estimate_neighbors_magnitude(delta, i, slack0());
        EXPECT_EQ(a.coefficients, b.coefficients);
    }
}

TEST(MutualInformation, Examples)
{
    std::mt19937_64 gen(27);
    std::normal_distribution<double> nd;
    Eigen::VectorXd x(10000), y(10000);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        x(i) = nd(gen);
        y(i) = nd(gen);
    }
    EXPECT_EQ(gaussian_mutual_information(x, x), mi_cap);
    EXPECT_LE(gaussian_mutual_information(x, y), 0.01);
    EXPECT_NEAR(mi_from_correlation(0.8), -0.5 * std::log(0.36), 1e-12);
    EXPECT_NEAR(mi_from_correlation(0.8), 0.5108, 1e-4);
    // Constructed pair with sample correlation exactly 0.8.
    Eigen::VectorXd a = x.array() - x.mean();
    Eigen::VectorXd b = y.array() - y.mean();
    b -= (a.dot(b) / a.squaredNorm()) * a;
    b *= a.norm() / b.norm();
    const Eigen::VectorXd c = 0.8 * a + 0.6 * b;
    EXPECT_NEAR(gaussian_mutual_information(a, c), 0.5108256, 1e-6);
}

TEST(MutualInformation, Errors)
{
    const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(10, 0, 1);
    try {
        gaussian_mutual_information(x, Eigen::VectorXd::Ones(10));
        FAIL();
    } catch (const error& e) {
        EXPECT_EQ(e.code(), errc::undefined_statistic);
    }
    EXPECT_THROW(gaussian_mutual_information(x.head(2), x.head(2)), error);
    EXPECT_THROW(gaussian_mutual_information(x, x.head(5)), error);
}

TEST(Prescreen, NoScreeningReturnsAllByMi)
{
    std::mt19937_64 gen(28);
    Eigen::MatrixXd d = random_real_delta(gen, 200, 6).real();
    d.col(0) += 0.9 * d.col(3) + 0.5 * d.col(5);
    const DeltaPanel delta = DeltaPanel::magnitude(d, {1, 2, 3, 4, 5, 6});
    const auto r = prescreen_topk(delta, 1, 5);
    ASSERT_EQ(r.candidates.size(), 5u);
    EXPECT_EQ(r.candidates[0], 4u);
    EXPECT_EQ(r.candidates[1], 6u);
    for (std::size_t j = 1; j < r.scores.size(); ++j) EXPECT_GE(r.scores[j - 1], r.scores[j]);
    for (std::size_t j = 0; j < r.candidates.size(); ++j) {
        const auto c = delta.require_column(r.candidates[j]);
        EXPECT_NEAR(r.scores[j], gaussian_mutual_information(d.col(0), d.col(c)), 1e-10);
    }
    EXPECT_THROW(prescreen_topk(delta, 1, 0), error);
    EXPECT_THROW(prescreen_topk(delta, 1, 6), error);
}

TEST(Prescreen, TiesBrokenByBusId)
{
    std::mt19937_64 gen(29);
    Eigen::MatrixXd d = random_real_delta(gen, 100, 4).real();
    d.col(3) = d.col(1);
    d.col(0) += d.col(1);
    const auto r = prescreen_topk(DeltaPanel::magnitude(d, {1, 7, 3, 2}), 1, 2);
    EXPECT_EQ(r.candidates, (std::vector<bus_t>{2, 7}));
}

TEST(Prescreen, DefaultK)
{
    EXPECT_EQ(default_prescreen_k(8), 3u);
    EXPECT_EQ(default_prescreen_k(9), 3u);
    EXPECT_EQ(default_prescreen_k(121), 11u);
    EXPECT_EQ(default_prescreen_k(122), 12u);
}

namespace {

// Calls fn(name, bus, seed, delta, candidates, covered) for every non-slack bus of the small
// builtins over 20 seeds, with K = ceil(sqrt(M)).
template <class Fn>
void for_each_screened_bus(Fn&& fn)
{
    for (std::string name : {"eightbus_radial", "eightbus_mesh3"}) {
        const auto net = sim::builtin_network(name);
        const auto K = default_prescreen_k(net.bus_count());
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            sim::ScenarioConfig cfg;
            cfg.seed = seed;
            const auto panel = sim::simulate(cfg, net).panel;
            const auto delta = difference_panel(panel.select(net.non_slack_buses()));
            for (auto i : net.non_slack_buses()) {
                const auto r = prescreen_topk(delta, i, K);
                const std::set<bus_t> cand(r.candidates.begin(), r.candidates.end());
                const auto truth = true_neighbors(net, i);
                const bool ok = std::includes(cand.begin(), cand.end(), truth.begin(), truth.end());
                fn(name, net, i, seed, delta, cand, ok);
            }
        }
    }
}

} // namespace

TEST(Prescreen, TrueNeighborsAmongTopKOnBuiltins)
{
    std::size_t trials = 0, covered = 0;
    for_each_screened_bus([&](const std::string&, const NetworkModel&, bus_t, std::uint64_t, const DeltaPanel&,
                              const std::set<bus_t>&, bool ok) {
        ++trials;
        covered += ok;
    });
    EXPECT_GE(static_cast<double>(covered), 0.99 * static_cast<double>(trials)) << covered << "/" << trials;
}

TEST(Prescreen, RestrictedEstimateEqualsFullWhenCovered)
{
    std::size_t compared = 0, equal = 0;
    for_each_screened_bus([&](const std::string& name, const NetworkModel& net, bus_t i, std::uint64_t seed,
                              const DeltaPanel& delta, const std::set<bus_t>& cand, bool ok) {
        if (!ok) return;
        const PanelGram gram(delta);
        std::vector<bus_t> all;
        for (auto b : net.non_slack_buses()) {
            if (b != i) all.push_back(b);
        }
        const std::vector<bus_t> sub(cand.begin(), cand.end());
        const auto full = members(estimate_neighbors(gram, i, all).neighbors);
        const auto restricted = members(estimate_neighbors(gram, i, sub).neighbors);
        ++compared;
        equal += full == restricted;
        EXPECT_EQ(full, restricted) << name << " bus " << i << " seed " << seed;
    });
    EXPECT_EQ(equal, compared);
}
