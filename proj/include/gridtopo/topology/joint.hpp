#pragma once
#include <cmath>
#include <map>
#include <set>
#include <vector>
#include <Eigen/Sparse>
#include <gridtopo/connectivity/design.hpp>
#include <gridtopo/connectivity/neighbors.hpp>
#include <gridtopo/topology/rules.hpp>

namespace gridtopo::topo {

/**
 * All directed regressions stacked into one system dz = P beta~. Row block
 * r (T rows) holds the target buses()[r]; for each unordered pair i < k the
 * columns are [beta~_k^(i), beta~_i^(k)], the first living in row block i
 * with entries d|v_k|, the second in row block k with entries d|v_i|.
 */
struct JointDesign
{
    Eigen::VectorXd response;
    Eigen::SparseMatrix<double> design;
    std::vector<bus_t> buses;
    std::vector<Edge> pairs;
    /// pair -> (column of beta~_k^(i), column of beta~_i^(k)), i < k.
    std::map<Edge, std::pair<Eigen::Index, Eigen::Index>> columns;
};

namespace detail {

inline std::vector<Edge> all_pairs(const std::vector<bus_t>& buses)
{
    std::vector<bus_t> b = buses;
    std::sort(b.begin(), b.end());
    std::vector<Edge> out;
    for (std::size_t x = 0; x < b.size(); ++x) {
        for (std::size_t y = x + 1; y < b.size(); ++y) out.emplace_back(b[x], b[y]);
    }
    return out;
}

} // namespace detail

inline JointDesign build_joint_design(const DeltaPanel& delta, const std::vector<bus_t>& buses,
                                      std::vector<Edge> pairs)
{
    const Eigen::MatrixXd& d = delta.real();
    if (buses.size() < 2) throw error(errc::invalid_argument, "joint design needs at least 2 estimated buses");
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    std::map<bus_t, Eigen::Index> block;
    for (std::size_t r = 0; r < buses.size(); ++r) {
        if (!block.emplace(buses[r], static_cast<Eigen::Index>(r)).second) {
            throw error(errc::invalid_argument, "duplicate bus in joint design");
        }
    }
    const Eigen::Index T = d.rows();
    JointDesign out;
    out.buses = buses;
    out.pairs = pairs;
    out.response.resize(T * static_cast<Eigen::Index>(buses.size()));
    for (std::size_t r = 0; r < buses.size(); ++r) {
        out.response.segment(static_cast<Eigen::Index>(r) * T, T) = d.col(delta.require_column(buses[r]));
    }
    std::vector<Eigen::Triplet<double>> trip;
    Eigen::Index col = 0;
    for (const auto& e : pairs) {
        if (!block.count(e.a) || !block.count(e.b)) throw error(errc::invalid_argument, "pair outside the bus list");
        const auto ca = delta.require_column(e.a);
        const auto cb = delta.require_column(e.b);
        const Eigen::Index ra = block[e.a] * T;
        const Eigen::Index rb = block[e.b] * T;
        for (Eigen::Index t = 0; t < T; ++t) {
            if (d(t, cb) != 0.0) trip.emplace_back(ra + t, col, d(t, cb));
            if (d(t, ca) != 0.0) trip.emplace_back(rb + t, col + 1, d(t, ca));
        }
        out.columns[e] = {col, col + 1};
        col += 2;
    }
    out.design.resize(out.response.size(), col);
    out.design.setFromTriplets(trip.begin(), trip.end());
    return out;
}

/// Full joint design over every pair of the panel's buses: (M-1)(M-2) columns for M-1 buses.
inline JointDesign build_joint_design(const DeltaPanel& delta)
{
    if (delta.cols() < 2) throw error(errc::invalid_argument, "joint design needs at least 3 buses");
    return build_joint_design(delta, delta.buses(), detail::all_pairs(delta.buses()));
}

/// Residual variance per degree of freedom of the least-squares fit of `target` on `regs`.
inline double ols_residual_variance(const conn::PanelGram& gram, bus_t target, const std::vector<bus_t>& regs)
{
    const auto p = gram.problem(target, regs);
    double rss = p.yty;
    if (p.n_cols() > 0) {
        Eigen::LDLT<Eigen::MatrixXd> ldlt(p.gram);
        const Eigen::VectorXd b = ldlt.solve(p.xty);
        if (b.allFinite()) rss = std::max(0.0, p.yty - b.dot(p.xty));
    }
    const double dof = static_cast<double>(std::max<Eigen::Index>(1, p.n_obs - p.n_cols()));
    return rss / dof;
}

/**
 * Gram form of the joint problem on the centered panel. The Gram is block
 * diagonal by target: columns beta~_k^(i) and beta~_l^(i) meet in G_kl,
 * columns of different targets never overlap.
 * Pair groups (size 2) give the AND formulation, single columns the OR one.
 *
 * With `weights`, row block i is multiplied by weights[i]; the directed
 * coefficients keep their meaning and only the loss is reweighted.
 */
inline solver::GramProblem joint_problem(const conn::PanelGram& gram, const std::vector<bus_t>& buses,
                                         const std::vector<Edge>& pairs, Rule rule,
                                         const std::vector<double>& weights = {})
{
    if (gram.mode() != PanelMode::magnitude) {
        throw error(errc::mode_mismatch, "joint estimation needs a magnitude panel");
    }
    if (rule == Rule::and_or) throw error(errc::invalid_argument, "joint estimation supports the and/or rules only");
    if (!weights.empty() && weights.size() != buses.size()) {
        throw error(errc::invalid_argument, "one weight per estimated bus required");
    }
    std::map<Eigen::Index, double> w2;
    for (std::size_t r = 0; r < buses.size(); ++r) {
        const double w = weights.empty() ? 1.0 : weights[r];
        w2[gram.column(buses[r])] = w * w;
    }
    const auto P = static_cast<Eigen::Index>(2 * pairs.size());
    struct Col { Eigen::Index target; Eigen::Index reg; };
    std::vector<Col> cols;
    cols.reserve(static_cast<std::size_t>(P));
    for (const auto& e : pairs) {
        cols.push_back({gram.column(e.a), gram.column(e.b)});
        cols.push_back({gram.column(e.b), gram.column(e.a)});
    }
    solver::GramProblem p;
    p.gram = Eigen::MatrixXd::Zero(P, P);
    p.xty.resize(P);
    for (Eigen::Index x = 0; x < P; ++x) {
        const auto& cx = cols[static_cast<std::size_t>(x)];
        const double wx = w2.at(cx.target);
        p.xty(x) = wx * gram.cross(cx.reg, cx.target).real();
        for (Eigen::Index y = 0; y < P; ++y) {
            const auto& cy = cols[static_cast<std::size_t>(y)];
            if (cx.target == cy.target) p.gram(x, y) = wx * gram.cross(cx.reg, cy.reg).real();
        }
    }
    p.yty = 0.0;
    for (auto b : buses) {
        const auto c = gram.column(b);
        p.yty += w2.at(c) * gram.variance_sum(c);
    }
    p.n_obs = gram.rows() * static_cast<Eigen::Index>(buses.size());
    p.groups = solver::uniform_groups(P, rule == Rule::and_rule ? 2 : 1);
    return p;
}

/// 1/sigma_i per bus, sigma_i^2 from the least-squares fit on its candidate regressors.
inline std::vector<double> noise_weights(const conn::PanelGram& gram, const std::vector<bus_t>& buses,
                                         const std::vector<Edge>& pairs)
{
    std::map<bus_t, std::vector<bus_t>> regs;
    for (const auto& e : pairs) {
        regs[e.a].push_back(e.b);
        regs[e.b].push_back(e.a);
    }
    std::vector<double> w;
    for (auto b : buses) {
        const double v = ols_residual_variance(gram, b, regs[b]);
        w.push_back(v > 0.0 && std::isfinite(v) ? 1.0 / std::sqrt(v) : 1.0);
    }
    return w;
}

struct JointResult
{
    EdgeSet edges;
    solver::BicTrace trace;
    std::size_t selected = 0;
    double lambda = 0.0;
    bool cap_exceeded = false;
    /// Directed coefficients of the selected fit, keyed by (target, regressor).
    std::map<std::pair<bus_t, bus_t>, double> coefficients;
};

/**
 * Single joint solve over the candidate pairs. AND: an edge iff its pair
 * group is nonzero. OR: an edge iff either directed coefficient is nonzero.
 */
inline JointResult estimate_topology_joint(const conn::PanelGram& gram, const std::vector<bus_t>& buses,
                                           const std::vector<Edge>& pairs, Rule rule,
                                           const conn::NeighborConfig& cfg = {})
{
    const auto problem = joint_problem(gram, buses, pairs, rule,
                                       cfg.joint_noise_weights ? noise_weights(gram, buses, pairs) : std::vector<double>{});
    const solver::GroupLassoSolver lasso(problem);
    const auto grid = solver::default_lambda_grid(problem, cfg.path_points, cfg.path_ratio);
    const auto path = solver::fit_path(lasso, grid, cfg.fit);
    const auto sel = solver::select_lambda(path.trace, cfg.selection);
    const Eigen::VectorXd beta = path.fits[sel.index].flat();

    JointResult out;
    out.trace = path.trace;
    out.selected = sel.index;
    out.lambda = path.fits[sel.index].lambda;
    out.cap_exceeded = sel.cap_exceeded;
    const EdgeTag tag = rule == Rule::and_rule ? EdgeTag::and_rule : EdgeTag::or_rule;
    for (std::size_t j = 0; j < pairs.size(); ++j) {
        const double bi = beta(static_cast<Eigen::Index>(2 * j));
        const double bk = beta(static_cast<Eigen::Index>(2 * j + 1));
        const auto& e = pairs[j];
        if (bi != 0.0) out.coefficients[{e.a, e.b}] = bi;
        if (bk != 0.0) out.coefficients[{e.b, e.a}] = bk;
        if (bi != 0.0 || bk != 0.0) out.edges.insert(e.a, e.b, tag);
    }
    return out;
}

inline JointResult estimate_topology_joint(const DeltaPanel& delta, Rule rule, const conn::NeighborConfig& cfg = {})
{
    std::vector<bus_t> buses;
    for (auto b : delta.buses()) {
        if (cfg.slack && *cfg.slack == b && !cfg.include_slack) continue;
        buses.push_back(b);
    }
    if (buses.size() < 2) throw error(errc::invalid_argument, "joint estimation needs at least 2 estimated buses");
    return estimate_topology_joint(conn::PanelGram(delta), buses, detail::all_pairs(buses), rule, cfg);
}

} // namespace gridtopo::topo
