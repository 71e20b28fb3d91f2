#pragma once
#include <map>
#include <optional>
#include <vector>
#include <gridtopo/connectivity/design.hpp>
#include <gridtopo/core/neighbor_set.hpp>
#include <gridtopo/solver/path.hpp>

namespace gridtopo::conn {

struct NeighborConfig
{
    std::size_t path_points = 50;
    double path_ratio = 1e-3;
    solver::SelectionConfig selection;
    solver::FitOptions fit;
    /// Slack bus id if its column is present in the panel.
    std::optional<bus_t> slack;
    /// Use the slack column as a regular regressor (non-constant slack).
    bool include_slack = false;
    /// Regressors whose centered correlation with an earlier one reaches this are dropped.
    double duplicate_tolerance = 1e-12;
    /// Phasor panels: penalize real and imaginary coefficients separately
    /// (plain lasso on the stacked design); k is a neighbor if either is nonzero.
    bool split_complex = false;
    /// Joint mode: weight each target's rows by its inverse least-squares residual std.
    bool joint_noise_weights = true;
};

/// Neighbor set plus the path diagnostics that produced it.
struct NeighborEstimate
{
    NeighborSet neighbors;
    solver::BicTrace trace;
    std::size_t selected = 0;
    double lambda = 0.0;
    bool cap_exceeded = false;
    bool converged = true;
    /// Coefficient-group norm per member (||gamma_k||).
    std::map<bus_t, double> group_norm;
};

/// Every panel column except the target (and the slack unless included).
inline std::vector<bus_t> default_regressors(const std::vector<bus_t>& columns, bus_t target,
                                             const NeighborConfig& cfg)
{
    std::vector<bus_t> out;
    for (auto b : columns) {
        if (b == target) continue;
        if (cfg.slack && *cfg.slack == b && !cfg.include_slack) continue;
        out.push_back(b);
    }
    return out;
}

/**
 * Algorithm: fit the (group) lasso path of target on regressors, pick lambda
 * by BIC, and declare k a neighbor iff its coefficient group is nonzero.
 */
inline NeighborEstimate estimate_neighbors(const PanelGram& gram, bus_t target,
                                           const std::vector<bus_t>& regressors,
                                           const NeighborConfig& cfg = {})
{
    if (cfg.slack && *cfg.slack == target && !cfg.include_slack) {
        throw error(errc::invalid_argument, "slack bus is not an estimation target");
    }
    NeighborEstimate out;
    out.neighbors = NeighborSet(target);

    std::vector<bus_t> kept;
    std::vector<Eigen::Index> kept_cols;
    for (auto k : regressors) {
        const Eigen::Index c = gram.column(k);
        bool dup = false;
        if (gram.variance_sum(c) > 0.0) {
            for (auto kc : kept_cols) {
                if (gram.variance_sum(kc) > 0.0 && gram.correlation(c, kc) >= 1.0 - cfg.duplicate_tolerance) {
                    dup = true;
                    break;
                }
            }
        }
        if (dup) {
            out.neighbors.ambiguous.insert(k);
        } else {
            kept.push_back(k);
            kept_cols.push_back(c);
        }
    }

    solver::GramProblem problem = gram.problem(target, kept);
    const bool split = cfg.split_complex && gram.mode() == PanelMode::phasor;
    if (split) problem.groups = solver::uniform_groups(problem.n_cols(), 1);
    const solver::GroupLassoSolver lasso(problem);
    const auto grid = solver::default_lambda_grid(problem, cfg.path_points, cfg.path_ratio);
    const auto path = solver::fit_path(lasso, grid, cfg.fit);
    const auto sel = solver::select_lambda(path.trace, cfg.selection);

    const auto& fit = path.fits[sel.index];
    out.trace = path.trace;
    out.selected = sel.index;
    out.lambda = fit.lambda;
    out.cap_exceeded = sel.cap_exceeded;
    out.converged = fit.converged;
    const Eigen::VectorXd flat = fit.flat();
    const Eigen::Index width = problem.n_cols() / std::max<Eigen::Index>(1, static_cast<Eigen::Index>(kept.size()));
    for (std::size_t j = 0; j < kept.size(); ++j) {
        const Eigen::VectorXd g = flat.segment(static_cast<Eigen::Index>(j) * width, width);
        if (!(g.array() != 0.0).any()) continue;
        const complex_t beta = width == 2 ? complex_t{g(0), g(1)} : complex_t{g(0), 0.0};
        out.neighbors.add(kept[j], beta);
        out.group_norm[kept[j]] = g.norm();
    }
    return out;
}

inline NeighborSet estimate_neighbors_complex(const DeltaPanel& delta, bus_t target, const NeighborConfig& cfg = {})
{
    if (delta.mode() != PanelMode::phasor) {
        throw error(errc::mode_mismatch, "complex estimation needs a phasor delta panel");
    }
    const PanelGram gram(delta);
    return estimate_neighbors(gram, target, default_regressors(delta.buses(), target, cfg), cfg).neighbors;
}

inline NeighborSet estimate_neighbors_magnitude(const DeltaPanel& delta, bus_t target, const NeighborConfig& cfg = {})
{
    if (delta.mode() != PanelMode::magnitude) {
        throw error(errc::mode_mismatch, "magnitude estimation needs a magnitude delta panel");
    }
    const PanelGram gram(delta);
    return estimate_neighbors(gram, target, default_regressors(delta.buses(), target, cfg), cfg).neighbors;
}

} // namespace gridtopo::conn
