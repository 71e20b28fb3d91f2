#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>
#include <gridtopo/solver/group_lasso.hpp>

namespace gridtopo::solver {

struct BicRecord
{
    double lambda = 0.0;
    double rss = 0.0;
    std::size_t active = 0;
    double bic = 0.0;
};

/// BIC(lambda) = RSS / (T~ sigma^2) + ln(T~) / T~ * k.
struct BicTrace
{
    std::vector<BicRecord> records;
    double sigma2 = 0.0;
    Eigen::Index n_obs = 0;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
};

/// `count` log-spaced points from `top` down to ratio*top. A zero top gives {0}.
inline std::vector<double> log_lambda_grid(double top, std::size_t count = 50, double ratio = 1e-3)
{
    if (!(top >= 0.0) || !std::isfinite(top)) throw error(errc::invalid_argument, "grid top must be finite and nonnegative");
    if (count == 0) throw error(errc::invalid_argument, "grid needs at least one point");
    if (!(ratio > 0.0 && ratio < 1.0)) throw error(errc::invalid_argument, "grid ratio must lie in (0, 1)");
    if (top == 0.0) return {0.0};
    std::vector<double> out(count);
    if (count == 1) {
        out[0] = top;
        return out;
    }
    const double lo = std::log(ratio);
    for (std::size_t i = 0; i < count; ++i) {
        out[i] = top * std::exp(lo * static_cast<double>(i) / static_cast<double>(count - 1));
    }
    out.back() = top * ratio;
    return out;
}

inline std::vector<double> default_lambda_grid(const GramProblem& p, std::size_t count = 50, double ratio = 1e-3)
{
    return log_lambda_grid(lambda_max(p), count, ratio);
}

/// Fills the BIC column of a trace from its RSS and k entries.
inline void compute_bic(BicTrace& trace)
{
    if (trace.empty()) return;
    const double n = static_cast<double>(trace.n_obs);
    const double dof = std::max(n - 1.0, 1.0);
    const double floor = 1e-300;
    trace.sigma2 = std::max(trace.records.back().rss / dof, floor);
    const double pen = std::log(std::max(n, 1.0)) / std::max(n, 1.0);
    for (auto& r : trace.records) {
        r.bic = r.rss / (n * trace.sigma2) + pen * static_cast<double>(r.active);
    }
}

struct PathResult
{
    std::vector<CoefficientEstimate> fits;
    BicTrace trace;
};

/**
 * Warm-started fits along a strictly decreasing grid. sigma^2 is the
 * residual variance (T~ - 1 degrees of freedom) at the last grid point.
 */
inline PathResult fit_path(const GroupLassoSolver& solver, const std::vector<double>& grid,
                           const FitOptions& opt = {})
{
    if (grid.empty()) throw error(errc::invalid_argument, "lambda grid is empty");
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i] < grid[i - 1])) throw error(errc::invalid_argument, "lambda grid must be strictly decreasing");
    }
    const GramProblem& p = solver.problem();
    PathResult out;
    out.trace.n_obs = p.n_obs;
    out.fits.reserve(grid.size());
    for (double lam : grid) {
        const CoefficientEstimate* warm = out.fits.empty() ? nullptr : &out.fits.back();
        out.fits.push_back(solver.fit(lam, opt, warm));
        const auto& f = out.fits.back();
        out.trace.records.push_back({lam, residual_sum_of_squares(p, f.flat()), f.active_count(), 0.0});
    }
    // Numerical round-off can make RSS tick up by ~1 ulp between neighbors.
    for (std::size_t i = 1; i < out.trace.records.size(); ++i) {
        auto& r = out.trace.records[i];
        r.rss = std::min(r.rss, out.trace.records[i - 1].rss);
    }
    compute_bic(out.trace);
    return out;
}

inline PathResult fit_path(const GramProblem& p, const std::vector<double>& grid, const FitOptions& opt = {})
{
    return fit_path(GroupLassoSolver(p), grid, opt);
}

inline PathResult fit_path(const GroupedDesign& d, const std::vector<double>& grid, const FitOptions& opt = {})
{
    return fit_path(GroupLassoSolver(GramProblem::from_design(d)), grid, opt);
}

enum class SelectionRule {
    min_bic,   ///< BIC minimum among entries with k <= cap
    weighted,  ///< minimum of BIC + weight * k among entries with k <= cap
};

inline const char* to_string(SelectionRule r)
{
    return r == SelectionRule::min_bic ? "min-bic" : "weighted";
}

inline SelectionRule parse_selection_rule(const std::string& s)
{
    if (s == "min-bic") return SelectionRule::min_bic;
    if (s == "weighted") return SelectionRule::weighted;
    throw error(errc::invalid_argument, "unknown selection rule '" + s + "' (expected min-bic, weighted)");
}

struct SelectionConfig
{
    SelectionRule rule = SelectionRule::weighted;
    std::size_t sparsity_cap = std::numeric_limits<std::size_t>::max();
    /// Extra BIC units an additional active group must buy (weighted rule).
    double weight = 0.3;
};

struct Selection
{
    std::size_t index = 0;
    bool cap_exceeded = false;
};

namespace detail {

inline Selection select_scored(const BicTrace& trace, std::size_t cap, double weight)
{
    if (trace.empty()) throw error(errc::invalid_argument, "empty BIC trace");
    Selection s;
    bool found = false;
    double best = 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto& r = trace.records[i];
        if (r.active > cap) continue;
        const double score = r.bic + weight * static_cast<double>(r.active);
        if (!found || score < best) {
            s.index = i;
            best = score;
            found = true;
        }
    }
    if (found) return s;
    s.cap_exceeded = true;
    s.index = 0;
    for (std::size_t i = 1; i < trace.size(); ++i) {
        if (trace.records[i].active < trace.records[s.index].active) s.index = i;
    }
    return s;
}

} // namespace detail

/**
 * Minimum-BIC entry among those with k <= cap, ties toward the larger lambda.
 * When every entry exceeds the cap, returns the sparsest one with
 * cap_exceeded set.
 */
inline Selection select_lambda(const BicTrace& trace, std::size_t sparsity_cap)
{
    return detail::select_scored(trace, sparsity_cap, 0.0);
}

/**
 * As above, but each active group also costs `weight` BIC units under the
 * weighted rule: a denser model is taken only if every extra group lowers
 * BIC by at least the weight.
 */
inline Selection select_lambda(const BicTrace& trace, const SelectionConfig& cfg)
{
    if (!(cfg.weight >= 0.0) || !std::isfinite(cfg.weight)) {
        throw error(errc::invalid_argument, "selection weight must be finite and nonnegative");
    }
    const double w = cfg.rule == SelectionRule::weighted ? cfg.weight : 0.0;
    return detail::select_scored(trace, cfg.sparsity_cap, w);
}

} // namespace gridtopo::solver
