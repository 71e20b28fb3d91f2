#pragma once
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <gridtopo/solver/problem.hpp>

namespace gridtopo::solver {

/**
 * Proximal operator of threshold * ||.||_2:
 *   max(0, 1 - threshold / ||v||) * v,
 * returning the exact zero vector when ||v|| <= threshold.
 */
inline Eigen::VectorXd group_soft_threshold(const Eigen::VectorXd& v, double threshold)
{
    if (threshold < 0.0) throw error(errc::invalid_argument, "threshold must be nonnegative");
    const double n = v.norm();
    if (n <= threshold) return Eigen::VectorXd::Zero(v.size());
    return (1.0 - threshold / n) * v;
}

struct FitOptions
{
    double tol = 1e-6;       ///< KKT residual bound at return
    double rel_tol = 1e-8;   ///< relative coefficient change per sweep
    std::size_t max_iter = 10000; ///< sweeps
};

/// Solution of  min ||z - X gamma||^2 + lambda * sum_k ||gamma_k||_2.
struct CoefficientEstimate
{
    std::vector<Eigen::VectorXd> gamma;
    double lambda = 0.0;
    bool converged = false;
    std::size_t iterations = 0;
    double kkt_residual = 0.0;

    Eigen::VectorXd flat() const
    {
        Eigen::Index p = 0;
        for (const auto& g : gamma) p += g.size();
        Eigen::VectorXd out(p);
        Eigen::Index o = 0;
        for (const auto& g : gamma) {
            out.segment(o, g.size()) = g;
            o += g.size();
        }
        return out;
    }

    bool is_active(std::size_t k) const
    {
        return (gamma[k].array() != 0.0).any();
    }

    std::size_t active_count() const
    {
        std::size_t n = 0;
        for (std::size_t k = 0; k < gamma.size(); ++k) n += is_active(k);
        return n;
    }

    static CoefficientEstimate zeros(const std::vector<Group>& groups, double lambda)
    {
        CoefficientEstimate e;
        e.lambda = lambda;
        e.converged = true;
        for (const auto& g : groups) e.gamma.push_back(Eigen::VectorXd::Zero(g.size));
        return e;
    }
};

/// Smallest lambda whose solution is identically zero: max_k 2 ||X_k^T z||.
/// The factor 2 matches the unnormalized squared-error objective.
inline double lambda_max(const GramProblem& p)
{
    double out = 0.0;
    for (const auto& g : p.groups) {
        out = std::max(out, 2.0 * p.xty.segment(g.start, g.size).norm());
    }
    return out;
}

inline double lambda_max(const GroupedDesign& d)
{
    const Eigen::VectorXd xty = d.design().transpose() * d.response();
    double out = 0.0;
    for (const auto& g : d.groups()) {
        out = std::max(out, 2.0 * xty.segment(g.start, g.size).norm());
    }
    return out;
}

inline double residual_sum_of_squares(const GramProblem& p, const Eigen::VectorXd& beta)
{
    const double rss = p.yty - 2.0 * beta.dot(p.xty) + beta.dot(p.gram * beta);
    return std::max(rss, 0.0);
}

inline double objective(const GramProblem& p, const Eigen::VectorXd& beta, double lambda)
{
    double pen = 0.0;
    for (const auto& g : p.groups) pen += beta.segment(g.start, g.size).norm();
    return residual_sum_of_squares(p, beta) + lambda * pen;
}

/**
 * Largest violation of the stationarity conditions:
 *   active   ||-2 X_k^T r + lambda gamma_k / ||gamma_k|| ||
 *   inactive max(0, ||2 X_k^T r|| - lambda)
 */
inline double kkt_residual(const GramProblem& p, const Eigen::VectorXd& beta, double lambda)
{
    const Eigen::VectorXd xtr = p.xty - p.gram * beta;
    double worst = 0.0;
    for (const auto& g : p.groups) {
        const Eigen::VectorXd b = beta.segment(g.start, g.size);
        const Eigen::VectorXd grad = -2.0 * xtr.segment(g.start, g.size);
        const double bn = b.norm();
        const double v = bn > 0.0 ? (grad + lambda * b / bn).norm()
                                  : std::max(0.0, grad.norm() - lambda);
        worst = std::max(worst, v);
    }
    return worst;
}

namespace detail {

/// Per-group curvature data for the block update.
struct BlockCurvature
{
    bool isotropic = true;
    double scale = 0.0;           // X_k^T X_k = scale * I when isotropic
    Eigen::MatrixXd eigvecs;      // otherwise X_k^T X_k = Q diag(L) Q^T
    Eigen::VectorXd eigvals;
};

inline BlockCurvature block_curvature(const Eigen::MatrixXd& G)
{
    BlockCurvature c;
    const Eigen::Index s = G.rows();
    const double d0 = G(0, 0);
    double dev = 0.0;
    for (Eigen::Index i = 0; i < s; ++i) {
        for (Eigen::Index j = 0; j < s; ++j) {
            dev = std::max(dev, std::abs(G(i, j) - (i == j ? d0 : 0.0)));
        }
    }
    if (dev <= 1e-12 * std::max(std::abs(d0), std::numeric_limits<double>::min())) {
        c.isotropic = true;
        c.scale = std::max(d0, 0.0);
        return c;
    }
    c.isotropic = false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    c.eigvals = es.eigenvalues();
    c.eigvecs = es.eigenvectors();
    const double top = c.eigvals.maxCoeff();
    for (Eigen::Index j = 0; j < s; ++j) {
        if (c.eigvals(j) <= 1e-14 * top) c.eigvals(j) = 0.0;
    }
    return c;
}

/**
 * Minimizes gamma^T G gamma - 2 u^T gamma + lambda ||gamma|| for one block.
 * Nonzero solutions satisfy gamma = (G + lambda/(2t) I)^{-1} u with
 * t = ||gamma||, found as the root of sum_j u_j^2 / (L_j t + lambda/2)^2 = 1.
 */
inline Eigen::VectorXd block_update(const BlockCurvature& c, const Eigen::VectorXd& u, double lambda)
{
    const double half = 0.5 * lambda;
    const double un = u.norm();
    if (un <= half) return Eigen::VectorXd::Zero(u.size());
    if (c.isotropic) {
        if (c.scale <= 0.0) return Eigen::VectorXd::Zero(u.size());
        return ((1.0 - half / un) / c.scale) * u;
    }
    Eigen::VectorXd ut = c.eigvecs.transpose() * u;
    double lmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < ut.size(); ++j) {
        if (c.eigvals(j) == 0.0) ut(j) = 0.0;
        else lmin = std::min(lmin, c.eigvals(j));
    }
    if (!std::isfinite(lmin) || ut.norm() <= half) return Eigen::VectorXd::Zero(u.size());
    if (half == 0.0) {
        Eigen::VectorXd w(ut.size());
        for (Eigen::Index j = 0; j < ut.size(); ++j) w(j) = c.eigvals(j) > 0 ? ut(j) / c.eigvals(j) : 0.0;
        return c.eigvecs * w;
    }
    auto h = [&](double t, double* dh) {
        double v = 0.0, d = 0.0;
        for (Eigen::Index j = 0; j < ut.size(); ++j) {
            const double den = c.eigvals(j) * t + half;
            v += ut(j) * ut(j) / (den * den);
            d += -2.0 * ut(j) * ut(j) * c.eigvals(j) / (den * den * den);
        }
        if (dh) *dh = d;
        return v;
    };
    double lo = 0.0;
    double hi = ut.norm() / lmin;
    double t = 0.5 * hi;
    for (int it = 0; it < 200; ++it) {
        double dh = 0.0;
        const double f = h(t, &dh) - 1.0;
        if (f > 0.0) lo = t; else hi = t;
        double next = dh != 0.0 ? t - f / dh : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - t) <= 1e-15 * std::max(t, 1e-300)) { t = next; break; }
        t = next;
    }
    Eigen::VectorXd w(ut.size());
    for (Eigen::Index j = 0; j < ut.size(); ++j) w(j) = t * ut(j) / (c.eigvals(j) * t + half);
    return c.eigvecs * w;
}

} // namespace detail

/**
 * Group lasso by cyclic block coordinate descent on the Gram form,
 *   min ||z - sum_k X_k gamma_k||^2 + lambda sum_k ||gamma_k||_2,
 * with active-set sweeps between full sweeps. Returns with converged=true
 * once a full sweep changes gamma by less than rel_tol (relative) and the
 * KKT residual is at most tol; otherwise stops after max_iter sweeps.
 */
class GroupLassoSolver
{
public:
    explicit GroupLassoSolver(const GramProblem& problem)
        : orig_(problem)
    {
        orig_.validate();
        // Work on a copy with mean Gram diagonal 1; the minimizer is unchanged
        // when the Gram, X^T z, z^T z and lambda are all scaled alike.
        const double d = orig_.n_cols() > 0 ? orig_.gram.diagonal().mean() : 0.0;
        scale_ = d > 0.0 && std::isfinite(d) ? 1.0 / d : 1.0;
        p_ = orig_;
        p_.gram *= scale_;
        p_.xty *= scale_;
        p_.yty *= scale_;
        curv_.reserve(p_.groups.size());
        for (const auto& g : p_.groups) {
            curv_.push_back(detail::block_curvature(p_.gram.block(g.start, g.start, g.size, g.size)));
        }
    }

    const GramProblem& problem() const { return orig_; }

    CoefficientEstimate fit(double lambda, const FitOptions& opt = {},
                            const CoefficientEstimate* warm = nullptr) const
    {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
            throw error(errc::invalid_argument, "lambda must be a finite nonnegative number");
        }
        if (!(opt.tol > 0.0)) throw error(errc::invalid_argument, "tol must be positive");
        const double lam_user = lambda;
        lambda *= scale_;
        // KKT bound in both the working and the caller's units.
        const double ktol = opt.tol * std::min(1.0, scale_);

        const Eigen::Index P = p_.n_cols();
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(P);
        if (warm && warm->gamma.size() == p_.groups.size()) beta = warm->flat();
        Eigen::VectorXd xtr = p_.xty - p_.gram * beta;

        std::vector<char> active(p_.groups.size(), 0);
        auto refresh_active = [&] {
            for (std::size_t k = 0; k < p_.groups.size(); ++k) {
                const auto& g = p_.groups[k];
                active[k] = (beta.segment(g.start, g.size).array() != 0.0).any();
            }
        };
        refresh_active();

        auto sweep = [&](bool full) {
            double max_change = 0.0;
            for (std::size_t k = 0; k < p_.groups.size(); ++k) {
                if (!full && !active[k]) continue;
                const auto& g = p_.groups[k];
                const Eigen::VectorXd old = beta.segment(g.start, g.size);
                const Eigen::VectorXd u = xtr.segment(g.start, g.size)
                    + p_.gram.block(g.start, g.start, g.size, g.size) * old;
                const Eigen::VectorXd next = detail::block_update(curv_[k], u, lambda);
                const Eigen::VectorXd delta = next - old;
                const double dn = delta.lpNorm<Eigen::Infinity>();
                if (dn != 0.0) {
                    xtr.noalias() -= p_.gram.middleCols(g.start, g.size) * delta;
                    beta.segment(g.start, g.size) = next;
                    max_change = std::max(max_change, dn);
                }
                active[k] = (next.array() != 0.0).any();
            }
            const double scale = beta.lpNorm<Eigen::Infinity>();
            return scale > 0.0 ? max_change / scale : max_change;
        };

        CoefficientEstimate est;
        est.lambda = lambda;
        std::size_t iters = 0;
        bool converged = false;
        while (iters < opt.max_iter) {
            const double change = sweep(true);
            ++iters;
            if (change < opt.rel_tol) {
                xtr = p_.xty - p_.gram * beta;
                if (kkt_residual(p_, beta, lambda) <= ktol) {
                    converged = true;
                    break;
                }
            }
            if (polish(beta, lambda, 1e-3 * ktol)) {
                xtr = p_.xty - p_.gram * beta;
                refresh_active();
            }
            for (std::size_t inner = 0; inner < 100 && iters < opt.max_iter; ++inner) {
                const double c = sweep(false);
                ++iters;
                if (c < opt.rel_tol) break;
            }
        }
        est.iterations = iters;
        est.converged = converged;
        est.lambda = lam_user;
        est.kkt_residual = kkt_residual(orig_, beta, lam_user);
        est.gamma.reserve(p_.groups.size());
        for (const auto& g : p_.groups) est.gamma.push_back(beta.segment(g.start, g.size));
        return est;
    }

private:
    /**
     * Damped Newton steps on the active groups, where the objective is
     * smooth. Gradient 2(G b - c) + lambda b_k/||b_k||, Hessian
     * 2G + lambda (I - u u^T)/||b_k|| per block. A step that would take a
     * single-column group through zero stops there and drops the group.
     * Returns true if beta moved.
     */
    bool polish(Eigen::VectorXd& beta, double lambda, double gtol) const
    {
        std::vector<const Group*> act;
        for (const auto& g : p_.groups) {
            if ((beta.segment(g.start, g.size).array() != 0.0).any()) act.push_back(&g);
        }
        auto f = [&](const Eigen::VectorXd& v) {
            double pen = 0.0;
            for (const auto* g : act) pen += v.segment(g->start, g->size).norm();
            return v.dot(p_.gram * v) - 2.0 * p_.xty.dot(v) + lambda * pen;
        };
        bool moved = false;
        for (int it = 0; it < 50 && !act.empty(); ++it) {
            std::vector<Eigen::Index> idx;
            std::vector<std::pair<Eigen::Index, Eigen::Index>> blocks;
            for (const auto* g : act) {
                blocks.emplace_back(static_cast<Eigen::Index>(idx.size()), g->size);
                for (Eigen::Index j = 0; j < g->size; ++j) idx.push_back(g->start + j);
            }
            const Eigen::VectorXd b = beta(idx);
            Eigen::VectorXd grad = 2.0 * (p_.gram(idx, Eigen::all) * beta - p_.xty(idx));
            Eigen::MatrixXd H = 2.0 * p_.gram(idx, idx);
            for (auto [s, m] : blocks) {
                const Eigen::VectorXd bk = b.segment(s, m);
                const double nk = bk.norm();
                const Eigen::VectorXd u = bk / nk;
                grad.segment(s, m) += lambda * u;
                if (m > 1) H.block(s, s, m, m) += (lambda / nk) * (Eigen::MatrixXd::Identity(m, m) - u * u.transpose());
            }
            if (grad.lpNorm<Eigen::Infinity>() <= gtol) break;
            Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
            if (ldlt.info() != Eigen::Success) break;
            const Eigen::VectorXd d = -ldlt.solve(grad);
            const double slope = grad.dot(d);
            if (!d.allFinite() || !(slope < 0.0)) break;

            // First zero crossing among single-column groups.
            double tmax = 1.0;
            std::size_t hit = act.size();
            for (std::size_t q = 0; q < act.size(); ++q) {
                const auto [s, m] = blocks[q];
                if (m != 1 || b(s) * d(s) >= 0.0) continue;
                const double tc = -b(s) / d(s);
                if (tc < tmax) {
                    tmax = tc;
                    hit = q;
                }
            }
            Eigen::VectorXd full = beta;
            const double fb = f(beta);
            double t = tmax;
            bool accepted = false;
            for (int ls = 0; ls < 40; ++ls, t *= 0.5) {
                Eigen::VectorXd trial = b + t * d;
                if (t == tmax && hit < act.size()) trial(blocks[hit].first) = 0.0;
                full(idx) = trial;
                if (f(full) <= fb + 1e-4 * t * slope) {
                    accepted = true;
                    break;
                }
            }
            if (!accepted) break;
            beta = full;
            moved = true;
            if (t == tmax && hit < act.size()) act.erase(act.begin() + static_cast<std::ptrdiff_t>(hit));
        }
        return moved;
    }

    GramProblem orig_;
    GramProblem p_;
    double scale_ = 1.0;
    std::vector<detail::BlockCurvature> curv_;
};

inline CoefficientEstimate fit_group_lasso(const GramProblem& problem, double lambda,
                                           const FitOptions& opt = {})
{
    return GroupLassoSolver(problem).fit(lambda, opt);
}

inline CoefficientEstimate fit_group_lasso(const GroupedDesign& problem, double lambda,
                                           const FitOptions& opt = {})
{
    return GroupLassoSolver(GramProblem::from_design(problem)).fit(lambda, opt);
}

} // namespace gridtopo::solver
