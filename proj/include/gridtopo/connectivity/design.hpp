#pragma once
#include <vector>
#include <Eigen/Dense>
#include <gridtopo/core/panel.hpp>
#include <gridtopo/solver/problem.hpp>

namespace gridtopo::conn {

namespace detail {

inline std::vector<Eigen::Index> regressor_columns(const DeltaPanel& delta, bus_t target,
                                                   const std::vector<bus_t>& regressors)
{
    std::vector<Eigen::Index> cols;
    cols.reserve(regressors.size());
    for (auto k : regressors) {
        if (k == target) throw error(errc::invalid_argument, "target cannot be its own regressor");
        cols.push_back(delta.require_column(k));
    }
    return cols;
}

} // namespace detail

/**
 * Real form of dv_i = sum_k beta_k dv_k over 2T rows:
 *   z = [Re dv_i; Im dv_i],  X_k = [[Re dv_k, -Im dv_k], [Im dv_k, Re dv_k]],
 * so that X_k (g1, g2) stacks dv_k * (g1 + j g2). One 2-column group per regressor.
 */
inline solver::GroupedDesign build_complex_design(const DeltaPanel& delta, bus_t target,
                                                   const std::vector<bus_t>& regressors)
{
    const Eigen::MatrixXcd& d = delta.complex();
    const Eigen::Index ti = delta.require_column(target);
    const auto cols = detail::regressor_columns(delta, target, regressors);
    const Eigen::Index T = d.rows();
    const auto p = static_cast<Eigen::Index>(cols.size());

    Eigen::VectorXd z(2 * T);
    z.head(T) = d.col(ti).real();
    z.tail(T) = d.col(ti).imag();
    Eigen::MatrixXd X(2 * T, 2 * p);
    for (Eigen::Index k = 0; k < p; ++k) {
        const auto c = d.col(cols[static_cast<std::size_t>(k)]);
        X.block(0, 2 * k, T, 1) = c.real();
        X.block(T, 2 * k, T, 1) = c.imag();
        X.block(0, 2 * k + 1, T, 1) = -c.imag();
        X.block(T, 2 * k + 1, T, 1) = c.real();
    }
    return {std::move(X), std::move(z), solver::uniform_groups(2 * p, 2)};
}

/// d|v|_i = sum_k gamma_k d|v|_k with one single-column group per regressor.
inline solver::GroupedDesign build_magnitude_design(const DeltaPanel& delta, bus_t target,
                                                     const std::vector<bus_t>& regressors)
{
    const Eigen::MatrixXd& d = delta.real();
    const Eigen::Index ti = delta.require_column(target);
    const auto cols = detail::regressor_columns(delta, target, regressors);
    const auto p = static_cast<Eigen::Index>(cols.size());
    Eigen::MatrixXd X(d.rows(), p);
    for (Eigen::Index k = 0; k < p; ++k) X.col(k) = d.col(cols[static_cast<std::size_t>(k)]);
    return {std::move(X), d.col(ti), solver::uniform_groups(p, 1)};
}

/**
 * Cross-product matrix of the column-centered increment panel, computed once
 * and sliced per target. Phasor panels keep the Hermitian form H = D^H D;
 * the stacked real Gram follows from
 *   a_k.a_l = b_k.b_l = Re H_kl,  a_k.b_l = -Im H_kl,  b_k.a_l = Im H_kl,
 * with a/b the first/second column of each group.
 */
class PanelGram
{
public:
    explicit PanelGram(const DeltaPanel& delta)
        : mode_(delta.mode()), buses_(delta.buses()), rows_(delta.rows())
    {
        if (mode_ == PanelMode::phasor) {
            Eigen::MatrixXcd d = delta.complex();
            d.rowwise() -= d.colwise().mean();
            h_ = d.adjoint() * d;
            h_ = 0.5 * (h_ + h_.adjoint().eval());
        } else {
            Eigen::MatrixXd d = delta.real();
            d.rowwise() -= d.colwise().mean();
            g_ = d.transpose() * d;
            g_ = 0.5 * (g_ + g_.transpose().eval());
        }
    }

    PanelMode mode() const { return mode_; }
    const std::vector<bus_t>& buses() const { return buses_; }
    Eigen::Index rows() const { return rows_; }

    Eigen::Index column(bus_t bus) const
    {
        for (std::size_t j = 0; j < buses_.size(); ++j) {
            if (buses_[j] == bus) return static_cast<Eigen::Index>(j);
        }
        throw error(errc::invalid_argument, "bus " + std::to_string(bus) + " not in panel");
    }

    /// Centered cross product of two columns (complex for phasor panels).
    complex_t cross(Eigen::Index a, Eigen::Index b) const
    {
        return mode_ == PanelMode::phasor ? h_(a, b) : complex_t{g_(a, b), 0.0};
    }

    double variance_sum(Eigen::Index a) const { return cross(a, a).real(); }

    /// Sample correlation of two columns; the modulus for phasor panels.
    double correlation(Eigen::Index a, Eigen::Index b) const
    {
        const double va = variance_sum(a);
        const double vb = variance_sum(b);
        if (!(va > 0.0) || !(vb > 0.0)) return 0.0;
        return std::min(1.0, std::abs(cross(a, b)) / std::sqrt(va * vb));
    }

    /// Gram form of the regression of `target` on `regressors` (group sizes 2 or 1).
    solver::GramProblem problem(bus_t target, const std::vector<bus_t>& regressors) const
    {
        const Eigen::Index ti = column(target);
        std::vector<Eigen::Index> cols;
        for (auto k : regressors) {
            if (k == target) throw error(errc::invalid_argument, "target cannot be its own regressor");
            cols.push_back(column(k));
        }
        const auto p = static_cast<Eigen::Index>(cols.size());
        solver::GramProblem out;
        if (mode_ == PanelMode::phasor) {
            out.gram.resize(2 * p, 2 * p);
            out.xty.resize(2 * p);
            for (Eigen::Index k = 0; k < p; ++k) {
                const auto ck = cols[static_cast<std::size_t>(k)];
                for (Eigen::Index l = 0; l < p; ++l) {
                    const complex_t h = h_(ck, cols[static_cast<std::size_t>(l)]);
                    out.gram(2 * k, 2 * l) = h.real();
                    out.gram(2 * k + 1, 2 * l + 1) = h.real();
                    out.gram(2 * k, 2 * l + 1) = -h.imag();
                    out.gram(2 * k + 1, 2 * l) = h.imag();
                }
                const complex_t hz = h_(ck, ti);
                out.xty(2 * k) = hz.real();
                out.xty(2 * k + 1) = hz.imag();
            }
            out.yty = h_(ti, ti).real();
            out.n_obs = 2 * rows_;
            out.groups = solver::uniform_groups(2 * p, 2);
        } else {
            out.gram.resize(p, p);
            out.xty.resize(p);
            for (Eigen::Index k = 0; k < p; ++k) {
                const auto ck = cols[static_cast<std::size_t>(k)];
                for (Eigen::Index l = 0; l < p; ++l) out.gram(k, l) = g_(ck, cols[static_cast<std::size_t>(l)]);
                out.xty(k) = g_(ck, ti);
            }
            out.yty = g_(ti, ti);
            out.n_obs = rows_;
            out.groups = solver::uniform_groups(p, 1);
        }
        return out;
    }

private:
    PanelMode mode_;
    std::vector<bus_t> buses_;
    Eigen::Index rows_;
    Eigen::MatrixXcd h_;
    Eigen::MatrixXd g_;
};

} // namespace gridtopo::conn
