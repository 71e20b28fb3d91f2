#pragma once
#include <algorithm>
#include <vector>
#include <Eigen/Dense>
#include <gridtopo/connectivity/mutual_information.hpp>
#include <gridtopo/core/network.hpp>

namespace gridtopo::sim {

/// Pairwise Gaussian MI between the columns of a real or complex series matrix; the diagonal holds mi_cap.
template <class Derived>
Eigen::MatrixXd mi_matrix(const Eigen::MatrixBase<Derived>& x)
{
    using Scalar = typename Derived::Scalar;
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> c = x.rowwise() - x.colwise().mean();
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> h = c.adjoint() * c;
    const Eigen::Index M = x.cols();
    Eigen::MatrixXd out = Eigen::MatrixXd::Constant(M, M, conn::mi_cap);
    for (Eigen::Index a = 0; a < M; ++a) {
        for (Eigen::Index b = a + 1; b < M; ++b) {
            const double va = std::real(h(a, a));
            const double vb = std::real(h(b, b));
            const double rho = va > 0.0 && vb > 0.0 ? std::min(1.0, std::abs(h(a, b)) / std::sqrt(va * vb)) : 0.0;
            out(a, b) = out(b, a) = conn::mi_from_correlation(rho);
        }
    }
    return out;
}

/// MI between increment columns, skipping the structural zero first row.
inline Eigen::MatrixXd diagnostic_mi_matrix(const DeltaPanel& delta)
{
    const Eigen::Index n = delta.rows() - 1;
    if (delta.mode() == PanelMode::magnitude) return mi_matrix(delta.real().bottomRows(n));
    return mi_matrix(delta.complex().bottomRows(n));
}

/// Sample autocorrelation r(0..maxlag), normalized by the lag-0 sum so r(0) = 1.
inline std::vector<double> diagnostic_autocorr(const Eigen::VectorXd& x, std::size_t maxlag)
{
    const auto T = static_cast<std::size_t>(x.size());
    if (maxlag >= T) throw error(errc::invalid_argument, "maxlag must be below the series length");
    const Eigen::VectorXd c = x.array() - x.mean();
    const double c0 = c.squaredNorm();
    if (!(c0 > 0.0)) throw error(errc::undefined_statistic, "autocorrelation undefined for a zero-variance series");
    std::vector<double> r(maxlag + 1);
    for (std::size_t l = 0; l <= maxlag; ++l) {
        const auto n = static_cast<Eigen::Index>(T - l);
        r[l] = c.head(n).dot(c.segment(static_cast<Eigen::Index>(l), n)) / c0;
    }
    r[0] = 1.0;
    return r;
}

/// Complex series: correlation of the real-valued stacking [Re; Im].
inline std::vector<double> diagnostic_autocorr(const Eigen::VectorXcd& x, std::size_t maxlag)
{
    const auto T = static_cast<std::size_t>(x.size());
    if (maxlag >= T) throw error(errc::invalid_argument, "maxlag must be below the series length");
    const Eigen::VectorXcd c = x.array() - x.mean();
    const double c0 = c.squaredNorm();
    if (!(c0 > 0.0)) throw error(errc::undefined_statistic, "autocorrelation undefined for a zero-variance series");
    std::vector<double> r(maxlag + 1);
    for (std::size_t l = 0; l <= maxlag; ++l) {
        const auto n = static_cast<Eigen::Index>(T - l);
        r[l] = c.head(n).dot(c.segment(static_cast<Eigen::Index>(l), n)).real() / c0;
    }
    r[0] = 1.0;
    return r;
}

/**
 * |partial correlation| of columns a and b given the columns in `cond`,
 * from the Schur complement of the (Hermitian) sample covariance.
 */
inline double partial_correlation(const conn::PanelGram& gram, Eigen::Index a, Eigen::Index b,
                                   const std::vector<Eigen::Index>& cond)
{
    if (a == b) return 1.0;
    const auto n = static_cast<Eigen::Index>(cond.size());
    Eigen::Matrix2cd s;
    s << gram.cross(a, a), gram.cross(a, b), gram.cross(b, a), gram.cross(b, b);
    if (n > 0) {
        Eigen::MatrixXcd cc(n, n);
        Eigen::MatrixXcd ca(n, 2);
        for (Eigen::Index x = 0; x < n; ++x) {
            for (Eigen::Index y = 0; y < n; ++y) cc(x, y) = gram.cross(cond[x], cond[y]);
            ca(x, 0) = gram.cross(cond[x], a);
            ca(x, 1) = gram.cross(cond[x], b);
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXcd> qr(cc);
        qr.setThreshold(1e-10);
        if (qr.rank() < n) throw error(errc::rank_deficient, "conditioning block is rank deficient");
        s -= ca.adjoint() * qr.solve(ca);
    }
    const double den = std::sqrt(s(0, 0).real() * s(1, 1).real());
    if (!(den > 0.0)) throw error(errc::undefined_statistic, "zero conditional variance");
    return std::min(1.0, std::abs(s(0, 1)) / den);
}

struct PairCorrelation
{
    bus_t i = 0;
    bus_t k = 0;
    /// Hop distance in the network.
    std::size_t hops = 0;
    double value = 0.0;
};

/// Conditioning set used by conditional_correlation.
enum class Conditioning {
    neighbors,  ///< N(i) \ {k}
    two_hop,    ///< (N(i) u N2(i)) \ {k}
};

/**
 * For every ordered pair (i, k) of panel buses, |partial correlation| of
 * dv_i and dv_k given dv over the conditioning set of i, restricted to buses
 * present in the panel (the slack is normally absent). Self pairs are 1.
 */
inline std::vector<PairCorrelation> conditional_correlation(const DeltaPanel& delta, const NetworkModel& net,
                                                            Conditioning mode = Conditioning::neighbors)
{
    const conn::PanelGram gram(delta);
    std::vector<PairCorrelation> out;
    for (auto i : delta.buses()) {
        const auto dist = net.hop_distances(i);
        const Eigen::Index ci = delta.require_column(i);
        std::vector<bus_t> blanket = net.neighbors(i);
        if (mode == Conditioning::two_hop) {
            const auto h2 = net.two_hop(i);
            blanket.insert(blanket.end(), h2.begin(), h2.end());
        }
        for (auto k : delta.buses()) {
            std::vector<Eigen::Index> cond;
            for (auto n : blanket) {
                if (n == k) continue;
                if (auto c = delta.column_of(n)) cond.push_back(*c);
            }
            out.push_back({i, k, dist.at(k), partial_correlation(gram, ci, delta.require_column(k), cond)});
        }
    }
    return out;
}

/// Mean |partial correlation| over pairs at 1 hop, 2 hops and 3 or more hops.
struct HopSummary
{
    double neighbor = 0.0;
    double two_hop = 0.0;
    double distant = 0.0;
};

inline HopSummary summarize_by_hops(const std::vector<PairCorrelation>& pairs)
{
    double s[3] = {0, 0, 0};
    std::size_t n[3] = {0, 0, 0};
    for (const auto& p : pairs) {
        if (p.hops == 0) continue;
        const std::size_t g = std::min<std::size_t>(p.hops, 3) - 1;
        s[g] += p.value;
        ++n[g];
    }
    auto mean = [&](int g) { return n[g] ? s[g] / static_cast<double>(n[g]) : 0.0; };
    return {mean(0), mean(1), mean(2)};
}

} // namespace gridtopo::sim
