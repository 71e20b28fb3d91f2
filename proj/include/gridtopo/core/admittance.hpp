#pragma once
#include <variant>
#include <vector>
#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <gridtopo/core/network.hpp>

namespace gridtopo {

using SparseComplex = Eigen::SparseMatrix<complex_t>;

/// Below this size the reduced system is factored densely.
inline constexpr std::size_t dense_solve_limit = 64;

/**
 * Bus admittance matrix Y with Y(i,k) = -y_ik for every branch and
 * Y(i,i) = sum_k y_ik + b_i / 2. Branches to the slack contribute to the
 * diagonal of the adjacent bus, which is the y_11 = y_01 + ... convention
 * once the slack row and column are dropped. The slack's own shunt is not
 * attached.
 */
inline SparseComplex build_admittance(const NetworkModel& net)
{
    const auto M = static_cast<Eigen::Index>(net.bus_count());
    std::vector<Eigen::Triplet<complex_t>> trip;
    trip.reserve(net.branches().size() * 4 + net.bus_count());
    for (const auto& br : net.branches()) {
        const auto i = static_cast<Eigen::Index>(br.from);
        const auto k = static_cast<Eigen::Index>(br.to);
        trip.emplace_back(i, k, -br.admittance);
        trip.emplace_back(k, i, -br.admittance);
        trip.emplace_back(i, i, br.admittance);
        trip.emplace_back(k, k, br.admittance);
    }
    for (bus_t i = 0; i < net.bus_count(); ++i) {
        if (i == net.slack()) continue;
        const auto& b = net.shunts()[i];
        if (b != complex_t{}) {
            trip.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i), 0.5 * b);
        }
    }
    SparseComplex Y(M, M);
    Y.setFromTriplets(trip.begin(), trip.end());
    Y.makeCompressed();
    return Y;
}

/**
 * Y with the slack row/column removed, plus the coupling column that maps
 * the slack voltage into the remaining equations:
 *   Y_red * V_red = I_red + coupling * v_slack,  coupling_i = y_{i,slack}.
 * Buses are ordered as net.non_slack_buses().
 */
class ReducedSystem
{
public:
    explicit ReducedSystem(const NetworkModel& net)
        : buses_(net.non_slack_buses())
    {
        const SparseComplex Y = build_admittance(net);
        const auto n = static_cast<Eigen::Index>(buses_.size());
        std::vector<Eigen::Index> map(net.bus_count(), -1);
        for (Eigen::Index r = 0; r < n; ++r) map[buses_[static_cast<std::size_t>(r)]] = r;

        std::vector<Eigen::Triplet<complex_t>> trip;
        coupling_ = Eigen::VectorXcd::Zero(n);
        const auto s = static_cast<Eigen::Index>(net.slack());
        for (Eigen::Index c = 0; c < Y.outerSize(); ++c) {
            for (SparseComplex::InnerIterator it(Y, c); it; ++it) {
                const auto r = it.row();
                if (r == s) continue;
                if (c == s) {
                    coupling_(map[r]) = -it.value();
                } else {
                    trip.emplace_back(map[r], map[c], it.value());
                }
            }
        }
        reduced_.resize(n, n);
        reduced_.setFromTriplets(trip.begin(), trip.end());
        reduced_.makeCompressed();

        if (buses_.size() < dense_solve_limit) {
            Eigen::MatrixXcd dense = Eigen::MatrixXcd(reduced_);
            dense_lu_ = Eigen::FullPivLU<Eigen::MatrixXcd>(dense);
            if (n > 0 && !dense_lu_.isInvertible()) {
                throw error(errc::singular_matrix, "reduced admittance matrix is singular");
            }
            use_dense_ = true;
        } else {
            sparse_lu_.compute(reduced_);
            if (sparse_lu_.info() != Eigen::Success) {
                throw error(errc::singular_matrix, "reduced admittance matrix is singular");
            }
            use_dense_ = false;
        }
    }

    const std::vector<bus_t>& buses() const { return buses_; }
    const SparseComplex& matrix() const { return reduced_; }
    const Eigen::VectorXcd& coupling() const { return coupling_; }

    /// Solves Y_red X = B column-wise.
    Eigen::MatrixXcd solve(const Eigen::MatrixXcd& rhs) const
    {
        if (use_dense_) return dense_lu_.solve(rhs);
        Eigen::MatrixXcd out = sparse_lu_.solve(rhs);
        return out;
    }

private:
    std::vector<bus_t> buses_;
    SparseComplex reduced_;
    Eigen::VectorXcd coupling_;
    bool use_dense_ = true;
    Eigen::FullPivLU<Eigen::MatrixXcd> dense_lu_;
    Eigen::SparseLU<SparseComplex> sparse_lu_;
};

} // namespace gridtopo
