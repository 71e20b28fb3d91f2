#pragma once
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>
#include <Eigen/Dense>
#include <gridtopo/connectivity/design.hpp>

namespace gridtopo::conn {

/// Reported in place of +infinity for perfectly correlated series.
inline constexpr double mi_cap = 50.0;

/// Gaussian plug-in mutual information -1/2 ln(1 - rho^2), in nats.
inline double mi_from_correlation(double rho)
{
    const double r2 = std::min(rho * rho, 1.0);
    if (r2 >= 1.0) return mi_cap;
    return std::min(mi_cap, -0.5 * std::log1p(-r2));
}

inline double sample_correlation(const Eigen::VectorXd& x, const Eigen::VectorXd& y)
{
    if (x.size() != y.size()) throw error(errc::invalid_argument, "series lengths differ");
    const Eigen::VectorXd xc = x.array() - x.mean();
    const Eigen::VectorXd yc = y.array() - y.mean();
    const double sx = xc.squaredNorm();
    const double sy = yc.squaredNorm();
    if (!(sx > 0.0) || !(sy > 0.0)) {
        throw error(errc::undefined_statistic, "correlation undefined for a zero-variance series");
    }
    return std::clamp(xc.dot(yc) / std::sqrt(sx * sy), -1.0, 1.0);
}

inline double gaussian_mutual_information(const Eigen::VectorXd& x, const Eigen::VectorXd& y)
{
    if (x.size() != y.size()) throw error(errc::invalid_argument, "series lengths differ");
    if (x.size() < 3) throw error(errc::insufficient_data, "mutual information needs at least 3 samples");
    return mi_from_correlation(sample_correlation(x, y));
}

struct PrescreenResult
{
    bus_t target = 0;
    std::vector<bus_t> candidates;
    std::vector<double> scores;
};

/// ceil(sqrt(M)) for a network of M buses.
inline std::size_t default_prescreen_k(std::size_t bus_count)
{
    auto k = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(bus_count))));
    while (k * k < bus_count) ++k;
    while (k > 1 && (k - 1) * (k - 1) >= bus_count) --k;
    return k;
}

/**
 * The K buses among `pool` with the highest MI against the target, in
 * decreasing MI order with ties broken by lower bus id. For phasor panels
 * rho is the modulus of the complex correlation.
 */
inline PrescreenResult prescreen_topk(const PanelGram& gram, bus_t target, const std::vector<bus_t>& pool, std::size_t K)
{
    if (K < 1 || K > pool.size()) {
        throw error(errc::invalid_argument, "K must lie in [1, " + std::to_string(pool.size()) + "]");
    }
    const Eigen::Index ti = gram.column(target);
    if (!(gram.variance_sum(ti) > 0.0)) {
        throw error(errc::undefined_statistic, "target bus " + std::to_string(target) + " has zero variance");
    }
    std::vector<std::pair<double, bus_t>> scored;
    scored.reserve(pool.size());
    for (auto k : pool) {
        if (k == target) throw error(errc::invalid_argument, "target in candidate pool");
        const Eigen::Index c = gram.column(k);
        const double mi = gram.variance_sum(c) > 0.0 ? mi_from_correlation(gram.correlation(ti, c)) : 0.0;
        scored.emplace_back(mi, k);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    PrescreenResult out;
    out.target = target;
    for (std::size_t j = 0; j < K; ++j) {
        out.candidates.push_back(scored[j].second);
        out.scores.push_back(scored[j].first);
    }
    return out;
}

/// All other panel columns form the pool.
inline PrescreenResult prescreen_topk(const DeltaPanel& delta, bus_t target, std::size_t K)
{
    std::vector<bus_t> pool;
    for (auto b : delta.buses()) {
        if (b != target) pool.push_back(b);
    }
    return prescreen_topk(PanelGram(delta), target, pool, K);
}

} // namespace gridtopo::conn
