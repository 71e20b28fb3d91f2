#pragma once
#include <map>
#include <string>
#include <vector>
#include <gridtopo/core/edge_set.hpp>
#include <gridtopo/core/neighbor_set.hpp>

namespace gridtopo::metrics {

/// |N(i) symmetric-difference N^(i)|: missing plus falsely estimated neighbors.
inline std::size_t node_error(const NeighborSet& truth, const NeighborSet& estimate)
{
    if (truth.target != estimate.target) {
        throw error(errc::invalid_argument, "neighbor sets belong to different buses");
    }
    std::size_t n = 0;
    for (const auto& [k, _] : truth.coefficients) n += !estimate.contains(k);
    for (const auto& [k, _] : estimate.coefficients) n += !truth.contains(k);
    return n;
}

struct TrialInfo
{
    std::uint64_t seed = 0;
    long long T = 0;
    double noise_level = 0.0;
    std::string rule;
};

struct EvaluationReport
{
    /// Percentage (|false| + |missing|) / |E_true| * 100; may exceed 100.
    double error_rate = 0.0;
    std::vector<Edge> false_edges;
    std::vector<Edge> missing_edges;
    /// Per-bus count of incident false plus missing edges.
    std::map<bus_t, std::size_t> bus_errors;
    std::size_t true_edges = 0;
    std::size_t estimated_edges = 0;
    double precision = 0.0;
    double recall = 0.0;
    TrialInfo trial;

    std::size_t error_count() const { return false_edges.size() + missing_edges.size(); }
};

inline EvaluationReport edge_error_rate(const EdgeSet& truth, const EdgeSet& estimate)
{
    if (truth.empty()) throw error(errc::invalid_argument, "true edge set is empty");
    EvaluationReport r;
    r.true_edges = truth.size();
    r.estimated_edges = estimate.size();
    for (const auto& [e, _] : estimate) {
        if (!truth.contains(e)) r.false_edges.push_back(e);
    }
    for (const auto& [e, _] : truth) {
        if (!estimate.contains(e)) r.missing_edges.push_back(e);
    }
    for (const auto& e : r.false_edges) {
        ++r.bus_errors[e.a];
        ++r.bus_errors[e.b];
    }
    for (const auto& e : r.missing_edges) {
        ++r.bus_errors[e.a];
        ++r.bus_errors[e.b];
    }
    r.error_rate = 100.0 * static_cast<double>(r.error_count()) / static_cast<double>(truth.size());
    const double hits = static_cast<double>(estimate.size() - r.false_edges.size());
    r.precision = estimate.empty() ? 1.0 : hits / static_cast<double>(estimate.size());
    r.recall = hits / static_cast<double>(truth.size());
    return r;
}

/// Neighbor sets implied by an edge set, one per listed bus.
inline std::vector<NeighborSet> neighbor_sets_of(const EdgeSet& edges, const std::vector<bus_t>& buses)
{
    std::map<bus_t, NeighborSet> by;
    for (auto b : buses) by.emplace(b, NeighborSet(b));
    for (const auto& [e, _] : edges) {
        if (by.count(e.a)) by[e.a].add(e.b);
        if (by.count(e.b)) by[e.b].add(e.a);
    }
    std::vector<NeighborSet> out;
    for (auto b : buses) out.push_back(by[b]);
    return out;
}

} // namespace gridtopo::metrics
