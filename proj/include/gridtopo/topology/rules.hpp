#pragma once
#include <map>
#include <string>
#include <vector>
#include <gridtopo/core/neighbor_set.hpp>
#include <gridtopo/core/panel.hpp>

namespace gridtopo::topo {

enum class Rule { and_rule, or_rule, and_or };

inline const char* to_string(Rule r)
{
    switch (r) {
    case Rule::and_rule: return "and";
    case Rule::or_rule: return "or";
    case Rule::and_or: return "and-or";
    }
    return "?";
}

inline Rule parse_rule(const std::string& s)
{
    if (s == "and") return Rule::and_rule;
    if (s == "or") return Rule::or_rule;
    if (s == "and-or" || s == "andor") return Rule::and_or;
    throw error(errc::invalid_argument, "unknown rule '" + s + "' (expected and, or, and-or)");
}

namespace detail {

inline std::map<bus_t, const NeighborSet*> index_sets(const std::vector<NeighborSet>& sets)
{
    std::map<bus_t, const NeighborSet*> by;
    for (const auto& s : sets) {
        if (!by.emplace(s.target, &s).second) {
            throw error(errc::invalid_argument, "two neighbor sets for bus " + std::to_string(s.target));
        }
    }
    return by;
}

inline bool claims(const std::map<bus_t, const NeighborSet*>& by, bus_t i, bus_t k)
{
    auto it = by.find(i);
    return it != by.end() && it->second->contains(k);
}

} // namespace detail

/// {i,k} iff k in N(i) and i in N(k).
inline EdgeSet combine_and(const std::vector<NeighborSet>& sets)
{
    const auto by = detail::index_sets(sets);
    EdgeSet out;
    for (const auto& s : sets) {
        for (const auto& [k, _] : s.coefficients) {
            if (detail::claims(by, k, s.target)) out.insert(s.target, k, EdgeTag::and_rule);
        }
    }
    return out;
}

/// {i,k} iff k in N(i) or i in N(k).
inline EdgeSet combine_or(const std::vector<NeighborSet>& sets)
{
    EdgeSet out;
    for (const auto& s : sets) {
        for (const auto& [k, _] : s.coefficients) out.insert(s.target, k, EdgeTag::or_rule);
    }
    return out;
}

struct AndOrResult
{
    EdgeSet edges;
    /// Buses left without any higher-magnitude neighbor.
    std::vector<bus_t> isolated;
};

/**
 * AND edges, then for every bus i without an AND neighbor of strictly higher
 * mean |V|, the OR-supported candidate k with mean |V_k| > mean |V_i| and the
 * largest coefficient magnitude max(|beta_k^(i)|, |beta_i^(k)|) is added
 * (ties to the lower bus id). Buses with no such candidate are reported.
 */
inline AndOrResult combine_and_or(const std::vector<NeighborSet>& sets, const std::map<bus_t, double>& mean_magnitude)
{
    const auto by = detail::index_sets(sets);
    auto mean_of = [&](bus_t b) {
        auto it = mean_magnitude.find(b);
        if (it == mean_magnitude.end()) {
            throw error(errc::invalid_argument, "no mean magnitude for bus " + std::to_string(b));
        }
        return it->second;
    };

    AndOrResult out;
    const EdgeSet and_edges = combine_and(sets);
    for (const auto& [e, _] : and_edges) out.edges.insert(e.a, e.b, EdgeTag::and_rule);

    std::map<bus_t, std::vector<bus_t>> and_adj;
    for (const auto& [e, _] : and_edges) {
        and_adj[e.a].push_back(e.b);
        and_adj[e.b].push_back(e.a);
    }
    std::map<bus_t, std::map<bus_t, double>> or_support;
    for (const auto& s : sets) {
        for (const auto& [k, beta] : s.coefficients) {
            double& w1 = or_support[s.target][k];
            double& w2 = or_support[k][s.target];
            w1 = std::max(w1, std::abs(beta));
            w2 = std::max(w2, std::abs(beta));
        }
    }

    for (const auto& [i, _] : by) {
        const double vi = mean_of(i);
        bool fed = false;
        for (auto k : and_adj[i]) {
            if (mean_of(k) > vi) {
                fed = true;
                break;
            }
        }
        if (fed) continue;
        bool found = false;
        bus_t best = 0;
        double best_w = -1.0;
        for (const auto& [k, w] : or_support[i]) {
            if (!(mean_of(k) > vi)) continue;
            if (w > best_w) {
                best = k;
                best_w = w;
                found = true;
            }
        }
        if (found) {
            out.edges.insert(i, best, EdgeTag::and_or_added);
        } else {
            out.isolated.push_back(i);
        }
    }
    return out;
}

inline std::map<bus_t, double> mean_magnitudes(const MeasurementPanel& panel)
{
    std::map<bus_t, double> out;
    const Eigen::VectorXd m = panel.mean_magnitudes();
    for (std::size_t j = 0; j < panel.buses().size(); ++j) out[panel.buses()[j]] = m(static_cast<Eigen::Index>(j));
    return out;
}

inline AndOrResult combine_and_or(const std::vector<NeighborSet>& sets, const MeasurementPanel& panel)
{
    return combine_and_or(sets, mean_magnitudes(panel));
}

} // namespace gridtopo::topo
