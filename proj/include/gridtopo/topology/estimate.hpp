#pragma once
#include <atomic>
#include <chrono>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>
#include <gridtopo/connectivity/mutual_information.hpp>
#include <gridtopo/connectivity/neighbors.hpp>
#include <gridtopo/topology/joint.hpp>
#include <gridtopo/topology/rules.hpp>

namespace gridtopo::topo {

enum class Mode { per_bus, joint };

struct TopologyConfig
{
    Rule rule = Rule::and_or;
    Mode mode = Mode::per_bus;
    conn::NeighborConfig neighbor;
    /// Candidate count per bus; nullopt = every other bus is a candidate.
    std::optional<std::size_t> prescreen_k;
    /// Worker threads for per-bus estimation.
    std::size_t jobs = 1;
};

struct BusReport
{
    bus_t target = 0;
    double lambda = 0.0;
    std::size_t active = 0;
    bool cap_exceeded = false;
    bool converged = true;
    std::vector<bus_t> candidates;
    std::vector<bus_t> neighbors;
    std::vector<bus_t> ambiguous;
};

struct StageTimings
{
    double prescreen_s = 0.0;
    double estimate_s = 0.0;
    double combine_s = 0.0;
};

struct TopologyResult
{
    EdgeSet edges;
    std::vector<NeighborSet> neighbor_sets;
    std::vector<BusReport> buses;
    std::vector<bus_t> isolated;
    std::vector<std::string> warnings;
    /// Joint mode only.
    std::optional<double> joint_lambda;
    StageTimings timings;
};

namespace detail {

using clock = std::chrono::steady_clock;

inline double seconds_since(clock::time_point t0)
{
    return std::chrono::duration<double>(clock::now() - t0).count();
}

template <class F>
void parallel_for(std::size_t n, std::size_t jobs, F&& body)
{
    jobs = std::max<std::size_t>(1, std::min(jobs, n));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < jobs; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    body(i);
                } catch (...) {
                    std::lock_guard lock(mu);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

} // namespace detail

/// Buses that are estimation targets: every panel column except an excluded slack.
inline std::vector<bus_t> estimated_buses(const std::vector<bus_t>& columns, const conn::NeighborConfig& cfg)
{
    std::vector<bus_t> out;
    for (auto b : columns) {
        if (cfg.slack && *cfg.slack == b && !cfg.include_slack) continue;
        out.push_back(b);
    }
    return out;
}

/**
 * Prescreen (optional), per-bus (group) lasso with BIC selection and the
 * chosen combination rule; or a single joint solve over the candidate pairs.
 * Phasor panels use the grouped complex regression, magnitude panels the
 * plain lasso. Results do not depend on `jobs`.
 */
inline TopologyResult estimate_topology(const MeasurementPanel& panel, const TopologyConfig& cfg = {})
{
    TopologyResult out;
    const DeltaPanel delta = difference_panel(panel);
    const conn::PanelGram gram(delta);
    const std::vector<bus_t> targets = estimated_buses(panel.buses(), cfg.neighbor);
    if (targets.size() < 2) throw error(errc::insufficient_data, "need at least 2 estimated buses");

    auto t0 = detail::clock::now();
    std::vector<std::vector<bus_t>> candidates(targets.size());
    for (std::size_t j = 0; j < targets.size(); ++j) {
        std::vector<bus_t> pool;
        for (auto b : targets) {
            if (b != targets[j]) pool.push_back(b);
        }
        if (cfg.prescreen_k && gram.variance_sum(gram.column(targets[j])) > 0.0) {
            candidates[j] = conn::prescreen_topk(gram, targets[j], pool, *cfg.prescreen_k).candidates;
            std::sort(candidates[j].begin(), candidates[j].end());
        } else {
            candidates[j] = std::move(pool);
        }
    }
    out.timings.prescreen_s = detail::seconds_since(t0);

    if (cfg.mode == Mode::joint) {
        if (cfg.rule == Rule::and_or) {
            throw error(errc::invalid_argument, "joint mode supports the and/or rules; apply and-or per bus");
        }
        t0 = detail::clock::now();
        std::set<Edge> pairs;
        for (std::size_t j = 0; j < targets.size(); ++j) {
            for (auto k : candidates[j]) pairs.insert(Edge(targets[j], k));
        }
        auto res = estimate_topology_joint(gram, targets, {pairs.begin(), pairs.end()}, cfg.rule, cfg.neighbor);
        out.timings.estimate_s = detail::seconds_since(t0);
        out.edges = std::move(res.edges);
        out.joint_lambda = res.lambda;
        if (res.cap_exceeded) out.warnings.push_back("joint fit: every path point exceeds the sparsity cap");
        for (std::size_t j = 0; j < targets.size(); ++j) {
            NeighborSet ns(targets[j]);
            for (const auto& [key, b] : res.coefficients) {
                if (key.first == targets[j]) ns.add(key.second, complex_t{b, 0.0});
            }
            out.neighbor_sets.push_back(ns);
        }
        return out;
    }

    t0 = detail::clock::now();
    std::vector<conn::NeighborEstimate> est(targets.size());
    detail::parallel_for(targets.size(), cfg.jobs, [&](std::size_t j) {
        est[j] = conn::estimate_neighbors(gram, targets[j], candidates[j], cfg.neighbor);
    });
    out.timings.estimate_s = detail::seconds_since(t0);

    for (std::size_t j = 0; j < targets.size(); ++j) {
        const auto& e = est[j];
        out.neighbor_sets.push_back(e.neighbors);
        BusReport r;
        r.target = targets[j];
        r.lambda = e.lambda;
        r.active = e.neighbors.size();
        r.cap_exceeded = e.cap_exceeded;
        r.converged = e.converged;
        r.candidates = candidates[j];
        r.neighbors = e.neighbors.members();
        r.ambiguous.assign(e.neighbors.ambiguous.begin(), e.neighbors.ambiguous.end());
        out.buses.push_back(std::move(r));
        const std::string b = std::to_string(targets[j]);
        if (e.cap_exceeded) out.warnings.push_back("bus " + b + ": every path point exceeds the sparsity cap");
        if (!e.converged) out.warnings.push_back("bus " + b + ": solver did not converge");
        if (!e.neighbors.ambiguous.empty()) out.warnings.push_back("bus " + b + ": duplicate regressor columns");
    }

    t0 = detail::clock::now();
    switch (cfg.rule) {
    case Rule::and_rule: out.edges = combine_and(out.neighbor_sets); break;
    case Rule::or_rule: out.edges = combine_or(out.neighbor_sets); break;
    case Rule::and_or: {
        auto r = combine_and_or(out.neighbor_sets, mean_magnitudes(panel));
        out.edges = std::move(r.edges);
        out.isolated = std::move(r.isolated);
        for (auto b : out.isolated) {
            out.warnings.push_back("bus " + std::to_string(b) + ": no higher-magnitude neighbor found");
        }
        break;
    }
    }
    out.timings.combine_s = detail::seconds_since(t0);
    return out;
}

} // namespace gridtopo::topo
