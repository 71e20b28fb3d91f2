#pragma once
#include <cmath>
#include <complex>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <vector>
#include <gridtopo/core/edge_set.hpp>
#include <gridtopo/core/error.hpp>

namespace gridtopo {

inline bool is_finite(const complex_t& z)
{
    return std::isfinite(z.real()) && std::isfinite(z.imag());
}

struct Branch
{
    bus_t from;
    bus_t to;
    complex_t admittance; ///< series admittance y_ik, per-unit
};

/**
 * Grid model: buses 0..M-1, undirected branches with series admittance,
 * per-bus shunt admittance b_i and a designated slack bus.
 *
 * Construction validates the invariants (distinct in-range endpoints, no
 * duplicate unordered pair, nonzero finite admittances, connectivity);
 * instances are immutable afterwards.
 */
class NetworkModel
{
public:
    NetworkModel(std::size_t bus_count,
                 bus_t slack,
                 std::vector<Branch> branches,
                 std::vector<complex_t> shunts = {})
        : bus_count_(bus_count),
          slack_(slack),
          branches_(std::move(branches)),
          shunts_(std::move(shunts)),
          adjacency_(bus_count)
    {
        if (bus_count_ == 0) {
            throw error(errc::invalid_argument, "network needs at least one bus");
        }
        if (slack_ >= bus_count_) {
            throw error(errc::invalid_argument,
                        "slack bus " + std::to_string(slack_) + " out of range");
        }
        if (shunts_.empty()) shunts_.assign(bus_count_, complex_t{});
        if (shunts_.size() != bus_count_) {
            throw error(errc::invalid_argument, "shunt vector size does not match bus count");
        }
        for (const auto& b : shunts_) {
            if (!is_finite(b)) throw error(errc::invalid_argument, "non-finite shunt admittance");
        }

        std::set<Edge> seen;
        for (const auto& br : branches_) {
            const std::string pair = "(" + std::to_string(br.from) + "," + std::to_string(br.to) + ")";
            if (br.from >= bus_count_ || br.to >= bus_count_) {
                throw error(errc::invalid_argument, "branch " + pair + " has endpoint out of range");
            }
            if (br.from == br.to) {
                throw error(errc::invalid_argument, "branch " + pair + " is a self-loop");
            }
            if (!is_finite(br.admittance) || br.admittance == complex_t{}) {
                throw error(errc::invalid_argument, "branch " + pair + " has zero or non-finite admittance");
            }
            if (!seen.insert(Edge(br.from, br.to)).second) {
                throw error(errc::duplicate_branch, "duplicate branch " + pair);
            }
            adjacency_[br.from].push_back(br.to);
            adjacency_[br.to].push_back(br.from);
        }
        for (auto& adj : adjacency_) std::sort(adj.begin(), adj.end());

        const auto unreachable = unreachable_from_slack();
        if (!unreachable.empty()) {
            std::string list;
            for (auto b : unreachable) list += (list.empty() ? "" : ",") + std::to_string(b);
            throw error(errc::disconnected_network,
                        "buses not connected to slack: [" + list + "]");
        }
    }

    std::size_t bus_count() const { return bus_count_; }
    bus_t slack() const { return slack_; }
    const std::vector<Branch>& branches() const { return branches_; }
    const std::vector<complex_t>& shunts() const { return shunts_; }

    /// N(i), sorted ascending.
    const std::vector<bus_t>& neighbors(bus_t i) const { return adjacency_.at(i); }

    /// N²(i): buses two hops from i that are neither i nor in N(i).
    std::vector<bus_t> two_hop(bus_t i) const
    {
        std::set<bus_t> out;
        for (auto l : neighbors(i)) {
            for (auto k : neighbors(l)) {
                if (k != i && !has_branch(i, k)) out.insert(k);
            }
        }
        return {out.begin(), out.end()};
    }

    bool has_branch(bus_t i, bus_t k) const
    {
        const auto& adj = adjacency_.at(i);
        return std::binary_search(adj.begin(), adj.end(), k);
    }

    EdgeSet edges() const
    {
        EdgeSet out;
        for (const auto& br : branches_) out.insert(br.from, br.to, EdgeTag::given);
        return out;
    }

    /// Edges among the given buses only (e.g. the non-slack subnetwork).
    EdgeSet edges_among(std::span<const bus_t> buses) const
    {
        std::set<bus_t> keep(buses.begin(), buses.end());
        EdgeSet out;
        for (const auto& br : branches_) {
            if (keep.count(br.from) && keep.count(br.to)) out.insert(br.from, br.to, EdgeTag::given);
        }
        return out;
    }

    /// Buses other than the slack, ascending.
    std::vector<bus_t> non_slack_buses() const
    {
        std::vector<bus_t> out;
        for (bus_t i = 0; i < bus_count_; ++i) {
            if (i != slack_) out.push_back(i);
        }
        return out;
    }

    /// Hop distance from i to every bus (BFS); unreachable buses never occur
    /// since the network is connected.
    std::vector<std::size_t> hop_distances(bus_t i) const
    {
        std::vector<std::size_t> dist(bus_count_, static_cast<std::size_t>(-1));
        std::queue<bus_t> q;
        dist[i] = 0;
        q.push(i);
        while (!q.empty()) {
            auto u = q.front();
            q.pop();
            for (auto v : adjacency_[u]) {
                if (dist[v] == static_cast<std::size_t>(-1)) {
                    dist[v] = dist[u] + 1;
                    q.push(v);
                }
            }
        }
        return dist;
    }

    /// Old bus i becomes bus perm[i] in the returned network.
    NetworkModel relabeled(std::span<const bus_t> perm) const
    {
        if (perm.size() != bus_count_) {
            throw error(errc::invalid_argument, "permutation size mismatch");
        }
        std::vector<Branch> br;
        br.reserve(branches_.size());
        for (const auto& b : branches_) br.push_back({perm[b.from], perm[b.to], b.admittance});
        std::vector<complex_t> sh(bus_count_);
        for (bus_t i = 0; i < bus_count_; ++i) sh[perm[i]] = shunts_[i];
        return NetworkModel(bus_count_, perm[slack_], std::move(br), std::move(sh));
    }

private:
    std::vector<bus_t> unreachable_from_slack() const
    {
        const auto dist = hop_distances(slack_);
        std::vector<bus_t> out;
        for (bus_t i = 0; i < bus_count_; ++i) {
            if (dist[i] == static_cast<std::size_t>(-1)) out.push_back(i);
        }
        return out;
    }

    std::size_t bus_count_;
    bus_t slack_;
    std::vector<Branch> branches_;
    std::vector<complex_t> shunts_;
    std::vector<std::vector<bus_t>> adjacency_;
};

} // namespace gridtopo
