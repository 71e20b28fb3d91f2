#pragma once
#include <algorithm>
#include <compare>
#include <complex>
#include <cstddef>
#include <map>
#include <string>
#include <vector>
#include <gridtopo/core/error.hpp>

namespace gridtopo {

using complex_t = std::complex<double>;
using bus_t = std::size_t;

/// Undirected bus pair stored canonically as (min, max).
struct Edge
{
    bus_t a;
    bus_t b;

    Edge(bus_t i, bus_t k)
        : a(std::min(i, k)), b(std::max(i, k))
    {
        if (i == k) {
            throw error(errc::invalid_argument,
                        "self-loop on bus " + std::to_string(i));
        }
    }

    auto operator<=>(const Edge&) const = default;
    bool operator==(const Edge&) const = default;
};

/// How an estimated edge entered the edge set. `given` marks ground truth
/// or edges read from a file, which carry no estimation provenance.
enum class EdgeTag { and_rule, or_rule, and_or_added, given };

inline const char* to_string(EdgeTag tag)
{
    switch (tag) {
        case EdgeTag::and_rule: return "AND";
        case EdgeTag::or_rule: return "OR";
        case EdgeTag::and_or_added: return "AND-OR-added";
        case EdgeTag::given: return "given";
    }
    return "?";
}

class EdgeSet
{
public:
    using container_t = std::map<Edge, EdgeTag>;
    using const_iterator = container_t::const_iterator;

    EdgeSet() = default;

    /// Inserts the edge; an existing edge keeps its original tag.
    bool insert(bus_t i, bus_t k, EdgeTag tag = EdgeTag::given)
    {
        return edges_.emplace(Edge(i, k), tag).second;
    }

    bool contains(bus_t i, bus_t k) const
    {
        if (i == k) return false;
        return edges_.count(Edge(i, k)) != 0;
    }
    bool contains(const Edge& e) const { return edges_.count(e) != 0; }

    EdgeTag tag(const Edge& e) const
    {
        auto it = edges_.find(e);
        if (it == edges_.end()) {
            throw error(errc::invalid_argument, "edge not in set");
        }
        return it->second;
    }

    std::size_t size() const { return edges_.size(); }
    bool empty() const { return edges_.empty(); }
    const_iterator begin() const { return edges_.begin(); }
    const_iterator end() const { return edges_.end(); }

    std::vector<Edge> edges() const
    {
        std::vector<Edge> out;
        out.reserve(edges_.size());
        for (const auto& [e, _] : edges_) out.push_back(e);
        return out;
    }

    std::size_t count(EdgeTag tag) const
    {
        return static_cast<std::size_t>(std::count_if(
            edges_.begin(), edges_.end(),
            [tag](const auto& kv) { return kv.second == tag; }));
    }

    /// Edge membership only; tags are ignored.
    bool is_subset_of(const EdgeSet& other) const
    {
        return std::all_of(edges_.begin(), edges_.end(),
            [&](const auto& kv) { return other.contains(kv.first); });
    }

    bool same_edges(const EdgeSet& other) const
    {
        return size() == other.size() && is_subset_of(other);
    }

    EdgeSet united(const EdgeSet& other) const
    {
        EdgeSet out = *this;
        for (const auto& [e, t] : other) out.edges_.emplace(e, t);
        return out;
    }

private:
    container_t edges_;
};

} // namespace gridtopo
