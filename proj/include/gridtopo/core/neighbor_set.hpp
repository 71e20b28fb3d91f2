#pragma once
#include <map>
#include <set>
#include <vector>
#include <gridtopo/core/edge_set.hpp>

namespace gridtopo {

/// Estimated (or true) neighborhood of one target bus.
struct NeighborSet
{
    bus_t target = 0;
    /// member -> reassembled coefficient beta_k; members are exactly the keys.
    std::map<bus_t, complex_t> coefficients;
    /// Buses excluded because their column duplicates another regressor.
    std::set<bus_t> ambiguous;

    NeighborSet() = default;
    explicit NeighborSet(bus_t t) : target(t) {}

    NeighborSet(bus_t t, std::initializer_list<bus_t> members) : target(t)
    {
        for (auto m : members) add(m);
    }

    void add(bus_t member, complex_t coef = complex_t{1.0, 0.0})
    {
        if (member == target) {
            throw error(errc::invalid_argument, "target cannot be its own neighbor");
        }
        coefficients[member] = coef;
    }

    bool contains(bus_t k) const { return coefficients.count(k) != 0; }
    std::size_t size() const { return coefficients.size(); }

    std::vector<bus_t> members() const
    {
        std::vector<bus_t> out;
        for (const auto& [k, _] : coefficients) out.push_back(k);
        return out;
    }

    /// |beta_k|, or 0 for non-members.
    double magnitude(bus_t k) const
    {
        auto it = coefficients.find(k);
        return it == coefficients.end() ? 0.0 : std::abs(it->second);
    }
};

} // namespace gridtopo
