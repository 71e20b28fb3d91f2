#pragma once
#include <charconv>
#include <random>
#include <string>
#include <string_view>
#include <vector>
#include <gridtopo/core/network.hpp>

namespace gridtopo::sim {

/// Series impedance of the low-voltage cable type, in ohm.
inline constexpr complex_t lv_impedance_ohm{0.0019, 0.001};
/// Series impedance of the medium-voltage cable type, in ohm.
inline constexpr complex_t mv_impedance_ohm{0.0844, 0.0444};
/// Impedance bases (ohm) used to express the cable types in per-unit.
inline constexpr double lv_impedance_base = 0.1;
inline constexpr double mv_impedance_base = 4.0;

/// Overhead-line type used alongside cables in the feeder_* networks, per-unit.
inline constexpr complex_t overhead_impedance_pu{0.008, 0.02};

inline complex_t lv_admittance() { return 1.0 / (lv_impedance_ohm / lv_impedance_base); }
inline complex_t mv_admittance() { return 1.0 / (mv_impedance_ohm / mv_impedance_base); }

inline NetworkModel uniform_network(std::size_t buses, const std::vector<std::pair<bus_t, bus_t>>& edges,
                                    complex_t y, bus_t slack = 0)
{
    std::vector<Branch> br;
    br.reserve(edges.size());
    for (auto [a, b] : edges) br.push_back({a, b, y});
    return NetworkModel(buses, slack, std::move(br));
}

namespace detail {

using EdgeList = std::vector<std::pair<bus_t, bus_t>>;

inline EdgeList radial8_edges()
{
    return {{0, 1}, {1, 2}, {2, 3}, {1, 4}, {4, 5}, {2, 6}, {6, 7}};
}

inline EdgeList chain_edges(std::size_t n)
{
    EdgeList e;
    for (bus_t i = 1; i < n; ++i) e.emplace_back(i - 1, i);
    return e;
}

/// Backbone 1..spine off the slack, each backbone bus carrying a lateral of `lateral` buses.
inline EdgeList spine_with_laterals(std::size_t spine, std::size_t lateral, std::size_t lateral_count)
{
    EdgeList e = chain_edges(spine + 1);
    bus_t next = spine + 1;
    for (std::size_t s = 0; s < lateral_count; ++s) {
        bus_t prev = static_cast<bus_t>(1 + s * spine / lateral_count);
        for (std::size_t j = 0; j < lateral; ++j) {
            e.emplace_back(prev, next);
            prev = next++;
        }
    }
    return e;
}

inline std::vector<std::vector<bus_t>> adjacency(std::size_t n, const EdgeList& e)
{
    std::vector<std::vector<bus_t>> adj(n);
    for (auto [a, b] : e) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    return adj;
}

inline std::vector<std::size_t> hops(std::size_t n, const EdgeList& e, bus_t from)
{
    const auto adj = adjacency(n, e);
    std::vector<std::size_t> d(n, n + 1);
    std::vector<bus_t> q{from};
    d[from] = 0;
    for (std::size_t h = 0; h < q.size(); ++h) {
        for (auto v : adj[q[h]]) {
            if (d[v] > n) {
                d[v] = d[q[h]] + 1;
                q.push_back(v);
            }
        }
    }
    return d;
}

/**
 * Random tree on buses 0..n-1 grown from the slack (each new bus attaches to
 * one of the last few buses, giving feeder-like depth) plus `loops` extra
 * branches between non-slack buses 3 to 5 hops apart. Uses raw mt19937
 * output so the construction is identical on every platform.
 */
inline EdgeList feeder_edges(std::size_t n, std::size_t loops)
{
    std::mt19937 gen(static_cast<std::uint32_t>(7919 * n + 104729 * loops + 17));
    EdgeList e;
    for (bus_t i = 1; i < n; ++i) {
        const bus_t window = std::min<bus_t>(i, 4);
        const bus_t parent = i - 1 - static_cast<bus_t>(gen() % window);
        e.emplace_back(parent, i);
    }
    std::size_t added = 0;
    std::size_t attempts = 0;
    while (added < loops && attempts < 100000) {
        ++attempts;
        const bus_t a = 1 + static_cast<bus_t>(gen() % (n - 1));
        const auto d = hops(n, e, a);
        std::vector<bus_t> cand;
        for (bus_t b = 1; b < n; ++b) {
            if (d[b] >= 3 && d[b] <= 5) cand.push_back(b);
        }
        if (cand.empty()) continue;
        const bus_t b = cand[gen() % cand.size()];
        e.emplace_back(std::min(a, b), std::max(a, b));
        ++added;
    }
    if (added < loops) throw error(errc::invalid_argument, "could not place the requested loops");
    return e;
}

/// Chain 0..n-1 with `loops` chords of 4 hops spread evenly along the non-slack part.
inline EdgeList chainloop_edges(std::size_t n, std::size_t loops)
{
    EdgeList e = chain_edges(n);
    if (loops == 0) return e;
    if (n < 6) throw error(errc::invalid_argument, "chain too short for loops");
    const std::size_t span = n - 5;
    for (std::size_t j = 0; j < loops; ++j) {
        const bus_t a = 1 + static_cast<bus_t>((j * span) / loops + span / (2 * loops));
        if (a + 4 >= n) throw error(errc::invalid_argument, "too many loops for chain length");
        e.emplace_back(a, a + 4);
    }
    return e;
}

inline std::vector<std::size_t> parse_sizes(std::string_view rest)
{
    std::vector<std::size_t> out;
    while (!rest.empty()) {
        const auto cut = rest.find('_');
        const auto tok = rest.substr(0, cut);
        std::size_t v = 0;
        auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (ec != std::errc{} || p != tok.data() + tok.size() || tok.empty()) return {};
        out.push_back(v);
        if (cut == std::string_view::npos) break;
        rest.remove_prefix(cut + 1);
    }
    return out;
}

} // namespace detail

/**
 * Built-in synthetic networks, slack at bus 0:
 *   eightbus_radial      8 buses, 7 branches
 *   eightbus_mesh3       eightbus_radial plus 3 loop branches
 *   chain_N              path graph on N buses
 *   chainloop_N_L        chain_N plus L four-hop chords
 *   feeder_N_L           seeded random feeder tree on N buses plus L loops,
 *                        mixing cable and overhead branches
 *   lv_suburban_style    115-bus radial feeder, low-voltage cable
 *   mv_urban_style       35-bus radial feeder, medium-voltage cable
 *   composite_large      8 chains of 15 buses joined at a common slack (121 buses)
 * All but mv_urban_style use the low-voltage cable admittance on every branch.
 */
inline NetworkModel builtin_network(const std::string& name)
{
    using namespace detail;
    const complex_t y = lv_admittance();
    if (name == "eightbus_radial") return uniform_network(8, radial8_edges(), y);
    if (name == "eightbus_mesh3") {
        auto e = radial8_edges();
        e.insert(e.end(), {{3, 4}, {5, 7}, {3, 7}});
        return uniform_network(8, e, y);
    }
    if (name == "lv_suburban_style") return uniform_network(115, spine_with_laterals(19, 5, 19), y);
    if (name == "mv_urban_style") return uniform_network(35, spine_with_laterals(10, 3, 8), mv_admittance());
    if (name == "composite_large") {
        EdgeList e;
        bus_t next = 1;
        for (int c = 0; c < 8; ++c) {
            bus_t prev = 0;
            for (int j = 0; j < 15; ++j) {
                e.emplace_back(prev, next);
                prev = next++;
            }
        }
        return uniform_network(next, e, y);
    }
    auto starts = [&](std::string_view p) { return name.rfind(p, 0) == 0; };
    if (starts("chain_")) {
        auto s = parse_sizes(std::string_view(name).substr(6));
        if (s.size() == 1 && s[0] >= 2) return uniform_network(s[0], chain_edges(s[0]), y);
    }
    if (starts("chainloop_")) {
        auto s = parse_sizes(std::string_view(name).substr(10));
        if (s.size() == 2 && s[0] >= 2) return uniform_network(s[0], chainloop_edges(s[0], s[1]), y);
    }
    if (starts("feeder_")) {
        auto s = parse_sizes(std::string_view(name).substr(7));
        if (s.size() == 2 && s[0] >= 2) {
            // Mixed cable / overhead branches, so r/x varies across the feeder.
            const auto e = feeder_edges(s[0], s[1]);
            std::mt19937 gen(static_cast<std::uint32_t>(31 * s[0] + s[1]));
            std::vector<Branch> br;
            for (auto [a, b] : e) br.push_back({a, b, gen() % 2 == 0 ? y : 1.0 / overhead_impedance_pu});
            return NetworkModel(s[0], 0, std::move(br));
        }
    }
    throw error(errc::unknown_network, "unknown network '" + name + "'");
}

inline std::vector<std::string> builtin_network_names()
{
    return {"eightbus_radial", "eightbus_mesh3", "chain_N", "chainloop_N_L", "feeder_N_L",
            "lv_suburban_style", "mv_urban_style", "composite_large"};
}

} // namespace gridtopo::sim
