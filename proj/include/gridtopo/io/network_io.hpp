#pragma once
#include <algorithm>
#include <filesystem>
#include <string>
#include <gridtopo/core/network.hpp>
#include <gridtopo/io/text.hpp>

namespace gridtopo::io {

/**
 * Network CSV: header `from,to,r,x` or `from,to,r,x,b_from,b_to`, one branch
 * per row, per-unit series impedance r + jx and optional shunt susceptance
 * at each end. Buses are 0..max id; `slack` defaults to bus 0.
 */
inline NetworkModel parse_network(std::string_view text, bus_t slack = 0)
{
    const auto rows = detail::lines(text);
    if (rows.empty()) throw error(errc::parse_error, "network file is empty");
    const auto header = detail::split(rows[0].second, ',');
    const bool with_shunt = header.size() == 6;
    const bool plain = header.size() == 4;
    if ((!plain && !with_shunt) || header[0] != "from" || header[1] != "to" || header[2] != "r" || header[3] != "x" ||
        (with_shunt && (header[4] != "b_from" || header[5] != "b_to"))) {
        throw detail::parse_failure(rows[0].first, "expected header from,to,r,x[,b_from,b_to]");
    }
    std::vector<Branch> branches;
    std::vector<std::pair<bus_t, double>> shunt;
    bus_t top = slack;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto [ln, line] = rows[r];
        const auto f = detail::split(line, ',');
        if (f.size() != header.size()) {
            throw detail::parse_failure(ln, "expected " + std::to_string(header.size()) + " fields, got " +
                                                std::to_string(f.size()));
        }
        const auto a = parse_integer<bus_t>(f[0], ln);
        const auto b = parse_integer<bus_t>(f[1], ln);
        const complex_t z{parse_double(f[2], ln), parse_double(f[3], ln)};
        if (z == complex_t{}) throw detail::parse_failure(ln, "zero impedance");
        branches.push_back({a, b, 1.0 / z});
        if (with_shunt) {
            shunt.emplace_back(a, parse_double(f[4], ln));
            shunt.emplace_back(b, parse_double(f[5], ln));
        }
        top = std::max({top, a, b});
    }
    if (branches.empty()) throw error(errc::parse_error, "network file has no branches");
    std::vector<complex_t> shunts(top + 1);
    for (auto [bus, s] : shunt) shunts[bus] += complex_t{0.0, s};
    return NetworkModel(top + 1, slack, std::move(branches), std::move(shunts));
}

inline NetworkModel load_network(const std::filesystem::path& path, bus_t slack = 0)
{
    try {
        return parse_network(read_file(path), slack);
    } catch (const error& e) {
        if (e.code() == errc::io_error) throw;
        throw error(e.code(), path.string() + ": " + e.what());
    }
}

/// Inverse of parse_network; shunt columns are written only when some shunt is nonzero.
inline std::string format_network(const NetworkModel& net)
{
    const bool with_shunt = std::any_of(net.shunts().begin(), net.shunts().end(),
                                        [](complex_t s) { return s != complex_t{}; });
    std::string out = with_shunt ? "from,to,r,x,b_from,b_to\n" : "from,to,r,x\n";
    // The bus shunt is reported once, on the first branch that touches the bus.
    std::vector<bool> done(net.bus_count(), false);
    for (const auto& br : net.branches()) {
        const complex_t z = 1.0 / br.admittance;
        out += std::to_string(br.from) + "," + std::to_string(br.to) + "," + format_double(z.real()) + "," +
               format_double(z.imag());
        if (with_shunt) {
            double sf = 0.0, st = 0.0;
            if (!done[br.from]) sf = net.shunts()[br.from].imag(), done[br.from] = true;
            if (!done[br.to]) st = net.shunts()[br.to].imag(), done[br.to] = true;
            out += "," + format_double(sf) + "," + format_double(st);
        }
        out += "\n";
    }
    return out;
}

inline void save_network(const std::filesystem::path& path, const NetworkModel& net)
{
    write_file(path, format_network(net));
}

/// Edge list CSV `a,b`, one unordered pair per row, a < b.
inline std::string format_edges(const EdgeSet& edges)
{
    std::string out = "a,b\n";
    for (const auto& [e, _] : edges) out += std::to_string(e.a) + "," + std::to_string(e.b) + "\n";
    return out;
}

inline EdgeSet parse_edges(std::string_view text)
{
    const auto rows = detail::lines(text);
    if (rows.empty() || detail::split(rows[0].second, ',') != std::vector<std::string_view>{"a", "b"}) {
        throw error(errc::parse_error, "line 1: expected header a,b");
    }
    EdgeSet out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto f = detail::split(rows[r].second, ',');
        if (f.size() != 2) throw detail::parse_failure(rows[r].first, "expected 2 fields");
        const auto a = parse_integer<bus_t>(f[0], rows[r].first);
        const auto b = parse_integer<bus_t>(f[1], rows[r].first);
        if (a == b) throw detail::parse_failure(rows[r].first, "self-loop");
        out.insert(a, b, EdgeTag::given);
    }
    return out;
}

} // namespace gridtopo::io
