#pragma once
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <gridtopo/core/panel.hpp>
#include <gridtopo/io/text.hpp>

namespace gridtopo::io {

namespace detail {

/// Parses `<prefix><id>`; nullopt if the name has another form.
inline std::optional<bus_t> column_bus(std::string_view name, std::string_view prefix)
{
    if (name.substr(0, prefix.size()) != prefix || name.size() == prefix.size()) return std::nullopt;
    name.remove_prefix(prefix.size());
    bus_t v = 0;
    auto [p, ec] = std::from_chars(name.data(), name.data() + name.size(), v);
    if (ec != std::errc{} || p != name.data() + name.size()) return std::nullopt;
    return v;
}

} // namespace detail

/**
 * Measurement CSV. Header: optional leading `timestamp`, then `v_<id>`
 * columns (magnitude, per-unit) and, for phasor files, a `theta_<id>`
 * (degrees) for every `v_<id>`. Loading a phasor file in magnitude mode drops
 * the angles; loading a magnitude file in phasor mode is an error.
 */
inline MeasurementPanel parse_measurements(std::string_view text, PanelMode mode)
{
    const auto rows = detail::lines(text);
    if (rows.empty()) throw error(errc::parse_error, "measurement file is empty");
    const auto header = detail::split(rows[0].second, ',');
    const std::size_t hl = rows[0].first;
    bool has_time = false;
    std::vector<bus_t> buses;
    std::map<bus_t, std::size_t> vcol, tcol;
    for (std::size_t j = 0; j < header.size(); ++j) {
        const auto h = header[j];
        if (j == 0 && h == "timestamp") {
            has_time = true;
            continue;
        }
        if (auto b = detail::column_bus(h, "v_")) {
            if (!vcol.emplace(*b, j).second) throw detail::parse_failure(hl, "duplicate column '" + std::string(h) + "'");
            buses.push_back(*b);
        } else if (auto b2 = detail::column_bus(h, "theta_")) {
            if (!tcol.emplace(*b2, j).second) throw detail::parse_failure(hl, "duplicate column '" + std::string(h) + "'");
        } else {
            throw detail::parse_failure(hl, "unknown column '" + std::string(h) + "'");
        }
    }
    if (buses.empty()) throw detail::parse_failure(hl, "no v_<id> columns");
    for (const auto& [b, _] : tcol) {
        if (!vcol.count(b)) throw detail::parse_failure(hl, "theta_" + std::to_string(b) + " without v_" + std::to_string(b));
    }
    const bool phasor_file = !tcol.empty();
    if (phasor_file && tcol.size() != vcol.size()) throw detail::parse_failure(hl, "every v_<id> needs a theta_<id>");
    if (mode == PanelMode::phasor && !phasor_file) {
        throw error(errc::mode_mismatch, "phasor mode needs theta_<id> columns");
    }

    const auto T = static_cast<Eigen::Index>(rows.size() - 1);
    const auto M = static_cast<Eigen::Index>(buses.size());
    if (T < 2) {
        throw error(errc::insufficient_data, "panel needs at least 2 samples, got " + std::to_string(T));
    }
    Eigen::MatrixXd mag(T, M);
    Eigen::MatrixXd ang(phasor_file ? T : 0, phasor_file ? M : 0);
    std::vector<double> ts;
    for (Eigen::Index t = 0; t < T; ++t) {
        const auto [ln, line] = rows[static_cast<std::size_t>(t) + 1];
        const auto f = detail::split(line, ',');
        if (f.size() != header.size()) {
            throw detail::parse_failure(ln, "expected " + std::to_string(header.size()) + " fields, got " +
                                                std::to_string(f.size()));
        }
        if (has_time) ts.push_back(parse_double(f[0], ln));
        for (Eigen::Index j = 0; j < M; ++j) {
            const bus_t b = buses[static_cast<std::size_t>(j)];
            mag(t, j) = parse_double(f[vcol[b]], ln);
            if (phasor_file) ang(t, j) = parse_double(f[tcol[b]], ln);
        }
    }
    if (mode == PanelMode::magnitude) return MeasurementPanel::from_magnitudes(std::move(mag), buses, std::move(ts));
    return MeasurementPanel::from_polar(std::move(mag), std::move(ang), buses, std::move(ts));
}

inline MeasurementPanel load_measurements(const std::filesystem::path& path, PanelMode mode)
{
    try {
        return parse_measurements(read_file(path), mode);
    } catch (const error& e) {
        if (e.code() == errc::io_error) throw;
        throw error(e.code(), path.string() + ": " + e.what());
    }
}

/// Shortest round-trip decimal text, so a written panel reloads bit-identically.
inline std::string format_measurements(const MeasurementPanel& panel)
{
    const bool phasor = panel.mode() == PanelMode::phasor;
    const bool has_time = !panel.timestamps().empty();
    std::string out;
    if (has_time) out += "timestamp";
    for (auto b : panel.buses()) {
        if (!out.empty()) out += ",";
        out += "v_" + std::to_string(b);
        if (phasor) out += ",theta_" + std::to_string(b);
    }
    out += "\n";
    for (Eigen::Index t = 0; t < panel.rows(); ++t) {
        std::string line;
        if (has_time) line += format_double(panel.timestamps()[static_cast<std::size_t>(t)]);
        for (Eigen::Index j = 0; j < panel.cols(); ++j) {
            if (!line.empty()) line += ",";
            line += format_double(panel.magnitudes()(t, j));
            if (phasor) line += "," + format_double(panel.angles_deg()(t, j));
        }
        out += line + "\n";
    }
    return out;
}

inline void save_measurements(const std::filesystem::path& path, const MeasurementPanel& panel)
{
    write_file(path, format_measurements(panel));
}

} // namespace gridtopo::io
