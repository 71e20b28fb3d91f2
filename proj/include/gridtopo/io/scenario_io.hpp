#pragma once
#include <filesystem>
#include <set>
#include <string>
#include <gridtopo/io/text.hpp>
#include <gridtopo/simulator/scenario.hpp>

namespace gridtopo::io {

inline PanelMode parse_mode(std::string_view s)
{
    if (s == "magnitude") return PanelMode::magnitude;
    if (s == "phasor") return PanelMode::phasor;
    throw error(errc::invalid_argument, "unknown mode '" + std::string(s) + "' (expected magnitude, phasor)");
}

/**
 * Flat `key = value` document, one key per line, `#` starts a comment.
 * Keys: network, T, injection_sigma, base_load, base_loads (comma list,
 * indexed by bus id), noise_level, seed, mode, slack_voltage (re,im).
 * Missing keys keep their defaults.
 */
inline sim::ScenarioConfig parse_scenario(std::string_view text)
{
    sim::ScenarioConfig cfg;
    std::set<std::string> seen;
    for (auto [ln, raw] : detail::lines(text)) {
        const auto hash = raw.find('#');
        const auto line = detail::trim(raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw detail::parse_failure(ln, "expected key = value");
        const std::string key(detail::trim(line.substr(0, eq)));
        const auto val = detail::trim(line.substr(eq + 1));
        if (!seen.insert(key).second) throw detail::parse_failure(ln, "duplicate key '" + key + "'");
        if (key == "network") {
            if (val.empty()) throw detail::parse_failure(ln, "empty network");
            cfg.network = std::string(val);
        } else if (key == "T") {
            cfg.T = parse_integer<Eigen::Index>(val, ln);
        } else if (key == "injection_sigma") {
            cfg.injection_sigma = parse_double(val, ln);
        } else if (key == "base_load") {
            cfg.base_load = parse_double(val, ln);
        } else if (key == "base_loads") {
            cfg.base_loads.clear();
            if (!val.empty()) {
                for (auto f : detail::split(val, ',')) cfg.base_loads.push_back(parse_double(f, ln));
            }
        } else if (key == "noise_level") {
            cfg.noise_level = parse_double(val, ln);
        } else if (key == "seed") {
            cfg.seed = parse_integer<std::uint64_t>(val, ln);
        } else if (key == "mode") {
            try {
                cfg.mode = parse_mode(val);
            } catch (const error& e) {
                throw detail::parse_failure(ln, e.what());
            }
        } else if (key == "slack_voltage") {
            const auto f = detail::split(val, ',');
            if (f.size() != 2) throw detail::parse_failure(ln, "slack_voltage needs re,im");
            cfg.slack_voltage = {parse_double(f[0], ln), parse_double(f[1], ln)};
        } else {
            throw detail::parse_failure(ln, "unknown key '" + key + "'");
        }
    }
    cfg.validate();
    return cfg;
}

inline sim::ScenarioConfig load_scenario(const std::filesystem::path& path)
{
    try {
        return parse_scenario(read_file(path));
    } catch (const error& e) {
        if (e.code() == errc::io_error) throw;
        throw error(e.code(), path.string() + ": " + e.what());
    }
}

/// Keys in sorted order; parse_scenario(format_scenario(c)) reproduces c.
inline std::string format_scenario(const sim::ScenarioConfig& c)
{
    std::string loads;
    for (double b : c.base_loads) loads += (loads.empty() ? "" : ",") + format_double(b);
    std::string out;
    out += "T = " + std::to_string(c.T) + "\n";
    out += "base_load = " + format_double(c.base_load) + "\n";
    out += "base_loads = " + loads + "\n";
    out += "injection_sigma = " + format_double(c.injection_sigma) + "\n";
    out += std::string("mode = ") + to_string(c.mode) + "\n";
    out += "network = " + c.network + "\n";
    out += "noise_level = " + format_double(c.noise_level) + "\n";
    out += "seed = " + std::to_string(c.seed) + "\n";
    out += "slack_voltage = " + format_double(c.slack_voltage.real()) + "," + format_double(c.slack_voltage.imag()) + "\n";
    return out;
}

} // namespace gridtopo::io
