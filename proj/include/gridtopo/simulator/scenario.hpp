#pragma once
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>
#include <Eigen/Dense>
#include <gridtopo/core/admittance.hpp>
#include <gridtopo/core/panel.hpp>
#include <gridtopo/simulator/networks.hpp>

namespace gridtopo::sim {

struct ScenarioConfig
{
    std::string network = "eightbus_radial";
    Eigen::Index T = 2000;
    double injection_sigma = 0.01;
    double base_load = -0.05;
    /// Per-bus overrides of base_load, indexed by bus id; empty = uniform.
    std::vector<double> base_loads;
    double noise_level = 0.0;
    std::uint64_t seed = 1;
    PanelMode mode = PanelMode::magnitude;
    complex_t slack_voltage{1.0, 0.0};

    void validate() const
    {
        if (T < 2) throw error(errc::insufficient_data, "scenario needs T >= 2");
        if (!(injection_sigma > 0.0) || !std::isfinite(injection_sigma)) {
            throw error(errc::invalid_argument, "injection_sigma must be positive");
        }
        if (!(noise_level >= 0.0) || !std::isfinite(noise_level)) {
            throw error(errc::invalid_argument, "noise_level must be nonnegative");
        }
        if (!std::isfinite(base_load)) throw error(errc::invalid_argument, "base_load must be finite");
        for (double b : base_loads) {
            if (!std::isfinite(b)) throw error(errc::invalid_argument, "base_loads must be finite");
        }
        if (!is_finite(slack_voltage) || slack_voltage == complex_t{}) {
            throw error(errc::invalid_argument, "slack voltage must be finite and nonzero");
        }
    }

    double base_at(bus_t bus) const
    {
        if (base_loads.empty()) return base_load;
        if (bus >= base_loads.size()) throw error(errc::invalid_argument, "base_loads shorter than bus count");
        return base_loads[bus];
    }
};

namespace detail {

/// Independent stream per purpose, derived from the scenario seed.
inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(purpose)};
    return std::mt19937_64(seq);
}

} // namespace detail

/**
 * T x n complex Gaussian current deviations, one column per non-slack bus
 * (in net.non_slack_buses() order), independent across buses and time.
 * Each component has std sigma / sqrt(2), so E|xi|^2 = sigma^2.
 */
inline Eigen::MatrixXcd synth_injections(const ScenarioConfig& cfg, std::size_t columns)
{
    cfg.validate();
    auto gen = detail::stream(cfg.seed, 1);
    std::normal_distribution<double> nd(0.0, cfg.injection_sigma / std::sqrt(2.0));
    Eigen::MatrixXcd xi(cfg.T, static_cast<Eigen::Index>(columns));
    for (Eigen::Index t = 0; t < xi.rows(); ++t) {
        for (Eigen::Index j = 0; j < xi.cols(); ++j) {
            const double re = nd(gen);
            const double im = nd(gen);
            xi(t, j) = {re, im};
        }
    }
    return xi;
}

/**
 * Bus voltages for I[t] = base + xi[t] on the non-slack buses:
 *   Y_red V[t] = I[t] + coupling * v_slack.
 * Returns a T x M phasor panel over all buses (slack held at
 * cfg.slack_voltage); magnitude mode keeps |v| only.
 */
inline MeasurementPanel solve_voltages(const NetworkModel& net, const Eigen::MatrixXcd& injections,
                                       const ScenarioConfig& cfg)
{
    cfg.validate();
    const ReducedSystem sys(net);
    const auto& buses = sys.buses();
    const auto n = static_cast<Eigen::Index>(buses.size());
    if (injections.cols() != n) {
        throw error(errc::invalid_argument, "injection columns do not match non-slack bus count");
    }
    const Eigen::Index T = injections.rows();
    Eigen::VectorXcd base(n);
    for (Eigen::Index j = 0; j < n; ++j) base(j) = cfg.base_at(buses[static_cast<std::size_t>(j)]);
    Eigen::MatrixXcd rhs = injections.transpose();
    rhs.colwise() += base + sys.coupling() * cfg.slack_voltage;
    const Eigen::MatrixXcd vred = sys.solve(rhs);

    Eigen::MatrixXcd v(T, static_cast<Eigen::Index>(net.bus_count()));
    v.col(static_cast<Eigen::Index>(net.slack())).setConstant(cfg.slack_voltage);
    for (Eigen::Index j = 0; j < n; ++j) {
        v.col(static_cast<Eigen::Index>(buses[static_cast<std::size_t>(j)])) = vred.row(j).transpose();
    }
    std::vector<bus_t> ids(net.bus_count());
    for (bus_t i = 0; i < ids.size(); ++i) ids[i] = i;
    auto panel = MeasurementPanel::from_phasors(v, std::move(ids));
    return cfg.mode == PanelMode::magnitude ? panel.as_magnitude() : panel;
}

/// Multiplies every magnitude by (1 + eps), eps ~ N(0, level^2). Angles are untouched.
inline MeasurementPanel add_meter_noise(const MeasurementPanel& panel, double level, std::uint64_t seed)
{
    if (!(level >= 0.0) || !std::isfinite(level)) throw error(errc::invalid_argument, "noise level must be nonnegative");
    if (level == 0.0) return panel;
    auto gen = detail::stream(seed, 2);
    std::normal_distribution<double> nd(0.0, level);
    Eigen::MatrixXd mag = panel.magnitudes();
    for (Eigen::Index j = 0; j < mag.cols(); ++j) {
        for (Eigen::Index t = 0; t < mag.rows(); ++t) mag(t, j) *= 1.0 + nd(gen);
    }
    if (panel.mode() == PanelMode::magnitude) {
        return MeasurementPanel::from_magnitudes(std::move(mag), panel.buses(), panel.timestamps());
    }
    return MeasurementPanel::from_polar(std::move(mag), panel.angles_deg(), panel.buses(), panel.timestamps());
}

struct Scenario
{
    NetworkModel network;
    MeasurementPanel panel;
    Eigen::MatrixXcd injections;
};

/// Network lookup, injections, voltage solve and meter noise in one call.
inline Scenario simulate(const ScenarioConfig& cfg, const NetworkModel& net)
{
    cfg.validate();
    Eigen::MatrixXcd xi = synth_injections(cfg, net.bus_count() - 1);
    auto panel = solve_voltages(net, xi, cfg);
    panel = add_meter_noise(panel, cfg.noise_level, cfg.seed);
    return {net, std::move(panel), std::move(xi)};
}

inline Scenario simulate(const ScenarioConfig& cfg)
{
    return simulate(cfg, builtin_network(cfg.network));
}

} // namespace gridtopo::sim
