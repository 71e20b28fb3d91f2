#pragma once
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>
#include <Eigen/Dense>
#include <gridtopo/core/edge_set.hpp>
#include <gridtopo/core/error.hpp>

namespace gridtopo {

enum class PanelMode { phasor, magnitude };

inline const char* to_string(PanelMode m)
{
    return m == PanelMode::phasor ? "phasor" : "magnitude";
}

/**
 * T x M voltage measurements, one column per bus.
 *
 * Phasor panels are stored in polar form (magnitude in per-unit, angle in
 * degrees) so that a panel written to text and read back is bit-identical;
 * the complex view is derived on request.
 */
class MeasurementPanel
{
public:
    static MeasurementPanel from_magnitudes(Eigen::MatrixXd magnitude,
                                            std::vector<bus_t> buses,
                                            std::vector<double> timestamps = {})
    {
        return MeasurementPanel(PanelMode::magnitude, std::move(magnitude), Eigen::MatrixXd(),
                                std::move(buses), std::move(timestamps));
    }

    static MeasurementPanel from_polar(Eigen::MatrixXd magnitude,
                                       Eigen::MatrixXd angle_deg,
                                       std::vector<bus_t> buses,
                                       std::vector<double> timestamps = {})
    {
        return MeasurementPanel(PanelMode::phasor, std::move(magnitude), std::move(angle_deg),
                                std::move(buses), std::move(timestamps));
    }

    static MeasurementPanel from_phasors(const Eigen::MatrixXcd& v,
                                         std::vector<bus_t> buses,
                                         std::vector<double> timestamps = {})
    {
        Eigen::MatrixXd mag = v.cwiseAbs();
        Eigen::MatrixXd ang(v.rows(), v.cols());
        for (Eigen::Index j = 0; j < v.cols(); ++j) {
            for (Eigen::Index t = 0; t < v.rows(); ++t) {
                ang(t, j) = std::arg(v(t, j)) * 180.0 / std::numbers::pi;
            }
        }
        return from_polar(std::move(mag), std::move(ang), std::move(buses), std::move(timestamps));
    }

    PanelMode mode() const { return mode_; }
    Eigen::Index rows() const { return magnitude_.rows(); }
    Eigen::Index cols() const { return magnitude_.cols(); }
    const std::vector<bus_t>& buses() const { return buses_; }
    const std::vector<double>& timestamps() const { return timestamps_; }

    std::optional<Eigen::Index> column_of(bus_t bus) const
    {
        for (std::size_t j = 0; j < buses_.size(); ++j) {
            if (buses_[j] == bus) return static_cast<Eigen::Index>(j);
        }
        return std::nullopt;
    }

    const Eigen::MatrixXd& magnitudes() const { return magnitude_; }

    const Eigen::MatrixXd& angles_deg() const
    {
        require(PanelMode::phasor);
        return angle_;
    }

    Eigen::MatrixXcd phasors() const
    {
        require(PanelMode::phasor);
        Eigen::MatrixXcd v(rows(), cols());
        constexpr double deg = std::numbers::pi / 180.0;
        for (Eigen::Index j = 0; j < cols(); ++j) {
            for (Eigen::Index t = 0; t < rows(); ++t) {
                v(t, j) = std::polar(magnitude_(t, j), angle_(t, j) * deg);
            }
        }
        return v;
    }

    /// Drops phase information (magnitude-only measurements).
    MeasurementPanel as_magnitude() const
    {
        return from_magnitudes(magnitude_, buses_, timestamps_);
    }

    /// Sample mean of |v| per column.
    Eigen::VectorXd mean_magnitudes() const { return magnitude_.colwise().mean().transpose(); }

    /// Keeps only the listed columns, in the listed order.
    MeasurementPanel select(const std::vector<bus_t>& buses) const
    {
        std::vector<Eigen::Index> idx;
        for (auto b : buses) {
            auto c = column_of(b);
            if (!c) throw error(errc::invalid_argument, "bus " + std::to_string(b) + " not in panel");
            idx.push_back(*c);
        }
        Eigen::MatrixXd mag = magnitude_(Eigen::all, idx);
        if (mode_ == PanelMode::magnitude) return from_magnitudes(std::move(mag), buses, timestamps_);
        Eigen::MatrixXd ang = angle_(Eigen::all, idx);
        return from_polar(std::move(mag), std::move(ang), buses, timestamps_);
    }

    /// First `n` rows.
    MeasurementPanel head(Eigen::Index n) const
    {
        std::vector<double> ts;
        if (!timestamps_.empty()) ts.assign(timestamps_.begin(), timestamps_.begin() + n);
        if (mode_ == PanelMode::magnitude) return from_magnitudes(magnitude_.topRows(n), buses_, ts);
        return from_polar(magnitude_.topRows(n), angle_.topRows(n), buses_, ts);
    }

private:
    MeasurementPanel(PanelMode mode, Eigen::MatrixXd magnitude, Eigen::MatrixXd angle,
                     std::vector<bus_t> buses, std::vector<double> timestamps)
        : mode_(mode),
          magnitude_(std::move(magnitude)),
          angle_(std::move(angle)),
          buses_(std::move(buses)),
          timestamps_(std::move(timestamps))
    {
        if (magnitude_.rows() < 2) {
            throw error(errc::insufficient_data,
                        "panel needs at least 2 samples, got " + std::to_string(magnitude_.rows()));
        }
        if (static_cast<std::size_t>(magnitude_.cols()) != buses_.size()) {
            throw error(errc::invalid_argument, "bus label count does not match panel columns");
        }
        if (mode_ == PanelMode::phasor &&
            (angle_.rows() != magnitude_.rows() || angle_.cols() != magnitude_.cols())) {
            throw error(errc::invalid_argument, "angle block shape does not match magnitudes");
        }
        if (!timestamps_.empty()) {
            if (static_cast<Eigen::Index>(timestamps_.size()) != magnitude_.rows()) {
                throw error(errc::invalid_argument, "timestamp count does not match panel rows");
            }
            for (std::size_t t = 1; t < timestamps_.size(); ++t) {
                if (!(timestamps_[t] > timestamps_[t - 1])) {
                    throw error(errc::invalid_argument, "timestamps must be strictly increasing");
                }
            }
        }
        if (!magnitude_.allFinite() || (mode_ == PanelMode::phasor && !angle_.allFinite())) {
            throw error(errc::invalid_argument, "panel contains non-finite entries");
        }
        if ((magnitude_.array() <= 0.0).any()) {
            throw error(errc::invalid_argument, "voltage magnitudes must be strictly positive");
        }
        std::vector<bus_t> sorted = buses_;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw error(errc::invalid_argument, "duplicate bus column in panel");
        }
    }

    void require(PanelMode m) const
    {
        if (mode_ != m) {
            throw error(errc::mode_mismatch,
                        std::string("operation needs a ") + to_string(m) + " panel");
        }
    }

    PanelMode mode_;
    Eigen::MatrixXd magnitude_;
    Eigen::MatrixXd angle_;
    std::vector<bus_t> buses_;
    std::vector<double> timestamps_;
};

/**
 * First differences of a panel: row 0 is zero, row t holds v[t] - v[t-1].
 * Magnitude panels difference |v|; phasor panels difference the complex
 * values.
 */
class DeltaPanel
{
public:
    static DeltaPanel magnitude(Eigen::MatrixXd values, std::vector<bus_t> buses)
    {
        DeltaPanel d(PanelMode::magnitude, std::move(buses));
        d.real_ = std::move(values);
        d.check(d.real_.rows(), d.real_.cols(), d.real_.row(0).isZero(0.0));
        return d;
    }

    static DeltaPanel phasor(Eigen::MatrixXcd values, std::vector<bus_t> buses)
    {
        DeltaPanel d(PanelMode::phasor, std::move(buses));
        d.complex_ = std::move(values);
        d.check(d.complex_.rows(), d.complex_.cols(), d.complex_.row(0).isZero(0.0));
        return d;
    }

    PanelMode mode() const { return mode_; }
    Eigen::Index rows() const { return mode_ == PanelMode::magnitude ? real_.rows() : complex_.rows(); }
    Eigen::Index cols() const { return static_cast<Eigen::Index>(buses_.size()); }
    const std::vector<bus_t>& buses() const { return buses_; }

    std::optional<Eigen::Index> column_of(bus_t bus) const
    {
        for (std::size_t j = 0; j < buses_.size(); ++j) {
            if (buses_[j] == bus) return static_cast<Eigen::Index>(j);
        }
        return std::nullopt;
    }

    Eigen::Index require_column(bus_t bus) const
    {
        auto c = column_of(bus);
        if (!c) throw error(errc::invalid_argument, "bus " + std::to_string(bus) + " not in panel");
        return *c;
    }

    const Eigen::MatrixXd& real() const
    {
        if (mode_ != PanelMode::magnitude) {
            throw error(errc::mode_mismatch, "operation needs a magnitude delta panel");
        }
        return real_;
    }

    const Eigen::MatrixXcd& complex() const
    {
        if (mode_ != PanelMode::phasor) {
            throw error(errc::mode_mismatch, "operation needs a phasor delta panel");
        }
        return complex_;
    }

private:
    DeltaPanel(PanelMode mode, std::vector<bus_t> buses)
        : mode_(mode), buses_(std::move(buses))
    {}

    void check(Eigen::Index rows, Eigen::Index cols, bool first_row_zero) const
    {
        if (rows < 2) {
            throw error(errc::insufficient_data, "delta panel needs at least 2 rows");
        }
        if (static_cast<std::size_t>(cols) != buses_.size()) {
            throw error(errc::invalid_argument, "bus label count does not match delta columns");
        }
        if (!first_row_zero) {
            throw error(errc::invalid_argument, "first increment row must be zero");
        }
    }

    PanelMode mode_;
    std::vector<bus_t> buses_;
    Eigen::MatrixXd real_;
    Eigen::MatrixXcd complex_;
};

inline DeltaPanel difference_panel(const MeasurementPanel& panel)
{
    if (panel.rows() < 2) {
        throw error(errc::insufficient_data, "differencing needs at least 2 samples");
    }
    const auto T = panel.rows();
    if (panel.mode() == PanelMode::magnitude) {
        const auto& v = panel.magnitudes();
        Eigen::MatrixXd d = Eigen::MatrixXd::Zero(T, v.cols());
        d.bottomRows(T - 1) = v.bottomRows(T - 1) - v.topRows(T - 1);
        return DeltaPanel::magnitude(std::move(d), panel.buses());
    }
    const Eigen::MatrixXcd v = panel.phasors();
    Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(T, v.cols());
    d.bottomRows(T - 1) = v.bottomRows(T - 1) - v.topRows(T - 1);
    return DeltaPanel::phasor(std::move(d), panel.buses());
}

} // namespace gridtopo
