#include "iss_parabolic/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "iss_parabolic/errors.hpp"

namespace issp {

Grid1D::Grid1D(std::size_t n_interior, double dt, double t_final)
    : n_interior_(n_interior),
      h_(1.0 / static_cast<double>(n_interior + 1)),
      dt_(dt),
      t_final_(t_final),
      steps_(0) {
    if (n_interior < 3) {
        throw InvalidParameter("Grid1D: n_interior must be at least 3");
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw InvalidParameter("Grid1D: dt must be positive and finite");
    }
    if (!(t_final >= dt) || !std::isfinite(t_final)) {
        throw InvalidParameter("Grid1D: t_final must be finite and >= dt");
    }
    // Guard against t_final/dt landing a hair above an integer.
    steps_ = static_cast<std::size_t>(std::ceil(t_final / dt - 1e-9));
}

Field::Field(const Grid1D& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.n_nodes()) {
        throw InvalidField("Field: expected " + std::to_string(grid_.n_nodes()) +
                           " values, got " + std::to_string(values_.size()));
    }
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw InvalidField("Field: non-finite value at node " + std::to_string(i));
        }
    }
}

Field Field::zeros(const Grid1D& grid) {
    return Field(grid, std::vector<double>(grid.n_nodes(), 0.0));
}

Field Field::constant(const Grid1D& grid, double value) {
    return Field(grid, std::vector<double>(grid.n_nodes(), value));
}

Field Field::from_function(const Grid1D& grid, const std::function<double(double)>& fn) {
    std::vector<double> v(grid.n_nodes());
    for (std::size_t i = 0; i < v.size(); ++i) {
        v[i] = fn(grid.z(i));
    }
    return Field(grid, std::move(v));
}

double Field::max_abs() const noexcept {
    double m = 0.0;
    for (double v : values_) {
        m = std::max(m, std::abs(v));
    }
    return m;
}

Trajectory::Trajectory(std::vector<double> times, std::vector<Field> states)
    : times_(std::move(times)), states_(std::move(states)) {
    if (times_.empty() || times_.size() != states_.size()) {
        throw IncompatibleTrajectory("Trajectory: times and states must be non-empty and equally long");
    }
    if (times_.front() != 0.0) {
        throw IncompatibleTrajectory("Trajectory: times must start at 0");
    }
    for (std::size_t k = 1; k < times_.size(); ++k) {
        if (!(times_[k] > times_[k - 1])) {
            throw IncompatibleTrajectory("Trajectory: times must be strictly increasing");
        }
        if (!(states_[k].grid() == states_.front().grid())) {
            throw IncompatibleTrajectory("Trajectory: all states must share one grid");
        }
    }
    left_.reserve(states_.size());
    right_.reserve(states_.size());
    for (const auto& s : states_) {
        left_.push_back(s.front());
        right_.push_back(s.back());
    }
}

Trajectory Trajectory::truncated(std::size_t count) const {
    count = std::clamp<std::size_t>(count, 1, size());
    return Trajectory(std::vector<double>(times_.begin(), times_.begin() + count),
                      std::vector<Field>(states_.begin(), states_.begin() + count));
}

namespace {

void require_p(double p) {
    if (!(p >= 1.0)) {
        throw InvalidParameter("norm_lp: p must lie in [1, inf]");
    }
}

}  // namespace

double norm_lp(std::span<const double> values, double h, double p) {
    require_p(p);
    if (values.empty()) {
        return 0.0;
    }
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : values) {
            m = std::max(m, std::abs(v));
        }
        return m;
    }
    const std::size_t last = values.size() - 1;
    // Scale by the max to avoid overflow in |x|^p for large p.
    double scale = 0.0;
    for (double v : values) {
        scale = std::max(scale, std::abs(v));
    }
    if (scale == 0.0) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i <= last; ++i) {
        const double w = (i == 0 || i == last) ? 0.5 : 1.0;
        sum += w * std::pow(std::abs(values[i]) / scale, p);
    }
    return scale * std::pow(h * sum, 1.0 / p);
}

double norm_lp(const Field& x, double p) {
    return norm_lp(x.values(), x.grid().h(), p);
}

double lp_functional(const Field& x, double p) {
    require_p(p);
    const auto& g = x.grid();
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sum += g.weight(i) * std::pow(std::abs(x[i]), p);
    }
    return sum;
}

double norm_weighted_sin(const Field& x) {
    const auto& g = x.grid();
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sum += g.weight(i) * std::sin(std::numbers::pi * g.z(i)) * std::abs(x[i]);
    }
    return sum;
}

double norm_weighted_sup(const Field& x, double theta, double phi) {
    if (!(theta > 0.0) || !(phi > 0.0) || !(theta + phi < std::numbers::pi)) {
        throw InvalidParameter("norm_weighted_sup: need theta > 0, phi > 0, theta + phi < pi");
    }
    const auto& g = x.grid();
    const double top = std::sin(theta + phi);
    double m = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        m = std::max(m, top * std::abs(x[i]) / std::sin(theta + g.z(i) * phi));
    }
    return m;
}

double fit_decay_rate(std::span<const double> times, std::span<const double> values, double floor) {
    double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < times.size() && k < values.size(); ++k) {
        if (!(values[k] > floor)) {
            continue;
        }
        const double y = std::log(values[k]);
        st += times[k];
        sy += y;
        stt += times[k] * times[k];
        sty += times[k] * y;
        ++n;
    }
    if (n < 2) {
        throw EstimationError("fit_decay_rate: need at least two positive samples");
    }
    const double dn = static_cast<double>(n);
    const double denom = dn * stt - st * st;
    if (denom <= 0.0) {
        throw EstimationError("fit_decay_rate: degenerate sample times");
    }
    return -(dn * sty - st * sy) / denom;
}

}  // namespace issp
