#include "iss_parabolic/solver.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "iss_parabolic/errors.hpp"
#include "stepper.hpp"

namespace issp {

// ---------------------------------------------------------------------------
// BoundarySignal

BoundarySignal BoundarySignal::constant(double value) {
    if (!std::isfinite(value)) {
        throw InvalidParameter("BoundarySignal::constant: value must be finite");
    }
    BoundarySignal s;
    s.kind_ = Kind::constant;
    s.value_ = value;
    s.sup_ = std::abs(value);
    return s;
}

BoundarySignal BoundarySignal::sampled(std::vector<double> times, std::vector<double> values) {
    if (times.empty() || times.size() != values.size()) {
        throw InvalidParameter("BoundarySignal::sampled: need equally many (>= 1) times and values");
    }
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (!std::isfinite(times[k]) || !std::isfinite(values[k])) {
            throw InvalidParameter("BoundarySignal::sampled: non-finite sample");
        }
        if (k > 0 && !(times[k] > times[k - 1])) {
            throw InvalidParameter("BoundarySignal::sampled: times must be strictly increasing");
        }
    }
    if (times.front() > 0.0) {
        throw InvalidParameter("BoundarySignal::sampled: table must start at or before t = 0");
    }
    BoundarySignal s;
    s.kind_ = Kind::sampled;
    s.times_ = std::move(times);
    s.values_ = std::move(values);
    // Linear interpolation never leaves the range of the samples.
    for (double v : s.values_) {
        s.sup_ = std::max(s.sup_, std::abs(v));
    }
    return s;
}

BoundarySignal BoundarySignal::closed_loop(const BoundarySignal& disturbance,
                                           std::vector<double> weights) {
    if (disturbance.is_closed_loop()) {
        throw InvalidParameter("BoundarySignal::closed_loop: disturbance must be an open-loop signal");
    }
    for (double w : weights) {
        if (!std::isfinite(w)) {
            throw InvalidParameter("BoundarySignal::closed_loop: non-finite feedback weight");
        }
    }
    BoundarySignal s;
    s.kind_ = Kind::closed_loop;
    s.weights_ = std::move(weights);
    s.disturbance_ = std::make_shared<const BoundarySignal>(disturbance);
    s.sup_ = disturbance.sup_norm();
    return s;
}

double BoundarySignal::operator()(double t) const {
    switch (kind_) {
        case Kind::constant:
            return value_;
        case Kind::closed_loop:
            return (*disturbance_)(t);
        case Kind::sampled:
            break;
    }
    if (t <= times_.front()) {
        return values_.front();
    }
    if (t >= times_.back()) {
        return values_.back();
    }
    const auto it = std::upper_bound(times_.begin(), times_.end(), t);
    const std::size_t k = static_cast<std::size_t>(it - times_.begin());
    const double t0 = times_[k - 1];
    const double t1 = times_[k];
    const double w = (t - t0) / (t1 - t0);
    return values_[k - 1] + w * (values_[k] - values_[k - 1]);
}

double BoundarySignal::horizon() const noexcept {
    switch (kind_) {
        case Kind::constant:
            return kInf;
        case Kind::closed_loop:
            return disturbance_->horizon();
        case Kind::sampled:
            break;
    }
    return times_.back();
}

BoundarySignal BoundarySignal::shifted(double offset) const {
    switch (kind_) {
        case Kind::constant:
            return *this;
        case Kind::closed_loop:
            return closed_loop(disturbance_->shifted(offset), weights_);
        case Kind::sampled:
            break;
    }
    // Keep the samples at or after the offset and prepend the value at the
    // offset itself, so the table still starts at s = 0.
    std::vector<double> t{0.0};
    std::vector<double> v{(*this)(offset)};
    for (std::size_t k = 0; k < times_.size(); ++k) {
        const double s = times_[k] - offset;
        if (s > 0.0) {
            t.push_back(s);
            v.push_back(values_[k]);
        }
    }
    return sampled(std::move(t), std::move(v));
}

const BoundarySignal& BoundarySignal::disturbance() const {
    if (!disturbance_) {
        throw InvalidParameter("BoundarySignal::disturbance: not a closed-loop signal");
    }
    return *disturbance_;
}

double BoundarySignal::resolve(double t, std::span<const double> state) const {
    double u = (*this)(t);
    if (kind_ == Kind::closed_loop) {
        if (state.size() != weights_.size()) {
            throw InvalidParameter("BoundarySignal::resolve: feedback weights do not match the state size");
        }
        for (std::size_t j = 0; j < state.size(); ++j) {
            u -= weights_[j] * state[j];
        }
    }
    return u;
}

// ---------------------------------------------------------------------------
// Reaction

Reaction Reaction::none() {
    return Reaction{};
}

Reaction Reaction::linear(double k) {
    if (!std::isfinite(k)) {
        throw InvalidParameter("Reaction::linear: coefficient must be finite");
    }
    if (k == 0.0) {
        return none();
    }
    Reaction r;
    r.fn_ = [k](double, double w, double) { return k * w; };
    r.bounds_ = {std::max(k, 0.0), std::max(-k, 0.0)};
    r.linear_k_ = k;
    r.zero_ = false;
    return r;
}

Reaction Reaction::custom(Fn f, ReactionBounds bounds, bool uses_gradient) {
    if (!f) {
        throw InvalidParameter("Reaction::custom: empty function");
    }
    if (!(bounds.lipschitz_below >= 0.0) || !std::isfinite(bounds.lipschitz_k)) {
        throw InvalidParameter("Reaction::custom: invalid Lipschitz bounds");
    }
    Reaction r;
    r.fn_ = std::move(f);
    r.bounds_ = bounds;
    r.uses_gradient_ = uses_gradient;
    r.zero_ = false;
    return r;
}

// ---------------------------------------------------------------------------
// SemilinearProblem

namespace {

bool nearly_equal(double a, double b, double rel) {
    return std::abs(a - b) <= rel * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

void require_compatible(const BoundarySignal& s, double t, std::span<const double> state,
                        double node_value, const char* end) {
    const double expected = s.resolve(t, state);
    if (!nearly_equal(node_value, expected, 1e-9)) {
        throw InvalidParameter(std::string("incompatible data at the ") + end +
                               " boundary: node value " + std::to_string(node_value) +
                               " vs boundary value " + std::to_string(expected));
    }
}

}  // namespace

SemilinearProblem::SemilinearProblem(double a, Reaction reaction, Field initial,
                                     BoundarySignal left, BoundarySignal right)
    : a_(a),
      reaction_(std::move(reaction)),
      initial_(std::move(initial)),
      left_(std::move(left)),
      right_(std::move(right)) {
    if (!(a_ > 0.0) || !std::isfinite(a_)) {
        throw InvalidParameter("SemilinearProblem: diffusion coefficient must be positive");
    }
    for (const auto* s : {&left_, &right_}) {
        if (s->is_closed_loop() && s->feedback_weights().size() != initial_.size()) {
            throw InvalidParameter("SemilinearProblem: feedback weights do not match the grid");
        }
    }
    require_compatible(left_, 0.0, initial_.values(), initial_.front(), "left");
    require_compatible(right_, 0.0, initial_.values(), initial_.back(), "right");
}

SemilinearProblem SemilinearProblem::with_data(Field initial, BoundarySignal left,
                                               BoundarySignal right) const {
    return SemilinearProblem(a_, reaction_, std::move(initial), std::move(left), std::move(right));
}

double SemilinearProblem::max_monotone_dt() const noexcept {
    const auto& b = reaction_.bounds();
    const double k = std::max(b.lipschitz_k, b.lipschitz_below);
    return k > 0.0 ? 1.0 / k : kInf;
}

// ---------------------------------------------------------------------------
// Stepper

namespace detail {

Stepper::Stepper(const SemilinearProblem& problem, const Grid1D& grid, double dt)
    : problem_(problem), grid_(grid), dt_(dt) {
    if (!(dt > 0.0)) {
        throw InvalidParameter("step: dt must be positive");
    }
    const auto& b = problem.reaction().bounds();
    if (dt * std::max(b.lipschitz_k, b.lipschitz_below) >= 1.0) {
        throw MonotonicityLoss("step: dt * Lipschitz bound >= 1 breaks order preservation (dt=" +
                               std::to_string(dt) + ", max dt=" +
                               std::to_string(problem.max_monotone_dt()) + ")");
    }
    const std::size_t n = grid.n_interior();
    const double h = grid.h();
    r_ = problem.a() * dt / (h * h);

    // Thomas factorization of tridiag(-r, 1+2r, -r).
    const double diag = 1.0 + 2.0 * r_;
    const double off = -r_;
    cprime_.resize(n);
    inv_denom_.resize(n);
    double prev_c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double denom = diag - (i == 0 ? 0.0 : off * prev_c);
        if (!(std::abs(denom) > 1e-300)) {
            throw NumericalError("step: tridiagonal elimination broke down");
        }
        inv_denom_[i] = 1.0 / denom;
        prev_c = off * inv_denom_[i];
        cprime_[i] = prev_c;
    }

    closed_left_ = problem.left().is_closed_loop();
    closed_right_ = problem.right().is_closed_loop();
    if (closed_left_) {
        w_left_.assign(n, 0.0);
        w_left_[0] = r_;
        solve(w_left_);
    }
    if (closed_right_) {
        w_right_.assign(n, 0.0);
        w_right_[n - 1] = r_;
        solve(w_right_);
    }
}

void Stepper::solve(std::vector<double>& rhs) const {
    const std::size_t n = rhs.size();
    const double off = -r_;
    rhs[0] *= inv_denom_[0];
    for (std::size_t i = 1; i < n; ++i) {
        rhs[i] = (rhs[i] - off * rhs[i - 1]) * inv_denom_[i];
    }
    for (std::size_t i = n - 1; i-- > 0;) {
        rhs[i] -= cprime_[i] * rhs[i + 1];
    }
}

std::vector<double> Stepper::advance(std::span<const double> x, double t_next) const {
    const std::size_t n = grid_.n_interior();
    const std::size_t last = grid_.last();
    const double h = grid_.h();
    const auto& f = problem_.reaction();

    std::vector<double> rhs(n);
    for (std::size_t i = 1; i <= n; ++i) {
        double xi = 0.0;
        if (f.uses_gradient()) {
            if (i == 1) {
                xi = (x[2] - x[1]) / h;
            } else if (i == n) {
                xi = (x[n] - x[n - 1]) / h;
            } else {
                xi = (x[i + 1] - x[i - 1]) / (2.0 * h);
            }
        }
        rhs[i - 1] = f.is_zero() ? x[i] : x[i] + dt_ * f(grid_.z(i), x[i], xi);
    }

    double b_left = closed_left_ ? 0.0 : problem_.left()(t_next);
    double b_right = closed_right_ ? 0.0 : problem_.right()(t_next);
    rhs[0] += r_ * b_left;
    rhs[n - 1] += r_ * b_right;
    solve(rhs);

    if (closed_left_ || closed_right_) {
        // Boundary values b solve  b_E + <c_E, y(b)> = d_E(t_next), where the
        // interior is y = v + b_L w_L + b_R w_R.
        double m[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
        double g[2] = {0.0, 0.0};
        const BoundarySignal* ends[2] = {&problem_.left(), &problem_.right()};
        const bool closed[2] = {closed_left_, closed_right_};
        for (int e = 0; e < 2; ++e) {
            if (!closed[e]) {
                m[e][e] = 1.0;
                g[e] = e == 0 ? b_left : b_right;
                continue;
            }
            const auto c = ends[e]->feedback_weights();
            double known = 0.0;
            for (std::size_t i = 1; i <= n; ++i) {
                known += c[i] * rhs[i - 1];
            }
            m[e][0] = (e == 0 ? 1.0 : 0.0) + c[0];
            m[e][1] = (e == 1 ? 1.0 : 0.0) + c[last];
            if (closed_left_) {
                for (std::size_t i = 1; i <= n; ++i) m[e][0] += c[i] * w_left_[i - 1];
            }
            if (closed_right_) {
                for (std::size_t i = 1; i <= n; ++i) m[e][1] += c[i] * w_right_[i - 1];
            }
            g[e] = ends[e]->disturbance()(t_next) - known;
        }
        const double det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if (!(std::abs(det) > 1e-14)) {
            throw NumericalError("step: closed-loop boundary system is singular");
        }
        b_left = (g[0] * m[1][1] - m[0][1] * g[1]) / det;
        b_right = (m[0][0] * g[1] - m[1][0] * g[0]) / det;
        if (closed_left_) {
            for (std::size_t i = 0; i < n; ++i) rhs[i] += b_left * w_left_[i];
        }
        if (closed_right_) {
            for (std::size_t i = 0; i < n; ++i) rhs[i] += b_right * w_right_[i];
        }
    }

    std::vector<double> out(grid_.n_nodes());
    out[0] = b_left;
    out[last] = b_right;
    std::copy(rhs.begin(), rhs.end(), out.begin() + 1);
    for (double v : out) {
        if (!std::isfinite(v)) {
            throw NumericalError("step: non-finite value produced");
        }
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------

Field step(const SemilinearProblem& problem, const Field& state, double t, double dt) {
    const Grid1D& grid = state.grid();
    if (grid.n_interior() != problem.grid().n_interior()) {
        throw InvalidParameter("step: state grid does not match the problem");
    }
    require_compatible(problem.left(), t, state.values(), state.front(), "left");
    require_compatible(problem.right(), t, state.values(), state.back(), "right");
    detail::Stepper stepper(problem, grid, dt);
    return Field(grid, stepper.advance(state.values(), t + dt));
}

Trajectory simulate(const SemilinearProblem& problem, const Grid1D& grid) {
    if (grid.n_interior() != problem.grid().n_interior()) {
        throw InvalidParameter("simulate: grid does not match the problem's initial field");
    }
    for (const auto* s : {&problem.left(), &problem.right()}) {
        if (s->horizon() < grid.t_final() * (1.0 - 1e-12)) {
            throw InvalidParameter("simulate: boundary signal does not cover [0, t_final]");
        }
    }
    const detail::Stepper stepper(problem, grid, grid.dt());
    const std::size_t steps = grid.steps();

    std::vector<double> times;
    std::vector<Field> states;
    times.reserve(steps + 1);
    states.reserve(steps + 1);
    times.push_back(0.0);
    states.emplace_back(grid, std::vector<double>(problem.initial().values().begin(),
                                                  problem.initial().values().end()));
    for (std::size_t k = 1; k <= steps; ++k) {
        const double t = grid.time(k);
        try {
            states.emplace_back(grid, stepper.advance(states.back().values(), t));
        } catch (const Error& e) {
            throw SimulationError(e.what(), grid.time(k - 1));
        }
        times.push_back(t);
    }
    return Trajectory(std::move(times), std::move(states));
}

double residual(double a, const Reaction& reaction, const Trajectory& traj) {
    if (traj.size() < 3) {
        return 0.0;
    }
    const Grid1D& grid = traj.grid();
    const std::size_t n = grid.n_interior();
    const double h = grid.h();
    const auto times = traj.times();
    double worst = 0.0;
    for (std::size_t k = 1; k + 1 < traj.size(); ++k) {
        const auto prev = traj.state(k - 1).values();
        const auto cur = traj.state(k).values();
        const auto next = traj.state(k + 1).values();
        const double two_dt = times[k + 1] - times[k - 1];
        for (std::size_t i = 1; i <= n; ++i) {
            const double xt = (next[i] - prev[i]) / two_dt;
            const double xzz = (cur[i + 1] - 2.0 * cur[i] + cur[i - 1]) / (h * h);
            const double xz = (cur[i + 1] - cur[i - 1]) / (2.0 * h);
            const double f = reaction.is_zero() ? 0.0 : reaction(grid.z(i), cur[i], xz);
            worst = std::max(worst, std::abs(xt - a * xzz - f));
        }
    }
    return worst;
}

double residual(const SemilinearProblem& problem, const Trajectory& traj) {
    return residual(problem.a(), problem.reaction(), traj);
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "t,z,value\n";
    const Grid1D& grid = traj.grid();
    char buf[96];
    for (std::size_t k = 0; k < traj.size(); ++k) {
        const auto v = traj.state(k).values();
        for (std::size_t i = 0; i < v.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.17g\n", traj.times()[k], grid.z(i), v[i]);
            os << buf;
        }
    }
}

std::vector<double> running_sup(std::span<const double> values) {
    std::vector<double> out(values.size());
    double m = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        m = std::max(m, std::abs(values[k]));
        out[k] = m;
    }
    return out;
}

}  // namespace issp
