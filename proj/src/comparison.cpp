#include "iss_parabolic/comparison.hpp"

#include <cmath>
#include <sstream>
#include <variant>

#include "iss_parabolic/errors.hpp"

namespace issp {

struct GainFn::Node {
    struct Linear {
        double c;
    };
    struct Power {
        double c;
        double q;
    };
    struct Sum {
        GainFn lhs;
        GainFn rhs;
    };
    struct Compose {
        GainFn outer;
        GainFn inner;
    };
    std::variant<Linear, Power, Sum, Compose> op;
};

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

GainFn::GainFn() : GainFn(identity()) {}

GainFn GainFn::linear(double c) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
        throw InvalidParameter("GainFn::linear: coefficient must be finite and >= 0");
    }
    return GainFn(std::make_shared<const Node>(Node{Node::Linear{c}}));
}

GainFn GainFn::power(double c, double q) {
    if (!(c > 0.0) || !(q > 0.0) || !std::isfinite(c) || !std::isfinite(q)) {
        throw InvalidParameter("GainFn::power: need c > 0 and q > 0");
    }
    if (q == 1.0) {
        return linear(c);
    }
    return GainFn(std::make_shared<const Node>(Node{Node::Power{c, q}}));
}

GainFn GainFn::operator+(const GainFn& other) const {
    const auto a = linear_coefficient();
    const auto b = other.linear_coefficient();
    if (a && b) {
        return linear(*a + *b);
    }
    return GainFn(std::make_shared<const Node>(Node{Node::Sum{*this, other}}));
}

GainFn GainFn::compose(const GainFn& inner) const {
    const auto a = linear_coefficient();
    const auto b = inner.linear_coefficient();
    if (a && b) {
        return linear(*a * *b);
    }
    if (a && *a == 1.0) {
        return inner;
    }
    if (b && *b == 1.0) {
        return *this;
    }
    return GainFn(std::make_shared<const Node>(Node{Node::Compose{*this, inner}}));
}

GainFn GainFn::scaled(double c) const {
    return linear(c).compose(*this);
}

double GainFn::operator()(double r) const {
    return std::visit(overloaded{
                          [r](const Node::Linear& n) { return n.c * r; },
                          [r](const Node::Power& n) { return n.c * std::pow(r, n.q); },
                          [r](const Node::Sum& n) { return n.lhs(r) + n.rhs(r); },
                          [r](const Node::Compose& n) { return n.outer(n.inner(r)); },
                      },
                      node_->op);
}

std::optional<double> GainFn::linear_coefficient() const {
    return std::visit(overloaded{
                          [](const Node::Linear& n) -> std::optional<double> { return n.c; },
                          [](const Node::Power&) -> std::optional<double> { return std::nullopt; },
                          [](const Node::Sum& n) -> std::optional<double> {
                              auto a = n.lhs.linear_coefficient();
                              auto b = n.rhs.linear_coefficient();
                              if (a && b) return *a + *b;
                              return std::nullopt;
                          },
                          [](const Node::Compose& n) -> std::optional<double> {
                              auto a = n.outer.linear_coefficient();
                              auto b = n.inner.linear_coefficient();
                              if (a && b) return *a * *b;
                              return std::nullopt;
                          },
                      },
                      node_->op);
}

std::string GainFn::describe() const {
    std::ostringstream os;
    std::visit(overloaded{
                   [&](const Node::Linear& n) { os << n.c << "*r"; },
                   [&](const Node::Power& n) { os << n.c << "*r^" << n.q; },
                   [&](const Node::Sum& n) { os << "(" << n.lhs.describe() << " + " << n.rhs.describe() << ")"; },
                   [&](const Node::Compose& n) { os << n.outer.describe() << " o " << "(" << n.inner.describe() << ")"; },
               },
               node_->op);
    return os.str();
}

KLBound::KLBound(double m, double sigma, GainFn inner, GainFn outer)
    : m_(m), sigma_(sigma), inner_(std::move(inner)), outer_(std::move(outer)) {
    if (!(m > 0.0) || !std::isfinite(m)) {
        throw InvalidParameter("KLBound: overshoot factor must be positive");
    }
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw InvalidParameter("KLBound: decay rate must be positive");
    }
    const auto ci = inner_.linear_coefficient();
    const auto co = outer_.linear_coefficient();
    if (ci && co) {
        m_ *= *ci * *co;
        inner_ = GainFn::identity();
        outer_ = GainFn::identity();
        shape_ = Shape::exponential_linear;
    } else {
        shape_ = Shape::exponential_nonlinear;
    }
}

KLBound KLBound::exponential_linear(double m, double sigma) {
    return KLBound(m, sigma, GainFn::identity(), GainFn::identity());
}

KLBound KLBound::exponential(double m, double sigma, const GainFn& inner, const GainFn& outer) {
    return KLBound(m, sigma, inner, outer);
}

double KLBound::operator()(double r, double t) const {
    return outer_(m_ * std::exp(-sigma_ * t) * inner_(r));
}

GainFn KLBound::at_time(double t) const {
    return outer_.compose(inner_.scaled(m_ * std::exp(-sigma_ * t)));
}

std::string KLBound::describe() const {
    std::ostringstream os;
    if (is_exponential_linear()) {
        os << m_ << "*exp(-" << sigma_ << "*t)*r";
    } else {
        os << outer_.describe() << " o (" << m_ << "*exp(-" << sigma_ << "*t) * " << inner_.describe() << ")";
    }
    return os.str();
}

std::pair<KLBound, GainFn> combine_bounds(const KLBound& beta, const GainFn& gamma,
                                          const GainFn& rho, const GainFn& eta,
                                          const GainFn& xi) {
    // r -> 2 xi(2r)
    const GainFn spread = xi.compose(GainFn::linear(2.0)).scaled(2.0);
    // beta(s,t) = outer(m e^{-sigma t} inner(s)); push the spread into inner
    // and rho(4 .) onto outer.
    const GainFn outer = rho.compose(GainFn::linear(4.0)).compose(beta.outer());
    const GainFn inner = beta.inner().compose(spread);
    KLBound beta_hat = KLBound::exponential(beta.m(), beta.sigma(), inner, outer);

    const GainFn transient_at_zero = beta.at_time(0.0).compose(spread).scaled(4.0);
    const GainFn input_part = gamma.compose(eta).scaled(4.0);
    GainFn gamma_hat = rho.compose(transient_at_zero + input_part);
    return {std::move(beta_hat), std::move(gamma_hat)};
}

bool sampled_k_infinity(const GainFn& gamma, std::span<const double> radii) {
    if (gamma(0.0) != 0.0) {
        return false;
    }
    double prev_r = 0.0;
    double prev = 0.0;
    for (double r : radii) {
        if (!(r > prev_r)) {
            return false;  // radii must be sorted and positive
        }
        const double v = gamma(r);
        if (!(v > prev)) {
            return false;
        }
        prev_r = r;
        prev = v;
    }
    return true;
}

bool sampled_kl(const KLBound& beta, std::span<const double> radii,
                std::span<const double> times, double tail) {
    for (double t : times) {
        if (!sampled_k_infinity(beta.at_time(t), radii)) {
            return false;
        }
    }
    if (times.empty()) {
        return true;
    }
    for (double r : radii) {
        double prev = beta(r, times.front());
        const double start = prev;
        for (double t : times.subspan(1)) {
            const double v = beta(r, t);
            if (v > prev) {
                return false;
            }
            prev = v;
        }
        if (times.size() > 1 && prev > tail * start) {
            return false;
        }
    }
    return true;
}

}  // namespace issp
