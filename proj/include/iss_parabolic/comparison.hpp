#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>

namespace issp {

/// Gain function from a closed parametric algebra: c*r, c*r^q, sums and
/// compositions of those. Immutable and cheap to copy (shared node tree).
///
/// Members of class K-infinity need c > 0; a zero linear gain is allowed so
/// that input-free bounds can carry an explicit null gain.
class GainFn {
public:
    GainFn();  // identity

    static GainFn identity() { return linear(1.0); }
    static GainFn linear(double c);
    static GainFn power(double c, double q);

    /// Pointwise sum.
    GainFn operator+(const GainFn& other) const;
    /// this ∘ inner
    GainFn compose(const GainFn& inner) const;
    /// c * this
    GainFn scaled(double c) const;

    double operator()(double r) const;

    /// Slope when the function is linear, nullopt otherwise.
    std::optional<double> linear_coefficient() const;
    bool is_linear() const { return linear_coefficient().has_value(); }

    std::string describe() const;

    struct Node;

private:
    explicit GainFn(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
    std::shared_ptr<const Node> node_;
};

/// KL function of the form beta(r,t) = outer(m * exp(-sigma t) * inner(r)).
///
/// With inner and outer linear this is the exponential-linear shape
/// M e^{-sigma t} r; the constructors fold linear slopes into m.
class KLBound {
public:
    enum class Shape { exponential_linear, exponential_nonlinear };

    KLBound() : KLBound(exponential_linear(1.0, 1.0)) {}

    static KLBound exponential_linear(double m, double sigma);
    static KLBound exponential(double m, double sigma, const GainFn& inner,
                               const GainFn& outer = GainFn::identity());

    double operator()(double r, double t) const;

    Shape shape() const noexcept { return shape_; }
    bool is_exponential_linear() const noexcept { return shape_ == Shape::exponential_linear; }
    double m() const noexcept { return m_; }
    double sigma() const noexcept { return sigma_; }
    const GainFn& inner() const noexcept { return inner_; }
    const GainFn& outer() const noexcept { return outer_; }

    /// r -> beta(r, t) for a frozen t, as a gain.
    GainFn at_time(double t) const;

    std::string describe() const;

private:
    KLBound(double m, double sigma, GainFn inner, GainFn outer);

    double m_;
    double sigma_;
    GainFn inner_;
    GainFn outer_;
    Shape shape_;
};

inline double kl_eval(const KLBound& b, double r, double t) { return b(r, t); }

/// Constant-input reduction of an ISS pair: given beta, gamma and the
/// bracketing gains rho, eta, xi, returns
///   beta_hat(r,t) = rho(4 beta(2 xi(2r), t))
///   gamma_hat(r)  = rho(4 beta(2 xi(2r), 0) + 4 gamma(eta(r))).
/// All-linear inputs with an exponential-linear beta give an
/// exponential-linear beta_hat and a linear gamma_hat.
std::pair<KLBound, GainFn> combine_bounds(const KLBound& beta, const GainFn& gamma,
                                          const GainFn& rho, const GainFn& eta,
                                          const GainFn& xi);

/// Sampling check of K-infinity membership: gamma(0) = 0, strictly
/// increasing along the (sorted, positive) radii.
bool sampled_k_infinity(const GainFn& gamma, std::span<const double> radii);

/// Sampling check of KL membership: each time slice is a K function of r,
/// each radius slice is nonincreasing in t and tends to 0 at the last time
/// (value below `tail` relative to t = 0).
bool sampled_kl(const KLBound& beta, std::span<const double> radii,
                std::span<const double> times, double tail = 1e-6);

}  // namespace issp
