#pragma once

// Cost and value functions of market participants, their marginal maps and
// marginal inverses (supply and demand curves), consumer aggregation and the
// time-varying consumer perturbation models.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rtpvol/errors.hpp"
#include "rtpvol/numeric.hpp"

namespace rtpvol {

enum class Side { cost, value };

inline const char* to_string(Side s) { return s == Side::cost ? "cost" : "value"; }

// c(x) = k x^beta, beta > 1.
struct PowerSpec {
  double coefficient = 1.0;
  double exponent = 2.0;
};

// v(x) = (x - u)^(1/alpha), alpha > 1, u >= 0.
struct RootSpec {
  double alpha = 2.0;
  double shift = 0.0;
};

// v(x) = k log x.
struct LogSpec {
  double scale = 1.0;
};

// Marginal curve given at knots; interpolated by a monotone cubic. The
// function value is the integral of the marginal plus value_at_first.
struct TabulatedSpec {
  std::vector<double> x;
  std::vector<double> marginal;
  double value_at_first = 0.0;
};

// User-supplied closed forms. d1_inverse may be left empty, in which case the
// marginal is inverted numerically.
struct ClosedFormSpec {
  std::function<double(double)> eval;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  std::function<double(double)> d1_inverse;
  std::string label = "closed-form";
};

using FunctionSpec = std::variant<PowerSpec, RootSpec, LogSpec, TabulatedSpec, ClosedFormSpec>;

inline std::string family_name(const FunctionSpec& s) {
  switch (s.index()) {
    case 0: return "power";
    case 1: return "root";
    case 2: return "log";
    case 3: return "tabulated";
    default: return "closed_form";
  }
}

struct Domain {
  double lo = 1e-9;
  double hi = 1e12;
};

namespace detail {

struct Family {
  double lo = 0.0;
  double hi = 0.0;
  virtual ~Family() = default;
  virtual double eval(double x) const = 0;
  virtual double d1(double x) const = 0;
  virtual double d2(double x) const = 0;
  virtual std::optional<double> inverse(double) const { return std::nullopt; }
  virtual bool analytic() const { return false; }
};

struct PowerFamily final : Family {
  double k, b;
  PowerFamily(double k_, double b_) : k(k_), b(b_) {}
  double eval(double x) const override { return k * std::pow(x, b); }
  double d1(double x) const override { return k * b * std::pow(x, b - 1.0); }
  double d2(double x) const override { return k * b * (b - 1.0) * std::pow(x, b - 2.0); }
  std::optional<double> inverse(double lam) const override { return std::pow(lam / (k * b), 1.0 / (b - 1.0)); }
  bool analytic() const override { return true; }
};

struct RootFamily final : Family {
  double a, u;
  RootFamily(double a_, double u_) : a(a_), u(u_) {}
  double eval(double x) const override { return std::pow(x - u, 1.0 / a); }
  double d1(double x) const override { return std::pow(x - u, 1.0 / a - 1.0) / a; }
  double d2(double x) const override { return (1.0 / a) * (1.0 / a - 1.0) * std::pow(x - u, 1.0 / a - 2.0); }
  std::optional<double> inverse(double lam) const override { return u + std::pow(a * lam, a / (1.0 - a)); }
  bool analytic() const override { return true; }
};

struct LogFamily final : Family {
  double k;
  explicit LogFamily(double k_) : k(k_) {}
  double eval(double x) const override { return k * std::log(x); }
  double d1(double x) const override { return k / x; }
  double d2(double x) const override { return -k / (x * x); }
  std::optional<double> inverse(double lam) const override { return k / lam; }
  bool analytic() const override { return true; }
};

struct TabulatedFamily final : Family {
  numeric::MonotoneCubic curve;
  double v0;
  TabulatedFamily(numeric::MonotoneCubic c, double v0_) : curve(std::move(c)), v0(v0_) {}
  double eval(double x) const override { return v0 + curve.integral(x); }
  double d1(double x) const override { return curve(x); }
  double d2(double x) const override { return curve.derivative(x); }
};

struct ClosedFormFamily final : Family {
  ClosedFormSpec s;
  explicit ClosedFormFamily(ClosedFormSpec s_) : s(std::move(s_)) {}
  double eval(double x) const override { return s.eval(x); }
  double d1(double x) const override { return s.d1(x); }
  double d2(double x) const override { return s.d2(x); }
  std::optional<double> inverse(double lam) const override {
    if (s.d1_inverse) return s.d1_inverse(lam);
    return std::nullopt;
  }
};

}  // namespace detail

// Immutable, cheaply copyable handle to a cost or value function on a
// truncated domain. Evaluation outside the domain, or inversion outside the
// range of the marginal, throws RangeError.
class SmoothFunction {
 public:
  SmoothFunction() = default;

  double operator()(double x) const {
    check_x(x);
    return n_ * impl_->eval(x / n_);
  }
  double d1(double x) const {
    check_x(x);
    return impl_->d1(x / n_);
  }
  double d2(double x) const {
    check_x(x);
    return impl_->d2(x / n_) / n_;
  }

  double domain_lo() const { return n_ * impl_->lo; }
  double domain_hi() const { return n_ * impl_->hi; }
  Side side() const { return side_; }
  const FunctionSpec& spec() const { return *spec_; }
  double multiplicity() const { return n_; }
  bool analytic_inverse_slope() const { return impl_->analytic(); }

  // [min, max] of the marginal over the domain.
  std::pair<double, double> marginal_range() const { return range_; }

  bool in_marginal_range(double lam) const { return lam >= range_.first && lam <= range_.second; }

  double d1_inverse(double lam) const {
    if (!std::isfinite(lam) || !(lam > 0.0)) {
      throw RangeError("marginal inverse needs a positive finite price, got " + numeric::fmt(lam));
    }
    if (!in_marginal_range(lam)) {
      throw RangeError("price " + numeric::fmt(lam) + " outside marginal range [" + numeric::fmt(range_.first) +
                       ", " + numeric::fmt(range_.second) + "] of the " + to_string(side_) + " function");
    }
    // Closed forms can round a few ulps past the domain ends.
    const auto closed = impl_->inverse(lam);
    const double x = n_ * (closed ? *closed : numeric_inverse(lam));
    return std::clamp(x, domain_lo(), domain_hi());
  }

  // d/dlambda of the marginal inverse. Closed-form families use the inverse
  // function rule; custom families a Richardson-extrapolated central
  // difference, falling back to the inverse function rule where the stencil
  // would leave the marginal range.
  double d1_inverse_slope(double lam) const {
    if (impl_->analytic()) return 1.0 / d2(d1_inverse(lam));
    double h = std::min(std::max(1e-6, 1e-6 * lam), 0.25 * lam);
    if (!in_marginal_range(lam - h) || !in_marginal_range(lam + h)) return 1.0 / d2(d1_inverse(lam));
    auto central = [&](double s) { return (d1_inverse(lam + s) - d1_inverse(lam - s)) / (2.0 * s); };
    return (4.0 * central(0.5 * h) - central(h)) / 3.0;
  }

 private:
  friend SmoothFunction build_function(const FunctionSpec&, Side, Domain);
  friend SmoothFunction aggregate_consumers(const SmoothFunction&, std::size_t);

  void check_x(double x) const {
    if (!(x >= domain_lo() && x <= domain_hi())) {
      throw RangeError("quantity " + numeric::fmt(x) + " outside domain [" + numeric::fmt(domain_lo()) + ", " +
                       numeric::fmt(domain_hi()) + "] of the " + to_string(side_) + " function");
    }
  }

  double numeric_inverse(double lam) const {
    auto r = [&](double x) { return impl_->d1(x) - lam; };
    const double guess = std::clamp(1.0, impl_->lo, impl_->hi);
    auto [a, b] = numeric::bracket_geometric(r, guess, impl_->lo, impl_->hi);
    if (a == b) return a;
    numeric::BisectOptions opt;
    opt.residual_tol = 1e-12 * std::min(1.0, lam);
    return numeric::bisect(r, a, b, opt);
  }

  std::shared_ptr<const detail::Family> impl_;
  std::shared_ptr<const FunctionSpec> spec_;
  Side side_ = Side::cost;
  double n_ = 1.0;
  std::pair<double, double> range_{0.0, 0.0};
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

inline std::pair<double, double> compute_range(const Family& f, Side side) {
  const double a = f.d1(f.lo);
  const double b = f.d1(f.hi);
  return side == Side::cost ? std::make_pair(a, b) : std::make_pair(b, a);
}

// Samples the family on its domain and checks the side's curvature
// requirements.
inline void check_shape(const Family& f, Side side, const std::string& name) {
  const auto grid = numeric::log_grid(f.lo, f.hi, 97);
  double prev = side == Side::cost ? -1.0 : std::numeric_limits<double>::infinity();
  for (double x : grid) {
    const double v = f.eval(x), m = f.d1(x), c = f.d2(x);
    if (!std::isfinite(v) || !std::isfinite(m) || !std::isfinite(c)) {
      throw ValidationError(name + ": non-finite value or derivative at x = " + numeric::fmt(x));
    }
    if (!(m > 0.0)) throw ValidationError(name + ": marginal must be positive, got " + numeric::fmt(m) + " at x = " + numeric::fmt(x));
    if (side == Side::cost && !(c > 0.0)) {
      throw ValidationError(name + ": cost functions must be strictly convex, second derivative " + numeric::fmt(c) +
                            " at x = " + numeric::fmt(x));
    }
    if (side == Side::value && !(c < 0.0)) {
      throw ValidationError(name + ": value functions must be strictly concave, second derivative " + numeric::fmt(c) +
                            " at x = " + numeric::fmt(x));
    }
    const bool monotone = side == Side::cost ? m > prev : m < prev;
    if (!monotone) throw ValidationError(name + ": marginal is not strictly monotone near x = " + numeric::fmt(x));
    prev = m;
  }
}

}  // namespace detail

inline SmoothFunction build_function(const FunctionSpec& spec, Side side, Domain dom = {}) {
  using detail::require;
  require(std::isfinite(dom.lo) && std::isfinite(dom.hi) && dom.lo > 0.0 && dom.hi > dom.lo,
          "domain must satisfy 0 < lo < hi < inf");
  std::shared_ptr<detail::Family> f;
  const std::string name = family_name(spec);
  if (auto p = std::get_if<PowerSpec>(&spec)) {
    require(std::isfinite(p->coefficient) && p->coefficient > 0.0, "power: coefficient must be positive");
    require(std::isfinite(p->exponent) && p->exponent > 1.0, "power: exponent must be > 1");
    f = std::make_shared<detail::PowerFamily>(p->coefficient, p->exponent);
    f->lo = dom.lo;
    f->hi = dom.hi;
  } else if (auto r = std::get_if<RootSpec>(&spec)) {
    require(std::isfinite(r->alpha) && r->alpha > 1.0, "root: alpha must be > 1");
    require(std::isfinite(r->shift) && r->shift >= 0.0, "root: shift must be >= 0");
    f = std::make_shared<detail::RootFamily>(r->alpha, r->shift);
    // Offset relative to the shift so that lo - shift stays representable.
    f->lo = r->shift + std::max(dom.lo, r->shift * 1e-15);
    f->hi = dom.hi;
    require(f->hi > f->lo, "root: shift leaves an empty domain");
  } else if (auto l = std::get_if<LogSpec>(&spec)) {
    require(std::isfinite(l->scale) && l->scale > 0.0, "log: scale must be positive");
    f = std::make_shared<detail::LogFamily>(l->scale);
    f->lo = dom.lo;
    f->hi = dom.hi;
  } else if (auto t = std::get_if<TabulatedSpec>(&spec)) {
    require(!t->x.empty() && t->x.front() > 0.0, "tabulated: knots must be positive");
    auto fam = std::make_shared<detail::TabulatedFamily>(numeric::MonotoneCubic(t->x, t->marginal), t->value_at_first);
    fam->lo = std::max(dom.lo, t->x.front());
    fam->hi = std::min(dom.hi, t->x.back());
    require(fam->hi > fam->lo, "tabulated: knots do not overlap the domain");
    f = fam;
  } else {
    const auto& c = std::get<ClosedFormSpec>(spec);
    require(static_cast<bool>(c.eval) && static_cast<bool>(c.d1) && static_cast<bool>(c.d2),
            "closed_form: eval, d1 and d2 are all required");
    f = std::make_shared<detail::ClosedFormFamily>(c);
    f->lo = dom.lo;
    f->hi = dom.hi;
  }
  detail::check_shape(*f, side, name + " " + to_string(side) + " function");
  SmoothFunction out;
  out.range_ = detail::compute_range(*f, side);
  out.impl_ = std::move(f);
  out.spec_ = std::make_shared<const FunctionSpec>(spec);
  out.side_ = side;
  return out;
}

// Supply or demand at a price: the marginal inverse.
inline double marginal_inverse(const SmoothFunction& f, double lambda) { return f.d1_inverse(lambda); }

// Representative agent for n identical consumers: v(x) = n v0(x / n).
inline SmoothFunction aggregate_consumers(const SmoothFunction& base, std::size_t n) {
  if (n == 0) throw ValidationError("aggregate_consumers: need at least one consumer");
  SmoothFunction out = base;
  out.n_ = base.n_ * static_cast<double>(n);
  return out;
}

inline SmoothFunction aggregate_consumers(const std::vector<SmoothFunction>& fns) {
  if (fns.empty()) throw ValidationError("aggregate_consumers: empty consumer list");
  const SmoothFunction& base = fns.front();
  const auto grid = numeric::log_grid(base.domain_lo(), base.domain_hi(), 9);
  for (const auto& f : fns) {
    if (f.side() != base.side() || f.domain_lo() != base.domain_lo() || f.domain_hi() != base.domain_hi()) {
      throw ValidationError("aggregate_consumers: consumers must be identical");
    }
    for (double x : grid) {
      if (f.d1(x) != base.d1(x)) throw ValidationError("aggregate_consumers: consumers must be identical");
    }
  }
  return aggregate_consumers(base, fns.size());
}

// Time-varying consumer disturbance. Sequences repeat cyclically; an empty
// sequence means zero disturbance.
struct NoPerturbation {};
struct MultiplicativePerturbation {
  std::vector<double> delta;
};
struct AdditivePerturbation {
  double u0 = 1.0;
  std::vector<double> u;
};

struct ConsumerPerturbation {
  std::variant<NoPerturbation, MultiplicativePerturbation, AdditivePerturbation> model;
  double kappa = 0.0;

  static ConsumerPerturbation none() { return {}; }
  static ConsumerPerturbation multiplicative(std::vector<double> delta, double kappa) {
    ConsumerPerturbation p{MultiplicativePerturbation{std::move(delta)}, kappa};
    p.validate();
    return p;
  }
  static ConsumerPerturbation additive(double u0, std::vector<double> u, double kappa) {
    ConsumerPerturbation p{AdditivePerturbation{u0, std::move(u)}, kappa};
    p.validate();
    return p;
  }

  bool is_none() const { return std::holds_alternative<NoPerturbation>(model); }
  bool is_multiplicative() const { return std::holds_alternative<MultiplicativePerturbation>(model); }
  bool is_additive() const { return std::holds_alternative<AdditivePerturbation>(model); }

  const std::vector<double>& sequence() const {
    static const std::vector<double> empty;
    if (auto m = std::get_if<MultiplicativePerturbation>(&model)) return m->delta;
    if (auto a = std::get_if<AdditivePerturbation>(&model)) return a->u;
    return empty;
  }

  double u0() const {
    if (auto a = std::get_if<AdditivePerturbation>(&model)) return a->u0;
    return 0.0;
  }

  // Disturbance at time t, bound-checked against kappa.
  double sample(std::size_t t) const {
    const auto& s = sequence();
    if (s.empty()) return 0.0;
    const double d = s[t % s.size()];
    if (!(std::abs(d) <= kappa)) {
      throw DisturbanceBoundError("disturbance " + numeric::fmt(d) + " at t = " + std::to_string(t) +
                                  " exceeds kappa = " + numeric::fmt(kappa));
    }
    return d;
  }

  void validate() const {
    if (!(kappa >= 0.0) || !std::isfinite(kappa)) throw ValidationError("perturbation: kappa must be finite and >= 0");
    if (is_multiplicative() && kappa > 1.0) {
      throw DisturbanceBoundError("multiplicative perturbation: kappa must be <= 1, got " + numeric::fmt(kappa));
    }
    if (auto a = std::get_if<AdditivePerturbation>(&model)) {
      if (!(a->u0 >= 1.0) || !std::isfinite(a->u0)) throw ValidationError("additive perturbation: u0 must be >= 1");
      if (kappa > a->u0) {
        throw DisturbanceBoundError("additive perturbation: kappa " + numeric::fmt(kappa) + " exceeds u0 " +
                                    numeric::fmt(a->u0));
      }
    }
    const auto& s = sequence();
    for (std::size_t t = 0; t < s.size(); ++t) sample(t);
  }
};

// Consumer response at price lambda and time t, before any scaling applied by
// the closed-loop stepper: (1 + delta) d(lambda), u0 + u/2 + d(lambda), or
// d(lambda).
inline double perturbed_demand(const SmoothFunction& v, double lambda, const ConsumerPerturbation& p, std::size_t t) {
  const double base = v.d1_inverse(lambda);
  if (p.is_multiplicative()) return (1.0 + p.sample(t)) * base;
  if (p.is_additive()) return p.u0() + 0.5 * p.sample(t) + base;
  return base;
}

}  // namespace rtpvol
