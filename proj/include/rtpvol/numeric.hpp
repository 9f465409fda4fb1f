#pragma once

// Scalar numerical kernels shared by the market modules: bracketing and
// bisection on monotone residuals, golden-section maximisation, log-spaced
// grids and a shape-preserving cubic interpolant.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "rtpvol/errors.hpp"

namespace rtpvol::numeric {

// Shortest text that round-trips to the same double.
inline std::string fmt(double x) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

inline double geometric_mid(double lo, double hi) {
  return std::sqrt(lo) * std::sqrt(hi);
}

inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) {
    throw DomainError("log_grid: need 0 < lo < hi and n >= 2, got [" + fmt(lo) + ", " + fmt(hi) + "]");
  }
  std::vector<double> g(n);
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
  }
  g.front() = lo;
  g.back() = hi;
  return g;
}

struct BisectOptions {
  double residual_tol = 1e-12;  // absolute, on |r(x)|
  double rel_width_tol = 0.0;   // stop once (hi - lo) <= rel_width_tol * |mid|
  int max_iter = 200;
  bool geometric = true;        // bisect in log space; requires lo > 0
};

// Root of a residual with a sign change on [lo, hi]. Stops on the residual
// tolerance, the width tolerance, or floating-point exhaustion of the bracket
// (the midpoint equals an endpoint), whichever comes first.
template <class F>
double bisect(F&& r, double lo, double hi, const BisectOptions& opt = {}) {
  double rlo = r(lo);
  double rhi = r(hi);
  if (rlo == 0.0) return lo;
  if (rhi == 0.0) return hi;
  if (!std::isfinite(rlo) || !std::isfinite(rhi)) {
    throw DomainError("bisect: non-finite residual at bracket ends [" + fmt(lo) + ", " + fmt(hi) + "]");
  }
  if ((rlo > 0.0) == (rhi > 0.0)) {
    throw RangeError("bisect: no sign change on [" + fmt(lo) + ", " + fmt(hi) + "]");
  }
  for (int it = 0; it < opt.max_iter; ++it) {
    const double mid = opt.geometric ? geometric_mid(lo, hi) : 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) {
      return std::abs(rlo) <= std::abs(rhi) ? lo : hi;
    }
    const double rm = r(mid);
    if (!std::isfinite(rm)) throw DomainError("bisect: non-finite residual at " + fmt(mid));
    if (std::abs(rm) <= opt.residual_tol) return mid;
    if (opt.rel_width_tol > 0.0 && (hi - lo) <= opt.rel_width_tol * std::abs(mid)) return mid;
    if ((rm > 0.0) == (rlo > 0.0)) {
      lo = mid;
      rlo = rm;
    } else {
      hi = mid;
      rhi = rm;
    }
  }
  throw ConvergenceError("bisect: no convergence in " + std::to_string(opt.max_iter) + " iterations");
}

// Finds [a, b] within [lo, hi] on which a monotone residual changes sign,
// growing geometrically outwards from `guess`. Throws RangeError when the
// whole interval carries one sign.
template <class F>
std::pair<double, double> bracket_geometric(F&& r, double guess, double lo, double hi,
                                            double factor = 4.0) {
  guess = std::clamp(guess, lo, hi);
  const double r0 = r(guess);
  if (r0 == 0.0) return {guess, guess};
  const bool pos0 = r0 > 0.0;
  double left = guess;
  double right = guess;
  while (left > lo || right < hi) {
    if (left > lo) {
      const double next = std::max(lo, left / factor);
      const double rn = r(next);
      if (rn == 0.0 || (rn > 0.0) != pos0) return {next, left};
      left = next;
    }
    if (right < hi) {
      const double next = std::min(hi, right * factor);
      const double rn = r(next);
      if (rn == 0.0 || (rn > 0.0) != pos0) return {right, next};
      right = next;
    }
  }
  throw RangeError("bracket: residual keeps one sign on [" + fmt(lo) + ", " + fmt(hi) + "]");
}

struct Maximum {
  double x = 0.0;
  double value = -std::numeric_limits<double>::infinity();
  int evaluations = 0;
};

// Golden-section maximisation of a unimodal objective on [lo, hi], carried
// out in log x. Returns the best point seen, endpoints included.
template <class F>
Maximum golden_max_log(F&& f, double lo, double hi, double rel_width = 1e-10, int max_iter = 300) {
  constexpr double kInvPhi = 0.6180339887498948482;
  Maximum best;
  auto probe = [&](double u) {
    const double x = std::clamp(std::exp(u), lo, hi);  // exp(log(x)) may round past an end
    const double v = f(x);
    ++best.evaluations;
    if (v > best.value) {
      best.value = v;
      best.x = x;
    }
    return v;
  };
  double a = std::log(lo);
  double b = std::log(hi);
  probe(a);
  probe(b);
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = probe(c);
  double fd = probe(d);
  for (int it = 0; it < max_iter && (b - a) > rel_width; ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = probe(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = probe(d);
    }
  }
  return best;
}

// Monotone piecewise-cubic Hermite interpolant (Fritsch-Carlson). Strictly
// monotone data yields a strictly monotone interpolant; values outside the
// knot range are rejected.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;

  MonotoneCubic(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) {
      throw ValidationError("tabulated curve needs at least two knots and matching value count");
    }
    std::vector<double> delta(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const double h = x_[k + 1] - x_[k];
      if (!(h > 0.0)) throw ValidationError("tabulated knots must be strictly increasing");
      delta[k] = (y_[k + 1] - y_[k]) / h;
      if (delta[k] == 0.0 || (k > 0 && (delta[k] > 0.0) != (delta[0] > 0.0))) {
        throw ValidationError("tabulated values must be strictly monotone");
      }
    }
    m_.assign(n, 0.0);
    if (n == 2) {
      m_[0] = m_[1] = delta[0];
    } else {
      for (std::size_t k = 1; k + 1 < n; ++k) {
        const double h0 = x_[k] - x_[k - 1];
        const double h1 = x_[k + 1] - x_[k];
        const double w1 = 2.0 * h1 + h0;
        const double w2 = h1 + 2.0 * h0;
        m_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
      }
      m_[0] = end_slope(x_[1] - x_[0], x_[2] - x_[1], delta[0], delta[1]);
      m_[n - 1] = end_slope(x_[n - 1] - x_[n - 2], x_[n - 2] - x_[n - 3], delta[n - 2], delta[n - 3]);
    }
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const double a = m_[k] / delta[k];
      const double b = m_[k + 1] / delta[k];
      const double s = a * a + b * b;
      if (s > 9.0) {
        const double tau = 3.0 / std::sqrt(s);
        m_[k] = tau * a * delta[k];
        m_[k + 1] = tau * b * delta[k];
      }
    }
    cumulative_.assign(n, 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k) cumulative_[k + 1] = cumulative_[k] + segment_integral(k, 1.0);
  }

  double lo() const { return x_.front(); }
  double hi() const { return x_.back(); }

  double operator()(double x) const {
    const auto [k, t, h] = locate(x);
    const double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * y_[k] + (t3 - 2 * t2 + t) * h * m_[k] + (-2 * t3 + 3 * t2) * y_[k + 1] +
           (t3 - t2) * h * m_[k + 1];
  }

  double derivative(double x) const {
    const auto [k, t, h] = locate(x);
    const double t2 = t * t;
    return ((6 * t2 - 6 * t) * y_[k] + (6 * t - 6 * t2) * y_[k + 1]) / h + (3 * t2 - 4 * t + 1) * m_[k] +
           (3 * t2 - 2 * t) * m_[k + 1];
  }

  // Integral of the interpolant from the first knot to x.
  double integral(double x) const {
    const auto [k, t, h] = locate(x);
    (void)h;
    return cumulative_[k] + segment_integral(k, t);
  }

 private:
  struct Loc {
    std::size_t k;
    double t;
    double h;
  };

  static double end_slope(double h0, double h1, double d0, double d1) {
    double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if ((m > 0.0) != (d0 > 0.0) || m == 0.0) return d0;
    if ((d0 > 0.0) != (d1 > 0.0) && std::abs(m) > 3.0 * std::abs(d0)) m = 3.0 * d0;
    return m;
  }

  Loc locate(double x) const {
    if (!(x >= x_.front() && x <= x_.back())) {
      throw RangeError("tabulated curve evaluated at " + fmt(x) + " outside knots [" + fmt(x_.front()) + ", " +
                       fmt(x_.back()) + "]");
    }
    auto it = std::upper_bound(x_.begin(), x_.end(), x);
    std::size_t k = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
    if (k + 1 >= x_.size()) k = x_.size() - 2;
    const double h = x_[k + 1] - x_[k];
    return {k, (x - x_[k]) / h, h};
  }

  double segment_integral(std::size_t k, double t) const {
    const double h = x_[k + 1] - x_[k];
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
    return h * (y_[k] * (t4 / 2 - t3 + t) + h * m_[k] * (t4 / 4 - 2 * t3 / 3 + t2 / 2) +
                y_[k + 1] * (-t4 / 2 + t3) + h * m_[k + 1] * (t4 / 4 - t3 / 3));
  }

  std::vector<double> x_, y_, m_, cumulative_;
};

}  // namespace rtpvol::numeric
