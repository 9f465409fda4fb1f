#pragma once

// Scaled incremental volatility (mean and aggregate) and the relative
// volatility ratio of a closed-loop market against its open-loop twin.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rtpvol/dynamics.hpp"
#include "rtpvol/errors.hpp"
#include "rtpvol/numeric.hpp"
#include "rtpvol/parallel.hpp"
#include "rtpvol/scaling.hpp"

namespace rtpvol {

enum class Signal { price, demand, supply };

inline const char* to_string(Signal s) {
  switch (s) {
    case Signal::price: return "price";
    case Signal::demand: return "demand";
    case Signal::supply: return "supply";
  }
  return "?";
}

inline const std::vector<double>& signal_of(const Trajectory& tr, Signal s) {
  switch (s) {
    case Signal::price: return tr.prices;
    case Signal::demand: return tr.demands;
    case Signal::supply: return tr.supplies;
  }
  return tr.prices;
}

struct VolatilityReport {
  double imv = 0.0;
  double iav = 0.0;
  std::string scaling;
  std::size_t series_len = 0;
  bool diverged = false;
};

// Sum over t of |rho(h(t+1)) - rho(h(t))|.
inline double iav(std::span<const double> h, const Scaling& rho) {
  if (h.size() < 2) throw ValidationError("volatility needs a series of length >= 2, got " + std::to_string(h.size()));
  double prev = 0.0, total = 0.0;
  for (std::size_t t = 0; t < h.size(); ++t) {
    if (!std::isfinite(h[t])) throw DomainError("volatility: non-finite entry at index " + std::to_string(t));
    if (rho.needs_positive() && !(h[t] > 0.0)) {
      throw DomainError("volatility: entry " + numeric::fmt(h[t]) + " at index " + std::to_string(t) +
                        " is not positive under " + rho.name() + " scaling");
    }
    const double cur = rho(h[t]);
    if (t > 0) total += std::abs(cur - prev);
    prev = cur;
  }
  return total;
}

// Finite-sample mean increment: iav / (T - 1).
inline double imv(std::span<const double> h, const Scaling& rho) {
  return iav(h, rho) / static_cast<double>(h.size() - 1);
}

inline VolatilityReport volatility(const Trajectory& tr, Signal s, const Scaling& rho) {
  const auto& h = signal_of(tr, s);
  VolatilityReport r;
  r.iav = iav(h, rho);
  r.imv = r.iav / static_cast<double>(h.size() - 1);
  r.scaling = rho.name();
  r.series_len = h.size();
  r.diverged = tr.diverged;
  return r;
}

// Closed-loop IAV over open-loop IAV. A diverged closed loop is compared on
// the common prefix.
inline double rvr(const Trajectory& closed, const Trajectory& open, const Scaling& rho = Scaling::log(),
                  Signal s = Signal::demand) {
  const auto& c = signal_of(closed, s);
  const auto& o = signal_of(open, s);
  if (c.empty() || o.empty()) throw ValidationError("rvr: empty trajectory");
  const std::size_t n = std::min(c.size(), o.size());
  const double base = iav(std::span<const double>(o.data(), n), rho);
  if (!(base > 0.0)) throw DegenerateBaselineError("rvr: open-loop IAV is zero over " + std::to_string(n) + " steps");
  return iav(std::span<const double>(c.data(), n), rho) / base;
}

struct EnsembleRvr {
  double mean_rvr = std::numeric_limits<double>::quiet_NaN();
  double mean_price_rvr = std::numeric_limits<double>::quiet_NaN();
  double diverged_fraction = 0.0;
  std::size_t runs = 0;
  std::size_t finite_runs = 0;
  std::vector<double> rvrs;        // per run, NaN where undefined
  std::vector<double> price_rvrs;  // per run, NaN where undefined
};

// Mean RVR above which an ensemble is labelled practically unstable.
inline constexpr double kPracticallyUnstableRvr = 10.0;

inline bool practically_unstable(const EnsembleRvr& e) {
  return e.diverged_fraction > 0.0 || e.mean_rvr > kPracticallyUnstableRvr;
}

// Runs `runs` seeded closed/open pairs and averages the finite RVRs.
inline EnsembleRvr rvr_ensemble(const Scenario& sc, std::size_t runs, unsigned threads = 0,
                                Signal s = Signal::demand, const Scaling& rho = Scaling::log()) {
  EnsembleRvr e;
  e.runs = runs;
  e.rvrs.assign(runs, std::numeric_limits<double>::quiet_NaN());
  e.price_rvrs.assign(runs, std::numeric_limits<double>::quiet_NaN());
  std::vector<char> diverged(runs, 0);
  const Scenario open = sc.open_loop();
  parallel_for(runs, threads, [&](std::size_t i) {
    const Trajectory c = simulate(sc, i);
    const Trajectory o = simulate(open, i);
    diverged[i] = c.diverged ? 1 : 0;
    try {
      e.rvrs[i] = rvr(c, o, rho, s);
    } catch (const Error&) {
    }
    try {
      e.price_rvrs[i] = rvr(c, o, rho, Signal::price);
    } catch (const Error&) {
    }
  });
  double sum = 0.0, psum = 0.0;
  std::size_t pn = 0, nd = 0;
  for (std::size_t i = 0; i < runs; ++i) {
    nd += diverged[i];
    if (std::isfinite(e.rvrs[i])) {
      sum += e.rvrs[i];
      ++e.finite_runs;
    }
    if (std::isfinite(e.price_rvrs[i])) {
      psum += e.price_rvrs[i];
      ++pn;
    }
  }
  if (e.finite_runs > 0) e.mean_rvr = sum / static_cast<double>(e.finite_runs);
  if (pn > 0) e.mean_price_rvr = psum / static_cast<double>(pn);
  e.diverged_fraction = runs ? static_cast<double>(nd) / static_cast<double>(runs) : 0.0;
  return e;
}

// Rank correlation with average ranks for ties.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ValidationError("spearman: need two equal-length series of size >= 2");
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace rtpvol
