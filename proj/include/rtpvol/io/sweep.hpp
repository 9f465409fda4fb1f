#pragma once

// Ensemble RVR over a one- or two-axis parameter sweep. mu2 "calibrate" is
// resolved per point, with the static estimate as fallback when the secant
// iteration fails.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "rtpvol/dynamics.hpp"
#include "rtpvol/io/config.hpp"
#include "rtpvol/metrics.hpp"

namespace rtpvol::io {

struct Mu2Resolution {
  double mu2 = 0.0;
  std::string method;  // fixed | calibrated | static_fallback
  std::string reason;
};

inline Mu2Resolution resolve_mu2(Scenario& sc, bool calibrate) {
  if (!calibrate) return {sc.mu2, "fixed", ""};
  try {
    sc.mu2 = calibrate_mu(sc, sc.mu1);
    return {sc.mu2, "calibrated", ""};
  } catch (const CalibrationError& e) {
    sc.mu2 = static_mu2_guess(sc, sc.mu1);
    return {sc.mu2, "static_fallback", e.what()};
  }
}

struct SweepPoint {
  double main = 0.0;
  std::optional<double> series;
  Mu2Resolution mu2;
  EnsembleRvr rvr;
};

// Points come back sorted by (series, main).
inline std::vector<SweepPoint> run_rvr_sweep(const ScenarioFile& f, unsigned threads = 0,
                                             std::optional<std::uint64_t> seed = std::nullopt,
                                             Signal signal = Signal::demand) {
  if (!f.sweep) throw ValidationError(f.source + ": sweep: rvr-sweep needs a sweep block");
  const SweepRequest& sw = *f.sweep;
  std::vector<std::optional<double>> series{std::nullopt};
  if (sw.series) series.assign(sw.series->values.begin(), sw.series->values.end());
  std::vector<SweepPoint> out;
  for (const auto& s : series) {
    for (double v : sw.main.values) {
      json sj = f.scenario_json;
      if (s) sj = with_parameter(sj, sw.series->parameter, *s);
      sj = with_parameter(sj, sw.main.parameter, v);
      ScenarioSpec spec = parse_scenario(sj);
      Scenario& sc = spec.scenario;
      if (seed) sc.seed = *seed;
      SweepPoint p;
      p.main = v;
      p.series = s;
      p.mu2 = resolve_mu2(sc, spec.calibrate_mu2);
      p.rvr = rvr_ensemble(sc, sw.runs_per_point, threads, signal);
      out.push_back(std::move(p));
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const SweepPoint& a, const SweepPoint& b) {
    if (a.series != b.series) return a.series < b.series;
    return a.main < b.main;
  });
  return out;
}

// Spearman correlation of mean RVR against the main axis, per series value.
inline std::vector<std::pair<std::optional<double>, double>> sweep_spearman(const std::vector<SweepPoint>& pts) {
  std::vector<std::pair<std::optional<double>, double>> out;
  for (std::size_t i = 0; i < pts.size();) {
    std::vector<double> x, y;
    std::size_t j = i;
    for (; j < pts.size() && pts[j].series == pts[i].series; ++j) {
      if (std::isfinite(pts[j].rvr.mean_rvr)) {
        x.push_back(pts[j].main);
        y.push_back(pts[j].rvr.mean_rvr);
      }
    }
    out.emplace_back(pts[i].series, x.size() >= 2 ? spearman(x, y) : std::nan(""));
    i = j;
  }
  return out;
}

// Fraction of main-axis values at which mean RVR is nonincreasing along the
// series axis.
inline double series_order_fraction(const std::vector<SweepPoint>& pts) {
  std::vector<double> mains;
  for (const auto& p : pts) mains.push_back(p.main);
  std::sort(mains.begin(), mains.end());
  mains.erase(std::unique(mains.begin(), mains.end()), mains.end());
  if (mains.empty()) return std::nan("");
  std::size_t ok = 0;
  for (double m : mains) {
    std::vector<const SweepPoint*> col;
    for (const auto& p : pts) {
      if (p.main == m) col.push_back(&p);
    }
    std::sort(col.begin(), col.end(), [](auto* a, auto* b) { return a->series < b->series; });
    bool mono = true;
    for (std::size_t k = 1; k < col.size(); ++k) {
      if (!(col[k]->rvr.mean_rvr <= col[k - 1]->rvr.mean_rvr)) mono = false;
    }
    ok += mono;
  }
  return static_cast<double>(ok) / static_cast<double>(mains.size());
}

}  // namespace rtpvol::io
