#pragma once

// JSON and CSV emission for reports and trajectories. Non-finite numbers are
// written as null; files are written to a temporary name and renamed.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rtpvol/dynamics.hpp"
#include "rtpvol/elasticity.hpp"
#include "rtpvol/errors.hpp"
#include "rtpvol/invariance.hpp"
#include "rtpvol/metrics.hpp"
#include "rtpvol/numeric.hpp"
#include "rtpvol/stability.hpp"

namespace rtpvol::io {

using json = nlohmann::json;

inline json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline json to_json(const SupResult& s) {
  return {{"value", num(s.value)},         {"unbounded", s.unbounded},   {"arg_sup", num(s.arg_sup)},
          {"boundary_hit", s.boundary_hit}, {"evaluations", s.evaluations}, {"search_lo", num(s.search_lo)},
          {"search_hi", num(s.search_hi)}};
}

inline json to_json(const StabilityReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"l", e.l},
                       {"theta", to_json(e.theta)},
                       {"cond_contraction", e.cond_contraction},
                       {"cond_measure_zero", e.cond_measure_zero},
                       {"cond_coercivity", e.cond_coercivity},
                       {"certified", e.certified()}});
  }
  return {{"entries", entries},
          {"best_l", r.best_l},
          {"certifying_l", r.certifying_l ? json(*r.certifying_l) : json(nullptr)},
          {"verdict", r.verdict()}};
}

inline json to_json(const InvarianceReport& r) {
  return {{"perturbation", r.perturbation},
          {"kappa", r.kappa},
          {"theta_tilde", num(r.theta_tilde)},
          {"restricted_lo", num(r.restricted_lo)},
          {"zeta", num(r.zeta)},
          {"gamma0", num(r.gamma0)},
          {"sum_theta", num(r.sum_theta)},
          {"imv_bound", num(r.imv_bound)},
          {"imv_bound_constant", "C = 2 kappa"},
          {"iav_bound", num(r.iav_bound)},
          {"bounds_infinite", r.bounds_infinite}};
}

inline json to_json(const ArConditions& a) {
  json th = json::array();
  for (double t : a.theta_k) th.push_back(num(t));
  return {{"theta_k", th},
          {"sum", num(a.sum)},
          {"pass", a.pass},
          {"equilibrium_check", to_string(a.equilibrium_check)},
          {"lambda_bar", a.lambda_bar ? num(*a.lambda_bar) : json(nullptr)},
          {"eps_rel_at_equilibrium", a.eps_rel_at_equilibrium ? num(*a.eps_rel_at_equilibrium) : json(nullptr)},
          {"method", a.method}};
}

inline json to_json(const L2GainEstimate& e) {
  return {{"empirical_gain", num(e.empirical_gain)},
          {"empirical_gain_supply", num(e.empirical_gain_supply)},
          {"theta_star", num(e.theta_star)},
          {"bound_demand_side", num(e.bound_demand_side)},
          {"bound_supply_side", num(e.bound_supply_side)},
          {"samples", e.samples},
          {"pairs", e.pairs}};
}

inline json to_json(const VolatilityReport& v, Signal s, double diverged_fraction) {
  return {{"imv", num(v.imv)},
          {"iav", num(v.iav)},
          {"scaling", v.scaling},
          {"signal", to_string(s)},
          {"series_len", v.series_len},
          {"diverged_fraction", diverged_fraction}};
}

inline json to_json(const EnsembleRvr& e, Signal s) {
  json per = json::array();
  for (double x : e.rvrs) per.push_back(num(x));
  return {{"signal", to_string(s)},
          {"mean_rvr", num(e.mean_rvr)},
          {"mean_price_rvr", num(e.mean_price_rvr)},
          {"diverged_fraction", e.diverged_fraction},
          {"runs", e.runs},
          {"finite_runs", e.finite_runs},
          {"practically_unstable", practically_unstable(e)},
          {"rvr_per_run", per}};
}

inline json trajectory_meta(const Trajectory& tr) {
  return {{"diverged", tr.diverged},
          {"diverged_step", tr.diverged_step ? json(*tr.diverged_step) : json(nullptr)},
          {"divergence_reason", tr.divergence_reason},
          {"seed", tr.seed_used},
          {"steps", tr.size()}};
}

inline json trajectory_json(const Trajectory& tr) {
  json t = trajectory_meta(tr);
  json lam = json::array(), dem = json::array(), sup = json::array();
  for (std::size_t i = 0; i < tr.size(); ++i) {
    lam.push_back(num(tr.prices[i]));
    dem.push_back(num(tr.demands[i]));
    sup.push_back(num(tr.supplies[i]));
  }
  t["lambda"] = lam;
  t["demand"] = dem;
  t["supply"] = sup;
  return t;
}

inline std::string csv_number(double x) { return std::isfinite(x) ? numeric::fmt(x) : std::string("nan"); }

inline std::string trajectory_csv(const Trajectory& tr) {
  std::ostringstream o;
  o << "t,lambda,demand,supply\n";
  for (std::size_t i = 0; i < tr.size(); ++i) {
    o << i << ',' << csv_number(tr.prices[i]) << ',' << csv_number(tr.demands[i]) << ','
      << csv_number(tr.supplies[i]) << '\n';
  }
  return o.str();
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out << content;
    if (!out) throw Error("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace rtpvol::io
