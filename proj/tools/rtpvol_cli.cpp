// Command-line front end: runs scenario files and writes JSON/CSV reports.
//
//   rtpvol_cli <simulate|mrpe|stability|invariance|l2gain|rvr-sweep>
//              --config FILE [--out DIR] [--seed N] [--threads N] [--format csv|json]
//
// Exit status: 0 success, 2 invalid input, 3 numerical-domain failure.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rtpvol/io/config.hpp"
#include "rtpvol/io/report.hpp"
#include "rtpvol/io/sweep.hpp"
#include "rtpvol/rtpvol.hpp"

namespace {

using namespace rtpvol;
using io::json;
namespace fs = std::filesystem;

struct Options {
  std::string config;
  std::string out = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
  unsigned threads = 0;
  std::string format = "csv";
};

std::string fmt_g(double x, const char* f = "%.6g") {
  if (!std::isfinite(x)) return x > 0 ? "inf" : "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

io::ScenarioSpec scenario_at(const io::ScenarioFile& f, const std::vector<std::pair<std::string, double>>& params) {
  json sc = f.scenario_json;
  for (const auto& [p, v] : params) sc = io::with_parameter(sc, p, v);
  return io::parse_scenario(sc);
}

json header(const io::ScenarioFile& f, const char* command) {
  return {{"command", command}, {"config", f.source}, {"scenario", f.scenario_json}};
}

json mu2_json(const io::Mu2Resolution& r) {
  json j = {{"mu2", r.mu2}, {"method", r.method}};
  if (!r.reason.empty()) j["reason"] = r.reason;
  return j;
}

int cmd_simulate(const Options& o) {
  const auto f = io::load_config(o.config);
  Scenario sc = f.spec.scenario;
  if (o.seed_set) sc.seed = o.seed;
  json j = header(f, "simulate");
  j["mu2_resolution"] = mu2_json(io::resolve_mu2(sc, f.spec.calibrate_mu2));
  const Trajectory tr = simulate(sc, 0);
  const Trajectory open = simulate(sc.open_loop(), 0);
  j["trajectory"] = o.format == "json" ? io::trajectory_json(tr) : io::trajectory_meta(tr);
  try {
    j["rvr_demand"] = io::num(rvr(tr, open, Scaling::log(), Signal::demand));
    j["rvr_price"] = io::num(rvr(tr, open, Scaling::log(), Signal::price));
  } catch (const Error& e) {
    j["rvr_error"] = e.what();
  }
  if (f.rvr) {
    const EnsembleRvr e = rvr_ensemble(sc, f.rvr->runs, o.threads, f.rvr->signal);
    j["ensemble"] = io::to_json(e, f.rvr->signal);
    std::cout << "ensemble mean RVR (" << to_string(f.rvr->signal) << ") = " << fmt_g(e.mean_rvr)
              << ", diverged fraction = " << fmt_g(e.diverged_fraction)
              << (practically_unstable(e) ? "  [practically unstable]" : "") << "\n";
  }
  const fs::path out(o.out);
  if (o.format == "csv") io::write_file(out / "trajectory.csv", io::trajectory_csv(tr));
  io::write_file(out / "trajectory.json", io::dump(j));
  std::cout << "steps=" << tr.size() << " diverged=" << (tr.diverged ? "true" : "false") << "\n";
  return 0;
}

int cmd_mrpe(const Options& o) {
  const auto f = io::load_config(o.config);
  const io::MrpeRequest req = f.mrpe.value_or(io::MrpeRequest{});
  std::vector<std::optional<double>> points{std::nullopt};
  if (f.sweep) {
    points.clear();
    for (double v : f.sweep->main.values) points.push_back(v);
  }
  json j = header(f, "mrpe");
  json rows = json::array();
  std::ostringstream table;
  const std::string plabel = f.sweep ? f.sweep->main.label : "";
  for (RatioKind kind : req.kinds) {
    table << (kind == RatioKind::price_elasticity ? "theta*(l)" : "eta*(l)") << "\n";
    table << (plabel.empty() ? std::string("") : plabel);
    for (double l : req.l) table << "\tl=" << fmt_g(l);
    table << "\n";
    for (const auto& p : points) {
      std::vector<std::pair<std::string, double>> params;
      if (p) params.emplace_back(f.sweep->main.parameter, *p);
      const auto spec = scenario_at(f, params);
      const auto& m = spec.scenario.model;
      if (p) table << fmt_g(*p);
      for (double l : req.l) {
        const SupResult s = max_relative_ratio(m.cost, m.value, kind, l, req.search_lo, req.search_hi);
        json row = io::to_json(s);
        row["kind"] = to_string(kind);
        row["l"] = l;
        if (p) row[plabel] = *p;
        rows.push_back(row);
        table << '\t' << (s.unbounded ? std::string("inf") : fmt_g(s.value, "%.6f"));
      }
      table << "\n";
    }
  }
  j["results"] = rows;
  const fs::path out(o.out);
  io::write_file(out / "mrpe.json", io::dump(j));
  io::write_file(out / "mrpe.txt", table.str());
  std::cout << table.str();
  return 0;
}

int cmd_stability(const Options& o) {
  const auto f = io::load_config(o.config);
  const io::StabilityRequest req = f.stability.value_or(io::StabilityRequest{});
  const MarketModel& m = f.spec.scenario.model;
  const StabilityReport rep = check_stability(m, req.l);
  json j = header(f, "stability");
  j["report"] = io::to_json(rep);
  const double l_trace = rep.certifying_l.value_or(1.0);
  const Scaling rho = Scaling::for_exponent(l_trace);
  json traces = json::array();
  for (double l0 : req.lambda0) {
    const Trajectory tr = iterate_prices(m, l0, req.steps, f.spec.scenario.divergence_cap);
    const LyapunovTrace lt = lyapunov_trace(m, tr, rho);
    traces.push_back({{"lambda0", l0},
                      {"scaling", rho.name()},
                      {"monotone", lt.monotone},
                      {"first_violation", lt.first_violation ? json(*lt.first_violation) : json(nullptr)},
                      {"V_first", lt.values.empty() ? json(nullptr) : io::num(lt.values.front())},
                      {"V_last", lt.values.empty() ? json(nullptr) : io::num(lt.values.back())},
                      {"final_price", io::num(tr.prices.back())},
                      {"trajectory", io::trajectory_meta(tr)}});
  }
  j["lyapunov"] = traces;
  const auto* p = std::get_if<PowerSpec>(&m.cost.spec());
  const auto* r = std::get_if<RootSpec>(&m.value.spec());
  if (p && r && p->coefficient == 1.0 && r->shift == 0.0 && m.value.multiplicity() == 1.0) {
    const Example1 ex = example1_closed_form(r->alpha, p->exponent);
    j["example1_closed_form"] = {{"eta_star", ex.eta_star}, {"stable", ex.stable}};
  }
  io::write_file(fs::path(o.out) / "stability.json", io::dump(j));
  for (const auto& e : rep.entries) {
    std::cout << "l=" << fmt_g(e.l) << "\ttheta*=" << (e.theta.unbounded ? "inf" : fmt_g(e.theta.value))
              << "\t(i)=" << e.cond_contraction << " (ii)=" << e.cond_measure_zero << " (iii)=" << e.cond_coercivity
              << "\n";
  }
  std::cout << "verdict: " << rep.verdict();
  if (rep.certifying_l) std::cout << " (l=" << fmt_g(*rep.certifying_l) << ")";
  std::cout << "\n";
  return 0;
}

int cmd_invariance(const Options& o) {
  const auto f = io::load_config(o.config);
  const io::InvarianceRequest req = f.invariance.value_or(io::InvarianceRequest{});
  const MarketModel& m = f.spec.scenario.model;
  const double kappa = req.kappa.value_or(m.perturbation.kappa);
  std::vector<double> init = req.init;
  if (init.empty()) init.push_back(welfare_clear({m.cost}, {m.value}).price);
  const InvarianceReport rep = invariant_set_params(m, kappa, init);
  json j = header(f, "invariance");
  j["report"] = io::to_json(rep);
  std::vector<double> coeffs = req.ar_coeffs.empty() ? m.predictor.weights() : req.ar_coeffs;
  j["ar_conditions"] = io::to_json(check_ar_conditions(m, coeffs, req.ar_l));
  j["ar_conditions"]["l"] = req.ar_l;
  io::write_file(fs::path(o.out) / "invariance.json", io::dump(j));
  std::cout << "theta_tilde=" << fmt_g(rep.theta_tilde) << " zeta=" << fmt_g(rep.zeta)
            << " gamma0=" << fmt_g(rep.gamma0) << " imv_bound=" << fmt_g(rep.imv_bound)
            << " iav_bound=" << fmt_g(rep.iav_bound) << "\n";
  return 0;
}

int cmd_l2gain(const Options& o) {
  const auto f = io::load_config(o.config);
  const io::L2Request req = f.l2gain.value_or(io::L2Request{});
  const std::uint64_t seed = o.seed_set ? o.seed : req.seed;
  const L2GainEstimate est = estimate_l2_gain(f.spec.scenario.model, req.pairs, req.horizon, seed, o.threads);
  json j = header(f, "l2gain");
  j["estimate"] = io::to_json(est);
  j["seed"] = seed;
  io::write_file(fs::path(o.out) / "l2gain.json", io::dump(j));
  std::cout << "demand gain=" << fmt_g(est.empirical_gain) << " (bound " << fmt_g(est.bound_demand_side)
            << "), supply gain=" << fmt_g(est.empirical_gain_supply) << " (bound " << fmt_g(est.bound_supply_side)
            << ")\n";
  return 0;
}

int cmd_rvr_sweep(const Options& o) {
  const auto f = io::load_config(o.config);
  if (!f.sweep) throw ValidationError(o.config + ": sweep: rvr-sweep needs a sweep block");
  const io::SweepRequest& sw = *f.sweep;
  const Signal signal = f.rvr ? f.rvr->signal : Signal::demand;
  const auto rows = io::run_rvr_sweep(f, o.threads, o.seed_set ? std::optional<std::uint64_t>(o.seed) : std::nullopt,
                                      signal);
  const std::string slabel = sw.series ? sw.series->label : "series";
  std::ostringstream csv;
  csv << sw.main.label << ',' << slabel << ",mean_rvr,diverged_fraction\n";
  json points = json::array();
  for (const auto& r : rows) {
    csv << io::csv_number(r.main) << ',' << (r.series ? io::csv_number(*r.series) : std::string("")) << ','
        << io::csv_number(r.rvr.mean_rvr) << ',' << io::csv_number(r.rvr.diverged_fraction) << '\n';
    json p = io::to_json(r.rvr, signal);
    p[sw.main.label] = r.main;
    if (r.series) p[slabel] = *r.series;
    p["mu2_resolution"] = mu2_json(r.mu2);
    points.push_back(p);
  }
  json spear = json::object();
  for (const auto& [s, rho] : io::sweep_spearman(rows)) spear[s ? fmt_g(*s) : "all"] = io::num(rho);
  json j = header(f, "rvr-sweep");
  j["points"] = points;
  j["spearman_vs_" + sw.main.label] = spear;
  if (sw.series) j["series_order_fraction"] = io::num(io::series_order_fraction(rows));
  const fs::path out(o.out);
  if (o.format == "csv") io::write_file(out / "rvr_sweep.csv", csv.str());
  io::write_file(out / "rvr_sweep.json", io::dump(j));
  std::cout << csv.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-loop electricity market simulator and stability toolkit"};
  app.require_subcommand(1);
  Options opt;
  std::map<std::string, int (*)(const Options&)> commands{{"simulate", cmd_simulate},     {"mrpe", cmd_mrpe},
                                                           {"stability", cmd_stability},   {"invariance", cmd_invariance},
                                                           {"l2gain", cmd_l2gain},         {"rvr-sweep", cmd_rvr_sweep}};
  const std::map<std::string, std::string> help{
      {"simulate", "simulate one seeded run and write trajectory CSV plus JSON sidecar"},
      {"mrpe", "tabulate maximal relative price-elasticity / risk-aversion"},
      {"stability", "certify stability conditions and trace the Lyapunov function"},
      {"invariance", "invariant-set radius, volatility bounds and autoregressive conditions"},
      {"l2gain", "estimate the incremental L2 gain from disturbances"},
      {"rvr-sweep", "relative volatility ratio over a parameter sweep"}};
  std::vector<CLI::App*> subs;
  for (const auto& [name, fn] : commands) {
    (void)fn;
    CLI::App* sub = app.add_subcommand(name, help.at(name));
    sub->add_option("--config", opt.config, "scenario file (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", opt.out, "output directory");
    sub->add_option("--seed", opt.seed, "override the scenario seed");
    sub->add_option("--threads", opt.threads, "worker threads (0 = hardware)");
    sub->add_option("--format", opt.format, "main output format")->check(CLI::IsMember({"csv", "json"}));
    subs.push_back(sub);
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  for (CLI::App* sub : subs) {
    if (!sub->parsed()) continue;
    opt.seed_set = sub->count("--seed") > 0;
    try {
      return commands.at(sub->get_name())(opt);
    } catch (const ValidationError& e) {
      std::cerr << "validation error: " << e.what() << "\n";
      return 2;
    } catch (const NumericalError& e) {
      std::cerr << "numerical error: " << e.what() << "\n";
      return 3;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 1;
    }
  }
  return 2;
}
