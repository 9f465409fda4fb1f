// Acceptance runner: one PASS/FAIL line per criterion.
//
//   acceptance [--only N]
//
// Exit status is nonzero when any selected criterion fails.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rtpvol/io/config.hpp"
#include "rtpvol/io/sweep.hpp"
#include "rtpvol/rtpvol.hpp"
#include "support.hpp"

namespace {

using namespace rtpvol;

const std::string kConfigDir = RTPVOL_CONFIG_DIR;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (pass) detail << " | ";
      pass = false;
      detail << "FAILED: " << what << "; ";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string g(double x) {
  char b[40];
  std::snprintf(b, sizeof b, "%.6g", x);
  return b;
}

// 1. Table I through the bundled config.
void c1(Outcome& o) {
  const auto t0 = Clock::now();
  const auto f = io::load_config(kConfigDir + "/table1.json");
  const double expected[3][3] = {{2, 1, 1.299}, {2, 0.872, 0.988}, {2, 0.595, 0.459}};
  const std::vector<double> ls{1.0, 1.5, 2.0};
  double worst = 0.0;
  for (std::size_t i = 0; i < f.sweep->main.values.size(); ++i) {
    const auto spec = io::parse_scenario(io::with_parameter(f.scenario_json, f.sweep->main.parameter,
                                                            f.sweep->main.values[i]));
    const auto& m = spec.scenario.model;
    for (std::size_t k = 0; k < ls.size(); ++k) {
      const auto s = max_relative_ratio(m.cost, m.value, RatioKind::price_elasticity, ls[k]);
      const double err = test::rel_err(s.effective(), expected[i][k]);
      worst = std::max(worst, err);
      o.detail << g(s.effective()) << (k + 1 < ls.size() ? "," : ";");
    }
  }
  const double secs = seconds_since(t0);
  o.require(worst <= 0.01, "max relative error " + g(worst) + " > 1%");
  o.require(secs < 5.0, "runtime " + g(secs) + " s");
  o.detail << " max rel err " << g(worst) << ", " << g(secs) << " s";
}

// 2. Example 1 boundary behaviour and closed form.
void c2(Outcome& o) {
  const auto stable = test::example1(2.0, 1.4);
  const auto tr = iterate_prices(stable, 1.0, 200);
  const double lam = tr.prices.back();
  const double oracle = 0.8859131187940856;  // fixed-point iteration of lambda = 1.4 (2 lambda)^(-0.8)
  o.require(!tr.diverged && std::abs(lam - 0.885910) <= 1e-5 && std::abs(lam - oracle) < 1e-9,
            "lambda(200) = " + numeric::fmt(lam));
  const auto un = iterate_prices(test::example1(2.0, 2.0), 1.0, 100);
  o.require(un.diverged, "(2, 2) did not diverge within 100 steps");
  std::mt19937_64 gen(2024);
  std::uniform_real_distribution<double> u(1.05, 3.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double a = u(gen), b = u(gen);
    const auto m = test::example1(a, b);
    const auto s = max_relative_ratio(m.cost, m.value, RatioKind::risk_aversion, 1.0, 1e-3, 1e3);
    worst = std::max(worst, std::abs(s.value - example1_closed_form(a, b).eta_star));
  }
  o.require(worst <= 1e-8, "closed form mismatch " + g(worst));
  o.detail << "lambda(200)=" << numeric::fmt(lam) << ", (2,2) diverged at step "
           << (un.diverged_step ? std::to_string(*un.diverged_step) : "-") << ", closed-form max err " << g(worst);
}

// 3. Lyapunov decrease on random certified-stable markets.
void c3(Outcome& o) {
  const auto t0 = Clock::now();
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> ua(1.1, 4.0), ub(1.05, 2.0), uu(0.0, 0.5), ul(-2.0, 2.0);
  int configs = 0, tried = 0, violations = 0;
  while (configs < 100 && tried < 5000) {
    ++tried;
    const double a = ua(gen), b = ub(gen), shift = tried % 2 ? 0.0 : uu(gen);
    const auto m = test::example1(a, b, shift, Domain{1e-30, 1e30});
    const auto rep = check_stability(m);
    if (!rep.certified_stable) continue;
    ++configs;
    const Scaling rho = Scaling::for_exponent(*rep.certifying_l);
    for (int k = 0; k < 3; ++k) {
      const double l0 = std::pow(10.0, ul(gen));
      const auto tr = iterate_prices(m, l0, 300, 1e30);
      const auto lt = lyapunov_trace(m, tr, rho);
      if (tr.diverged || !lt.monotone) {
        ++violations;
        if (violations <= 3) {
          o.detail << "violation a=" << g(a) << " b=" << g(b) << " u=" << g(shift) << " l=" << *rep.certifying_l
                   << " l0=" << g(l0) << (tr.diverged ? " diverged: " + tr.divergence_reason : "") << "; ";
        }
      }
    }
  }
  const double secs = seconds_since(t0);
  o.require(configs == 100, "only " + std::to_string(configs) + " certified configurations found");
  o.require(violations == 0, std::to_string(violations) + " trajectories without strict decrease");
  o.require(secs < 30.0, "runtime " + g(secs) + " s");
  o.detail << configs << " configs (" << tried << " drawn), " << violations << " violations, " << g(secs) << " s";
}

// 4. Supply IMV bound and invariant-set containment.
void c4(Outcome& o) {
  const auto t0 = Clock::now();
  const double kappa = 0.1;
  for (double target : {0.3, 0.6, 0.9}) {
    auto m = test::example1(2.0, 1.0 + target / 2.0);  // theta = alpha (beta - 1) / (alpha - 1)
    const double theta = theta_tilde_multiplicative(m.cost, m.value).effective();
    o.require(std::abs(theta - target) < 1e-8, "theta " + g(theta) + " != " + g(target));
    const double bound = imv_bound(kappa, theta);
    double worst_imv = 0.0;
    int outside = 0;
    for (std::uint64_t run = 0; run < 50; ++run) {
      RandomStream rng(404, run);
      std::vector<double> delta(2000);
      for (auto& d : delta) d = rng.uniform(-kappa, kappa);
      m.perturbation = ConsumerPerturbation::multiplicative(delta, kappa);
      const double l0 = std::exp(rng.uniform(-3.0, 3.0));
      const auto tr = iterate_prices(m, l0, 2000);
      if (tr.diverged) {
        ++outside;
        continue;
      }
      bool entered = false;
      for (double lam : tr.prices) {
        const bool in = in_invariant_set(m, lam, kappa, theta);
        if (entered && !in) ++outside;
        entered = entered || in;
      }
      const std::size_t skip = tr.prices.size() / 2;  // empirical IMV measured in steady state
      std::vector<double> s(tr.supplies.begin() + static_cast<std::ptrdiff_t>(skip), tr.supplies.end());
      worst_imv = std::max(worst_imv, imv(s, Scaling::log()));
    }
    o.require(worst_imv <= bound, "theta " + g(target) + ": IMV " + g(worst_imv) + " > " + g(bound));
    o.require(outside == 0, "theta " + g(target) + ": " + std::to_string(outside) + " states left the set");
    o.detail << "theta=" << g(target) << " imv " << g(worst_imv) << "<=" << g(bound) << "; ";
  }
  const double secs = seconds_since(t0);
  o.require(secs < 60.0, "runtime " + g(secs) + " s");
  o.detail << g(secs) << " s";
}

EnsembleRvr bundled_ensemble(const std::string& name, std::size_t runs) {
  const auto f = io::load_config(kConfigDir + "/" + name);
  Scenario sc = f.spec.scenario;
  io::resolve_mu2(sc, f.spec.calibrate_mu2);
  return rvr_ensemble(sc, runs, 0, Signal::demand);
}

// 5. Figure 2 band.
void c5(Outcome& o) {
  const auto e = bundled_ensemble("fig2.json", 20);
  o.require(e.mean_rvr > 10.0, "mean RVR " + g(e.mean_rvr) + " <= 10");
  o.require(practically_unstable(e), "not flagged practically unstable");
  o.detail << "mean RVR " << g(e.mean_rvr) << " (reference 51.12), diverged fraction " << g(e.diverged_fraction)
           << ", flagged " << (practically_unstable(e) ? "practically unstable" : "-");
}

// 6. Figure 3 band.
void c6(Outcome& o) {
  const auto e = bundled_ensemble("fig3.json", 20);
  o.require(e.mean_rvr >= 1.3 && e.mean_rvr <= 4.0, "mean RVR " + g(e.mean_rvr) + " outside [1.3, 4]");
  o.detail << "mean demand RVR " << g(e.mean_rvr) << " (reference 2.33)";
}

// 7. Figure 4 monotonicity.
void c7(Outcome& o) {
  const auto t0 = Clock::now();
  const auto f = io::load_config(kConfigDir + "/fig4.json");
  const auto pts = io::run_rvr_sweep(f);
  for (const auto& [a, rho] : io::sweep_spearman(pts)) {
    o.require(rho < -0.9, "a=" + g(a.value_or(0)) + " Spearman " + g(rho) + " >= -0.9");
    o.detail << "a=" << g(a.value_or(0)) << " rho=" << g(rho) << "; ";
  }
  const double frac = io::series_order_fraction(pts);
  o.require(frac >= 0.9, "a-ordering holds at " + g(100 * frac) + "% of mu1 points");
  const double secs = seconds_since(t0);
  o.require(secs < 600.0, "runtime " + g(secs) + " s");
  o.detail << "a-ordering " << g(100 * frac) << "%, " << g(secs) << " s";
}

// 8. Dispatch against a grid oracle; welfare local optimality.
void c8(Outcome& o) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int bad_dispatch = 0, bad_welfare = 0;
  for (int i = 0; i < 50; ++i) {
    const double b1 = 1.2 + 2.0 * u(gen), b2 = 1.2 + 2.0 * u(gen), k1 = 0.5 + 2.0 * u(gen), k2 = 0.5 + 2.0 * u(gen);
    const std::vector<SmoothFunction> cs{test::power_cost(b1, k1), test::power_cost(b2, k2)};
    const double D = 0.5 + 5.0 * u(gen);
    const auto d = clear_fixed_demand(cs, D);
    const double h = D * 1e-5;
    double best = 1e300;
    for (int j = 1; j < 100000; ++j) {
      const double s1 = j * h;
      best = std::min(best, cs[0](s1) + cs[1](D - s1));
    }
    if (!(d.total_cost <= best + h)) ++bad_dispatch;
    if (std::abs(d.quantities[0] + d.quantities[1] - D) > 1e-9 * D || d.quantities[0] < 0 || d.quantities[1] < 0) {
      ++bad_dispatch;
    }
  }
  for (int i = 0; i < 50; ++i) {
    const std::vector<SmoothFunction> cs{test::power_cost(1.2 + 2.0 * u(gen), 0.5 + 2.0 * u(gen)),
                                         test::power_cost(1.2 + 2.0 * u(gen), 0.5 + 2.0 * u(gen))};
    const std::vector<SmoothFunction> vs{test::root_value(1.5 + 3.0 * u(gen), 0.5 * u(gen)),
                                         build_function(LogSpec{0.5 + 2.0 * u(gen)}, Side::value)};
    const auto c = welfare_clear(cs, vs);
    if (!is_local_welfare_optimum(cs, vs, c, 1e-3)) ++bad_welfare;
  }
  o.require(bad_dispatch == 0, std::to_string(bad_dispatch) + " dispatch instances above the grid minimum");
  o.require(bad_welfare == 0, std::to_string(bad_welfare) + " clearings not locally optimal");
  o.detail << "50 dispatch + 50 welfare instances";
}

// 9. Empirical incremental L2 gain under the bounds.
void c9(Outcome& o) {
  for (auto [a, b] : {std::pair{2.0, 1.4}, std::pair{2.0, 1.2}, std::pair{3.0, 1.3}}) {
    auto m = test::example1(a, b);
    m.perturbation = ConsumerPerturbation::multiplicative({}, 0.2);
    const auto e = estimate_l2_gain(m, 100, 500, 9);
    o.require(e.empirical_gain <= e.bound_demand_side, "demand gain " + g(e.empirical_gain) + " > " +
                                                           g(e.bound_demand_side));
    o.require(e.empirical_gain_supply <= e.bound_supply_side, "supply gain " + g(e.empirical_gain_supply) + " > " +
                                                                  g(e.bound_supply_side));
    o.detail << "(" << g(a) << "," << g(b) << ") " << g(e.empirical_gain) << "<=" << g(e.bound_demand_side) << ", "
             << g(e.empirical_gain_supply) << "<=" << g(e.bound_supply_side) << "; ";
  }
}

// 10. Metrics examples.
void c10(Outcome& o) {
  auto near = [&](double got, double want, const std::string& what) {
    o.require(std::abs(got - want) <= 1e-12, what + " = " + numeric::fmt(got));
  };
  const std::vector<double> flat(10, 2.5);
  near(imv(flat, Scaling::log()), 0.0, "constant imv");
  near(iav(flat, Scaling::identity()), 0.0, "constant iav");
  std::vector<double> alt;
  for (int i = 0; i < 21; ++i) alt.push_back(i % 2 ? 2.0 : 1.0);
  near(imv(alt, Scaling::identity()), 1.0, "alternating imv");
  near(imv(std::vector<double>{1, 2, 4, 8}, Scaling::log()), std::log(2.0), "doubling imv");
  std::vector<double> geo;
  for (int i = 0; i < 20; ++i) geo.push_back(std::ldexp(1.0, -i));
  near(iav(geo, Scaling::identity()), 1.0 - std::ldexp(1.0, -19), "geometric iav");
  const auto m = test::example1(2.0, 1.4);
  const double a = iav(iterate_prices(m, 1.0, 500).prices, Scaling::log());
  const double b = iav(iterate_prices(m, 1.0, 1000).prices, Scaling::log());
  o.require(std::abs(a - b) < 1e-9, "stable IAV horizon change " + g(std::abs(a - b)));
  Trajectory t;
  t.prices = t.demands = t.supplies = {1.0, 3.0, 2.0, 5.0};
  near(rvr(t, t), 1.0, "rvr(closed = open)");
  bool threw = false;
  try {
    iav(std::vector<double>{1.0, -1.0}, Scaling::log());
  } catch (const DomainError&) {
    threw = true;
  }
  o.require(threw, "nonpositive entry under log accepted");
  Trajectory z;
  z.prices = z.demands = z.supplies = {1.0, 1.0};
  threw = false;
  try {
    rvr(t, z);
  } catch (const DegenerateBaselineError&) {
    threw = true;
  }
  o.require(threw, "flat baseline accepted");
  o.detail << "metrics examples checked";
}

struct Criterion {
  int id;
  const char* name;
  std::function<void(Outcome&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
  }
  const std::vector<Criterion> all{{1, "Table I reproduction", c1},
                                   {2, "Example 1 boundary", c2},
                                   {3, "Lyapunov property suite", c3},
                                   {4, "Invariance/volatility bounds", c4},
                                   {5, "Figure 2 band", c5},
                                   {6, "Figure 3 band", c6},
                                   {7, "Figure 4 monotonicity", c7},
                                   {8, "Oracle equivalence", c8},
                                   {9, "L2-gain bound", c9},
                                   {10, "Metrics unit suite", c10}};
  int failures = 0;
  for (const auto& c : all) {
    if (only && c.id != only) continue;
    Outcome o;
    try {
      c.run(o);
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    std::printf("%s c%d %s: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.str().c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  return failures ? 1 : 0;
}
