#pragma once

// Scenario files: strict JSON parsing into library types. Unknown keys are
// rejected and every error names the offending field.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rtpvol/agents.hpp"
#include "rtpvol/dynamics.hpp"
#include "rtpvol/elasticity.hpp"
#include "rtpvol/errors.hpp"
#include "rtpvol/metrics.hpp"
#include "rtpvol/stability.hpp"

namespace rtpvol::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Walks one JSON object, remembering which keys were read so that leftovers
// can be reported as unknown.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("", "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) fail(key, "required field is missing");
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) fail(key, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(key, "expected a finite number");
    return x;
  }
  double number(const std::string& key, double dflt) { return has(key) ? number(key) : (used_.insert(key), dflt); }

  std::uint64_t uint(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
      fail(key, "expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }
  std::uint64_t uint(const std::string& key, std::uint64_t dflt) {
    return has(key) ? uint(key) : (used_.insert(key), dflt);
  }

  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) fail(key, "expected a string");
    return v.get<std::string>();
  }
  std::string string(const std::string& key, const std::string& dflt) {
    return has(key) ? string(key) : (used_.insert(key), dflt);
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = raw(key);
    std::vector<double> out;
    if (v.is_array()) {
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) fail(key + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v[i].get<double>());
        if (!std::isfinite(out.back())) fail(key + "[" + std::to_string(i) + "]", "expected a finite number");
      }
      return out;
    }
    if (v.is_object()) {
      // {"start": a, "stop": b, "step": h}, inclusive of stop up to rounding.
      ObjectReader r(v, at(key));
      const double a = r.number("start"), b = r.number("stop"), h = r.number("step");
      r.finish();
      if (!(h > 0.0) || b < a) fail(key, "range needs step > 0 and stop >= start");
      const auto n = static_cast<std::size_t>(std::floor((b - a) / h + 1e-9));
      // Snapped to 12 significant digits so 0.1 * 3 reads back as 0.3.
      char buf[32];
      for (std::size_t i = 0; i <= n; ++i) {
        std::snprintf(buf, sizeof buf, "%.12g", a + h * static_cast<double>(i));
        out.push_back(std::strtod(buf, nullptr));
      }
      return out;
    }
    fail(key, "expected a list of numbers or a {start, stop, step} range");
    return out;
  }
  std::vector<double> numbers(const std::string& key, std::vector<double> dflt) {
    return has(key) ? numbers(key) : (used_.insert(key), dflt);
  }

  ObjectReader object(const std::string& key) { return ObjectReader(raw(key), at(key)); }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) fail(it.key(), "unknown key");
    }
  }

  [[noreturn]] void fail(const std::string& key, const std::string& msg) const {
    const std::string where = key.empty() ? (path_.empty() ? "<root>" : path_) : at(key);
    throw ValidationError(where + ": " + msg);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

inline FunctionSpec parse_function_spec(ObjectReader r) {
  const std::string fam = r.string("family");
  FunctionSpec out;
  if (fam == "power") {
    out = PowerSpec{r.number("coefficient", 1.0), r.number("exponent")};
  } else if (fam == "root") {
    out = RootSpec{r.number("alpha"), r.number("shift", 0.0)};
  } else if (fam == "log") {
    out = LogSpec{r.number("scale", 1.0)};
  } else if (fam == "tabulated") {
    out = TabulatedSpec{r.numbers("x"), r.numbers("marginal"), r.number("value_at_first", 0.0)};
  } else {
    r.fail("family", "unknown family '" + fam + "' (expected power, root, log or tabulated)");
  }
  r.finish();
  return out;
}

inline SmoothFunction parse_function(ObjectReader r, Side side, Domain dom) {
  const std::string where = r.at("");
  const FunctionSpec spec = parse_function_spec(std::move(r));
  try {
    return build_function(spec, side, dom);
  } catch (const ValidationError& e) {
    throw ValidationError(where.substr(0, where.size() - 1) + ": " + e.what());
  }
}

inline Predictor parse_predictor(ObjectReader r) {
  const std::string kind = r.string("kind");
  Predictor p;
  if (kind == "persistence") {
    p = Predictor::persistence();
  } else if (kind == "autoregressive") {
    p.kind = Predictor::Kind::autoregressive;
    p.coeffs = r.numbers("coeffs");
    if (p.coeffs.empty()) r.fail("coeffs", "coefficient list is empty");
  } else if (kind == "per_consumer") {
    p.kind = Predictor::Kind::per_consumer;
    const json& m = r.raw("members");
    if (!m.is_array() || m.empty()) r.fail("members", "expected a nonempty list of predictors");
    for (std::size_t i = 0; i < m.size(); ++i) {
      p.members.push_back(parse_predictor(ObjectReader(m[i], r.at("members[" + std::to_string(i) + "]"))));
    }
  } else {
    r.fail("kind", "unknown predictor '" + kind + "'");
  }
  r.finish();
  return p;
}

inline ConsumerPerturbation parse_perturbation(ObjectReader r) {
  const std::string kind = r.string("kind");
  ConsumerPerturbation p;
  if (kind == "none") {
    p = ConsumerPerturbation::none();
  } else if (kind == "multiplicative") {
    p.kappa = r.number("kappa");
    p.model = MultiplicativePerturbation{r.numbers("delta", {})};
  } else if (kind == "additive") {
    p.kappa = r.number("kappa");
    p.model = AdditivePerturbation{r.number("u0"), r.numbers("u", {})};
  } else {
    r.fail("kind", "unknown perturbation '" + kind + "'");
  }
  r.finish();
  try {
    p.validate();
  } catch (const ValidationError& e) {
    r.fail("", e.what());
  }
  return p;
}

struct ScenarioSpec {
  Scenario scenario;
  bool calibrate_mu2 = false;
};

inline ScenarioSpec parse_scenario(const json& j, const std::string& path = "scenario") {
  ObjectReader r(j, path);
  ScenarioSpec out;
  Scenario& s = out.scenario;
  Domain dom;
  if (r.has("domain")) {
    ObjectReader d = r.object("domain");
    dom.lo = d.number("lo", dom.lo);
    dom.hi = d.number("hi", dom.hi);
    d.finish();
  }
  s.model.cost = parse_function(r.object("cost"), Side::cost, dom);
  s.model.value = parse_function(r.object("value"), Side::value, dom);
  const auto consumers = r.uint("consumers", 1);
  if (consumers < 1) r.fail("consumers", "must be >= 1");
  if (consumers > 1) s.model.value = aggregate_consumers(s.model.value, consumers);
  if (r.has("perturbation")) s.model.perturbation = parse_perturbation(r.object("perturbation"));
  if (r.has("predictor")) s.model.predictor = parse_predictor(r.object("predictor"));
  const std::string pricing = r.string("pricing", "exante");
  if (pricing == "exante") {
    s.model.pricing = Pricing::exante;
  } else if (pricing == "expost") {
    s.model.pricing = Pricing::expost;
  } else {
    r.fail("pricing", "expected 'exante' or 'expost'");
  }
  s.horizon = r.uint("horizon", 288);
  s.dt_label = r.string("dt_label", "5 min");
  s.mu1 = r.number("mu1", 1.0);
  if (r.has("mu2") && r.raw("mu2").is_string()) {
    if (r.string("mu2") != "calibrate") r.fail("mu2", "expected a number or \"calibrate\"");
    out.calibrate_mu2 = true;
    s.mu2 = 0.0;
  } else {
    s.mu2 = r.number("mu2", 0.0);
  }
  s.a0 = r.number("a0", 4.0);
  s.a1 = r.number("a1", 1.0);
  s.a2 = r.number("a2", 1.0);
  s.sigma1 = r.number("sigma1", 0.1);
  s.sigma2 = r.number("sigma2", 0.01);
  s.seed = r.uint("seed", 0);
  s.divergence_cap = r.number("divergence_cap", 1e12);
  if (r.has("initial_price") && r.raw("initial_price").is_string()) {
    if (r.string("initial_price") != "random") r.fail("initial_price", "expected a number or \"random\"");
    s.random_initial_price = true;
  } else if (r.has("initial_price")) {
    s.initial_price = r.number("initial_price");
  }
  r.finish();
  try {
    s.model.validate();
    s.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return out;
}

struct MrpeRequest {
  std::vector<double> l{1.0, 1.5, 2.0};
  std::vector<RatioKind> kinds{RatioKind::price_elasticity};
  double search_lo = 1e-6;
  double search_hi = 1e6;
};

struct StabilityRequest {
  std::vector<double> l = default_l_list();
  std::vector<double> lambda0{1.0};
  std::size_t steps = 200;
};

struct InvarianceRequest {
  std::optional<double> kappa;        // default: the perturbation's kappa
  std::vector<double> init;           // default: equilibrium price
  std::vector<double> ar_coeffs;      // default: the predictor's weights
  double ar_l = 1.0;
};

struct L2Request {
  std::size_t pairs = 100;
  std::size_t horizon = 500;
  std::uint64_t seed = 0;
};

struct RvrRequest {
  std::size_t runs = 20;
  Signal signal = Signal::demand;
};

struct SweepAxis {
  std::string parameter;  // dotted path inside the scenario object
  std::string label;
  std::vector<double> values;
};

struct SweepRequest {
  SweepAxis main;
  std::optional<SweepAxis> series;
  std::size_t runs_per_point = 50;
};

struct ScenarioFile {
  std::string source;
  json scenario_json;
  ScenarioSpec spec;
  std::optional<MrpeRequest> mrpe;
  std::optional<StabilityRequest> stability;
  std::optional<InvarianceRequest> invariance;
  std::optional<L2Request> l2gain;
  std::optional<RvrRequest> rvr;
  std::optional<SweepRequest> sweep;
};

inline json::json_pointer parameter_pointer(const std::string& dotted) {
  std::string p = "/";
  for (char c : dotted) p += c == '.' ? '/' : c;
  return json::json_pointer(p);
}

// Copy of a scenario object with one numeric parameter replaced.
inline json with_parameter(const json& scenario, const std::string& dotted, double value) {
  json out = scenario;
  const auto ptr = parameter_pointer(dotted);
  if (!out.contains(ptr)) throw ValidationError("sweep parameter 'scenario." + dotted + "' does not exist");
  out[ptr] = value;
  return out;
}

inline SweepAxis parse_axis(ObjectReader r) {
  SweepAxis a;
  a.parameter = r.string("parameter");
  a.label = r.string("label", a.parameter);
  a.values = r.numbers("values");
  if (a.values.empty()) r.fail("values", "sweep needs at least one value");
  r.finish();
  return a;
}

inline RatioKind parse_ratio_kind(const std::string& s, const ObjectReader& r) {
  if (s == "price_elasticity") return RatioKind::price_elasticity;
  if (s == "risk_aversion") return RatioKind::risk_aversion;
  r.fail("kinds", "unknown kind '" + s + "'");
}

inline Signal parse_signal(const std::string& s, const ObjectReader& r) {
  if (s == "demand") return Signal::demand;
  if (s == "price") return Signal::price;
  if (s == "supply") return Signal::supply;
  r.fail("signal", "unknown signal '" + s + "'");
}

inline ScenarioFile parse_config(const json& root, const std::string& source = "<memory>") {
  ObjectReader r(root, "");
  ScenarioFile f;
  f.source = source;
  const json& ver = r.raw("schema_version");
  if (!ver.is_number_integer() || ver.get<std::int64_t>() != kSchemaVersion) {
    r.fail("schema_version", "must be " + std::to_string(kSchemaVersion));
  }
  f.scenario_json = r.raw("scenario");
  f.spec = parse_scenario(f.scenario_json);
  if (r.has("analysis")) {
    ObjectReader a = r.object("analysis");
    if (a.has("mrpe")) {
      ObjectReader m = a.object("mrpe");
      MrpeRequest q;
      q.l = m.numbers("l", q.l);
      if (m.has("kinds")) {
        const json& ks = m.raw("kinds");
        if (!ks.is_array() || ks.empty()) m.fail("kinds", "expected a nonempty list");
        q.kinds.clear();
        for (const auto& k : ks) {
          if (!k.is_string()) m.fail("kinds", "expected strings");
          q.kinds.push_back(parse_ratio_kind(k.get<std::string>(), m));
        }
      }
      q.search_lo = m.number("search_lo", q.search_lo);
      q.search_hi = m.number("search_hi", q.search_hi);
      m.finish();
      f.mrpe = q;
    }
    if (a.has("stability")) {
      ObjectReader s = a.object("stability");
      StabilityRequest q;
      q.l = s.numbers("l", q.l);
      q.lambda0 = s.numbers("lambda0", q.lambda0);
      q.steps = s.uint("steps", q.steps);
      s.finish();
      f.stability = q;
    }
    if (a.has("invariance")) {
      ObjectReader s = a.object("invariance");
      InvarianceRequest q;
      if (s.has("kappa")) q.kappa = s.number("kappa");
      q.init = s.numbers("init", {});
      q.ar_coeffs = s.numbers("ar_coeffs", {});
      q.ar_l = s.number("ar_l", 1.0);
      s.finish();
      f.invariance = q;
    }
    if (a.has("l2gain")) {
      ObjectReader s = a.object("l2gain");
      L2Request q;
      q.pairs = s.uint("pairs", q.pairs);
      q.horizon = s.uint("horizon", q.horizon);
      q.seed = s.uint("seed", q.seed);
      s.finish();
      f.l2gain = q;
    }
    if (a.has("rvr")) {
      ObjectReader s = a.object("rvr");
      RvrRequest q;
      q.runs = s.uint("runs", q.runs);
      q.signal = parse_signal(s.string("signal", "demand"), s);
      s.finish();
      f.rvr = q;
    }
    a.finish();
  }
  if (r.has("sweep")) {
    ObjectReader s = r.object("sweep");
    SweepRequest q;
    q.main.parameter = s.string("parameter");
    q.main.label = s.string("label", q.main.parameter);
    q.main.values = s.numbers("values");
    if (q.main.values.empty()) s.fail("values", "sweep needs at least one value");
    q.runs_per_point = s.uint("runs_per_point", q.runs_per_point);
    if (s.has("series")) q.series = parse_axis(s.object("series"));
    s.finish();
    // Every sweep point must yield a valid scenario.
    for (double v : q.main.values) parse_scenario(with_parameter(f.scenario_json, q.main.parameter, v));
    if (q.series) {
      for (double v : q.series->values) parse_scenario(with_parameter(f.scenario_json, q.series->parameter, v));
    }
    f.sweep = q;
  }
  r.finish();
  return f;
}

inline ScenarioFile load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError(path + ": cannot open config file");
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": malformed JSON: " + e.what());
  }
  try {
    return parse_config(root, path);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

}  // namespace rtpvol::io
