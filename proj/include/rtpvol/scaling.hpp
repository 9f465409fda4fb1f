#pragma once

#include <cmath>
#include <cstdio>
#include <string>

#include "rtpvol/errors.hpp"

namespace rtpvol {

// Strictly monotone rescaling of a positive signal: identity, log, or
// z^(1-l) for l != 1.
class Scaling {
 public:
  enum class Kind { identity, log, power };

  static Scaling identity() { return Scaling(Kind::identity, 0.0); }
  static Scaling log() { return Scaling(Kind::log, 1.0); }
  static Scaling power(double l) {
    if (!(l >= 0.0) || !std::isfinite(l)) throw ValidationError("power scaling needs finite l >= 0");
    if (l == 1.0) throw ValidationError("power scaling with l = 1 is the log scaling; use Scaling::log()");
    return Scaling(Kind::power, l);
  }
  // The scaling tied to exponent l: log at l = 1, z^(1-l) otherwise.
  static Scaling for_exponent(double l) { return l == 1.0 ? log() : power(l); }

  Kind kind() const { return kind_; }
  double exponent() const { return l_; }
  bool needs_positive() const { return kind_ != Kind::identity; }

  double operator()(double z) const {
    switch (kind_) {
      case Kind::identity: return z;
      case Kind::log: return std::log(z);
      case Kind::power: return std::pow(z, 1.0 - l_);
    }
    return z;
  }

  double derivative(double z) const {
    switch (kind_) {
      case Kind::identity: return 1.0;
      case Kind::log: return 1.0 / z;
      case Kind::power: return (1.0 - l_) * std::pow(z, -l_);
    }
    return 1.0;
  }

  std::string name() const {
    switch (kind_) {
      case Kind::identity: return "identity";
      case Kind::log: return "log";
      case Kind::power: {
        char buf[48];
        std::snprintf(buf, sizeof buf, "power(l=%g)", l_);
        return buf;
      }
    }
    return "?";
  }

 private:
  Scaling(Kind k, double l) : kind_(k), l_(l) {}
  Kind kind_;
  double l_;
};

}  // namespace rtpvol
