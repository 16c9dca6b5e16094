#pragma once

#include <string>

#include <Eigen/Core>

#include "thermap/error.hpp"

namespace thermap {

enum class Provenance { Synthetic, Reconstructed, Forward };

/// Whether a thermal map holds absolute temperatures or rises above inlet.
enum class TemperatureKind { Celsius, Rise };

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Per-block power, W, canonical block order. Entries are non-negative.
template <typename Scalar>
struct PowerMapT {
  Vector<Scalar> values;
  Provenance provenance = Provenance::Synthetic;

  Scalar total() const { return values.sum(); }
  Eigen::Index size() const { return values.size(); }
};

/// Per-block temperature, either degC or K rise (see `kind`).
template <typename Scalar>
struct ThermalMapT {
  Vector<Scalar> values;
  TemperatureKind kind = TemperatureKind::Celsius;
  Provenance provenance = Provenance::Forward;

  Eigen::Index size() const { return values.size(); }

  ThermalMapT to_celsius(Scalar inlet) const {
    if (kind == TemperatureKind::Celsius) return *this;
    return {(values.array() + inlet).matrix(), TemperatureKind::Celsius, provenance};
  }
  ThermalMapT to_rise(Scalar inlet) const {
    if (kind == TemperatureKind::Rise) return *this;
    return {(values.array() - inlet).matrix(), TemperatureKind::Rise, provenance};
  }
};

using PowerMap = PowerMapT<double>;
using ThermalMap = ThermalMapT<double>;

inline void check_dimension(Eigen::Index expected, Eigen::Index got, const char* where) {
  if (expected != got)
    throw Error(ErrorKind::Dimension, std::string(where) + ": expected " + std::to_string(expected) +
                                          " entries, got " + std::to_string(got));
}

/// Rejects negative or non-finite power entries.
template <typename Scalar>
void check_power_map(const PowerMapT<Scalar>& p, Eigen::Index n, const char* where) {
  check_dimension(n, p.size(), where);
  if (!p.values.allFinite() || (p.values.array() < Scalar(0)).any())
    throw Error(ErrorKind::Input, std::string(where) + ": power map must be finite and non-negative");
}

}  // namespace thermap
