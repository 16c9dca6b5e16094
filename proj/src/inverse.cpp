#include "thermap/inverse.hpp"

#include <sstream>

namespace thermap {

InversionResult nnls(const ResponseMatrix& R, const ThermalMap& t_rise, const InversionOptions& opts) {
  if (t_rise.kind != TemperatureKind::Rise)
    throw Error(ErrorKind::Input, "nnls: thermal map must be a temperature rise");
  check_dimension(R.size(), t_rise.size(), "nnls");
  auto sol = thermap::nnls(R.matrix, t_rise.values, opts);

  InversionResult out;
  out.p_star = {std::move(sol.x), Provenance::Reconstructed};
  out.residual_norm = sol.residual_norm;
  out.active_set = std::move(sol.active_set);
  out.iterations = sol.iterations;
  out.converged = sol.converged;
  out.residual_history = std::move(sol.residual_history);
  return out;
}

InversionResult reconstruct(const ResponseMatrix& R, const ThermalMap& t_celsius, double inlet,
                            const InversionOptions& opts) {
  if (t_celsius.kind != TemperatureKind::Celsius)
    throw Error(ErrorKind::Input, "reconstruct: expected absolute temperatures");
  check_dimension(R.size(), t_celsius.size(), "reconstruct");
  if (!t_celsius.values.allFinite()) throw Error(ErrorKind::Input, "reconstruct: non-finite temperature");

  ThermalMap rise = t_celsius.to_rise(inlet);
  for (Eigen::Index i = 0; i < rise.size(); ++i) {
    double& v = rise.values[i];
    if (v < -kNoiseClamp) {
      std::ostringstream os;
      os << "reconstruct: block " << i << " is " << -v << " K below the inlet temperature";
      throw Error(ErrorKind::Input, os.str());
    }
    if (v < 0) v = 0;
  }
  return nnls(R, rise, opts);
}

double total_power_error(const InversionResult& result, double measured_total) {
  if (!(measured_total > 0)) throw Error(ErrorKind::Input, "total_power_error: measured total must be positive");
  return std::abs(result.p_star.total() - measured_total) / measured_total;
}

KktReport certify(const ResponseMatrix& R, const ThermalMap& t_rise, const InversionResult& result,
                  const InversionOptions& opts) {
  return verify_kkt(R.matrix, t_rise.values, result.p_star.values, opts.kkt_tolerance, opts.tikhonov_lambda);
}

}  // namespace thermap
