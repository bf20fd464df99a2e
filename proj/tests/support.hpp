#pragma once

// Helpers shared by the unit tests and the acceptance runner. The reference
// formulas here are written from scratch, without the library's term assembly.

#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "cfmimo/config.hpp"
#include "cfmimo/plan.hpp"

namespace cfmimo::testing {

/// Plan for infinitely wide fronthaul: every distortion is zero.
inline FronthaulPlan lossless_plan(Strategy s, int M, int K) {
  const double inf = std::numeric_limits<double>::infinity();
  FronthaulPlan p;
  p.strategy = s;
  p.capacity = Eigen::VectorXd::Constant(M, inf);
  p.csi_capacity = Eigen::VectorXd::Constant(M, inf);
  p.data_capacity = Eigen::VectorXd::Constant(M, inf);
  p.ue_shares = Eigen::MatrixXd::Zero(M, K);
  p.pilot_noise.assign(M, 0.0);
  p.csi_noise = Eigen::MatrixXd::Zero(M, K);
  p.data_noise.assign(M, 0.0);
  p.product_noise = DistortionGrid(M, K, 0.0);
  return p;
}

/// Ideal hardware, ideal fronthaul, orthogonal pilots, MRC with UatF:
///   gamma_mk = tau rho_p beta_mk^2 / (tau rho_p beta_mk + N)
///   SINR_k = rho_u eta_k (sum_m gamma_mk)^2 /
///            (rho_u sum_k' eta_k' sum_m gamma_mk beta_mk' + N sum_m gamma_mk)
inline Eigen::VectorXd ideal_mrc_sinr(const Eigen::MatrixXd& beta, const Eigen::VectorXd& eta,
                                      const SystemConfig& cfg) {
  const auto M = beta.rows();
  const auto K = beta.cols();
  const double tau_rho = cfg.pilot_len * cfg.pilot_power_w;
  Eigen::MatrixXd gamma(M, K);
  for (Eigen::Index m = 0; m < M; ++m)
    for (Eigen::Index k = 0; k < K; ++k)
      gamma(m, k) = tau_rho * beta(m, k) * beta(m, k) / (tau_rho * beta(m, k) + cfg.noise_w);
  Eigen::VectorXd out(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    double sum_g = 0.0;
    for (Eigen::Index m = 0; m < M; ++m) sum_g += gamma(m, k);
    double interference = 0.0;
    for (Eigen::Index j = 0; j < K; ++j) {
      double s = 0.0;
      for (Eigen::Index m = 0; m < M; ++m) s += gamma(m, k) * beta(m, j);
      interference += cfg.data_power_w * eta(j) * s;
    }
    out(k) = cfg.data_power_w * eta(k) * sum_g * sum_g / (interference + cfg.noise_w * sum_g);
  }
  return out;
}

/// Relative difference with an absolute floor.
inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace cfmimo::testing
