#include "cfmimo/estimation.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace cfmimo {

double pilot_gain(const SystemConfig& cfg) {
  return std::sqrt(cfg.xi_r * cfg.xi_t * cfg.pilot_len * cfg.pilot_power_w);
}

EstimationStats cfe_stats(const Eigen::MatrixXd& beta,
                          const std::vector<Distortion>& q_pilot,
                          const SystemConfig& cfg) {
  const auto M = beta.rows();
  const auto K = beta.cols();
  if (static_cast<Eigen::Index>(q_pilot.size()) != M)
    throw std::invalid_argument("cfe_stats: one pilot distortion per AP expected");

  const double c = pilot_gain(cfg);
  const double rho_p = cfg.pilot_power_w;
  const double leak = rho_p * (1.0 - cfg.xi_r * cfg.xi_t);

  EstimationStats s;
  s.lambda.resize(M, K);
  s.gamma.resize(M, K);
  s.q_p.resize(M, K);
  for (Eigen::Index m = 0; m < M; ++m) {
    const double total = beta.row(m).sum();
    for (Eigen::Index k = 0; k < K; ++k) {
      if (is_dark(q_pilot[m])) {
        s.lambda(m, k) = 0.0;
        s.gamma(m, k) = 0.0;
        s.q_p(m, k) = std::numeric_limits<double>::infinity();
        continue;
      }
      const double q = *q_pilot[m];
      if (q < 0) throw std::invalid_argument("cfe_stats: negative distortion");
      // Equal per-entry distortion: (1/tau) sum_k' Q = Q.
      const double den = c * c * beta(m, k) + leak * total + cfg.noise_w + q;
      s.lambda(m, k) = c * beta(m, k) / den;
      s.gamma(m, k) = c * beta(m, k) * s.lambda(m, k);
      s.q_p(m, k) = q;
    }
  }
  s.gamma_prime = s.gamma;
  return s;
}

EstimationStats ecf_stats(const Eigen::MatrixXd& beta, const SystemConfig& cfg) {
  EstimationStats s =
      cfe_stats(beta, std::vector<Distortion>(beta.rows(), 0.0), cfg);
  return s;
}

EstimationStats apply_csi_quantization(EstimationStats stats,
                                       const Eigen::MatrixXd& q_csi) {
  if (q_csi.rows() != stats.gamma.rows() || q_csi.cols() != stats.gamma.cols())
    throw std::invalid_argument("apply_csi_quantization: shape mismatch");
  for (Eigen::Index m = 0; m < q_csi.rows(); ++m) {
    for (Eigen::Index k = 0; k < q_csi.cols(); ++k) {
      const double q = q_csi(m, k);
      const double g = stats.gamma(m, k);
      // A relative slack absorbs rounding in gamma * 2^0.
      if (q < 0 || q > g * (1.0 + 1e-12))
        throw std::invalid_argument("apply_csi_quantization: Q must lie in [0, gamma]");
      stats.q_p(m, k) = std::min(q, g);
      stats.gamma_prime(m, k) = g - stats.q_p(m, k);
    }
  }
  return stats;
}

Eigen::MatrixXd effective_lambda(const EstimationStats& stats) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(stats.lambda.rows(), stats.lambda.cols());
  for (Eigen::Index m = 0; m < out.rows(); ++m)
    for (Eigen::Index k = 0; k < out.cols(); ++k)
      if (stats.gamma(m, k) > 0)
        out(m, k) = stats.lambda(m, k) * stats.gamma_prime(m, k) / stats.gamma(m, k);
  return out;
}

void write_stats_csv(std::ostream& os, const EstimationStats& stats) {
  os << "m,k,lambda,gamma,gamma_prime,q_p\n" << std::setprecision(12);
  for (Eigen::Index m = 0; m < stats.gamma.rows(); ++m)
    for (Eigen::Index k = 0; k < stats.gamma.cols(); ++k)
      os << m << ',' << k << ',' << stats.lambda(m, k) << ',' << stats.gamma(m, k) << ','
         << stats.gamma_prime(m, k) << ',' << stats.q_p(m, k) << '\n';
}

}  // namespace cfmimo
