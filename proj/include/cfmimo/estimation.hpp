#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "cfmimo/config.hpp"
#include "cfmimo/quant.hpp"

namespace cfmimo {

/// Large-scale LMMSE statistics, all M x K.
///
/// For CFE `q_p` holds the per-AP pilot distortion repeated across UEs (+inf
/// for a dark pilot link, which also forces lambda = gamma = 0 on that row).
/// For ECF it holds the per-entry CSI distortion and gamma_prime = gamma - q_p.
struct EstimationStats {
  Eigen::MatrixXd lambda;
  Eigen::MatrixXd gamma;
  Eigen::MatrixXd gamma_prime;
  Eigen::MatrixXd q_p;
};

/// sqrt(xi_r xi_t tau rho_p), the pilot amplitude after both impairments.
double pilot_gain(const SystemConfig& cfg);

/// LMMSE at the CU after per-AP pilot quantization with variance q_pilot[m].
EstimationStats cfe_stats(const Eigen::MatrixXd& beta,
                          const std::vector<Distortion>& q_pilot,
                          const SystemConfig& cfg);

/// LMMSE at the AP from unquantized pilots.
EstimationStats ecf_stats(const Eigen::MatrixXd& beta, const SystemConfig& cfg);

/// Subtractive CSI test channel: gamma' = gamma - Q. Rejects Q outside [0, gamma].
EstimationStats apply_csi_quantization(EstimationStats stats,
                                       const Eigen::MatrixXd& q_csi);

/// lambda scaled to the forwarded estimate: lambda * gamma' / gamma (0 where
/// gamma is 0). Used by the exact ECF moment expressions.
Eigen::MatrixXd effective_lambda(const EstimationStats& stats);

void write_stats_csv(std::ostream& os, const EstimationStats& stats);

}  // namespace cfmimo
