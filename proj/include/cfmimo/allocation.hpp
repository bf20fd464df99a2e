#pragma once

#include <vector>

#include <Eigen/Dense>

#include "cfmimo/config.hpp"
#include "cfmimo/plan.hpp"
#include "cfmimo/rates.hpp"

namespace cfmimo {

/// Q_p,m for every AP: the pilot block is K samples per coherence interval.
std::vector<Distortion> pilot_noise_for(const Eigen::VectorXd& csi_capacity,
                                        const Eigen::MatrixXd& beta,
                                        const SystemConfig& cfg);

/// Q_d,m for every AP given the current power controls.
std::vector<Distortion> data_noise_for(const Eigen::VectorXd& data_capacity,
                                       const Eigen::MatrixXd& beta,
                                       const Eigen::VectorXd& eta, const SystemConfig& cfg);

/// 1 / (2^(T C_d / (T - tau)) - 1), the factor linking Q_d to the data power.
/// Infinite for a dark link.
double data_noise_factor(double data_capacity, const SystemConfig& cfg);

struct ShareResult {
  Eigen::VectorXd shares;  // per UE, summing to the budget
  Eigen::VectorXd q;       // resulting distortions
};

/// CSI shares proportional to gamma: share_k = gamma_k / sum(gamma) * C_p.
ShareResult ecf_waterfill(double csi_capacity, const Eigen::VectorXd& gamma, int coherence);

/// Uniform CSI shares C_p / K.
ShareResult ecf_uniform(double csi_capacity, const Eigen::VectorXd& gamma, int coherence);

/// EMCF product shares proportional to Psi[k,k]; Q_k = Psi_k / (2^(share_k T/(T-tau)) - 1).
/// A zero budget yields dark entries (returned as +inf in `q`).
ShareResult emcf_allocate(double capacity, const Eigen::VectorXd& psi, const SystemConfig& cfg);
ShareResult emcf_uniform(double capacity, const Eigen::VectorXd& psi, const SystemConfig& cfg);

/// Plan with C_p,m = fraction * C_m for every AP (CFE, ECF) or with all capacity
/// on the products (EMCF, fraction ignored). Per-UE shares follow `mode`.
FronthaulPlan plan_at_fraction(Strategy strategy, AllocationMode mode,
                               const Eigen::VectorXd& capacity, double fraction,
                               const Eigen::MatrixXd& beta, const Eigen::VectorXd& eta,
                               const SystemConfig& cfg);

/// C_p = C_d = C / 2 with uniform per-UE shares.
FronthaulPlan equal_split(const Eigen::VectorXd& capacity, Strategy strategy,
                          const Eigen::MatrixXd& beta, const Eigen::VectorXd& eta,
                          const SystemConfig& cfg);

/// Recomputes every eta-dependent distortion (Q_d,m, and Psi-based EMCF
/// shares) for new power controls, keeping the capacity split.
void refresh_for_power(FronthaulPlan& plan, AllocationMode mode, const Eigen::MatrixXd& beta,
                       const Eigen::VectorXd& eta, const SystemConfig& cfg);

/// SSE used to rank plans; ECF lower-bound rows flagged as clamped count as 0.
double plan_sse(const FronthaulPlan& plan, const Eigen::MatrixXd& beta,
                const Eigen::VectorXd& eta, const SystemConfig& cfg);

struct SplitResult {
  FronthaulPlan plan;
  double fraction = 0.5;
  double sse = 0.0;
  std::vector<double> grid;      // fractions scanned
  std::vector<double> grid_sse;  // SSE at each
  bool unimodal = true;          // best grid point beats both neighbours
};

inline constexpr int kSplitGridPoints = 41;
inline constexpr double kSplitTolerance = 1e-4;

/// Common CSI fraction maximizing SSE: 41-point grid, then golden section.
SplitResult split_search(Strategy strategy, AllocationMode mode,
                         const Eigen::VectorXd& capacity, const Eigen::MatrixXd& beta,
                         const Eigen::VectorXd& eta, const SystemConfig& cfg);

/// Allocation per mode: equal split, or proposed shares (+ split search where
/// the strategy has a split).
FronthaulPlan allocate(Strategy strategy, AllocationMode mode,
                       const Eigen::VectorXd& capacity, const Eigen::MatrixXd& beta,
                       const Eigen::VectorXd& eta, const SystemConfig& cfg);

/// High-SNR estimate variances as a function of the CSI capacity.
double gamma_cfe_high_snr(const Eigen::VectorXd& beta_row, int k, double csi_capacity,
                          const SystemConfig& cfg);
double gamma_ecf_high_snr(const Eigen::VectorXd& beta_row, int k, double csi_capacity,
                          const SystemConfig& cfg);

/// CSI-capacity threshold above which estimating at the CU beats estimating at
/// the AP, for UE k at one AP.
struct ThresholdReport {
  int ue = 0;
  double theta1 = 0.0;
  double theta2 = 0.0;
  double gamma_inf = 0.0;
  bool side_conditions = false;  // sum_k' gamma_inf > K gamma_inf_k (i.e. K theta2 < 1)
  bool crossover_exists = false; // S / theta1 > 1 / (K theta2)
  double closed_form = 0.0;      // NaN when not applicable
  double crossover = 0.0;        // bisection on the exact limits, NaN if none
};

std::vector<ThresholdReport> prop1_threshold(const Eigen::VectorXd& beta_row,
                                             const SystemConfig& cfg);

/// Single-user high-SNR SINR limits of CFE and ECF.
struct LimitReport {
  Eigen::VectorXd upsilon;
  double x0 = 0.0, x1 = 0.0, x2 = 0.0, x3 = 0.0;
  double a = 0.0, b = 0.0;          // CFE coefficients of X0 and X2
  double a_ecf = 0.0, b_ecf = 0.0;  // ECF coefficients
  double sinr_cfe = 0.0;
  double sinr_ecf = 0.0;
};

LimitReport prop2_limits(const Eigen::MatrixXd& beta, const Eigen::VectorXd& csi_capacity,
                         const Eigen::VectorXd& data_capacity, const SystemConfig& cfg,
                         FormulaVariant variant = FormulaVariant::kModel);

}  // namespace cfmimo
