#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cfmimo/config.hpp"
#include "cfmimo/estimation.hpp"
#include "cfmimo/plan.hpp"

namespace cfmimo {

/// Which algebra to use where the closed forms as typeset disagree with the
/// signal model. kModel is what the moments of the simulated signal give;
/// kPrinted reproduces the typeset expressions for comparison.
enum class FormulaVariant { kModel, kPrinted };

/// UatF decomposition of one UE's effective signal. `iui` and `thi` are indexed
/// by the interfering UE (iui has a zero in the UE's own slot). For EMCF only
/// `ds` (= b^H K_z^-1 b), `sinr` and `rate` are populated.
struct SinrBreakdown {
  double ds = 0.0;
  double bu = 0.0;
  Eigen::VectorXd iui;
  Eigen::VectorXd thi;
  double rhi = 0.0;
  double rn = 0.0;
  double qn = 0.0;
  double sinr = 0.0;
  double rate = 0.0;
  // ECF lower bound only: the denominator was non-positive (then clamped) or
  // fell below the upper bound's, so the value is not a valid bound.
  bool clamped = false;

  double interference() const { return bu + iui.sum() + thi.sum() + rhi + rn + qn; }
};

class NotPositiveDefinite : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// ((T - tau) / T) log2(1 + sinr).
double rate_from_sinr(double sinr, const SystemConfig& cfg);

/// Sums over APs that feed the closed forms. Dark data links are excluded.
/// `sig` enters Omega, DS and the noise terms, `cov` enters Gamma and `lam`
/// enters Lambda. All matrices are K x K, indexed [k][k'].
struct MomentSums {
  Eigen::MatrixXd omega;   // sum_m sig_mk beta_mk'
  Eigen::MatrixXd gamma;   // (sum_m cov_mk beta_mk' / beta_mk)^2
  Eigen::MatrixXd lambda;  // sum_m lam_mk^2 beta_mk'^2
  Eigen::VectorXd sig;     // sum_m sig_mk
  Eigen::VectorXd sig_sq;  // sum_m sig_mk^2
  Eigen::VectorXd noise;   // sum_m (N + Q_d,m) sig_mk
  Eigen::VectorXd thermal; // sum_m N sig_mk
};

/// True for APs whose data link carries signal.
std::vector<bool> active_aps(const FronthaulPlan& plan, int num_aps);

MomentSums moment_sums(const Eigen::MatrixXd& beta, const Eigen::MatrixXd& sig,
                       const Eigen::MatrixXd& cov, const Eigen::MatrixXd& lam,
                       const std::vector<Distortion>& q_data, const SystemConfig& cfg);

/// Per-term variances of the MRC/UatF decomposition for a CFE-shaped model.
std::vector<SinrBreakdown> mrc_terms(const MomentSums& s, const Eigen::VectorXd& eta,
                                     const SystemConfig& cfg);

/// Compact denominator sum_k' rho_u eta_k' [Omega + c1 Gamma + c2 Lambda] + E.
double compact_denominator(const MomentSums& s, int k, const Eigen::VectorXd& eta,
                           const SystemConfig& cfg, FormulaVariant variant);

/// Statistics each strategy feeds into its closed forms.
EstimationStats stats_for(Strategy strategy, const Eigen::MatrixXd& beta,
                          const FronthaulPlan& plan, const SystemConfig& cfg);

std::vector<SinrBreakdown> sinr_cfe(const Eigen::MatrixXd& beta,
                                    const EstimationStats& stats,
                                    const FronthaulPlan& plan, const Eigen::VectorXd& eta,
                                    const SystemConfig& cfg,
                                    FormulaVariant variant = FormulaVariant::kModel);

/// Exact UatF moments of ECF under the conditional realization of the CSI test
/// channel (the CFE expressions with gamma', lambda'). The oracle's reference.
std::vector<SinrBreakdown> sinr_ecf_exact(const Eigen::MatrixXd& beta,
                                          const EstimationStats& stats,
                                          const FronthaulPlan& plan,
                                          const Eigen::VectorXd& eta,
                                          const SystemConfig& cfg);

std::vector<SinrBreakdown> sinr_ecf_lb(const Eigen::MatrixXd& beta,
                                       const EstimationStats& stats,
                                       const FronthaulPlan& plan, const Eigen::VectorXd& eta,
                                       const SystemConfig& cfg,
                                       FormulaVariant variant = FormulaVariant::kModel);

std::vector<SinrBreakdown> sinr_ecf_ub(const Eigen::MatrixXd& beta,
                                       const EstimationStats& stats,
                                       const FronthaulPlan& plan, const Eigen::VectorXd& eta,
                                       const SystemConfig& cfg);

/// E|g~*_mk y_m|^2 for every (m, k).
Eigen::MatrixXd emcf_psi_diag(const Eigen::MatrixXd& beta, const EstimationStats& stats,
                              const Eigen::VectorXd& eta, const SystemConfig& cfg,
                              FormulaVariant variant = FormulaVariant::kModel);

/// MMSE combiner of one UE over the APs whose product link is not dark.
struct EmcfCombiner {
  std::vector<int> aps;  // indices into the full AP set
  Eigen::VectorXd b;
  Eigen::MatrixXd k_z;
  Eigen::VectorXd u;
  double sinr = 0.0;
};

EmcfCombiner emcf_combiner(const Eigen::MatrixXd& beta, const EstimationStats& stats,
                           const FronthaulPlan& plan, const Eigen::VectorXd& eta,
                           const SystemConfig& cfg, int k,
                           FormulaVariant variant = FormulaVariant::kModel);

std::vector<SinrBreakdown> rate_emcf(const Eigen::MatrixXd& beta,
                                     const EstimationStats& stats,
                                     const FronthaulPlan& plan, const Eigen::VectorXd& eta,
                                     const SystemConfig& cfg,
                                     FormulaVariant variant = FormulaVariant::kModel);

/// Dispatches on plan.strategy (stats derived from the plan).
std::vector<SinrBreakdown> evaluate(const Eigen::MatrixXd& beta, const FronthaulPlan& plan,
                                    const Eigen::VectorXd& eta, const SystemConfig& cfg,
                                    FormulaVariant variant = FormulaVariant::kModel);

double sum_se(const std::vector<SinrBreakdown>& rows);
double sum_se(const Eigen::VectorXd& rates);

/// Bits per joule: B * SSE / P_t with P_t = sum_k eta_k rho_u + sum_m P_m +
/// B * sum_m C_m * P_bh.
double energy_efficiency(const Eigen::VectorXd& rates, const Eigen::VectorXd& capacity,
                         const Eigen::VectorXd& eta, const SystemConfig& cfg);

/// One row per UE with every term variance.
void write_breakdown_csv(std::ostream& os, const std::string& label,
                         const std::vector<SinrBreakdown>& rows, bool header = true);

}  // namespace cfmimo
