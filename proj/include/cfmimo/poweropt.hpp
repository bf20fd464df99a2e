#pragma once

#include <iosfwd>
#include <stdexcept>

#include <Eigen/Dense>

#include "cfmimo/config.hpp"
#include "cfmimo/plan.hpp"

namespace cfmimo {

/// SINR_k(eta) = A_k eta_k / (sum_k' B_kk' eta_k' + L_k).
struct GpProblem {
  Eigen::VectorXd a;
  Eigen::MatrixXd b;
  Eigen::VectorXd l;

  int size() const { return static_cast<int>(a.size()); }
};

struct GpSolution {
  Eigen::VectorXd eta;
  Eigen::VectorXd t;       // SINR_k(eta), the active auxiliary variables
  double objective = 0.0;  // sum_k log t_k
  double kkt_residual = 0.0;
  int iterations = 0;
  bool rounded = false;    // post-pass switched some UEs off
};

class GpInfeasible : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GpNotConverged : public std::runtime_error {
 public:
  GpNotConverged(const std::string& what, GpSolution best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const GpSolution& best() const { return best_; }

 private:
  GpSolution best_;
};

inline constexpr double kMinPower = 1e-8;
inline constexpr double kRoundToZero = 1e-6;
inline constexpr double kKktTolerance = 1e-8;

/// Coefficients for the CFE SINR under a fixed plan. S_kk' (the part of Q_d,m
/// that scales with the transmit powers) is folded into B so the rational form
/// is exact.
GpProblem build_gp_cfe(const Eigen::MatrixXd& beta, const FronthaulPlan& plan,
                       const SystemConfig& cfg);

/// Same extraction for the ECF bounds; `plan.strategy` selects which. The lower
/// bound's negative corrections stay in B and L; if any coefficient ends up
/// negative the instance is rejected with GpInfeasible.
GpProblem build_gp_ecf(const Eigen::MatrixXd& beta, const FronthaulPlan& plan,
                       const SystemConfig& cfg);

/// Dispatch on plan.strategy (CFE or an ECF bound).
GpProblem build_gp(const Eigen::MatrixXd& beta, const FronthaulPlan& plan,
                   const SystemConfig& cfg);

Eigen::VectorXd gp_sinr(const GpProblem& p, const Eigen::VectorXd& eta);

/// log prod_k SINR_k(eta); -inf when some SINR is zero.
double gp_objective(const GpProblem& p, const Eigen::VectorXd& eta);

/// sum_k ((T - tau)/T) log2(1 + SINR_k(eta)).
double gp_sum_se(const GpProblem& p, const Eigen::VectorXd& eta, const SystemConfig& cfg);

/// Maximizes prod_k SINR_k over eta in [kMinPower, 1]^K. With t eliminated at
/// its active value the log-domain problem is sum_k [x_k - lse_k(x)] over a
/// box, solved by a log-barrier Newton method. Throws GpNotConverged when the
/// final KKT residual exceeds kKktTolerance.
GpSolution solve_gp(const GpProblem& p, const SystemConfig& cfg, double tol = 1e-10);

/// Weighted variant: maximizes sum_k w_k log SINR_k.
GpSolution solve_gp(const GpProblem& p, const Eigen::VectorXd& weights,
                    const SystemConfig& cfg, double tol = 1e-10);

/// Sum-SE power control by successive GPs: each round maximizes the tangent
/// lower bound sum_k a_k log SINR_k of sum_k log(1 + SINR_k), starting from
/// full power, so sum SE never falls below its full-power value.
GpSolution optimize_sum_se(const GpProblem& p, const SystemConfig& cfg, int max_rounds = 30);

void write_gp_solution(std::ostream& os, const GpSolution& s);

}  // namespace cfmimo
