#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cfmimo/config.hpp"
#include "cfmimo/plan.hpp"

namespace cfmimo {

/// One empirical quantity next to its closed-form counterpart.
struct McEstimate {
  std::string strategy;
  std::string term;
  int ue = 0;
  double empirical = 0.0;
  double se = 0.0;           // jackknife over batches
  double closed_form = 0.0;
  double deviation = 0.0;    // (empirical - closed) / closed, NaN when closed == 0
  double tolerance = 0.0;    // absolute band used for `pass`
  long draws = 0;
  bool pass = false;
};

/// Test hook: scales one closed-form term before comparison.
struct FaultInjection {
  std::string term;
  double factor = 1.0;
};

struct OracleOptions {
  long draws = 200000;
  int batches = 20;
  std::uint64_t seed = 1;
  double rel_tol = 0.02;
  double se_mult = 3.0;
  FaultInjection fault;
};

/// Terms reported per UE for the MRC strategies, in report order.
const std::vector<std::string>& mrc_term_names();

/// Per-UE empirical SINR with its standard error, plus all term rows.
struct McReport {
  std::vector<McEstimate> rows;
  Eigen::VectorXd sinr;     // empirical UatF SINR from the combined signal r_k
  Eigen::VectorXd sinr_se;

  bool all_pass() const;
  const McEstimate& find(const std::string& term, int ue) const;
};

/// Mean-of-batches statistics with leave-one-batch-out jackknife errors. Each
/// batch holds running sums of the same layout; a statistic maps pooled means
/// to a number.
class BatchMoments {
 public:
  BatchMoments(int batches, int width);

  double* batch(int b) { return sums_.data() + static_cast<std::size_t>(b) * width_; }
  void count(int b, long n) { counts_[b] += n; }
  int batches() const { return static_cast<int>(counts_.size()); }
  long total() const;
  std::vector<double> means() const { return means_excluding(-1); }

  using Statistic = std::function<double(const std::vector<double>& means)>;
  /// Value on all batches and jackknife standard error.
  std::pair<double, double> estimate(const Statistic& f) const;

 private:
  std::vector<double> means_excluding(int skip) const;
  int width_;
  std::vector<double> sums_;
  std::vector<long> counts_;
};

/// CFE end to end: pilots, pilot quantization, CU-side LMMSE, data, data
/// quantization, MRC. Rows compare against the closed-form terms.
McReport mc_terms_cfe(const Eigen::MatrixXd& beta, const FronthaulPlan& plan,
                      const Eigen::VectorXd& eta, const SystemConfig& cfg,
                      const OracleOptions& opts);

/// ECF: AP-side LMMSE, subtractive CSI quantization realized as
/// g^ = a g~ + v (a = gamma'/gamma, v ~ CN(0, a Q)), then the CFE data path.
/// Rows compare against the exact moments; the report also carries the bounds
/// as extra rows ("sinr_lb", "sinr_ub") whose pass flag is the sandwich check
/// at `bound_se` standard errors.
McReport mc_terms_ecf(const Eigen::MatrixXd& beta, const FronthaulPlan& plan,
                      const Eigen::VectorXd& eta, const SystemConfig& cfg,
                      const OracleOptions& opts, double bound_se = 2.0);

/// Empirical EMCF statistics for one UE.
struct EmcfUeEstimate {
  std::vector<int> aps;
  Eigen::VectorXcd b;          // sample E{y^ s*}
  Eigen::MatrixXcd k_z;        // sample E{z z^H}
  Eigen::MatrixXd k_z_se;      // jackknife SE of the real parts
  Eigen::MatrixXd k_z_closed;  // analytic
  double sinr_closed = 0.0;
  double sinr_analytic_u = 0.0;  // empirical SINR with the analytic combiner
  double sinr_analytic_u_se = 0.0;
  double sinr_sample_u = 0.0;    // b^H K^-1 b from the samples
  double sinr_sample_u_se = 0.0;
};

struct EmcfReport {
  std::vector<EmcfUeEstimate> ues;
  std::vector<McEstimate> rows;  // psi (per AP and UE) and sinr rows
  bool all_pass() const;
};

EmcfReport mc_emcf(const Eigen::MatrixXd& beta, const FronthaulPlan& plan,
                   const Eigen::VectorXd& eta, const SystemConfig& cfg,
                   const OracleOptions& opts);

void write_report_csv(std::ostream& os, const std::vector<McEstimate>& rows,
                      bool header = true);
void write_report_json(std::ostream& os, const std::vector<McEstimate>& rows);

}  // namespace cfmimo
