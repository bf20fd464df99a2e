#include "cfmimo/rates.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace cfmimo {

namespace {

constexpr double kDenominatorFloor = 1e-30;

// (1 - xi_t) / (tau xi_t); it always multiplies quantities that vanish with
// xi_t, so the xi_t = 0 corner is taken as 0.
double tx_ratio(const SystemConfig& cfg) {
  if (cfg.xi_t <= 0) return 0.0;
  return (1.0 - cfg.xi_t) / (cfg.pilot_len * cfg.xi_t);
}

double inv_tau_xi_t(const SystemConfig& cfg) {
  if (cfg.xi_t <= 0) return 0.0;
  return 1.0 / (cfg.pilot_len * cfg.xi_t);
}

Eigen::MatrixXd masked(const Eigen::MatrixXd& x, const std::vector<bool>& active) {
  Eigen::MatrixXd out = x;
  for (Eigen::Index m = 0; m < x.rows(); ++m)
    if (!active[m]) out.row(m).setZero();
  return out;
}

void finish(SinrBreakdown& row, double den, const SystemConfig& cfg) {
  if (!(den > 0)) {
    den = kDenominatorFloor;
    row.clamped = true;
  }
  row.sinr = row.ds / den;
  row.rate = rate_from_sinr(row.sinr, cfg);
}

}  // namespace

double rate_from_sinr(double sinr, const SystemConfig& cfg) {
  if (sinr < 0) throw std::invalid_argument("rate_from_sinr: negative SINR");
  return cfg.data_fraction() * std::log2(1.0 + sinr);
}

std::vector<bool> active_aps(const FronthaulPlan& plan, int num_aps) {
  std::vector<bool> out(num_aps, true);
  if (plan.data_noise.empty()) return out;
  for (int m = 0; m < num_aps; ++m) out[m] = !is_dark(plan.data_noise[m]);
  return out;
}

MomentSums moment_sums(const Eigen::MatrixXd& beta, const Eigen::MatrixXd& sig,
                       const Eigen::MatrixXd& cov, const Eigen::MatrixXd& lam,
                       const std::vector<Distortion>& q_data, const SystemConfig& cfg) {
  const auto M = beta.rows();
  const auto K = beta.cols();
  MomentSums s;
  s.omega = sig.transpose() * beta;
  // sum_m cov_mk beta_mk' / beta_mk, then squared entrywise.
  const Eigen::MatrixXd ratio = (cov.array() / beta.array()).matrix();
  s.gamma = (ratio.transpose() * beta).array().square().matrix();
  s.lambda = lam.array().square().matrix().transpose() * beta.array().square().matrix();
  s.sig = sig.colwise().sum().transpose();
  s.sig_sq = sig.array().square().colwise().sum().transpose();
  s.noise = Eigen::VectorXd::Zero(K);
  s.thermal = Eigen::VectorXd::Zero(K);
  for (Eigen::Index m = 0; m < M; ++m) {
    const double q = q_data.empty() || is_dark(q_data[m]) ? 0.0 : *q_data[m];
    for (Eigen::Index k = 0; k < K; ++k) {
      s.thermal(k) += cfg.noise_w * sig(m, k);
      s.noise(k) += (cfg.noise_w + q) * sig(m, k);
    }
  }
  return s;
}

std::vector<SinrBreakdown> mrc_terms(const MomentSums& s, const Eigen::VectorXd& eta,
                                     const SystemConfig& cfg) {
  const auto K = s.sig.size();
  const double rho_u = cfg.data_power_w;
  const double rho_p = cfg.pilot_power_w;
  const double xr = cfg.xi_r;
  const double xt = cfg.xi_t;
  const double a = tx_ratio(cfg);
  const double tau = cfg.pilot_len;

  std::vector<SinrBreakdown> rows(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    auto& r = rows[k];
    r.iui = Eigen::VectorXd::Zero(K);
    r.thi = Eigen::VectorXd::Zero(K);
    r.ds = rho_u * eta(k) * xr * xt * s.sig(k) * s.sig(k);
    for (Eigen::Index j = 0; j < K; ++j) {
      const double delta = j == k ? 1.0 : 0.0;
      const double p = rho_u * eta(j);
      const double om = s.omega(k, j);
      const double gm = s.gamma(k, j);
      const double lm = s.lambda(k, j);
      const double spread = om + a * gm + rho_p * (1.0 - xr) * lm;
      if (j == k) r.bu = p * xr * xt * spread;
      else r.iui(j) = p * xr * xt * spread;
      r.thi(j) = p * xr * (1.0 - xt) * (om + (delta + a) * gm + rho_p * (1.0 - xr) * lm);
      r.rhi += p * (1.0 - xr) *
               (om + rho_p * (xr * (tau * xt * delta + 1.0 - xt) + 1.0 - xr) * lm);
    }
    r.rn = s.thermal(k);
    r.qn = s.noise(k) - s.thermal(k);
  }
  return rows;
}

double compact_denominator(const MomentSums& s, int k, const Eigen::VectorXd& eta,
                           const SystemConfig& cfg, FormulaVariant variant) {
  const double sign = variant == FormulaVariant::kModel ? 1.0 : -1.0;
  const double xr = cfg.xi_r;
  const double xt = cfg.xi_t;
  const double tau = cfg.pilot_len;
  double den = s.noise(k);
  for (Eigen::Index j = 0; j < s.sig.size(); ++j) {
    const double delta = j == k ? 1.0 : 0.0;
    const double c1 = xr * (1.0 - xt) * (delta + sign * inv_tau_xi_t(cfg));
    const double c2 = cfg.pilot_power_w * (1.0 - xr) *
                      (tau * xr * xt * delta + sign * (1.0 + xr - xr * xt));
    den += cfg.data_power_w * eta(j) *
           (s.omega(k, j) + c1 * s.gamma(k, j) + c2 * s.lambda(k, j));
  }
  return den;
}

EstimationStats stats_for(Strategy strategy, const Eigen::MatrixXd& beta,
                          const FronthaulPlan& plan, const SystemConfig& cfg) {
  switch (strategy) {
    case Strategy::kCfe: return cfe_stats(beta, plan.pilot_noise, cfg);
    case Strategy::kEcfLower:
    case Strategy::kEcfUpper:
      return apply_csi_quantization(ecf_stats(beta, cfg), plan.csi_noise);
    case Strategy::kEmcf: return ecf_stats(beta, cfg);
  }
  throw std::logic_error("stats_for: unknown strategy");
}

std::vector<SinrBreakdown> sinr_cfe(const Eigen::MatrixXd& beta,
                                    const EstimationStats& stats,
                                    const FronthaulPlan& plan, const Eigen::VectorXd& eta,
                                    const SystemConfig& cfg, FormulaVariant variant) {
  const auto active = active_aps(plan, static_cast<int>(beta.rows()));
  const Eigen::MatrixXd g = masked(stats.gamma, active);
  const Eigen::MatrixXd l = masked(stats.lambda, active);
  const MomentSums s = moment_sums(beta, g, g, l, plan.data_noise, cfg);
  auto rows = mrc_terms(s, eta, cfg);
  for (int k = 0; k < static_cast<int>(rows.size()); ++k)
    finish(rows[k], compact_denominator(s, k, eta, cfg, variant), cfg);
  return rows;
}

std::vector<SinrBreakdown> sinr_ecf_exact(const Eigen::MatrixXd& beta,
                                          const EstimationStats& stats,
                                          const FronthaulPlan& plan,
                                          const Eigen::VectorXd& eta,
                                          const SystemConfig& cfg) {
  const auto active = active_aps(plan, static_cast<int>(beta.rows()));
  const Eigen::MatrixXd g = masked(stats.gamma_prime, active);
  const Eigen::MatrixXd l = masked(effective_lambda(stats), active);
  const MomentSums s = moment_sums(beta, g, g, l, plan.data_noise, cfg);
  auto rows = mrc_terms(s, eta, cfg);
  for (int k = 0; k < static_cast<int>(rows.size()); ++k)
    finish(rows[k], compact_denominator(s, k, eta, cfg, FormulaVariant::kModel), cfg);
  return rows;
}

std::vector<SinrBreakdown> sinr_ecf_lb(const Eigen::MatrixXd& beta,
                                       const EstimationStats& stats,
                                       const FronthaulPlan& plan, const Eigen::VectorXd& eta,
                                       const SystemConfig& cfg, FormulaVariant variant) {
  const auto active = active_aps(plan, static_cast<int>(beta.rows()));
  const Eigen::MatrixXd gp = masked(stats.gamma_prime, active);
  const Eigen::MatrixXd g = masked(stats.gamma, active);
  const Eigen::MatrixXd l = masked(stats.lambda, active);
  const Eigen::MatrixXd q = masked(stats.q_p, active);
  const MomentSums s = moment_sums(beta, gp, g, l, plan.data_noise, cfg);
  auto rows = mrc_terms(s, eta, cfg);

  const Eigen::MatrixXd qq = q.transpose() * q;
  const Eigen::VectorXd sq = q.colwise().sum().transpose();
  const double rho_u = cfg.data_power_w;
  const double rho_p = cfg.pilot_power_w;
  const double xr = cfg.xi_r;
  const double xt = cfg.xi_t;
  const double rx_sq = rho_p * (1.0 - xr) * (1.0 - xr);
  const auto K = static_cast<int>(rows.size());
  // The upper bound's denominator under-counts the interference, so a lower
  // bound denominator beneath it cannot be valid. The subtracted Q products
  // do this once Q_p,mk approaches gamma_mk.
  const auto ub = sinr_ecf_ub(beta, stats, plan, eta, cfg);
  for (int k = 0; k < K; ++k) {
    auto& r = rows[k];
    r.bu += rho_u * eta(k) * xr * xt * 2.0 * sq(k) * s.sig(k);
    double den = compact_denominator(s, k, eta, cfg, variant);
    for (int j = 0; j < K; ++j) {
      const double p = rho_u * eta(j);
      if (j != k) r.iui(j) -= p * xr * xt * qq(k, j);
      r.thi(j) -= p * xr * (1.0 - xt) * qq(k, j);
      r.rhi -= p * rx_sq * qq(k, j);
      if (j != k) den -= p * (rx_sq + xr) * qq(k, j);
    }
    den -= rho_u * eta(k) *
           ((xr * (1.0 - xt) + rx_sq) * qq(k, k) - 2.0 * xr * xt * sq(k) * s.sig(k));
    finish(r, den, cfg);
    // Equal denominators in the tight case differ by rounding only.
    if (den < ub[k].interference() * (1.0 - 1e-12)) r.clamped = true;
  }
  return rows;
}

std::vector<SinrBreakdown> sinr_ecf_ub(const Eigen::MatrixXd& beta,
                                       const EstimationStats& stats,
                                       const FronthaulPlan& plan, const Eigen::VectorXd& eta,
                                       const SystemConfig& cfg) {
  const auto active = active_aps(plan, static_cast<int>(beta.rows()));
  const Eigen::MatrixXd gp = masked(stats.gamma_prime, active);
  const MomentSums s = moment_sums(beta, gp, gp, gp, plan.data_noise, cfg);
  const auto K = static_cast<int>(beta.cols());
  const double rho_u = cfg.data_power_w;
  const double xr = cfg.xi_r;
  const double xt = cfg.xi_t;

  std::vector<SinrBreakdown> rows(K);
  for (int k = 0; k < K; ++k) {
    auto& r = rows[k];
    r.iui = Eigen::VectorXd::Zero(K);
    r.thi = Eigen::VectorXd::Zero(K);
    r.ds = rho_u * eta(k) * xr * xt * s.sig(k) * s.sig(k);
    for (int j = 0; j < K; ++j) {
      const double p = rho_u * eta(j);
      if (j == k) r.bu = p * xr * xt * s.omega(k, j);
      else r.iui(j) = p * xr * xt * s.omega(k, j);
      r.thi(j) = p * xr * (1.0 - xt) * s.omega(k, j);
      r.rhi += p * (1.0 - xr) * s.omega(k, j);
    }
    r.thi(k) += rho_u * eta(k) * xr * (1.0 - xt) * s.sig(k) * s.sig(k);
    r.rhi += rho_u * eta(k) * (1.0 - xr) * s.sig_sq(k);
    r.rn = s.thermal(k);
    r.qn = s.noise(k) - s.thermal(k);
    finish(r, r.interference(), cfg);
    r.clamped = false;
  }
  return rows;
}

Eigen::MatrixXd emcf_psi_diag(const Eigen::MatrixXd& beta, const EstimationStats& stats,
                              const Eigen::VectorXd& eta, const SystemConfig& cfg,
                              FormulaVariant variant) {
  const auto M = beta.rows();
  const auto K = beta.cols();
  const double rho_u = cfg.data_power_w;
  const double rho_p = cfg.pilot_power_w;
  const double xr = cfg.xi_r;
  const double xt = cfg.xi_t;
  Eigen::MatrixXd psi(M, K);
  for (Eigen::Index m = 0; m < M; ++m) {
    const double load = (beta.row(m).transpose().array() * eta.array()).sum();
    const double load_sq =
        (beta.row(m).transpose().array().square() * eta.array()).sum();
    const double load_root =
        (beta.row(m).transpose().array() * eta.array().sqrt()).sum();
    for (Eigen::Index k = 0; k < K; ++k) {
      const double g = stats.gamma(m, k);
      const double l2 = stats.lambda(m, k) * stats.lambda(m, k);
      double v = rho_u * load * g + rho_u * eta(k) * g * g + cfg.noise_w * g;
      if (variant == FormulaVariant::kModel) {
        v += rho_u * rho_p * (1.0 - xr * xt) * l2 * load_sq;
      } else {
        v += rho_u * xr * (1.0 - xt) * rho_p * l2 * load_root * load_root;
        v += rho_u * (1.0 + xr - 2.0 * xr * xt) * rho_p * l2 * load_sq;
      }
      psi(m, k) = v;
    }
  }
  return psi;
}

EmcfCombiner emcf_combiner(const Eigen::MatrixXd& beta, const EstimationStats& stats,
                           const FronthaulPlan& plan, const Eigen::VectorXd& eta,
                           const SystemConfig& cfg, int k, FormulaVariant variant) {
  const auto K = beta.cols();
  const double rho_u = cfg.data_power_w;
  const double rho_p = cfg.pilot_power_w;
  const double xr = cfg.xi_r;
  const double xt = cfg.xi_t;

  EmcfCombiner c;
  for (int m = 0; m < beta.rows(); ++m)
    if (!is_dark(plan.product_noise(m, k)) && stats.gamma(m, k) > 0) c.aps.push_back(m);
  const auto n = static_cast<Eigen::Index>(c.aps.size());
  if (n == 0 || eta(k) <= 0) return c;

  Eigen::VectorXd gam(n);
  Eigen::MatrixXd v(n, K);  // lambda_mk beta_mj sqrt(eta_j)
  for (Eigen::Index i = 0; i < n; ++i) {
    const int m = c.aps[i];
    gam(i) = stats.gamma(m, k);
    for (Eigen::Index j = 0; j < K; ++j)
      v(i, j) = stats.lambda(m, k) * beta(m, j) * std::sqrt(eta(j));
  }
  c.b = std::sqrt(rho_u * eta(k) * xr * xt) * gam;

  const double shared = rho_u * xr * (1.0 - xt);
  c.k_z = shared * xr * rho_p * (v * v.transpose());
  if (variant == FormulaVariant::kModel) c.k_z += shared * eta(k) * (gam * gam.transpose());
  for (Eigen::Index i = 0; i < n; ++i) {
    const int m = c.aps[i];
    const double g = gam(i);
    const double l2 = stats.lambda(m, k) * stats.lambda(m, k);
    double load = 0.0;
    double load_sq = 0.0;
    for (Eigen::Index j = 0; j < K; ++j) {
      load += eta(j) * beta(m, j);
      load_sq += eta(j) * beta(m, j) * beta(m, j);
    }
    c.k_z(i, i) = rho_u * load * g + rho_u * rho_p * (1.0 - xr * xt) * l2 * load_sq +
                  rho_u * eta(k) * (1.0 - xr * xt) * g * g + cfg.noise_w * g +
                  *plan.product_noise(m, k);
  }

  Eigen::LLT<Eigen::MatrixXd> llt(c.k_z);
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("EMCF covariance of UE " + std::to_string(k) +
                              " is not positive definite");
  c.u = llt.solve(c.b);
  // One refinement step keeps the residual at rounding level for stiff K_z.
  const Eigen::VectorXd resid = c.b - c.k_z * c.u;
  c.u += llt.solve(resid);
  const double rel = (c.k_z * c.u - c.b).norm() / c.b.norm();
  if (!(rel <= 1e-10))
    throw NotPositiveDefinite("EMCF solve residual " + std::to_string(rel) +
                              " for UE " + std::to_string(k));
  c.sinr = c.b.dot(c.u);
  return c;
}

std::vector<SinrBreakdown> rate_emcf(const Eigen::MatrixXd& beta,
                                     const EstimationStats& stats,
                                     const FronthaulPlan& plan, const Eigen::VectorXd& eta,
                                     const SystemConfig& cfg, FormulaVariant variant) {
  const auto K = static_cast<int>(beta.cols());
  std::vector<SinrBreakdown> rows(K);
  for (int k = 0; k < K; ++k) {
    const EmcfCombiner c = emcf_combiner(beta, stats, plan, eta, cfg, k, variant);
    rows[k].iui = Eigen::VectorXd::Zero(K);
    rows[k].thi = Eigen::VectorXd::Zero(K);
    rows[k].ds = c.sinr;
    rows[k].sinr = c.sinr;
    rows[k].rate = rate_from_sinr(c.sinr, cfg);
  }
  return rows;
}

std::vector<SinrBreakdown> evaluate(const Eigen::MatrixXd& beta, const FronthaulPlan& plan,
                                    const Eigen::VectorXd& eta, const SystemConfig& cfg,
                                    FormulaVariant variant) {
  const EstimationStats stats = stats_for(plan.strategy, beta, plan, cfg);
  switch (plan.strategy) {
    case Strategy::kCfe: return sinr_cfe(beta, stats, plan, eta, cfg, variant);
    case Strategy::kEcfLower: return sinr_ecf_lb(beta, stats, plan, eta, cfg, variant);
    case Strategy::kEcfUpper: return sinr_ecf_ub(beta, stats, plan, eta, cfg);
    case Strategy::kEmcf: return rate_emcf(beta, stats, plan, eta, cfg, variant);
  }
  throw std::logic_error("evaluate: unknown strategy");
}

double sum_se(const std::vector<SinrBreakdown>& rows) {
  double total = 0.0;
  for (const auto& r : rows) total += r.rate;
  return total;
}

double sum_se(const Eigen::VectorXd& rates) { return rates.sum(); }

double energy_efficiency(const Eigen::VectorXd& rates, const Eigen::VectorXd& capacity,
                         const Eigen::VectorXd& eta, const SystemConfig& cfg) {
  const double bw = cfg.bandwidth_hz;
  const double ue = cfg.data_power_w * eta.sum();
  const double aps = cfg.ap_power_w * static_cast<double>(capacity.size());
  const double fronthaul = bw * capacity.sum() * cfg.fronthaul_w_per_gbps * 1e-9;
  return bw * rates.sum() / (ue + aps + fronthaul);
}

void write_breakdown_csv(std::ostream& os, const std::string& label,
                         const std::vector<SinrBreakdown>& rows, bool header) {
  if (header) os << "strategy,ue,ds,bu,iui,thi,rhi,rn,qn,sinr,rate,clamped\n";
  os << std::setprecision(12);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& r = rows[k];
    os << label << ',' << k << ',' << r.ds << ',' << r.bu << ','
       << (r.iui.size() ? r.iui.sum() : 0.0) << ',' << (r.thi.size() ? r.thi.sum() : 0.0)
       << ',' << r.rhi << ',' << r.rn << ',' << r.qn << ',' << r.sinr << ',' << r.rate
       << ',' << (r.clamped ? 1 : 0) << '\n';
  }
}

}  // namespace cfmimo
