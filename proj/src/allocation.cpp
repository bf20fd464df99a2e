#include "cfmimo/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

#include "cfmimo/estimation.hpp"

namespace cfmimo {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Distortion to_distortion(double q) {
  if (std::isinf(q)) return std::nullopt;
  return q;
}

// log(2^x - 1) without overflow for large x.
double log_pow2_minus_one(double x) {
  const double ln2 = std::log(2.0);
  if (x > 30) return x * ln2 + std::log1p(-std::exp2(-x));
  return std::log(std::expm1(x * ln2));
}

}  // namespace

std::vector<Distortion> pilot_noise_for(const Eigen::VectorXd& csi_capacity,
                                        const Eigen::MatrixXd& beta,
                                        const SystemConfig& cfg) {
  std::vector<Distortion> out(beta.rows());
  const double fraction = static_cast<double>(cfg.num_ues) / cfg.coherence;
  for (Eigen::Index m = 0; m < beta.rows(); ++m) {
    const double power = cfg.pilot_power_w * beta.row(m).sum() + cfg.noise_w;
    out[m] = distortion_additive({power, csi_capacity(m), fraction});
  }
  return out;
}

std::vector<Distortion> data_noise_for(const Eigen::VectorXd& data_capacity,
                                       const Eigen::MatrixXd& beta,
                                       const Eigen::VectorXd& eta, const SystemConfig& cfg) {
  std::vector<Distortion> out(beta.rows());
  for (Eigen::Index m = 0; m < beta.rows(); ++m) {
    const double power = cfg.data_power_w * beta.row(m).dot(eta) + cfg.noise_w;
    out[m] = distortion_additive({power, data_capacity(m), cfg.data_fraction()});
  }
  return out;
}

double data_noise_factor(double data_capacity, const SystemConfig& cfg) {
  const Distortion q = distortion_additive({1.0, data_capacity, cfg.data_fraction()});
  return q ? *q : kInf;
}

ShareResult ecf_waterfill(double csi_capacity, const Eigen::VectorXd& gamma, int coherence) {
  const double total = gamma.sum();
  if (!(total > 0)) throw std::invalid_argument("ecf_waterfill: gamma must be positive");
  ShareResult r;
  r.shares = gamma / total * csi_capacity;
  r.q.resize(gamma.size());
  for (Eigen::Index k = 0; k < gamma.size(); ++k)
    r.q(k) = distortion_subtractive(gamma(k), r.shares(k), coherence);
  return r;
}

ShareResult ecf_uniform(double csi_capacity, const Eigen::VectorXd& gamma, int coherence) {
  ShareResult r;
  r.shares = Eigen::VectorXd::Constant(gamma.size(), csi_capacity / gamma.size());
  r.q.resize(gamma.size());
  for (Eigen::Index k = 0; k < gamma.size(); ++k)
    r.q(k) = distortion_subtractive(gamma(k), r.shares(k), coherence);
  return r;
}

namespace {

ShareResult emcf_with_shares(Eigen::VectorXd shares, const Eigen::VectorXd& psi,
                             const SystemConfig& cfg) {
  ShareResult r;
  r.q.resize(psi.size());
  for (Eigen::Index k = 0; k < psi.size(); ++k) {
    const Distortion q = distortion_additive({psi(k), shares(k), cfg.data_fraction()});
    r.q(k) = q ? *q : kInf;
  }
  r.shares = std::move(shares);
  return r;
}

}  // namespace

ShareResult emcf_allocate(double capacity, const Eigen::VectorXd& psi,
                          const SystemConfig& cfg) {
  const double total = psi.sum();
  if (!(total > 0)) throw std::invalid_argument("emcf_allocate: Psi must be positive");
  return emcf_with_shares(psi / total * capacity, psi, cfg);
}

ShareResult emcf_uniform(double capacity, const Eigen::VectorXd& psi,
                         const SystemConfig& cfg) {
  return emcf_with_shares(Eigen::VectorXd::Constant(psi.size(), capacity / psi.size()),
                          psi, cfg);
}

FronthaulPlan plan_at_fraction(Strategy strategy, AllocationMode mode,
                               const Eigen::VectorXd& capacity, double fraction,
                               const Eigen::MatrixXd& beta, const Eigen::VectorXd& eta,
                               const SystemConfig& cfg) {
  if (capacity.size() != beta.rows())
    throw std::invalid_argument("plan_at_fraction: one capacity per AP expected");
  if ((capacity.array() < 0).any())
    throw std::invalid_argument("plan_at_fraction: negative capacity");
  const auto M = beta.rows();
  const auto K = beta.cols();
  FronthaulPlan plan;
  plan.strategy = strategy;
  plan.capacity = capacity;
  plan.ue_shares = Eigen::MatrixXd::Zero(M, K);

  if (strategy == Strategy::kEmcf) {
    const EstimationStats stats = ecf_stats(beta, cfg);
    const Eigen::MatrixXd psi = emcf_psi_diag(beta, stats, eta, cfg);
    plan.product_noise = DistortionGrid(static_cast<int>(M), static_cast<int>(K));
    for (Eigen::Index m = 0; m < M; ++m) {
      const Eigen::VectorXd row = psi.row(m).transpose();
      const ShareResult r = mode == AllocationMode::kProposed
                                ? emcf_allocate(capacity(m), row, cfg)
                                : emcf_uniform(capacity(m), row, cfg);
      plan.ue_shares.row(m) = r.shares.transpose();
      for (Eigen::Index k = 0; k < K; ++k)
        plan.product_noise(static_cast<int>(m), static_cast<int>(k)) = to_distortion(r.q(k));
    }
    return plan;
  }

  if (fraction < 0 || fraction > 1)
    throw std::invalid_argument("plan_at_fraction: fraction outside [0, 1]");
  plan.csi_capacity = capacity * fraction;
  plan.data_capacity = capacity - plan.csi_capacity;
  plan.data_noise = data_noise_for(plan.data_capacity, beta, eta, cfg);

  if (strategy == Strategy::kCfe) {
    plan.pilot_noise = pilot_noise_for(plan.csi_capacity, beta, cfg);
    // Pilot capacity is spent on the whole received block, not per UE.
    plan.ue_shares.colwise() = plan.csi_capacity / static_cast<double>(K);
    return plan;
  }

  const EstimationStats stats = ecf_stats(beta, cfg);
  plan.csi_noise.resize(M, K);
  for (Eigen::Index m = 0; m < M; ++m) {
    const Eigen::VectorXd row = stats.gamma.row(m).transpose();
    const ShareResult r = mode == AllocationMode::kProposed
                              ? ecf_waterfill(plan.csi_capacity(m), row, cfg.coherence)
                              : ecf_uniform(plan.csi_capacity(m), row, cfg.coherence);
    plan.ue_shares.row(m) = r.shares.transpose();
    plan.csi_noise.row(m) = r.q.transpose();
  }
  return plan;
}

FronthaulPlan equal_split(const Eigen::VectorXd& capacity, Strategy strategy,
                          const Eigen::MatrixXd& beta, const Eigen::VectorXd& eta,
                          const SystemConfig& cfg) {
  return plan_at_fraction(strategy, AllocationMode::kEqual, capacity, 0.5, beta, eta, cfg);
}

void refresh_for_power(FronthaulPlan& plan, AllocationMode mode, const Eigen::MatrixXd& beta,
                       const Eigen::VectorXd& eta, const SystemConfig& cfg) {
  if (plan.strategy == Strategy::kEmcf) {
    plan = plan_at_fraction(Strategy::kEmcf, mode, plan.capacity, 0.0, beta, eta, cfg);
    return;
  }
  plan.data_noise = data_noise_for(plan.data_capacity, beta, eta, cfg);
}

double plan_sse(const FronthaulPlan& plan, const Eigen::MatrixXd& beta,
                const Eigen::VectorXd& eta, const SystemConfig& cfg) {
  double sse = 0.0;
  for (const auto& row : evaluate(beta, plan, eta, cfg))
    if (!row.clamped) sse += row.rate;
  return sse;
}

SplitResult split_search(Strategy strategy, AllocationMode mode,
                         const Eigen::VectorXd& capacity, const Eigen::MatrixXd& beta,
                         const Eigen::VectorXd& eta, const SystemConfig& cfg) {
  if (strategy == Strategy::kEmcf)
    throw std::invalid_argument("split_search: EMCF has no CSI/data split");
  const auto sse_at = [&](double f) {
    return plan_sse(plan_at_fraction(strategy, mode, capacity, f, beta, eta, cfg), beta, eta,
                    cfg);
  };

  SplitResult out;
  int best = 0;
  for (int i = 0; i < kSplitGridPoints; ++i) {
    const double f = static_cast<double>(i) / (kSplitGridPoints - 1);
    out.grid.push_back(f);
    out.grid_sse.push_back(sse_at(f));
    if (out.grid_sse[i] > out.grid_sse[best]) best = i;
  }
  const double left = best > 0 ? out.grid_sse[best - 1] : -kInf;
  const double right = best + 1 < kSplitGridPoints ? out.grid_sse[best + 1] : -kInf;
  out.unimodal = left <= out.grid_sse[best] && right <= out.grid_sse[best];
  for (int i = 1; i + 1 < kSplitGridPoints; ++i) {
    const bool peak = out.grid_sse[i] > out.grid_sse[i - 1] &&
                      out.grid_sse[i] > out.grid_sse[i + 1];
    if (peak && i != best) out.unimodal = false;
  }

  // Golden section inside the bracket around the best grid point.
  const double step = 1.0 / (kSplitGridPoints - 1);
  double lo = std::max(0.0, out.grid[best] - step);
  double hi = std::min(1.0, out.grid[best] + step);
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - ratio * (hi - lo);
  double x2 = lo + ratio * (hi - lo);
  double f1 = sse_at(x1);
  double f2 = sse_at(x2);
  while (hi - lo > kSplitTolerance) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + ratio * (hi - lo);
      f2 = sse_at(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - ratio * (hi - lo);
      f1 = sse_at(x1);
    }
  }
  double fraction = f1 > f2 ? x1 : x2;
  double sse = std::max(f1, f2);
  // The grid point can beat the refinement when the optimum sits on an edge.
  if (out.grid_sse[best] >= sse) {
    fraction = out.grid[best];
    sse = out.grid_sse[best];
  }
  out.fraction = fraction;
  out.sse = sse;
  out.plan = plan_at_fraction(strategy, mode, capacity, fraction, beta, eta, cfg);
  return out;
}

FronthaulPlan allocate(Strategy strategy, AllocationMode mode,
                       const Eigen::VectorXd& capacity, const Eigen::MatrixXd& beta,
                       const Eigen::VectorXd& eta, const SystemConfig& cfg) {
  if (mode == AllocationMode::kEqual) return equal_split(capacity, strategy, beta, eta, cfg);
  if (strategy == Strategy::kEmcf)
    return plan_at_fraction(strategy, mode, capacity, 0.0, beta, eta, cfg);
  return split_search(strategy, mode, capacity, beta, eta, cfg).plan;
}

double gamma_cfe_high_snr(const Eigen::VectorXd& beta_row, int k, double csi_capacity,
                          const SystemConfig& cfg) {
  const double xx = cfg.xi_r * cfg.xi_t;
  const double tau = cfg.pilot_len;
  const double total = beta_row.sum();
  const double a = cfg.coherence * csi_capacity / cfg.num_ues;
  const double inv = 1.0 / std::expm1(a * std::log(2.0));
  const double b = beta_row(k);
  return xx * tau * b * b / (xx * tau * b + ((1.0 - xx) + inv) * total);
}

namespace {

struct Thetas {
  double theta1;
  double theta2;
  double gamma_inf;
};

Thetas thetas(const Eigen::VectorXd& beta_row, int k, const SystemConfig& cfg) {
  const double xx = cfg.xi_r * cfg.xi_t;
  const double tau = cfg.pilot_len;
  const double total = beta_row.sum();
  double sum_inf = 0.0;
  double own = 0.0;
  for (Eigen::Index j = 0; j < beta_row.size(); ++j) {
    const double t1 = xx * tau * beta_row(j) + (1.0 - xx) * total;
    const double g = xx * tau * beta_row(j) * beta_row(j) / t1;
    sum_inf += g;
    if (j == k) own = g;
  }
  const double theta1 = xx * tau * beta_row(k) + (1.0 - xx) * total;
  return {theta1, own / sum_inf, own};
}

}  // namespace

double gamma_ecf_high_snr(const Eigen::VectorXd& beta_row, int k, double csi_capacity,
                          const SystemConfig& cfg) {
  const Thetas t = thetas(beta_row, k, cfg);
  return t.gamma_inf * (1.0 - std::exp2(-t.theta2 * cfg.coherence * csi_capacity));
}

std::vector<ThresholdReport> prop1_threshold(const Eigen::VectorXd& beta_row,
                                             const SystemConfig& cfg) {
  const auto K = static_cast<int>(beta_row.size());
  const double T = cfg.coherence;
  const double total = beta_row.sum();
  std::vector<ThresholdReport> out;
  for (int k = 0; k < K; ++k) {
    const Thetas t = thetas(beta_row, k, cfg);
    ThresholdReport r;
    r.ue = k;
    r.theta1 = t.theta1;
    r.theta2 = t.theta2;
    r.gamma_inf = t.gamma_inf;
    r.side_conditions = K * t.theta2 < 1.0;
    const double target = std::log(total / t.theta1);
    r.crossover_exists = r.side_conditions && total / t.theta1 > 1.0 / (K * t.theta2);
    r.closed_form = kNaN;
    r.crossover = kNaN;
    if (!r.side_conditions) {
      out.push_back(r);
      continue;
    }
    r.closed_form = std::log2(total / t.theta1) / (T / K - t.theta2 * T);
    if (r.crossover_exists) {
      // (2^a - 1) / (2^b - 1) is increasing in C when a > b; bisect on its log.
      const auto gap = [&](double c) {
        return log_pow2_minus_one(T * c / K) - log_pow2_minus_one(t.theta2 * T * c) - target;
      };
      double lo = 0.0;
      double hi = 1e-3;
      while (gap(hi) < 0 && hi < 1e6) {
        lo = hi;
        hi *= 2.0;
      }
      for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (gap(mid) < 0 ? lo : hi) = mid;
      }
      r.crossover = 0.5 * (lo + hi);
    }
    out.push_back(r);
  }
  return out;
}

LimitReport prop2_limits(const Eigen::MatrixXd& beta, const Eigen::VectorXd& csi_capacity,
                         const Eigen::VectorXd& data_capacity, const SystemConfig& cfg,
                         FormulaVariant variant) {
  if (beta.cols() != 1 || cfg.num_ues != 1)
    throw std::invalid_argument("prop2_limits: single-user scenarios only");
  const auto M = beta.rows();
  const double xr = cfg.xi_r;
  const double xt = cfg.xi_t;
  const double T = cfg.coherence;
  LimitReport r;
  r.upsilon = Eigen::VectorXd::Zero(M);
  for (Eigen::Index m = 0; m < M; ++m) {
    if (data_capacity(m) <= 0) continue;  // dark data link: AP unused
    const double ups = xr * xt * (1.0 - std::exp2(-T * csi_capacity(m))) * beta(m, 0);
    const double w = 1.0 / std::expm1(T / (T - 1.0) * data_capacity(m) * std::log(2.0));
    r.upsilon(m) = ups;
    r.x1 += ups * beta(m, 0);
    r.x2 += ups * ups;
    r.x3 += ups * beta(m, 0) * w;
  }
  r.x0 = r.upsilon.sum() * r.upsilon.sum();
  if (variant == FormulaVariant::kModel) {
    r.a = xt > 0 ? xr * (1.0 - xt) * (1.0 + 1.0 / xt) : 0.0;
    r.b = xr * xt > 0 ? (1.0 - xr) * (1.0 + xr) / (xr * xt) : 0.0;
    r.a_ecf = xr * (1.0 - xt);
  } else {
    r.a = xr > 0 ? xr * (1.0 - xr + (1.0 - xr) / xr) : 0.0;
    r.b = xr * xt > 0 ? (1.0 - xr) * (1.0 + 1.0 / (xr * xt) + (1.0 - xr) / xt) : 0.0;
    r.a_ecf = xr * (1.0 - xr);
  }
  r.b_ecf = 1.0 - xr;
  const double num = xr * xt * r.x0;
  const double den_cfe = r.x1 + r.a * r.x0 + r.b * r.x2 + r.x3;
  const double den_ecf = r.x1 + r.a_ecf * r.x0 + r.b_ecf * r.x2 + r.x3;
  r.sinr_cfe = den_cfe > 0 ? num / den_cfe : 0.0;
  r.sinr_ecf = den_ecf > 0 ? num / den_ecf : 0.0;
  return r;
}

}  // namespace cfmimo
