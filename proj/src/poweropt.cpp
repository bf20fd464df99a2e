#include "cfmimo/poweropt.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>

#include "cfmimo/allocation.hpp"
#include "cfmimo/rates.hpp"

namespace cfmimo {

namespace {

// Denominators and desired-signal powers of every UE at one power vector, with
// Q_d,m recomputed for that vector.
void sample_rows(const Eigen::MatrixXd& beta, const FronthaulPlan& plan,
                 const Eigen::VectorXd& eta, const SystemConfig& cfg, Eigen::VectorXd& den,
                 Eigen::VectorXd& ds) {
  FronthaulPlan p = plan;
  p.data_noise = data_noise_for(plan.data_capacity, beta, eta, cfg);
  const auto rows = evaluate(beta, p, eta, cfg);
  den.resize(static_cast<Eigen::Index>(rows.size()));
  ds.resize(den.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    den(static_cast<Eigen::Index>(k)) = rows[k].interference();
    ds(static_cast<Eigen::Index>(k)) = rows[k].ds;
  }
}

GpProblem extract(const Eigen::MatrixXd& beta, const FronthaulPlan& plan,
                  const SystemConfig& cfg) {
  const auto K = beta.cols();
  GpProblem p;
  p.a.resize(K);
  p.b.resize(K, K);
  Eigen::VectorXd ds;
  sample_rows(beta, plan, Eigen::VectorXd::Zero(K), cfg, p.l, ds);
  for (Eigen::Index j = 0; j < K; ++j) {
    Eigen::VectorXd den;
    sample_rows(beta, plan, Eigen::VectorXd::Unit(K, j), cfg, den, ds);
    p.b.col(j) = den - p.l;
    p.a(j) = ds(j);
  }
  // Cancellation leaves rounding-level negatives where a coefficient is zero.
  for (Eigen::Index k = 0; k < K; ++k) {
    const double scale = p.b.row(k).cwiseAbs().maxCoeff() + p.l(k);
    for (Eigen::Index j = 0; j < K; ++j)
      if (p.b(k, j) < 0 && -p.b(k, j) <= 1e-12 * scale) p.b(k, j) = 0.0;
  }
  return p;
}

void check(const GpProblem& p, const std::string& who) {
  if ((p.a.array() <= 0).any()) throw GpInfeasible(who + ": A_k must be positive");
  if ((p.b.array() < 0).any()) throw GpInfeasible(who + ": negative B coefficient");
  if ((p.l.array() <= 0).any()) throw GpInfeasible(who + ": L_k must be positive");
}

struct Model {
  const GpProblem& p;
  Eigen::VectorXd weight;

  // grad and Hessian of F(x) = sum_k w_k [log A_k + x_k - log D_k(x)] with
  // D_k = sum_j B_kj e^x_j + L_k. F is concave.
  void derivatives(const Eigen::VectorXd& x, Eigen::VectorXd& grad,
                   Eigen::MatrixXd& hess) const {
    const auto K = x.size();
    const Eigen::VectorXd e = x.array().exp();
    const Eigen::VectorXd d = p.b * e + p.l;
    grad = weight;
    hess = Eigen::MatrixXd::Zero(K, K);
    for (Eigen::Index k = 0; k < K; ++k) {
      const Eigen::VectorXd w = (p.b.row(k).transpose().array() * e.array()) / d(k);
      grad -= weight(k) * w;
      hess.diagonal() -= weight(k) * w;
      hess += weight(k) * w * w.transpose();
    }
  }
};

}  // namespace

GpProblem build_gp_cfe(const Eigen::MatrixXd& beta, const FronthaulPlan& plan,
                       const SystemConfig& cfg) {
  if (plan.strategy != Strategy::kCfe)
    throw std::invalid_argument("build_gp_cfe: plan is not a CFE plan");
  GpProblem p = extract(beta, plan, cfg);
  check(p, "build_gp_cfe");
  return p;
}

GpProblem build_gp_ecf(const Eigen::MatrixXd& beta, const FronthaulPlan& plan,
                       const SystemConfig& cfg) {
  if (!is_ecf(plan.strategy))
    throw std::invalid_argument("build_gp_ecf: plan is not an ECF plan");
  GpProblem p = extract(beta, plan, cfg);
  check(p, "build_gp_ecf(" + to_string(plan.strategy) + ")");
  return p;
}

GpProblem build_gp(const Eigen::MatrixXd& beta, const FronthaulPlan& plan,
                   const SystemConfig& cfg) {
  if (plan.strategy == Strategy::kCfe) return build_gp_cfe(beta, plan, cfg);
  if (is_ecf(plan.strategy)) return build_gp_ecf(beta, plan, cfg);
  throw std::invalid_argument("build_gp: no power-control problem for EMCF");
}

Eigen::VectorXd gp_sinr(const GpProblem& p, const Eigen::VectorXd& eta) {
  const Eigen::VectorXd d = p.b * eta + p.l;
  return (p.a.array() * eta.array() / d.array()).matrix();
}

double gp_objective(const GpProblem& p, const Eigen::VectorXd& eta) {
  return gp_sinr(p, eta).array().log().sum();
}

double gp_sum_se(const GpProblem& p, const Eigen::VectorXd& eta, const SystemConfig& cfg) {
  double sse = 0.0;
  for (double s : gp_sinr(p, eta)) sse += rate_from_sinr(s, cfg);
  return sse;
}

GpSolution solve_gp(const GpProblem& p, const SystemConfig& cfg, double tol) {
  return solve_gp(p, Eigen::VectorXd::Ones(p.size()), cfg, tol);
}

GpSolution solve_gp(const GpProblem& p, const Eigen::VectorXd& weights,
                    const SystemConfig& cfg, double tol) {
  check(p, "solve_gp");
  const auto K = p.a.size();
  if (weights.size() != K || (weights.array() <= 0).any())
    throw std::invalid_argument("solve_gp: one positive weight per UE expected");
  const double lo = std::log(kMinPower);
  const double hi = 0.0;
  const Model model{p, weights};
  constexpr int kMaxCentering = 100;

  // Gradient of the barrier objective s * (-F) - sum log(hi - x) - sum log(x - lo).
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
  const auto barrier_grad = [&](const Eigen::VectorXd& x, double s) {
    model.derivatives(x, grad, hess);
    Eigen::VectorXd g = -s * grad;
    for (Eigen::Index k = 0; k < K; ++k) g(k) += 1.0 / (hi - x(k)) - 1.0 / (x(k) - lo);
    return g;
  };

  GpSolution sol;
  Eigen::VectorXd x = Eigen::VectorXd::Constant(K, -1e-2);
  for (double s = 1.0;; s *= 20.0) {
    for (int it = 0; it < kMaxCentering; ++it) {
      const Eigen::VectorXd g = barrier_grad(x, s);
      Eigen::MatrixXd h = -s * hess;
      for (Eigen::Index k = 0; k < K; ++k) {
        const double u = hi - x(k);
        const double v = x(k) - lo;
        h(k, k) += 1.0 / (u * u) + 1.0 / (v * v);
      }
      const Eigen::VectorXd step = -h.ldlt().solve(g);
      const double decrement = -g.dot(step);
      ++sol.iterations;
      if (decrement / 2.0 <= 1e-12) break;
      // The barrier value is ~s |F| and cannot resolve late decreases, so the
      // line search uses the directional derivative, which stays well scaled.
      double alpha = 1.0;
      for (;;) {
        const Eigen::VectorXd next = x + alpha * step;
        const bool inside = (next.array() < hi).all() && (next.array() > lo).all();
        if (inside && barrier_grad(next, s).dot(step) <= 0.1 * decrement) break;
        alpha *= 0.5;
        if (alpha < 1e-12) break;
      }
      if (alpha < 1e-12) break;
      const Eigen::VectorXd next = x + alpha * step;
      if (next == x) break;
      x = next;
    }
    if (2.0 * static_cast<double>(K) / s < tol) break;
  }

  sol.eta = x.array().exp();
  // Snap components sitting on a bound the gradient pushes against.
  model.derivatives(x, grad, hess);
  for (Eigen::Index k = 0; k < K; ++k) {
    if (sol.eta(k) > 1.0 - 1e-6 && grad(k) >= 0) sol.eta(k) = 1.0;
    if (sol.eta(k) < kMinPower * (1.0 + 1e-6) && grad(k) <= 0) sol.eta(k) = kMinPower;
  }
  x = sol.eta.array().log();
  model.derivatives(x, grad, hess);
  sol.kkt_residual = 0.0;
  for (Eigen::Index k = 0; k < K; ++k) {
    double r = std::abs(grad(k));
    if (sol.eta(k) >= 1.0) r = std::max(0.0, -grad(k));
    else if (sol.eta(k) <= kMinPower) r = std::max(0.0, grad(k));
    sol.kkt_residual = std::max(sol.kkt_residual, r);
  }
  sol.t = gp_sinr(p, sol.eta);
  sol.objective = (weights.array() * sol.t.array().log()).sum();
  if (!(sol.kkt_residual <= kKktTolerance))
    throw GpNotConverged("solve_gp: KKT residual " + std::to_string(sol.kkt_residual), sol);

  // Switch off UEs the solver drove to the floor, unless that loses sum SE.
  Eigen::VectorXd off = sol.eta;
  bool any = false;
  for (Eigen::Index k = 0; k < K; ++k)
    if (off(k) < kRoundToZero) {
      off(k) = 0.0;
      any = true;
    }
  if (any && gp_sum_se(p, off, cfg) >= gp_sum_se(p, sol.eta, cfg)) {
    sol.eta = off;
    sol.t = gp_sinr(p, off);
    sol.rounded = true;
  }
  return sol;
}

GpSolution optimize_sum_se(const GpProblem& p, const SystemConfig& cfg, int max_rounds) {
  Eigen::VectorXd eta = Eigen::VectorXd::Ones(p.size());
  double sse = gp_sum_se(p, eta, cfg);
  GpSolution best;
  best.eta = eta;
  best.t = gp_sinr(p, eta);
  best.objective = best.t.array().log().sum();
  for (int round = 0; round < max_rounds; ++round) {
    // log(1 + z) >= a log z + const with a = z0 / (1 + z0), tight at z0.
    const Eigen::VectorXd z = gp_sinr(p, eta);
    const Eigen::VectorXd a = (z.array() / (1.0 + z.array())).max(1e-12);
    GpSolution s = solve_gp(p, a, cfg);
    s.iterations += best.iterations;
    const double next = gp_sum_se(p, s.eta, cfg);
    if (next < sse) break;  // rounding-level regression: keep the previous iterate
    const bool done = next - sse <= 1e-10 * std::max(1.0, sse);
    eta = s.eta;
    sse = next;
    best = s;
    best.objective = s.t.array().log().sum();
    if (done) break;
  }
  return best;
}

void write_gp_solution(std::ostream& os, const GpSolution& s) {
  os << std::setprecision(10) << "ue,eta,sinr\n";
  for (Eigen::Index k = 0; k < s.eta.size(); ++k)
    os << k << ',' << s.eta(k) << ',' << s.t(k) << '\n';
  os << "# objective " << s.objective << " kkt_residual " << s.kkt_residual
     << " iterations " << s.iterations << (s.rounded ? " rounded" : "") << '\n';
}

}  // namespace cfmimo
