#include "cfmimo/oracle.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

#include "cfmimo/estimation.hpp"
#include "cfmimo/rates.hpp"
#include "cfmimo/signal.hpp"

namespace cfmimo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Per-UE accumulator slots of the MRC oracle.
enum Slot : int {
  kARe, kAIm, kASq, kIui, kThi, kRhi, kRn, kQn, kRsRe, kRsIm, kRSq, kGain, kSlots
};

McEstimate compare(const std::string& strategy, const std::string& term, int ue,
                   std::pair<double, double> emp, double closed, long draws,
                   const OracleOptions& opts) {
  McEstimate e;
  e.strategy = strategy;
  e.term = term;
  e.ue = ue;
  e.empirical = emp.first;
  e.se = emp.second;
  e.closed_form = closed;
  e.draws = draws;
  e.deviation = closed != 0.0 ? (e.empirical - closed) / closed : kNaN;
  e.tolerance = std::max(opts.rel_tol * std::abs(closed), opts.se_mult * e.se);
  e.pass = std::abs(e.empirical - closed) <= e.tolerance;
  return e;
}

double faulted(const OracleOptions& opts, const std::string& term, double value) {
  return opts.fault.term == term ? value * opts.fault.factor : value;
}

long per_batch(const OracleOptions& opts) {
  if (opts.draws < 1 || opts.batches < 2)
    throw std::invalid_argument("oracle: need draws >= 1 and at least two batches");
  return (opts.draws + opts.batches - 1) / opts.batches;
}

// Shared CFE/ECF simulation. `est` turns (channel, pilot, streams) into the
// CU-side estimates (M x K); data path and MRC are common.
template <class Estimator>
BatchMoments simulate_mrc(const Eigen::MatrixXd& beta, const FronthaulPlan& plan,
                          const Eigen::VectorXd& eta, const SystemConfig& cfg,
                          const OracleOptions& opts, Estimator&& est) {
  const auto M = beta.rows();
  const auto K = beta.cols();
  const PilotBook pilots = make_pilots(cfg.pilot_len, cfg.num_ues);
  const auto active = active_aps(plan, static_cast<int>(M));
  const double rho_u = cfg.data_power_w;
  const double xr = cfg.xi_r;
  const double xt = cfg.xi_t;
  const long n = per_batch(opts);

  BatchMoments acc(opts.batches, static_cast<int>(K) * kSlots);
  for (int b = 0; b < opts.batches; ++b) {
    SignalStreams streams(opts.seed, static_cast<std::uint64_t>(b));
    double* sums = acc.batch(b);
    for (long d = 0; d < n; ++d) {
      const ChannelRealization ch = draw_channels(beta, streams.channel);
      const ReceivedPilot rp = receive_pilot(ch, pilots, cfg, streams);
      Eigen::MatrixXcd ghat = est(ch, rp, pilots, streams);
      const ReceivedData rd = receive_data(ch, eta, cfg, streams);

      Eigen::VectorXcd yq(M);
      Eigen::VectorXcd qd(M);
      for (Eigen::Index m = 0; m < M; ++m) {
        if (!active[m]) {
          ghat.row(m).setZero();
          yq(m) = qd(m) = 0.0;
          continue;
        }
        const double q = plan.data_noise.empty() ? 0.0 : *plan.data_noise[m];
        qd(m) = streams.quant.cn(q);
        yq(m) = rd.y(m) + qd(m);
      }

      // cross(k, j) = sum_m ghat*_mk g_mj
      const Eigen::MatrixXcd cross = ghat.adjoint() * ch.g;
      const Eigen::VectorXcd rhi = ghat.adjoint() * rd.w_r;
      const Eigen::VectorXcd rn = ghat.adjoint() * rd.n;
      const Eigen::VectorXcd qn = ghat.adjoint() * qd;
      const Eigen::VectorXcd r = ghat.adjoint() * yq;
      for (Eigen::Index k = 0; k < K; ++k) {
        double* s = sums + k * kSlots;
        const cd a = cross(k, k);
        s[kARe] += a.real();
        s[kAIm] += a.imag();
        s[kASq] += std::norm(a);
        for (Eigen::Index j = 0; j < K; ++j) {
          if (j != k)
            s[kIui] += std::norm(std::sqrt(rho_u * eta(j) * xr * xt) * cross(k, j) * rd.s(j));
          s[kThi] += std::norm(std::sqrt(xr) * cross(k, j) * rd.w_t(j));
        }
        s[kRhi] += std::norm(rhi(k));
        s[kRn] += std::norm(rn(k));
        s[kQn] += std::norm(qn(k));
        const cd rs = r(k) * std::conj(rd.s(k));
        s[kRsRe] += rs.real();
        s[kRsIm] += rs.imag();
        s[kRSq] += std::norm(r(k));
        s[kGain] += ghat.col(k).squaredNorm();
      }
    }
    acc.count(b, n);
  }
  return acc;
}

McReport mrc_report(const std::string& label, const BatchMoments& acc,
                    const std::vector<SinrBreakdown>& closed, const Eigen::MatrixXd& gain,
                    const Eigen::VectorXd& eta, const SystemConfig& cfg,
                    const OracleOptions& opts) {
  const auto K = static_cast<int>(closed.size());
  const double coh = cfg.data_power_w * cfg.xi_r * cfg.xi_t;
  McReport rep;
  rep.sinr.resize(K);
  rep.sinr_se.resize(K);
  const long draws = acc.total();
  for (int k = 0; k < K; ++k) {
    const int o = k * kSlots;
    const double pc = coh * eta(k);
    const auto mean = [o](int slot) {
      return [o, slot](const std::vector<double>& m) { return m[o + slot]; };
    };
    const auto ds = [o, pc](const std::vector<double>& m) {
      return pc * (m[o + kARe] * m[o + kARe] + m[o + kAIm] * m[o + kAIm]);
    };
    const auto bu = [o, pc](const std::vector<double>& m) {
      return pc * (m[o + kASq] - m[o + kARe] * m[o + kARe] - m[o + kAIm] * m[o + kAIm]);
    };
    const auto total = [o](const std::vector<double>& m) {
      return m[o + kRSq] - m[o + kRsRe] * m[o + kRsRe] - m[o + kRsIm] * m[o + kRsIm];
    };
    const auto sinr = [o, total](const std::vector<double>& m) {
      return (m[o + kRsRe] * m[o + kRsRe] + m[o + kRsIm] * m[o + kRsIm]) / total(m);
    };
    const SinrBreakdown& c = closed[k];
    const auto add = [&](const std::string& term, const BatchMoments::Statistic& f,
                         double value) {
      rep.rows.push_back(
          compare(label, term, k, acc.estimate(f), faulted(opts, term, value), draws, opts));
    };
    add("ds", ds, c.ds);
    add("bu", bu, c.bu);
    add("iui", mean(kIui), c.iui.sum());
    add("thi", mean(kThi), c.thi.sum());
    add("rhi", mean(kRhi), c.rhi);
    add("rn", mean(kRn), c.rn);
    add("qn", mean(kQn), c.qn);
    add("total", total, c.interference());
    add("sinr", sinr, c.sinr);
    add("gamma", mean(kGain), gain.col(k).sum());
    const auto s = acc.estimate(sinr);
    rep.sinr(k) = s.first;
    rep.sinr_se(k) = s.second;
  }
  return rep;
}

Eigen::MatrixXd data_masked(const Eigen::MatrixXd& x, const FronthaulPlan& plan) {
  const auto active = active_aps(plan, static_cast<int>(x.rows()));
  Eigen::MatrixXd out = x;
  for (Eigen::Index m = 0; m < x.rows(); ++m)
    if (!active[m]) out.row(m).setZero();
  return out;
}

// g~ = lambda * phi_k^H (y_p + q_p) per AP.
Eigen::MatrixXcd lmmse(const ReceivedPilot& rp, const PilotBook& pilots,
                       const EstimationStats& stats, const std::vector<Distortion>& q_pilot,
                       Rng& quant) {
  const auto M = stats.lambda.rows();
  const auto K = stats.lambda.cols();
  const auto tau = pilots.phi.rows();
  Eigen::MatrixXcd out(M, K);
  Eigen::VectorXcd y(tau);
  for (Eigen::Index m = 0; m < M; ++m) {
    if (!q_pilot.empty() && is_dark(q_pilot[m])) {
      out.row(m).setZero();
      continue;
    }
    const double q = q_pilot.empty() ? 0.0 : *q_pilot[m];
    for (Eigen::Index i = 0; i < tau; ++i) y(i) = rp.y_p(i, m) + quant.cn(q);
    for (Eigen::Index k = 0; k < K; ++k)
      out(m, k) = stats.lambda(m, k) * pilots.phi.col(k).dot(y);
  }
  return out;
}

}  // namespace

const std::vector<std::string>& mrc_term_names() {
  static const std::vector<std::string> names = {"ds",  "bu", "iui",   "thi",  "rhi",
                                                 "rn",  "qn", "total", "sinr", "gamma"};
  return names;
}

bool McReport::all_pass() const {
  for (const auto& r : rows)
    if (!r.pass) return false;
  return true;
}

const McEstimate& McReport::find(const std::string& term, int ue) const {
  for (const auto& r : rows)
    if (r.term == term && r.ue == ue) return r;
  throw std::out_of_range("McReport: no row " + term + " for UE " + std::to_string(ue));
}

BatchMoments::BatchMoments(int batches, int width)
    : width_(width),
      sums_(static_cast<std::size_t>(batches) * width, 0.0),
      counts_(batches, 0) {}

long BatchMoments::total() const {
  long n = 0;
  for (long c : counts_) n += c;
  return n;
}

std::vector<double> BatchMoments::means_excluding(int skip) const {
  std::vector<double> out(width_, 0.0);
  long n = 0;
  for (int b = 0; b < batches(); ++b) {
    if (b == skip) continue;
    n += counts_[b];
    const double* s = sums_.data() + static_cast<std::size_t>(b) * width_;
    for (int i = 0; i < width_; ++i) out[i] += s[i];
  }
  for (double& v : out) v /= static_cast<double>(n);
  return out;
}

std::pair<double, double> BatchMoments::estimate(const Statistic& f) const {
  const double full = f(means_excluding(-1));
  const int B = batches();
  std::vector<double> loo(B);
  double avg = 0.0;
  for (int b = 0; b < B; ++b) {
    loo[b] = f(means_excluding(b));
    avg += loo[b] / B;
  }
  double ss = 0.0;
  for (double v : loo) ss += (v - avg) * (v - avg);
  return {full, std::sqrt(ss * (B - 1) / B)};
}

McReport mc_terms_cfe(const Eigen::MatrixXd& beta, const FronthaulPlan& plan,
                      const Eigen::VectorXd& eta, const SystemConfig& cfg,
                      const OracleOptions& opts) {
  if (plan.strategy != Strategy::kCfe)
    throw std::invalid_argument("mc_terms_cfe: plan is not a CFE plan");
  const EstimationStats stats = cfe_stats(beta, plan.pilot_noise, cfg);
  const auto est = [&](const ChannelRealization&, const ReceivedPilot& rp,
                       const PilotBook& pilots, SignalStreams& streams) {
    return lmmse(rp, pilots, stats, plan.pilot_noise, streams.quant);
  };
  const BatchMoments acc = simulate_mrc(beta, plan, eta, cfg, opts, est);
  const auto closed = sinr_cfe(beta, stats, plan, eta, cfg);
  return mrc_report("cfe", acc, closed, data_masked(stats.gamma, plan), eta, cfg, opts);
}

McReport mc_terms_ecf(const Eigen::MatrixXd& beta, const FronthaulPlan& plan,
                      const Eigen::VectorXd& eta, const SystemConfig& cfg,
                      const OracleOptions& opts, double bound_se) {
  if (!is_ecf(plan.strategy))
    throw std::invalid_argument("mc_terms_ecf: plan is not an ECF plan");
  const EstimationStats stats = apply_csi_quantization(ecf_stats(beta, cfg), plan.csi_noise);
  const auto M = beta.rows();
  const auto K = beta.cols();
  const auto est = [&](const ChannelRealization&, const ReceivedPilot& rp,
                       const PilotBook& pilots, SignalStreams& streams) {
    Eigen::MatrixXcd g = lmmse(rp, pilots, stats, {}, streams.quant);
    // Backward test channel g~ = g^ + q with q independent of g^.
    for (Eigen::Index m = 0; m < M; ++m) {
      for (Eigen::Index k = 0; k < K; ++k) {
        const double gam = stats.gamma(m, k);
        const double a = gam > 0 ? stats.gamma_prime(m, k) / gam : 0.0;
        g(m, k) = a * g(m, k) + streams.quant.cn(a * stats.q_p(m, k));
      }
    }
    return g;
  };
  const BatchMoments acc = simulate_mrc(beta, plan, eta, cfg, opts, est);
  const auto exact = sinr_ecf_exact(beta, stats, plan, eta, cfg);
  McReport rep = mrc_report(to_string(plan.strategy), acc, exact,
                            data_masked(stats.gamma_prime, plan), eta, cfg, opts);

  const auto lb = sinr_ecf_lb(beta, stats, plan, eta, cfg);
  const auto ub = sinr_ecf_ub(beta, stats, plan, eta, cfg);
  for (int k = 0; k < static_cast<int>(K); ++k) {
    const McEstimate& s = rep.find("sinr", k);
    McEstimate lo = s;
    lo.term = "sinr_lb";
    // A clamped lower bound carries no information; 0 is the trivial bound.
    lo.closed_form = lb[k].clamped ? 0.0 : faulted(opts, "sinr_lb", lb[k].sinr);
    lo.deviation = lo.closed_form != 0 ? (s.empirical - lo.closed_form) / lo.closed_form : kNaN;
    lo.tolerance = bound_se * s.se;
    lo.pass = lo.closed_form <= s.empirical + lo.tolerance;
    McEstimate hi = s;
    hi.term = "sinr_ub";
    hi.closed_form = faulted(opts, "sinr_ub", ub[k].sinr);
    hi.deviation = (s.empirical - hi.closed_form) / hi.closed_form;
    hi.tolerance = bound_se * s.se;
    hi.pass = s.empirical <= hi.closed_form + hi.tolerance;
    rep.rows.push_back(lo);
    rep.rows.push_back(hi);
  }
  return rep;
}

bool EmcfReport::all_pass() const {
  for (const auto& r : rows)
    if (!r.pass) return false;
  return true;
}

EmcfReport mc_emcf(const Eigen::MatrixXd& beta, const FronthaulPlan& plan,
                   const Eigen::VectorXd& eta, const SystemConfig& cfg,
                   const OracleOptions& opts) {
  if (plan.strategy != Strategy::kEmcf)
    throw std::invalid_argument("mc_emcf: plan is not an EMCF plan");
  const auto M = beta.rows();
  const auto K = beta.cols();
  const EstimationStats stats = ecf_stats(beta, cfg);
  const PilotBook pilots = make_pilots(cfg.pilot_len, cfg.num_ues);
  const long n = per_batch(opts);

  EmcfReport rep;
  rep.ues.resize(K);
  std::vector<EmcfCombiner> combiners;
  std::vector<int> offset(K + 1, 0);
  for (Eigen::Index k = 0; k < K; ++k) {
    combiners.push_back(emcf_combiner(beta, stats, plan, eta, cfg, static_cast<int>(k)));
    rep.ues[k].aps = combiners.back().aps;
    const int na = static_cast<int>(rep.ues[k].aps.size());
    // b (re, im), E{y y^H} (re, im), psi for every AP.
    offset[k + 1] = offset[k] + 2 * na + 2 * na * na + static_cast<int>(M);
  }

  BatchMoments acc(opts.batches, offset[K]);
  for (int b = 0; b < opts.batches; ++b) {
    SignalStreams streams(opts.seed, static_cast<std::uint64_t>(b));
    std::vector<Eigen::VectorXcd> sb(K);
    std::vector<Eigen::MatrixXcd> syy(K);
    Eigen::MatrixXd spsi = Eigen::MatrixXd::Zero(M, K);
    for (Eigen::Index k = 0; k < K; ++k) {
      const auto na = static_cast<Eigen::Index>(rep.ues[k].aps.size());
      sb[k] = Eigen::VectorXcd::Zero(na);
      syy[k] = Eigen::MatrixXcd::Zero(na, na);
    }
    for (long d = 0; d < n; ++d) {
      const ChannelRealization ch = draw_channels(beta, streams.channel);
      const ReceivedPilot rp = receive_pilot(ch, pilots, cfg, streams);
      const Eigen::MatrixXcd g = lmmse(rp, pilots, stats, {}, streams.quant);
      const ReceivedData rd = receive_data(ch, eta, cfg, streams);
      for (Eigen::Index k = 0; k < K; ++k) {
        const auto& aps = rep.ues[k].aps;
        Eigen::VectorXcd y(static_cast<Eigen::Index>(aps.size()));
        for (Eigen::Index m = 0; m < M; ++m) spsi(m, k) += std::norm(std::conj(g(m, k)) * rd.y(m));
        for (std::size_t i = 0; i < aps.size(); ++i) {
          const int m = aps[i];
          y(static_cast<Eigen::Index>(i)) =
              std::conj(g(m, k)) * rd.y(m) + streams.quant.cn(*plan.product_noise(m, k));
        }
        sb[k] += y * std::conj(rd.s(k));
        syy[k].noalias() += y * y.adjoint();
      }
    }
    double* sums = acc.batch(b);
    for (Eigen::Index k = 0; k < K; ++k) {
      double* s = sums + offset[k];
      const auto na = sb[k].size();
      for (Eigen::Index i = 0; i < na; ++i) {
        s[2 * i] = sb[k](i).real();
        s[2 * i + 1] = sb[k](i).imag();
      }
      s += 2 * na;
      for (Eigen::Index i = 0; i < na; ++i)
        for (Eigen::Index j = 0; j < na; ++j) {
          s[2 * (i * na + j)] = syy[k](i, j).real();
          s[2 * (i * na + j) + 1] = syy[k](i, j).imag();
        }
      s += 2 * na * na;
      for (Eigen::Index m = 0; m < M; ++m) s[m] = spsi(m, k);
    }
    acc.count(b, n);
  }

  const Eigen::MatrixXd psi_closed = emcf_psi_diag(beta, stats, eta, cfg);
  const long draws = acc.total();
  for (Eigen::Index k = 0; k < K; ++k) {
    auto& ue = rep.ues[k];
    const EmcfCombiner& c = combiners[k];
    const auto na = static_cast<Eigen::Index>(ue.aps.size());
    const int o = offset[k];
    const auto unpack = [o, na](const std::vector<double>& m, Eigen::VectorXcd& bv,
                                Eigen::MatrixXcd& kz) {
      bv.resize(na);
      kz.resize(na, na);
      for (Eigen::Index i = 0; i < na; ++i) bv(i) = {m[o + 2 * i], m[o + 2 * i + 1]};
      const int base = o + 2 * static_cast<int>(na);
      for (Eigen::Index i = 0; i < na; ++i)
        for (Eigen::Index j = 0; j < na; ++j)
          kz(i, j) = {m[base + 2 * (i * na + j)], m[base + 2 * (i * na + j) + 1]};
      kz -= bv * bv.adjoint();
    };
    const Eigen::VectorXcd u = c.u.cast<cd>();
    const auto sinr_u = [&](const std::vector<double>& m) {
      Eigen::VectorXcd bv;
      Eigen::MatrixXcd kz;
      unpack(m, bv, kz);
      const cd num = u.dot(bv);
      return std::norm(num) / u.dot(kz * u).real();
    };
    const auto sinr_sample = [&](const std::vector<double>& m) {
      Eigen::VectorXcd bv;
      Eigen::MatrixXcd kz;
      unpack(m, bv, kz);
      return bv.dot(kz.ldlt().solve(bv)).real();
    };

    ue.k_z_closed = c.k_z;
    ue.sinr_closed = c.sinr;
    unpack(acc.means(), ue.b, ue.k_z);
    ue.k_z_se = Eigen::MatrixXd::Zero(na, na);
    for (Eigen::Index i = 0; i < na; ++i)
      for (Eigen::Index j = 0; j < na; ++j) {
        const auto e = acc.estimate([&](const std::vector<double>& m) {
          Eigen::VectorXcd bv;
          Eigen::MatrixXcd kz;
          unpack(m, bv, kz);
          return kz(i, j).real();
        });
        ue.k_z_se(i, j) = e.second;
      }
    if (na > 0) {
      const auto a = acc.estimate(sinr_u);
      const auto s = acc.estimate(sinr_sample);
      ue.sinr_analytic_u = a.first;
      ue.sinr_analytic_u_se = a.second;
      ue.sinr_sample_u = s.first;
      ue.sinr_sample_u_se = s.second;
      rep.rows.push_back(compare("emcf", "sinr", static_cast<int>(k), a,
                                 faulted(opts, "sinr", c.sinr), draws, opts));
    }
    for (Eigen::Index m = 0; m < M; ++m) {
      const int slot = o + 2 * static_cast<int>(na) + 2 * static_cast<int>(na * na) +
                       static_cast<int>(m);
      rep.rows.push_back(compare(
          "emcf", "psi[" + std::to_string(m) + "]", static_cast<int>(k),
          acc.estimate([slot](const std::vector<double>& v) { return v[slot]; }),
          faulted(opts, "psi", psi_closed(m, k)), draws, opts));
    }
  }
  return rep;
}

void write_report_csv(std::ostream& os, const std::vector<McEstimate>& rows, bool header) {
  if (header)
    os << "strategy,term,ue,closed_form,empirical,se,deviation,tolerance,draws,pass\n";
  os << std::setprecision(10);
  for (const auto& r : rows)
    os << r.strategy << ',' << r.term << ',' << r.ue << ',' << r.closed_form << ','
       << r.empirical << ',' << r.se << ',' << r.deviation << ',' << r.tolerance << ','
       << r.draws << ',' << (r.pass ? "pass" : "FAIL") << '\n';
}

void write_report_json(std::ostream& os, const std::vector<McEstimate>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"strategy", r.strategy},
                   {"term", r.term},
                   {"ue", r.ue},
                   {"closed_form", r.closed_form},
                   {"empirical", r.empirical},
                   {"se", r.se},
                   {"deviation", std::isnan(r.deviation) ? nlohmann::json(nullptr)
                                                         : nlohmann::json(r.deviation)},
                   {"tolerance", r.tolerance},
                   {"draws", r.draws},
                   {"pass", r.pass}});
  }
  os << out.dump(2) << '\n';
}

}  // namespace cfmimo
