#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cfmimo/allocation.hpp"
#include "cfmimo/netmodel.hpp"
#include "cfmimo/random.hpp"
#include "cfmimo/rates.hpp"
#include "support.hpp"

using namespace cfmimo;
using cfmimo::testing::ideal_mrc_sinr;
using cfmimo::testing::lossless_plan;
using cfmimo::testing::rel_diff;

namespace {

SystemConfig sized(int M, int K) {
  SystemConfig cfg = default_config();
  cfg.num_aps = M;
  cfg.num_ues = cfg.pilot_len = K;
  return cfg;
}

std::vector<SinrBreakdown> run(Strategy s, const Eigen::MatrixXd& beta, const FronthaulPlan& plan,
                               const Eigen::VectorXd& eta, const SystemConfig& cfg) {
  const auto stats = stats_for(s, beta, plan, cfg);
  switch (s) {
    case Strategy::kCfe: return sinr_cfe(beta, stats, plan, eta, cfg);
    case Strategy::kEcfLower: return sinr_ecf_lb(beta, stats, plan, eta, cfg);
    case Strategy::kEcfUpper: return sinr_ecf_ub(beta, stats, plan, eta, cfg);
    case Strategy::kEmcf: return rate_emcf(beta, stats, plan, eta, cfg);
  }
  return {};
}

}  // namespace

TEST_CASE("rate prelog") {
  SystemConfig cfg = default_config();
  CHECK(rate_from_sinr(0.0, cfg) == 0.0);
  cfg.pilot_len = 20;
  CHECK(rate_from_sinr(1.0, cfg) == doctest::Approx(0.9));
  cfg.pilot_len = 100;
  CHECK(rate_from_sinr(3.0, cfg) == doctest::Approx(1.0));
}

TEST_CASE("single AP, single UE, ideal") {
  const SystemConfig cfg = sized(1, 1);
  Eigen::MatrixXd beta(1, 1);
  beta << 3e-10;
  const Eigen::VectorXd eta = Eigen::VectorXd::Constant(1, 0.6);
  const double tr = cfg.pilot_power_w;
  const double g = tr * beta(0, 0) * beta(0, 0) / (tr * beta(0, 0) + cfg.noise_w);
  const double expect = cfg.data_power_w * 0.6 * g / (cfg.data_power_w * 0.6 * beta(0, 0) + cfg.noise_w);
  for (Strategy s : {Strategy::kCfe, Strategy::kEcfLower, Strategy::kEcfUpper, Strategy::kEmcf})
    CHECK(run(s, beta, lossless_plan(s, 1, 1), eta, cfg)[0].sinr ==
          doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("ideal reduction for every MRC evaluator") {
  const SystemConfig cfg = sized(30, 4);
  Rng rng(2);
  for (int g = 0; g < 10; ++g) {
    const auto map = make_scenario(cfg, 100 + static_cast<std::uint64_t>(g));
    Eigen::VectorXd eta(4);
    for (auto& e : eta) e = rng.uniform(0.1, 1.0);
    const Eigen::VectorXd ref = ideal_mrc_sinr(map.beta, eta, cfg);
    for (Strategy s : {Strategy::kCfe, Strategy::kEcfLower, Strategy::kEcfUpper}) {
      const auto rows = run(s, map.beta, lossless_plan(s, 30, 4), eta, cfg);
      for (int k = 0; k < 4; ++k) CHECK(rel_diff(rows[k].sinr, ref(k)) < 1e-9);
    }
  }
}

TEST_CASE("term variances add up to the compact denominator") {
  SystemConfig cfg = sized(20, 4);
  cfg.xi_t = 0.8;
  cfg.xi_r = 0.9;
  const auto map = make_scenario(cfg, 3);
  const Eigen::VectorXd eta = Eigen::Vector4d(1.0, 0.5, 0.2, 0.9);
  const auto plan = allocate(Strategy::kCfe, AllocationMode::kEqual,
                             Eigen::VectorXd::Constant(20, 1.0), map.beta, eta, cfg);
  const auto stats = stats_for(Strategy::kCfe, map.beta, plan, cfg);
  const auto rows = sinr_cfe(map.beta, stats, plan, eta, cfg);
  const auto s = moment_sums(map.beta, stats.gamma, stats.gamma, stats.lambda, plan.data_noise, cfg);
  for (int k = 0; k < 4; ++k) {
    CHECK(rel_diff(rows[k].interference(), compact_denominator(s, k, eta, cfg, FormulaVariant::kModel)) < 1e-12);
    CHECK(rows[k].iui(k) == 0.0);
    CHECK(rows[k].rate == doctest::Approx(rate_from_sinr(rows[k].sinr, cfg)));
  }
}

TEST_CASE("without CSI quantization") {
  const auto check_at = [](double xi_t, double xi_r, bool tight) {
    SystemConfig cfg = sized(20, 4);
    cfg.xi_t = xi_t;
    cfg.xi_r = xi_r;
    const auto map = make_scenario(cfg, 4);
    const Eigen::VectorXd eta = Eigen::VectorXd::Ones(4);
    auto plan = allocate(Strategy::kEcfUpper, AllocationMode::kEqual,
                         Eigen::VectorXd::Constant(20, 1.0), map.beta, eta, cfg);
    plan.csi_noise.setZero();
    const auto stats = stats_for(Strategy::kEcfUpper, map.beta, plan, cfg);
    const auto lb = sinr_ecf_lb(map.beta, stats, plan, eta, cfg);
    const auto ub = sinr_ecf_ub(map.beta, stats, plan, eta, cfg);
    const auto exact = sinr_ecf_exact(map.beta, stats, plan, eta, cfg);
    for (int k = 0; k < 4; ++k) {
      CHECK_FALSE(lb[k].clamped);
      CHECK(rel_diff(lb[k].sinr, exact[k].sinr) < 1e-12);
      if (tight) CHECK(rel_diff(ub[k].sinr, exact[k].sinr) < 1e-12);
      else CHECK(ub[k].sinr > exact[k].sinr);
    }
  };
  SUBCASE("the lower bound is exact; the upper bound is tight only for ideal hardware") {
    check_at(0.7, 0.85, false);
    check_at(1.0, 1.0, true);
  }
}

TEST_CASE("bound ordering over random configurations") {
  Rng rng(5);
  int flagged = 0;
  int valid = 0;
  for (int c = 0; c < 1000; ++c) {
    const int M = 5 + static_cast<int>(rng.uniform(0, 20));
    const int K = 1 + static_cast<int>(rng.uniform(0, 5));
    SystemConfig cfg = sized(M, K);
    cfg.xi_t = rng.uniform(0.6, 1.0);
    cfg.xi_r = rng.uniform(0.6, 1.0);
    const double cap = rng.uniform(0.05, 3.0);
    const double fraction = rng.uniform(0.05, 0.95);
    Eigen::VectorXd eta(K);
    for (auto& e : eta) e = rng.uniform(0.05, 1.0);
    const auto map = make_scenario(cfg, 7000 + static_cast<std::uint64_t>(c));
    const auto plan = plan_at_fraction(Strategy::kEcfUpper, AllocationMode::kProposed,
                                       Eigen::VectorXd::Constant(M, cap), fraction, map.beta,
                                       eta, cfg);
    const auto stats = stats_for(Strategy::kEcfUpper, map.beta, plan, cfg);
    const auto lb = sinr_ecf_lb(map.beta, stats, plan, eta, cfg);
    const auto ub = sinr_ecf_ub(map.beta, stats, plan, eta, cfg);
    const auto exact = sinr_ecf_exact(map.beta, stats, plan, eta, cfg);
    for (int k = 0; k < K; ++k) {
      CHECK(ub[k].sinr >= exact[k].sinr * (1 - 1e-12));
      if (lb[k].clamped) {
        ++flagged;
        continue;
      }
      ++valid;
      CHECK(lb[k].sinr <= ub[k].sinr * (1 + 1e-12));
      CHECK(lb[k].sinr <= exact[k].sinr * (1 + 1e-12));
    }
  }
  MESSAGE("lower bound valid in " << valid << " rows, flagged in " << flagged);
  CHECK(valid > flagged);
}

TEST_CASE("a larger data distortion never helps") {
  SystemConfig cfg = sized(15, 3);
  cfg.xi_t = 0.9;
  const auto map = make_scenario(cfg, 6);
  const Eigen::VectorXd eta = Eigen::VectorXd::Ones(3);
  for (Strategy s : {Strategy::kCfe, Strategy::kEcfLower, Strategy::kEcfUpper}) {
    const auto plan = allocate(s, AllocationMode::kEqual, Eigen::VectorXd::Constant(15, 0.8),
                               map.beta, eta, cfg);
    const auto base = run(s, map.beta, plan, eta, cfg);
    for (int m = 0; m < 15; ++m) {
      FronthaulPlan p = plan;
      p.data_noise[m] = *p.data_noise[m] * 2.0;
      const auto next = run(s, map.beta, p, eta, cfg);
      for (int k = 0; k < 3; ++k)
        if (!base[k].clamped && !next[k].clamped) CHECK(next[k].sinr <= base[k].sinr * (1 + 1e-12));
    }
  }
}

// MRC weights each AP by its estimate variance. For ideal hardware
// SINR_k = rho eta_k (sum_m g_m)^2 / sum_m g_m c_m with c_m the AP's interference
// plus noise, so d SINR_k / d g_m < 0 exactly when c_m > 2 sum g c / sum g: a
// noisier estimate at such an AP raises the SINR.
TEST_CASE("MRC can gain from a noisier estimate at a poor AP") {
  const SystemConfig cfg = sized(20, 4);
  const Eigen::VectorXd eta = Eigen::VectorXd::Ones(4);
  int raised = 0;
  int lowered = 0;
  for (int g = 0; g < 10; ++g) {
    const auto map = make_scenario(cfg, 300 + static_cast<std::uint64_t>(g));
    const auto plan = lossless_plan(Strategy::kCfe, 20, 4);
    const auto stats = stats_for(Strategy::kCfe, map.beta, plan, cfg);
    const auto base = sinr_cfe(map.beta, stats, plan, eta, cfg);
    for (int k = 0; k < 4; ++k) {
      double sum_g = 0.0;
      double sum_gc = 0.0;
      Eigen::VectorXd c(20);
      for (int m = 0; m < 20; ++m) {
        c(m) = cfg.data_power_w * map.beta.row(m).dot(eta) + cfg.noise_w;
        sum_g += stats.gamma(m, k);
        sum_gc += stats.gamma(m, k) * c(m);
      }
      const double pivot = 2.0 * sum_gc / sum_g;
      for (int m = 0; m < 20; ++m) {
        const double r = c(m) / pivot;
        if (r > 0.9 && r < 1.1) continue;
        FronthaulPlan p = plan;
        p.pilot_noise[m] = 1e-3 * cfg.noise_w;
        const auto next = sinr_cfe(map.beta, stats_for(Strategy::kCfe, map.beta, p, cfg), p, eta, cfg);
        if (r > 1.0) {
          CHECK(next[k].sinr > base[k].sinr);
          ++raised;
        } else {
          CHECK(next[k].sinr < base[k].sinr);
          ++lowered;
        }
      }
    }
  }
  CHECK(raised > 0);
  CHECK(lowered > 0);
}

TEST_CASE("EMCF") {
  SUBCASE("silent UEs leave noise times gamma") {
    const SystemConfig cfg = sized(6, 3);
    const auto map = make_scenario(cfg, 7);
    const auto stats = ecf_stats(map.beta, cfg);
    const Eigen::MatrixXd psi = emcf_psi_diag(map.beta, stats, Eigen::VectorXd::Zero(3), cfg);
    CHECK(((psi - cfg.noise_w * stats.gamma).array().abs() <= 1e-12 * psi.array()).all());
  }
  SUBCASE("perfect UE hardware gives a diagonal covariance") {
    SystemConfig cfg = sized(6, 3);
    cfg.xi_r = 0.8;
    const auto map = make_scenario(cfg, 8);
    const Eigen::VectorXd eta = Eigen::VectorXd::Ones(3);
    const auto plan = allocate(Strategy::kEmcf, AllocationMode::kProposed,
                               Eigen::VectorXd::Constant(6, 1.0), map.beta, eta, cfg);
    const auto stats = ecf_stats(map.beta, cfg);
    const auto rows = rate_emcf(map.beta, stats, plan, eta, cfg);
    for (int k = 0; k < 3; ++k) {
      const auto comb = emcf_combiner(map.beta, stats, plan, eta, cfg, k);
      const Eigen::MatrixXd off = comb.k_z - Eigen::MatrixXd(comb.k_z.diagonal().asDiagonal());
      CHECK(off.cwiseAbs().maxCoeff() == 0.0);
      double sum = 0.0;
      for (Eigen::Index i = 0; i < comb.b.size(); ++i) sum += comb.b(i) * comb.b(i) / comb.k_z(i, i);
      CHECK(rel_diff(rows[k].sinr, sum) < 1e-10);
    }
  }
  SUBCASE("one AP") {
    SystemConfig cfg = sized(1, 2);
    cfg.xi_t = 0.7;
    const auto map = make_scenario(cfg, 9);
    const Eigen::VectorXd eta = Eigen::VectorXd::Ones(2);
    const auto plan = allocate(Strategy::kEmcf, AllocationMode::kProposed,
                               Eigen::VectorXd::Constant(1, 1.0), map.beta, eta, cfg);
    const auto stats = ecf_stats(map.beta, cfg);
    const auto comb = emcf_combiner(map.beta, stats, plan, eta, cfg, 1);
    REQUIRE(comb.b.size() == 1);
    CHECK(rel_diff(comb.sinr, comb.b(0) * comb.b(0) / comb.k_z(0, 0)) < 1e-12);
  }
}

TEST_CASE("energy efficiency") {
  const SystemConfig cfg = default_config();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(5);
  const Eigen::VectorXd cap = Eigen::VectorXd::Constant(50, 1.0);
  CHECK(energy_efficiency(Eigen::VectorXd::Zero(5), cap, ones, cfg) == 0.0);
  const Eigen::VectorXd rates = Eigen::VectorXd::Constant(5, 2.0);
  const double ee1 = energy_efficiency(rates, cap, ones, cfg);
  const double ee2 = energy_efficiency(rates, 2.0 * cap, ones, cfg);
  CHECK(ee2 < ee1);
  // B * SSE / (sum eta rho_u + M P_m + B sum C P_bh 1e-9), evaluated by hand.
  const double total = 0.5 + 50 * 0.2 + 20e6 * 50 * 0.25e-9;
  CHECK(ee1 == doctest::Approx(20e6 * 10.0 / total).epsilon(1e-12));

  SUBCASE("full scale lands in the Mbit/J range") {
    const SystemConfig full = paper_scale_config();
    const auto map = make_scenario(full, 1);
    const Eigen::VectorXd eta = Eigen::VectorXd::Ones(full.num_ues);
    const Eigen::VectorXd c = Eigen::VectorXd::Constant(full.num_aps, 1.0);
    const auto plan = allocate(Strategy::kCfe, AllocationMode::kProposed, c, map.beta, eta, full);
    const auto rows = evaluate(map.beta, plan, eta, full);
    Eigen::VectorXd r(full.num_ues);
    for (int k = 0; k < full.num_ues; ++k) r(k) = rows[k].rate;
    const double ee = energy_efficiency(r, c, eta, full);
    MESSAGE("full-scale EE " << ee << " bit/J");
    CHECK(ee > 1e5);
    CHECK(ee < 1e8);
  }
}
