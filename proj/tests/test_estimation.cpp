#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "cfmimo/allocation.hpp"
#include "cfmimo/estimation.hpp"
#include "cfmimo/netmodel.hpp"
#include "cfmimo/quant.hpp"

using namespace cfmimo;

namespace {

SystemConfig unit_config() {
  SystemConfig cfg = default_config();
  cfg.num_aps = 1;
  cfg.num_ues = cfg.pilot_len = 1;
  cfg.pilot_power_w = 1.0;
  cfg.noise_w = 1.0;
  return cfg;
}

}  // namespace

TEST_CASE("single-entry hand evaluation") {
  const SystemConfig cfg = unit_config();
  const Eigen::MatrixXd beta = Eigen::MatrixXd::Ones(1, 1);
  const auto s = cfe_stats(beta, {1.0}, cfg);
  // lambda = sqrt(tau rho_p) beta / (tau rho_p beta + N + Q) = 1/3
  CHECK(s.lambda(0, 0) == doctest::Approx(1.0 / 3.0));
  CHECK(s.gamma(0, 0) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("ideal hardware reduces to the plain LMMSE") {
  const SystemConfig cfg = default_config();
  const auto map = make_scenario(cfg, 1);
  const auto s = ecf_stats(map.beta, cfg);
  const double tr = cfg.pilot_len * cfg.pilot_power_w;
  for (int m = 0; m < cfg.num_aps; ++m)
    for (int k = 0; k < cfg.num_ues; ++k) {
      const double b = map.beta(m, k);
      CHECK(s.gamma(m, k) == doctest::Approx(tr * b * b / (tr * b + cfg.noise_w)).epsilon(1e-12));
      CHECK(s.gamma(m, k) < b);
    }
}

TEST_CASE("ecf statistics are the unquantized cfe statistics") {
  SystemConfig cfg = default_config();
  cfg.xi_t = 0.8;
  cfg.xi_r = 0.9;
  const auto map = make_scenario(cfg, 2);
  const auto a = ecf_stats(map.beta, cfg);
  const auto b = cfe_stats(map.beta, std::vector<Distortion>(cfg.num_aps, 0.0), cfg);
  CHECK(a.gamma == b.gamma);
  CHECK(a.lambda == b.lambda);
  CHECK(a.gamma_prime == a.gamma);
}

TEST_CASE("pilot distortion degrades the estimate") {
  const SystemConfig cfg = unit_config();
  const Eigen::MatrixXd beta = Eigen::MatrixXd::Ones(1, 1);
  double prev = INFINITY;
  for (double q : {0.0, 0.1, 1.0, 10.0, 1e12}) {
    const double g = cfe_stats(beta, {q}, cfg).gamma(0, 0);
    CHECK(g < prev);
    prev = g;
  }
  CHECK(prev < 1e-11);
  const auto dark = cfe_stats(beta, {std::nullopt}, cfg);
  CHECK(dark.gamma(0, 0) == 0.0);
  CHECK(std::isinf(dark.q_p(0, 0)));
}

TEST_CASE("useless hardware estimates nothing") {
  SystemConfig cfg = default_config();
  cfg.xi_t = 0.0;
  const auto map = make_scenario(cfg, 3);
  CHECK(ecf_stats(map.beta, cfg).gamma.maxCoeff() == 0.0);
}

TEST_CASE("gamma grows with pilot power and hardware quality") {
  SystemConfig cfg = default_config();
  const auto map = make_scenario(cfg, 4);
  const auto base = ecf_stats(map.beta, cfg).gamma;
  SystemConfig louder = cfg;
  louder.pilot_power_w *= 2;
  CHECK((ecf_stats(map.beta, louder).gamma.array() >= base.array()).all());
  SystemConfig worse_t = cfg;
  worse_t.xi_t = 0.9;
  const auto t_only = ecf_stats(map.beta, worse_t).gamma;
  CHECK((t_only.array() <= base.array()).all());
  SystemConfig worse_both = worse_t;
  worse_both.xi_r = 0.9;
  CHECK((ecf_stats(map.beta, worse_both).gamma.array() <= t_only.array()).all());
}

TEST_CASE("high-SNR limit") {
  SystemConfig cfg = default_config();
  cfg.xi_t = 0.8;
  cfg.xi_r = 0.9;
  const auto map = make_scenario(cfg, 5);
  cfg.pilot_power_w = 1e12;
  const auto s = ecf_stats(map.beta, cfg);
  const double xx = cfg.xi_r * cfg.xi_t;
  for (int m = 0; m < 3; ++m) {
    const double total = map.beta.row(m).sum();
    for (int k = 0; k < cfg.num_ues; ++k) {
      const double b = map.beta(m, k);
      const double theta1 = xx * cfg.pilot_len * b + (1 - xx) * total;
      CHECK(s.gamma(m, k) == doctest::Approx(xx * cfg.pilot_len * b * b / theta1).epsilon(1e-9));
    }
  }
}

TEST_CASE("CSI quantization") {
  const SystemConfig cfg = default_config();
  const auto map = make_scenario(cfg, 6);
  const auto s = ecf_stats(map.beta, cfg);
  SUBCASE("end points") {
    const auto none = apply_csi_quantization(s, Eigen::MatrixXd::Zero(cfg.num_aps, cfg.num_ues));
    CHECK(none.gamma_prime == s.gamma);
    const auto all = apply_csi_quantization(s, s.gamma);
    CHECK(all.gamma_prime.maxCoeff() == 0.0);
    CHECK(effective_lambda(all).maxCoeff() == 0.0);
  }
  SUBCASE("out of range") {
    CHECK_THROWS_AS(apply_csi_quantization(s, 2.0 * s.gamma), std::invalid_argument);
    CHECK_THROWS_AS(apply_csi_quantization(s, -s.gamma), std::invalid_argument);
  }
  SUBCASE("waterfilled shares round trip") {
    Eigen::MatrixXd q(cfg.num_aps, cfg.num_ues);
    Eigen::MatrixXd shares(cfg.num_aps, cfg.num_ues);
    for (int m = 0; m < cfg.num_aps; ++m) {
      const Eigen::VectorXd g = s.gamma.row(m).transpose();
      const auto r = ecf_waterfill(0.05, g, cfg.coherence);
      q.row(m) = r.q.transpose();
      shares.row(m) = r.shares.transpose();
    }
    const auto out = apply_csi_quantization(s, q);
    for (int m = 0; m < cfg.num_aps; ++m)
      for (int k = 0; k < cfg.num_ues; ++k) {
        const double expect = s.gamma(m, k) * (1 - std::exp2(-cfg.coherence * shares(m, k)));
        CHECK(out.gamma_prime(m, k) == doctest::Approx(expect).epsilon(1e-12));
        CHECK(capacity_subtractive(s.gamma(m, k), q(m, k), cfg.coherence) ==
              doctest::Approx(shares(m, k)).epsilon(1e-12));
      }
  }
}
