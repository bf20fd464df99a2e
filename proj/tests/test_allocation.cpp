#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cfmimo/allocation.hpp"
#include "cfmimo/estimation.hpp"
#include "cfmimo/netmodel.hpp"
#include "cfmimo/random.hpp"
#include "support.hpp"

using namespace cfmimo;
using cfmimo::testing::rel_diff;

namespace {

SystemConfig sized(int M, int K) {
  SystemConfig cfg = default_config();
  cfg.num_aps = M;
  cfg.num_ues = cfg.pilot_len = K;
  return cfg;
}

Eigen::VectorXd constant(int n, double v) { return Eigen::VectorXd::Constant(n, v); }

}  // namespace

TEST_CASE("equal split") {
  const SystemConfig cfg = sized(6, 4);
  const auto map = make_scenario(cfg, 1);
  const Eigen::VectorXd eta = Eigen::VectorXd::Ones(4);
  const auto plan = equal_split(constant(6, 1.0), Strategy::kEcfUpper, map.beta, eta, cfg);
  CHECK((plan.ue_shares.array() == 0.125).all());
  CHECK((plan.csi_capacity.array() == 0.5).all());
  const auto again = equal_split(plan.capacity, Strategy::kEcfUpper, map.beta, eta, cfg);
  CHECK(again.ue_shares == plan.ue_shares);
  CHECK(again.csi_noise == plan.csi_noise);
}

TEST_CASE("zero capacity darkens every link") {
  const SystemConfig cfg = sized(4, 3);
  const auto map = make_scenario(cfg, 2);
  const Eigen::VectorXd eta = Eigen::VectorXd::Ones(3);
  const auto cfe = equal_split(constant(4, 0.0), Strategy::kCfe, map.beta, eta, cfg);
  const auto ecf = equal_split(constant(4, 0.0), Strategy::kEcfLower, map.beta, eta, cfg);
  const auto emcf = allocate(Strategy::kEmcf, AllocationMode::kProposed, constant(4, 0.0),
                             map.beta, eta, cfg);
  const auto gamma = ecf_stats(map.beta, cfg).gamma;
  for (int m = 0; m < 4; ++m) {
    CHECK(is_dark(cfe.pilot_noise[m]));
    CHECK(is_dark(cfe.data_noise[m]));
    CHECK(is_dark(ecf.data_noise[m]));
    for (int k = 0; k < 3; ++k) {
      CHECK(ecf.csi_noise(m, k) == gamma(m, k));
      CHECK(is_dark(emcf.product_noise(m, k)));
    }
  }
  for (const auto& r : evaluate(map.beta, cfe, eta, cfg)) CHECK(r.sinr == 0.0);
}

TEST_CASE("CSI waterfilling") {
  SUBCASE("equal variances share equally") {
    const Eigen::VectorXd g = constant(4, 2e-9);
    const auto r = ecf_waterfill(0.2, g, 200);
    for (int k = 0; k < 4; ++k) {
      CHECK(r.shares(k) == doctest::Approx(0.05));
      CHECK(r.q(k) == doctest::Approx(2e-9 * std::exp2(-200 * 0.2 / 4)));
    }
  }
  SUBCASE("a dominant UE gets its proportional share") {
    Eigen::VectorXd g(3);
    g << 100.0, 1.0, 1.0;
    const auto r = ecf_waterfill(0.1, g, 200);
    CHECK(r.shares(0) == doctest::Approx(0.1 * 100.0 / 102.0));
    CHECK(r.q(0) / g(0) < r.q(1) / g(1));
    CHECK(r.shares.sum() == doctest::Approx(0.1).epsilon(1e-12));
  }
  SUBCASE("shares sum to the budget") {
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
      Eigen::VectorXd g(5);
      for (auto& x : g) x = rng.uniform(1e-12, 1e-8);
      const double c = rng.uniform(0.0, 3.0);
      CHECK(std::abs(ecf_waterfill(c, g, 200).shares.sum() - c) <= 1e-12 * std::max(1.0, c));
    }
  }
}

TEST_CASE("EMCF product allocation") {
  const SystemConfig cfg = sized(1, 4);
  SUBCASE("equal products") {
    const auto r = emcf_allocate(2.0, constant(4, 1e-20), cfg);
    for (int k = 0; k < 4; ++k) {
      CHECK(r.shares(k) == doctest::Approx(0.5));
      CHECK(r.q(k) == doctest::Approx(r.q(0)));
    }
  }
  SUBCASE("large budget") {
    const auto r = emcf_allocate(500.0, constant(4, 1e-20), cfg);
    CHECK(r.q.maxCoeff() < 1e-40);
  }
  SUBCASE("round trip") {
    Eigen::VectorXd psi(4);
    psi << 3e-21, 1e-20, 5e-22, 2e-21;
    const auto r = emcf_allocate(1.7, psi, cfg);
    double total = 0.0;
    for (int k = 0; k < 4; ++k) total += cfg.data_fraction() * std::log2(1 + psi(k) / r.q(k));
    CHECK(total == doctest::Approx(1.7).epsilon(1e-10));
  }
}

TEST_CASE("fronthaul distortions follow the received power") {
  SystemConfig cfg = sized(3, 2);
  const auto map = make_scenario(cfg, 4);
  const Eigen::VectorXd eta = Eigen::Vector2d(0.3, 0.8);
  const auto qd = data_noise_for(constant(3, 1.0), map.beta, eta, cfg);
  const auto qp = pilot_noise_for(constant(3, 0.2), map.beta, cfg);
  for (int m = 0; m < 3; ++m) {
    const double pd = cfg.data_power_w * map.beta.row(m).dot(eta) + cfg.noise_w;
    CHECK(*qd[m] == doctest::Approx(pd / (std::exp2(1.0 / cfg.data_fraction()) - 1)));
    CHECK(*qd[m] == doctest::Approx(pd * data_noise_factor(1.0, cfg)));
    const double pp = cfg.pilot_power_w * map.beta.row(m).sum() + cfg.noise_w;
    CHECK(*qp[m] == doctest::Approx(pp / (std::exp2(0.2 * cfg.coherence / 2) - 1)));
  }
  auto plan = equal_split(constant(3, 1.0), Strategy::kCfe, map.beta, eta, cfg);
  refresh_for_power(plan, AllocationMode::kEqual, map.beta, Eigen::VectorXd::Ones(2), cfg);
  const auto full = data_noise_for(plan.data_capacity, map.beta, Eigen::VectorXd::Ones(2), cfg);
  for (int m = 0; m < 3; ++m) CHECK(*plan.data_noise[m] == *full[m]);
}

TEST_CASE("split search") {
  const SystemConfig cfg = default_config();
  const auto map = make_scenario(cfg, 5);
  const Eigen::VectorXd eta = Eigen::VectorXd::Ones(cfg.num_ues);
  SUBCASE("beats the equal split") {
    for (Strategy s : {Strategy::kCfe, Strategy::kEcfLower, Strategy::kEcfUpper}) {
      const auto r = split_search(s, AllocationMode::kProposed, constant(50, 1.0), map.beta, eta, cfg);
      const double eq = plan_sse(equal_split(constant(50, 1.0), s, map.beta, eta, cfg), map.beta, eta, cfg);
      CHECK(r.sse >= eq);
      CHECK(r.grid.size() == static_cast<std::size_t>(kSplitGridPoints));
      CHECK(r.sse >= *std::max_element(r.grid_sse.begin(), r.grid_sse.end()));
      CHECK(rel_diff(r.sse, plan_sse(r.plan, map.beta, eta, cfg)) < 1e-12);
    }
  }
  SUBCASE("wide links make the split irrelevant") {
    const auto r = split_search(Strategy::kCfe, AllocationMode::kProposed, constant(50, 1e3),
                                map.beta, eta, cfg);
    // Interior fractions all leave both links effectively lossless. The refined
    // optimum may still sit near 0: a coarse pilot quantizer down-weights APs
    // with strong interference, which MRC rewards.
    for (std::size_t i = 1; i + 1 < r.grid.size(); ++i)
      CHECK(std::abs(r.grid_sse[i] - r.grid_sse[1]) <= 1e-6);
    CHECK(r.sse >= r.grid_sse[1]);
  }
}

TEST_CASE("high-SNR estimation limits") {
  SUBCASE("single ideal UE: both limits equal") {
    SystemConfig cfg = sized(1, 1);
    Eigen::VectorXd row(1);
    row << 4e-9;
    const auto r = prop1_threshold(row, cfg);
    REQUIRE(r.size() == 1);
    CHECK(r[0].theta1 == doctest::Approx(cfg.pilot_len * 4e-9));
    CHECK(r[0].gamma_inf == doctest::Approx(4e-9));
    for (double c : {0.001, 0.01, 0.1})
      CHECK(rel_diff(gamma_cfe_high_snr(row, 0, c, cfg), gamma_ecf_high_snr(row, 0, c, cfg)) < 1e-12);
  }
  SUBCASE("a weaker-than-average UE is better estimated at the CU") {
    SystemConfig cfg = sized(1, 5);
    cfg.xi_t = 0.8;
    cfg.xi_r = 0.9;
    Rng rng(6);
    int checked = 0;
    for (int i = 0; i < 200; ++i) {
      Eigen::VectorXd row(5);
      for (auto& b : row) b = std::pow(10.0, rng.uniform(-12, -8));
      for (const auto& r : prop1_threshold(row, cfg)) {
        if (!r.side_conditions) continue;
        ++checked;
        CHECK(std::isfinite(r.closed_form));
        for (double c : {1e-4, 1e-2, std::max(r.closed_form, 1e-3), 1.0})
          CHECK(gamma_cfe_high_snr(row, r.ue, c, cfg) >=
                gamma_ecf_high_snr(row, r.ue, c, cfg) * (1 - 1e-12));
      }
    }
    CHECK(checked > 100);
  }
}

TEST_CASE("single-user SINR limits") {
  SystemConfig cfg = sized(30, 1);
  SUBCASE("ideal hardware") {
    const auto map = make_scenario(cfg, 7);
    const auto r = prop2_limits(map.beta, constant(30, 0.3), constant(30, 0.7), cfg);
    CHECK(r.a == 0.0);
    CHECK(r.b == 0.0);
    CHECK(rel_diff(r.sinr_cfe, r.sinr_ecf) < 1e-12);
  }
  SUBCASE("impaired hardware favours ECF") {
    cfg.xi_r = 0.8;
    cfg.xi_t = 0.9;
    Rng rng(8);
    for (int g = 0; g < 1000; ++g) {
      const auto map = make_scenario(cfg, 9000 + static_cast<std::uint64_t>(g));
      const double c = rng.uniform(0.05, 3.0);
      const double f = rng.uniform(0.05, 0.95);
      const auto r = prop2_limits(map.beta, constant(30, f * c), constant(30, (1 - f) * c), cfg);
      CHECK(r.sinr_ecf >= r.sinr_cfe);
    }
  }
  SUBCASE("wide CSI link") {
    cfg.xi_r = 0.8;
    cfg.xi_t = 0.9;
    const auto map = make_scenario(cfg, 10);
    const auto r = prop2_limits(map.beta, constant(30, 50.0), constant(30, 1.0), cfg);
    for (int m = 0; m < 30; ++m)
      CHECK(r.upsilon(m) == doctest::Approx(0.72 * map.beta(m, 0)).epsilon(1e-12));
  }
}
