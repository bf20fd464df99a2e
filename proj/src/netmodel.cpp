#include "cfmimo/netmodel.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "cfmimo/random.hpp"

namespace cfmimo {

Layout place_nodes(const SystemConfig& cfg, std::uint64_t seed) {
  Rng rng(seed, Stream::kPlacement);
  Layout layout;
  layout.aps.reserve(cfg.num_aps);
  layout.ues.reserve(cfg.num_ues);
  const auto draw = [&] {
    const double x = rng.uniform(0.0, cfg.area_m);
    const double y = rng.uniform(0.0, cfg.area_m);
    return Point{x, y};
  };
  for (int m = 0; m < cfg.num_aps; ++m) layout.aps.push_back(draw());
  for (int k = 0; k < cfg.num_ues; ++k) layout.ues.push_back(draw());
  return layout;
}

double wrapped_distance(Point a, Point b, double side) {
  const auto axis = [side](double u, double v) {
    const double d = std::abs(u - v);
    return std::min(d, side - d);
  };
  return std::hypot(axis(a.x, b.x), axis(a.y, b.y));
}

double path_loss_constant_db(const SystemConfig& cfg) {
  const double lf = std::log10(cfg.carrier_freq_mhz);
  return 46.3 + 33.9 * lf - 13.82 * std::log10(cfg.h_ap_m) -
         (1.1 * lf - 0.7) * cfg.h_ue_m + (1.56 * lf - 0.8);
}

double path_loss_db(double distance_m, const SystemConfig& cfg) {
  const double scale = cfg.path_loss_km ? 1e-3 : 1.0;
  const double d = distance_m * scale;
  const double d0 = cfg.d0_m * scale;
  const double d1 = cfg.d1_m * scale;
  const double L = path_loss_constant_db(cfg);
  if (distance_m <= cfg.d0_m) return -L - 10.0 * std::log10(std::pow(d1, 1.5) * d0 * d0);
  if (distance_m <= cfg.d1_m) return -L - 10.0 * std::log10(std::pow(d1, 1.5) * d * d);
  return -L - 35.0 * std::log10(d);
}

LargeScaleMap large_scale(const Layout& layout, const SystemConfig& cfg,
                          std::uint64_t seed) {
  const auto M = static_cast<Eigen::Index>(layout.aps.size());
  const auto K = static_cast<Eigen::Index>(layout.ues.size());
  LargeScaleMap map;
  map.beta.resize(M, K);
  map.path_loss_db.resize(M, K);
  map.distance_m.resize(M, K);
  Rng rng(seed, Stream::kShadowing);
  for (Eigen::Index m = 0; m < M; ++m) {
    for (Eigen::Index k = 0; k < K; ++k) {
      const double d = wrapped_distance(layout.aps[m], layout.ues[k], cfg.area_m);
      const double pl = path_loss_db(d, cfg);
      const double z = rng.normal();
      map.distance_m(m, k) = d;
      map.path_loss_db(m, k) = pl;
      map.beta(m, k) = std::pow(10.0, (pl + cfg.sigma_sh_db * z) / 10.0);
    }
  }
  return map;
}

LargeScaleMap from_linear(Eigen::MatrixXd beta) {
  LargeScaleMap map;
  map.path_loss_db = (10.0 * beta.array().log10()).matrix();
  map.distance_m = Eigen::MatrixXd::Zero(beta.rows(), beta.cols());
  map.beta = std::move(beta);
  return map;
}

double noise_power(const SystemConfig& cfg) {
  return cfg.bandwidth_hz * kBoltzmann * kRoomTemperatureK *
         std::pow(10.0, cfg.noise_figure_db / 10.0);
}

LargeScaleMap make_scenario(const SystemConfig& cfg, std::uint64_t seed) {
  return large_scale(place_nodes(cfg, seed), cfg, seed);
}

void write_large_scale_csv(std::ostream& os, const Layout& layout,
                           const LargeScaleMap& map) {
  os << "m,k,ap_x,ap_y,ue_x,ue_y,distance_m,pl_db,beta_linear\n";
  os << std::setprecision(12);
  for (int m = 0; m < map.num_aps(); ++m) {
    for (int k = 0; k < map.num_ues(); ++k) {
      os << m << ',' << k << ',' << layout.aps[m].x << ',' << layout.aps[m].y << ','
         << layout.ues[k].x << ',' << layout.ues[k].y << ',' << map.distance_m(m, k)
         << ',' << map.path_loss_db(m, k) << ',' << map.beta(m, k) << '\n';
    }
  }
}

}  // namespace cfmimo
