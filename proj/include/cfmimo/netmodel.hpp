#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "cfmimo/config.hpp"

namespace cfmimo {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Layout {
  std::vector<Point> aps;
  std::vector<Point> ues;
};

/// Large-scale fading between every AP (row) and UE (column). `beta` is linear;
/// the dB path loss and torus distance are kept for export.
struct LargeScaleMap {
  Eigen::MatrixXd beta;
  Eigen::MatrixXd path_loss_db;
  Eigen::MatrixXd distance_m;

  int num_aps() const { return static_cast<int>(beta.rows()); }
  int num_ues() const { return static_cast<int>(beta.cols()); }
};

/// M + K i.i.d. uniform points on [0, D)^2.
Layout place_nodes(const SystemConfig& cfg, std::uint64_t seed);

/// Euclidean distance on the torus of side `side`.
double wrapped_distance(Point a, Point b, double side);

/// The constant L (dB) of the three-slope model.
double path_loss_constant_db(const SystemConfig& cfg);

/// Three-slope path loss in dB (a negative number) at distance d in meters.
double path_loss_db(double distance_m, const SystemConfig& cfg);

/// beta_mk(dB) = PL_mk + sigma_sh * z_mk with real standard-normal z_mk.
LargeScaleMap large_scale(const Layout& layout, const SystemConfig& cfg,
                          std::uint64_t seed);

/// Builds a map from given linear coefficients (no geometry attached).
LargeScaleMap from_linear(Eigen::MatrixXd beta);

/// N = B * k_B * T_0 * NF.
double noise_power(const SystemConfig& cfg);

inline constexpr double kBoltzmann = 1.381e-23;
inline constexpr double kRoomTemperatureK = 290.0;

/// Layout plus shadowed large-scale map for geometry realization `seed`.
LargeScaleMap make_scenario(const SystemConfig& cfg, std::uint64_t seed);

/// One row per (m, k): ap_x, ap_y, ue_x, ue_y, distance_m, pl_db, beta.
void write_large_scale_csv(std::ostream& os, const Layout& layout,
                           const LargeScaleMap& map);

}  // namespace cfmimo
