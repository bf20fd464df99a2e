#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cfmimo/quant.hpp"

namespace cfmimo {

enum class Strategy { kCfe, kEcfLower, kEcfUpper, kEmcf };

/// Fronthaul allocation rule: equal halves and uniform per-UE shares, or the
/// proportional shares plus the CSI/data split search.
enum class AllocationMode { kEqual, kProposed };

std::string to_string(Strategy s);
std::string to_string(AllocationMode m);
Strategy parse_strategy(const std::string& name);
AllocationMode parse_allocation_mode(const std::string& name);

inline bool is_ecf(Strategy s) {
  return s == Strategy::kEcfLower || s == Strategy::kEcfUpper;
}

/// Per-AP fronthaul budget and the distortions it implies. Which members are
/// populated depends on the strategy:
///   CFE   capacity splits, pilot_noise, data_noise
///   ECF   capacity splits, ue_shares (CSI), csi_noise, data_noise
///   EMCF  ue_shares (products), product_noise
struct FronthaulPlan {
  Strategy strategy = Strategy::kCfe;
  Eigen::VectorXd capacity;       // C_m
  Eigen::VectorXd csi_capacity;   // C_p,m
  Eigen::VectorXd data_capacity;  // C_d,m
  Eigen::MatrixXd ue_shares;      // M x K
  std::vector<Distortion> pilot_noise;  // Q_p,m
  Eigen::MatrixXd csi_noise;            // Q_p,mk
  std::vector<Distortion> data_noise;   // Q_d,m
  DistortionGrid product_noise;         // Q_mk

  int num_aps() const { return static_cast<int>(capacity.size()); }
};

/// Per-AP table: C, C_p, C_d, then per-UE shares and distortions.
void write_plan_report(std::ostream& os, const FronthaulPlan& plan);

}  // namespace cfmimo
