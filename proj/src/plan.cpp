#include "cfmimo/plan.hpp"

#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace cfmimo {

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::kCfe: return "cfe";
    case Strategy::kEcfLower: return "ecf-lb";
    case Strategy::kEcfUpper: return "ecf-ub";
    case Strategy::kEmcf: return "emcf";
  }
  return "?";
}

std::string to_string(AllocationMode m) {
  return m == AllocationMode::kEqual ? "equal" : "proposed";
}

Strategy parse_strategy(const std::string& name) {
  if (name == "cfe") return Strategy::kCfe;
  if (name == "ecf-lb") return Strategy::kEcfLower;
  if (name == "ecf-ub") return Strategy::kEcfUpper;
  if (name == "emcf") return Strategy::kEmcf;
  throw std::invalid_argument("unknown strategy '" + name + "'");
}

AllocationMode parse_allocation_mode(const std::string& name) {
  if (name == "equal") return AllocationMode::kEqual;
  if (name == "proposed") return AllocationMode::kProposed;
  throw std::invalid_argument("unknown allocation mode '" + name + "'");
}

namespace {

void put(std::ostream& os, const Distortion& d) {
  if (is_dark(d)) os << "dark";
  else os << *d;
}

}  // namespace

void write_plan_report(std::ostream& os, const FronthaulPlan& plan) {
  os << "# strategy " << to_string(plan.strategy) << '\n' << std::setprecision(8);
  const int K = static_cast<int>(plan.ue_shares.cols());
  os << "m,C,C_p,C_d";
  if (plan.strategy == Strategy::kCfe) os << ",Q_p,Q_d";
  if (is_ecf(plan.strategy)) os << ",Q_d";
  for (int k = 0; k < K; ++k) os << ",share_" << k << ",Q_" << k;
  os << '\n';
  for (int m = 0; m < plan.num_aps(); ++m) {
    os << m << ',' << plan.capacity(m) << ',';
    if (plan.csi_capacity.size()) os << plan.csi_capacity(m) << ',' << plan.data_capacity(m);
    else os << ",";
    if (plan.strategy == Strategy::kCfe) {
      os << ',';
      put(os, plan.pilot_noise[m]);
      os << ',';
      put(os, plan.data_noise[m]);
    }
    if (is_ecf(plan.strategy)) {
      os << ',';
      put(os, plan.data_noise[m]);
    }
    for (int k = 0; k < K; ++k) {
      os << ',' << plan.ue_shares(m, k) << ',';
      if (is_ecf(plan.strategy)) os << plan.csi_noise(m, k);
      else if (plan.strategy == Strategy::kEmcf) put(os, plan.product_noise(m, k));
    }
    os << '\n';
  }
}

}  // namespace cfmimo
