#include "cfmimo/quant.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cfmimo {

Distortion distortion_additive(const TestChannelSpec& spec) {
  if (spec.capacity < 0 || spec.signal_power < 0 || !(spec.samples_fraction > 0) ||
      spec.samples_fraction > 1)
    throw std::invalid_argument("distortion_additive: invalid test channel");
  if (spec.capacity == 0) return std::nullopt;
  const double bits = spec.capacity / spec.samples_fraction;
  // expm1 keeps precision for small capacities.
  const double gain = std::expm1(bits * std::log(2.0));
  if (std::isinf(gain)) return 0.0;
  return spec.signal_power / gain;
}

double capacity_additive(double signal_power, double distortion,
                         double samples_fraction) {
  if (distortion == 0) return std::numeric_limits<double>::infinity();
  return samples_fraction * std::log1p(signal_power / distortion) / std::log(2.0);
}

double distortion_subtractive(double estimate_variance, double capacity_share,
                              int coherence) {
  if (capacity_share < 0 || estimate_variance < 0)
    throw std::invalid_argument("distortion_subtractive: negative input");
  return estimate_variance * std::exp2(-coherence * capacity_share);
}

double capacity_subtractive(double estimate_variance, double distortion,
                            int coherence) {
  return std::log2(estimate_variance / distortion) / coherence;
}

Distortion distortion_real_source(double signal_power, double capacity) {
  if (capacity <= 0) return std::nullopt;
  return signal_power / std::expm1(2.0 * capacity * std::log(2.0));
}

}  // namespace cfmimo
