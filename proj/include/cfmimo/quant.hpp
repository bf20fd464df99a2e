#pragma once

#include <optional>
#include <vector>

namespace cfmimo {

/// Quantization-noise variance of a rate-distortion test channel. An empty
/// value means the link carries nothing (zero capacity): the signal is lost.
using Distortion = std::optional<double>;

inline bool is_dark(const Distortion& d) { return !d.has_value(); }

struct TestChannelSpec {
  double signal_power = 0.0;      // P, watts
  double capacity = 0.0;          // bits/s/Hz
  double samples_fraction = 1.0;  // pre-log multiplier (K/T, (T-tau)/T, ...)
};

/// Inverts C = f * log2(1 + P/Q) for the additive test channel x^ = x + q.
/// Zero capacity yields a dark link.
Distortion distortion_additive(const TestChannelSpec& spec);

/// C = f * log2(1 + P/Q).
double capacity_additive(double signal_power, double distortion,
                         double samples_fraction);

/// Subtractive (backward) test channel x = x^ + q used for forwarded CSI:
/// C_share = (1/T) log2(gamma / Q)  =>  Q = gamma * 2^(-T * C_share).
double distortion_subtractive(double estimate_variance, double capacity_share,
                              int coherence);

double capacity_subtractive(double estimate_variance, double distortion,
                            int coherence);

/// Real Gaussian source reference: Q* = P / (2^(2C) - 1).
Distortion distortion_real_source(double signal_power, double capacity);

/// A matrix of per-entry distortions (rows: APs, columns: UEs).
class DistortionGrid {
 public:
  DistortionGrid() = default;
  DistortionGrid(int rows, int cols, Distortion fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  Distortion& operator()(int r, int c) { return data_[index(r, c)]; }
  const Distortion& operator()(int r, int c) const { return data_[index(r, c)]; }

 private:
  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(r) * cols_ + c;
  }
  int rows_ = 0;
  int cols_ = 0;
  std::vector<Distortion> data_;
};

}  // namespace cfmimo
