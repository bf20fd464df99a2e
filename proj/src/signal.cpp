#include "cfmimo/signal.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cfmimo {

PilotBook make_pilots(int tau, int num_ues) {
  if (tau != num_ues) throw std::invalid_argument("make_pilots: tau must equal K");
  if (tau < 1) throw std::invalid_argument("make_pilots: tau must be positive");
  PilotBook book;
  book.phi.resize(tau, num_ues);
  const double scale = 1.0 / std::sqrt(static_cast<double>(tau));
  for (int i = 0; i < tau; ++i) {
    for (int k = 0; k < num_ues; ++k) {
      const double angle = -2.0 * std::numbers::pi * i * k / tau;
      book.phi(i, k) = std::polar(scale, angle);
    }
  }
  return book;
}

ChannelRealization draw_channels(const Eigen::MatrixXd& beta, Rng& rng) {
  ChannelRealization ch;
  ch.g.resize(beta.rows(), beta.cols());
  for (Eigen::Index k = 0; k < beta.cols(); ++k)
    for (Eigen::Index m = 0; m < beta.rows(); ++m) ch.g(m, k) = rng.cn(beta(m, k));
  return ch;
}

ChannelRealization draw_channels(const Eigen::MatrixXd& beta, std::uint64_t seed) {
  Rng rng(seed, Stream::kChannel);
  return draw_channels(beta, rng);
}

cd distort(cd x, double xi, double power, Rng& rng) {
  if (xi >= 1.0) return x;
  return std::sqrt(xi) * x + rng.cn((1.0 - xi) * power);
}

ReceivedPilot receive_pilot(const ChannelRealization& ch, const PilotBook& pilots,
                            const SystemConfig& cfg, SignalStreams& streams) {
  const auto M = ch.g.rows();
  const auto K = ch.g.cols();
  const auto tau = pilots.phi.rows();
  const double rho_p = cfg.pilot_power_w;

  // Each UE's distorted pilot is common to all APs.
  const double amp = std::sqrt(tau * rho_p);
  Eigen::MatrixXcd tx(tau, K);
  for (Eigen::Index k = 0; k < K; ++k)
    for (Eigen::Index i = 0; i < tau; ++i)
      tx(i, k) = distort(amp * pilots.phi(i, k), cfg.xi_t, rho_p, streams.tx);

  ReceivedPilot out;
  out.y_p = tx * ch.g.transpose();  // tau x M, before AP impairments
  for (Eigen::Index m = 0; m < M; ++m) {
    const double gain = ch.g.row(m).squaredNorm();
    for (Eigen::Index i = 0; i < tau; ++i) {
      out.y_p(i, m) = distort(out.y_p(i, m), cfg.xi_r, rho_p * gain, streams.rx) +
                      streams.noise.cn(cfg.noise_w);
    }
  }
  return out;
}

ReceivedData receive_data(const ChannelRealization& ch, const Eigen::VectorXd& eta,
                          const SystemConfig& cfg, SignalStreams& streams) {
  const auto M = ch.g.rows();
  const auto K = ch.g.cols();
  if (eta.size() != K) throw std::invalid_argument("receive_data: eta size != K");
  const double rho_u = cfg.data_power_w;

  ReceivedData out;
  out.s.resize(K);
  out.w_t.resize(K);
  Eigen::VectorXcd tx(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    out.s(k) = streams.symbols.cn(1.0);
    const double p = eta(k) * rho_u;
    const cd clean = std::sqrt(p) * out.s(k);
    tx(k) = distort(clean, cfg.xi_t, p, streams.tx);
    out.w_t(k) = tx(k) - std::sqrt(cfg.xi_t) * clean;
  }

  out.y.resize(M);
  out.w_r.resize(M);
  out.n.resize(M);
  const Eigen::VectorXd power = (eta.array() * rho_u).matrix();
  for (Eigen::Index m = 0; m < M; ++m) {
    const cd clean = ch.g.row(m) * tx;
    const double cond = ch.g.row(m).cwiseAbs2() * power;
    const cd received = distort(clean, cfg.xi_r, cond, streams.rx);
    out.w_r(m) = received - std::sqrt(cfg.xi_r) * clean;
    out.n(m) = streams.noise.cn(cfg.noise_w);
    out.y(m) = received + out.n(m);
  }
  return out;
}

}  // namespace cfmimo
