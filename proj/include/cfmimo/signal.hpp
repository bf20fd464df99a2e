#pragma once

#include <complex>
#include <cstdint>

#include <Eigen/Dense>

#include "cfmimo/config.hpp"
#include "cfmimo/random.hpp"

namespace cfmimo {

using cd = std::complex<double>;

/// g(m, k) = sqrt(beta_mk) * h_mk with h_mk ~ CN(0, 1).
struct ChannelRealization {
  Eigen::MatrixXcd g;
};

/// tau x K matrix with orthonormal columns.
struct PilotBook {
  Eigen::MatrixXcd phi;
};

/// One random source per physical effect, so any of them can be inspected or
/// silenced independently.
struct SignalStreams {
  SignalStreams(std::uint64_t master, std::uint64_t batch)
      : channel(master, Stream::kChannel, batch),
        tx(master, Stream::kTxDistortion, batch),
        rx(master, Stream::kRxDistortion, batch),
        noise(master, Stream::kNoise, batch),
        quant(master, Stream::kQuantization, batch),
        symbols(master, Stream::kSymbols, batch) {}

  Rng channel;
  Rng tx;
  Rng rx;
  Rng noise;
  Rng quant;
  Rng symbols;
};

/// Pilot signal at every AP: column m is the tau-vector y_p,m.
struct ReceivedPilot {
  Eigen::MatrixXcd y_p;
};

/// One data symbol period. The impairment components are returned alongside
/// y so the oracle can evaluate each interference term from its definition.
struct ReceivedData {
  Eigen::VectorXcd y;    // M
  Eigen::VectorXcd s;    // K transmitted symbols
  Eigen::VectorXcd w_t;  // K transmit distortions
  Eigen::VectorXcd w_r;  // M receive distortions
  Eigen::VectorXcd n;    // M thermal noise samples
};

/// Unitary DFT columns: every entry has magnitude 1/sqrt(tau), so each pilot
/// sample carries the same power.
PilotBook make_pilots(int tau, int num_ues);

ChannelRealization draw_channels(const Eigen::MatrixXd& beta, Rng& rng);
ChannelRealization draw_channels(const Eigen::MatrixXd& beta, std::uint64_t seed);

/// sqrt(xi) * x + z, z ~ CN(0, (1 - xi) * power) where `power` is E|x|^2
/// (conditional on whatever the caller conditions on).
cd distort(cd x, double xi, double power, Rng& rng);

ReceivedPilot receive_pilot(const ChannelRealization& ch, const PilotBook& pilots,
                            const SystemConfig& cfg, SignalStreams& streams);

ReceivedData receive_data(const ChannelRealization& ch, const Eigen::VectorXd& eta,
                          const SystemConfig& cfg, SignalStreams& streams);

}  // namespace cfmimo
