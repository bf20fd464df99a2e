#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>

namespace cfmimo {

/// Raised for malformed or out-of-range scenario parameters.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scalar model parameters of one uplink scenario. Powers in watts, lengths in
/// meters; `noise_w` is filled from bandwidth and noise figure unless given.
struct SystemConfig {
  int num_aps = 50;            // M
  int num_ues = 5;             // K
  int coherence = 200;         // T, samples
  int pilot_len = 5;           // tau, equals K
  double pilot_power_w = 0.1;  // rho_p
  double data_power_w = 0.1;   // rho_u
  double xi_t = 1.0;           // UE hardware quality
  double xi_r = 1.0;           // AP hardware quality
  double noise_w = 0.0;        // N
  double area_m = 1000.0;      // D
  double bandwidth_hz = 20e6;
  double noise_figure_db = 9.0;
  double carrier_freq_mhz = 1900.0;
  double h_ap_m = 15.0;
  double h_ue_m = 1.65;
  double d0_m = 10.0;
  double d1_m = 50.0;
  double sigma_sh_db = 8.0;
  // Three-slope model evaluated with distances in km (the model's native unit).
  bool path_loss_km = true;
  double ap_power_w = 0.2;            // P_m
  double fronthaul_w_per_gbps = 0.25; // P_bh,m

  /// Throws ConfigError when an invariant does not hold.
  void validate() const;

  /// Pre-log factor (T - tau) / T.
  double data_fraction() const {
    return static_cast<double>(coherence - pilot_len) / coherence;
  }
};

/// Desk-scale defaults with N derived from the thermal-noise model.
SystemConfig default_config();

/// Full-scale preset (M = 200, K = 20).
SystemConfig paper_scale_config();

/// Parses `key = value` lines ('#' starts a comment). Keys mirror the field
/// names M, K, T, tau, rho_p, rho_u, xi_t, xi_r, N, D, bandwidth_hz,
/// noise_figure_db, carrier_freq_mhz, h_ap_m, h_ue_m, d0_m, d1_m, sigma_sh_db,
/// path_loss_km, P_ap, P_bh. Unset keys keep their defaults; if N is absent it
/// is derived; if tau is absent it follows K.
SystemConfig parse_config(std::istream& in);
SystemConfig load_config(const std::filesystem::path& path);

/// Applies overrides in the same key space as the config file.
void apply_overrides(SystemConfig& cfg,
                     const std::map<std::string, std::string>& kv);

/// Serializes to the config-file format (round-trips through parse_config).
std::string to_config_text(const SystemConfig& cfg);

}  // namespace cfmimo
