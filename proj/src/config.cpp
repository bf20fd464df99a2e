#include "cfmimo/config.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "cfmimo/netmodel.hpp"

namespace cfmimo {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: '" + value + "'");
  }
}

int to_int(const std::string& key, const std::string& value) {
  int v = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw ConfigError("config key '" + key + "': not an integer: '" + value + "'");
  return v;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "1" || value == "true" || value == "yes") return true;
  if (value == "0" || value == "false" || value == "no") return false;
  throw ConfigError("config key '" + key + "': not a boolean: '" + value + "'");
}

}  // namespace

void SystemConfig::validate() const {
  if (num_aps < 1) throw ConfigError("M must be >= 1");
  if (num_ues < 1) throw ConfigError("K must be >= 1");
  if (pilot_len != num_ues) throw ConfigError("tau must equal K (orthogonal pilots)");
  if (pilot_len > coherence) throw ConfigError("tau must not exceed T");
  if (pilot_len == coherence) throw ConfigError("tau must be smaller than T");
  if (!(pilot_power_w > 0) || !(data_power_w > 0))
    throw ConfigError("rho_p and rho_u must be positive");
  if (!(noise_w > 0)) throw ConfigError("N must be positive");
  if (!(xi_t >= 0 && xi_t <= 1)) throw ConfigError("xi_t must lie in [0, 1]");
  if (!(xi_r >= 0 && xi_r <= 1)) throw ConfigError("xi_r must lie in [0, 1]");
  if (!(area_m > 0)) throw ConfigError("D must be positive");
  if (!(bandwidth_hz > 0)) throw ConfigError("bandwidth_hz must be positive");
  if (!(d0_m > 0) || !(d1_m > d0_m)) throw ConfigError("need 0 < d0_m < d1_m");
  if (!(sigma_sh_db >= 0)) throw ConfigError("sigma_sh_db must be >= 0");
}

SystemConfig default_config() {
  SystemConfig cfg;
  cfg.noise_w = noise_power(cfg);
  return cfg;
}

SystemConfig paper_scale_config() {
  SystemConfig cfg = default_config();
  cfg.num_aps = 200;
  cfg.num_ues = 20;
  cfg.pilot_len = 20;
  return cfg;
}

void apply_overrides(SystemConfig& cfg,
                     const std::map<std::string, std::string>& kv) {
  bool noise_given = false;
  bool tau_given = false;
  for (const auto& [key, value] : kv) {
    if (key == "M") cfg.num_aps = to_int(key, value);
    else if (key == "K") cfg.num_ues = to_int(key, value);
    else if (key == "T") cfg.coherence = to_int(key, value);
    else if (key == "tau") { cfg.pilot_len = to_int(key, value); tau_given = true; }
    else if (key == "rho_p") cfg.pilot_power_w = to_double(key, value);
    else if (key == "rho_u") cfg.data_power_w = to_double(key, value);
    else if (key == "xi_t") cfg.xi_t = to_double(key, value);
    else if (key == "xi_r") cfg.xi_r = to_double(key, value);
    else if (key == "N") { cfg.noise_w = to_double(key, value); noise_given = true; }
    else if (key == "D") cfg.area_m = to_double(key, value);
    else if (key == "bandwidth_hz") cfg.bandwidth_hz = to_double(key, value);
    else if (key == "noise_figure_db") cfg.noise_figure_db = to_double(key, value);
    else if (key == "carrier_freq_mhz") cfg.carrier_freq_mhz = to_double(key, value);
    else if (key == "h_ap_m") cfg.h_ap_m = to_double(key, value);
    else if (key == "h_ue_m") cfg.h_ue_m = to_double(key, value);
    else if (key == "d0_m") cfg.d0_m = to_double(key, value);
    else if (key == "d1_m") cfg.d1_m = to_double(key, value);
    else if (key == "sigma_sh_db") cfg.sigma_sh_db = to_double(key, value);
    else if (key == "path_loss_km") cfg.path_loss_km = to_bool(key, value);
    else if (key == "P_ap") cfg.ap_power_w = to_double(key, value);
    else if (key == "P_bh") cfg.fronthaul_w_per_gbps = to_double(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
  }
  if (!tau_given && kv.count("K")) cfg.pilot_len = cfg.num_ues;
  if (!noise_given &&
      (kv.count("bandwidth_hz") || kv.count("noise_figure_db") || cfg.noise_w <= 0))
    cfg.noise_w = noise_power(cfg);
}

SystemConfig parse_config(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    auto key = trim(line.substr(0, eq));
    auto value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": empty key or value");
    if (!kv.emplace(key, value).second)
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  SystemConfig cfg = default_config();
  apply_overrides(cfg, kv);
  cfg.validate();
  return cfg;
}

SystemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in);
}

std::string to_config_text(const SystemConfig& cfg) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "M = " << cfg.num_aps << "\n"
     << "K = " << cfg.num_ues << "\n"
     << "T = " << cfg.coherence << "\n"
     << "tau = " << cfg.pilot_len << "\n"
     << "rho_p = " << cfg.pilot_power_w << "\n"
     << "rho_u = " << cfg.data_power_w << "\n"
     << "xi_t = " << cfg.xi_t << "\n"
     << "xi_r = " << cfg.xi_r << "\n"
     << "N = " << cfg.noise_w << "\n"
     << "D = " << cfg.area_m << "\n"
     << "bandwidth_hz = " << cfg.bandwidth_hz << "\n"
     << "noise_figure_db = " << cfg.noise_figure_db << "\n"
     << "carrier_freq_mhz = " << cfg.carrier_freq_mhz << "\n"
     << "h_ap_m = " << cfg.h_ap_m << "\n"
     << "h_ue_m = " << cfg.h_ue_m << "\n"
     << "d0_m = " << cfg.d0_m << "\n"
     << "d1_m = " << cfg.d1_m << "\n"
     << "sigma_sh_db = " << cfg.sigma_sh_db << "\n"
     << "path_loss_km = " << (cfg.path_loss_km ? "true" : "false") << "\n"
     << "P_ap = " << cfg.ap_power_w << "\n"
     << "P_bh = " << cfg.fronthaul_w_per_gbps << "\n";
  return os.str();
}

}  // namespace cfmimo
