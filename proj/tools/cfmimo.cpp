// Experiment driver: sweeps, CDFs, oracle validation, power control and the
// high-SNR reports. Exit codes: 0 ok, 1 validation or run failure, 2 bad config.

#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cfmimo/allocation.hpp"
#include "cfmimo/experiment.hpp"
#include "cfmimo/netmodel.hpp"
#include "cfmimo/oracle.hpp"
#include "cfmimo/poweropt.hpp"
#include "cfmimo/rates.hpp"

using namespace cfmimo;

namespace {

constexpr int kOk = 0;
constexpr int kValidationFailed = 1;
constexpr int kBadConfig = 2;

struct Options {
  std::string config_path;
  std::uint64_t seed = 1;
  std::vector<std::string> overrides;
  std::vector<std::string> strategies{"cfe", "ecf-lb", "ecf-ub", "emcf"};
  std::string axis = "C";
  std::string grid = "0.5,1,2,4";
  double capacity = 1.0;
  int realizations = 20;
  std::string power = "full";
  std::string allocation = "proposed";
  std::string out;
  std::string summary_out;

  // validate
  long draws = 100000;
  int batches = 20;
  std::string fault_term;
  double fault_factor = 1.05;
  bool json = false;

  // power-opt, limits
  std::string strategy = "cfe";
  int realization = 0;
  double fraction = 0.5;
};

void add_common(CLI::App* cmd, Options& o) {
  cmd->add_option("--config", o.config_path, "scenario file (key = value lines)");
  cmd->add_option("--seed", o.seed, "master seed");
  cmd->add_option("--set", o.overrides, "config override key=value (repeatable)");
  cmd->add_option("--out", o.out, "output file (default stdout)");
}

void add_spec(CLI::App* cmd, Options& o) {
  cmd->add_option("--strategies", o.strategies, "cfe, ecf-lb, ecf-ub, emcf")->delimiter(',');
  cmd->add_option("--capacity", o.capacity, "C_m for every AP when not swept");
  cmd->add_option("--realizations", o.realizations, "geometry realizations");
  cmd->add_option("--power", o.power, "full, gp, sum-se");
  cmd->add_option("--allocation", o.allocation, "equal, proposed");
}

// Comma-separated numbers; an empty string gives an empty grid.
std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || item.find_first_not_of(" \t", used) != std::string::npos)
      throw ConfigError("grid value '" + item + "' is not a number");
    out.push_back(v);
  }
  return out;
}

ExperimentSpec make_spec(const Options& o) {
  ExperimentSpec spec;
  if (!o.config_path.empty()) {
    spec.cfg = load_config(o.config_path);
    spec.config_source = o.config_path;
  }
  std::map<std::string, std::string> kv;
  for (const auto& s : o.overrides) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + s + "' is not key=value");
    kv[s.substr(0, eq)] = s.substr(eq + 1);
  }
  apply_overrides(spec.cfg, kv);
  spec.strategies.clear();
  for (const auto& s : o.strategies) spec.strategies.push_back(parse_strategy(s));
  spec.axis = parse_sweep_axis(o.axis);
  spec.grid = parse_grid(o.grid);
  spec.capacity = o.capacity;
  spec.realizations = o.realizations;
  spec.power = parse_power_mode(o.power);
  spec.allocation = parse_allocation_mode(o.allocation);
  spec.seed = o.seed;
  spec.validate();
  return spec;
}

std::string command_line(int argc, char** argv) {
  std::string s;
  for (int i = 0; i < argc; ++i) s += (i ? " " : "") + std::string(argv[i]);
  return s;
}

// Writes to --out or stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw ConfigError("cannot open '" + path + "' for writing");
    }
  }
  std::ostream& get() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

int do_sweep(const Options& o, const std::string& cmd) {
  const auto spec = make_spec(o);
  const auto report = run_sweep(spec);
  Output out(o.out);
  write_header(out.get(), spec, cmd);
  write_sweep_csv(out.get(), report);
  if (!o.summary_out.empty()) {
    Output summary(o.summary_out);
    write_header(summary.get(), spec, cmd);
    write_summary_csv(summary.get(), report);
  }
  for (const auto& r : report.rows)
    if (!r.error.empty())
      std::cerr << "point " << r.point << " realization " << r.realization << ' '
                << to_string(r.strategy) << ": " << r.error << '\n';
  return kOk;
}

int do_cdf(const Options& o, const std::string& cmd) {
  const auto spec = make_spec(o);
  const auto report = run_cdf(spec);
  Output out(o.out);
  write_header(out.get(), spec, cmd);
  write_cdf_csv(out.get(), report);
  Output summary(o.summary_out);
  if (!o.summary_out.empty()) write_header(summary.get(), spec, cmd);
  write_percentile_csv(o.summary_out.empty() ? std::cerr : summary.get(), report);
  return kOk;
}

int do_validate(const Options& o, const std::string& cmd) {
  const auto spec = make_spec(o);
  OracleOptions opts;
  opts.draws = o.draws;
  opts.batches = o.batches;
  opts.seed = o.seed;
  if (!o.fault_term.empty()) opts.fault = {o.fault_term, o.fault_factor};
  const auto report = run_validation(spec, opts);
  Output out(o.out);
  if (o.json) {
    write_report_json(out.get(), report.rows);
  } else {
    write_header(out.get(), spec, cmd);
    write_report_csv(out.get(), report.rows);
  }
  int failed = 0;
  for (const auto& r : report.rows)
    if (!r.pass) {
      ++failed;
      std::cerr << "FAIL " << r.strategy << ' ' << r.term << " ue " << r.ue << ": empirical "
                << r.empirical << " closed form " << r.closed_form << '\n';
    }
  std::cerr << report.rows.size() - static_cast<std::size_t>(failed) << '/'
            << report.rows.size() << " pairings pass\n";
  return report.pass ? kOk : kValidationFailed;
}

int do_power_opt(const Options& o, const std::string& cmd) {
  const auto spec = make_spec(o);
  const Strategy s = parse_strategy(o.strategy);
  const auto map = make_scenario(spec.cfg, geometry_seed(spec.seed, o.realization));
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(spec.cfg.num_ues);
  const Eigen::VectorXd cap = Eigen::VectorXd::Constant(spec.cfg.num_aps, spec.capacity);
  const auto plan = allocate(s, spec.allocation, cap, map.beta, ones, spec.cfg);
  const auto gp = build_gp(map.beta, plan, spec.cfg);
  const auto sol = spec.power == PowerMode::kSumSe ? optimize_sum_se(gp, spec.cfg)
                                                   : solve_gp(gp, spec.cfg);
  Output out(o.out);
  write_header(out.get(), spec, cmd);
  write_gp_solution(out.get(), sol);
  out.get() << std::setprecision(10) << "# sse full power " << gp_sum_se(gp, ones, spec.cfg)
            << " optimized " << gp_sum_se(gp, sol.eta, spec.cfg) << '\n';
  return kOk;
}

int do_threshold(const Options& o, const std::string& cmd) {
  const auto spec = make_spec(o);
  const auto map = make_scenario(spec.cfg, geometry_seed(spec.seed, o.realization));
  Output out(o.out);
  write_header(out.get(), spec, cmd);
  out.get() << std::setprecision(10)
            << "ap,ue,theta1,theta2,gamma_inf,side_conditions,crossover_exists,closed_form,"
               "crossover\n";
  for (int m = 0; m < map.num_aps(); ++m)
    for (const auto& r : prop1_threshold(map.beta.row(m).transpose(), spec.cfg))
      out.get() << m << ',' << r.ue << ',' << r.theta1 << ',' << r.theta2 << ','
                << r.gamma_inf << ',' << r.side_conditions << ',' << r.crossover_exists << ','
                << r.closed_form << ',' << r.crossover << '\n';
  return kOk;
}

int do_limits(const Options& o, const std::string& cmd) {
  auto spec = make_spec(o);
  spec.cfg.num_ues = spec.cfg.pilot_len = 1;
  spec.cfg.validate();
  if (!(o.fraction >= 0 && o.fraction <= 1)) throw ConfigError("fraction must lie in [0, 1]");
  const auto map = make_scenario(spec.cfg, geometry_seed(spec.seed, o.realization));
  const Eigen::VectorXd cp = Eigen::VectorXd::Constant(spec.cfg.num_aps, o.fraction * spec.capacity);
  const Eigen::VectorXd cd =
      Eigen::VectorXd::Constant(spec.cfg.num_aps, (1.0 - o.fraction) * spec.capacity);
  Output out(o.out);
  write_header(out.get(), spec, cmd);
  out.get() << std::setprecision(12) << "variant,x0,x1,x2,x3,a,b,a_ecf,b_ecf,sinr_cfe,sinr_ecf\n";
  for (auto v : {FormulaVariant::kModel, FormulaVariant::kPrinted}) {
    const auto r = prop2_limits(map.beta, cp, cd, spec.cfg, v);
    out.get() << (v == FormulaVariant::kModel ? "model" : "printed") << ',' << r.x0 << ','
              << r.x1 << ',' << r.x2 << ',' << r.x3 << ',' << r.a << ',' << r.b << ','
              << r.a_ecf << ',' << r.b_ecf << ',' << r.sinr_cfe << ',' << r.sinr_ecf << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uplink cell-free massive MIMO with limited fronthaul and hardware impairments"};
  app.require_subcommand(1);
  Options o;
  const std::string cmd = command_line(argc, argv);

  auto* sweep = app.add_subcommand("sweep", "SSE and EE over a parameter grid");
  add_common(sweep, o);
  add_spec(sweep, o);
  sweep->add_option("--axis", o.axis, "C, xi, xi_t, xi_r, M, K, rho");
  sweep->add_option("--grid", o.grid, "comma-separated grid values");
  sweep->add_option("--summary", o.summary_out, "per-point summary CSV");

  auto* cdf = app.add_subcommand("cdf", "optimized vs baseline SSE and per-UE SE CDFs");
  add_common(cdf, o);
  add_spec(cdf, o);
  cdf->add_option("--summary", o.summary_out, "percentile table CSV (default stderr)");

  auto* validate = app.add_subcommand("validate", "Monte-Carlo oracle against the closed forms");
  add_common(validate, o);
  add_spec(validate, o);
  validate->add_option("--draws", o.draws, "channel draws per strategy");
  validate->add_option("--batches", o.batches, "batches for the jackknife");
  validate->add_option("--fault-term", o.fault_term, "scale one closed-form term (test hook)");
  validate->add_option("--fault-factor", o.fault_factor, "factor for --fault-term");
  validate->add_flag("--json", o.json, "JSON report instead of CSV");

  auto* power = app.add_subcommand("power-opt", "power control on one geometry");
  add_common(power, o);
  add_spec(power, o);
  power->add_option("--strategy", o.strategy, "cfe, ecf-lb, ecf-ub");
  power->add_option("--realization", o.realization, "geometry index");

  auto* threshold = app.add_subcommand("threshold", "CSI-capacity threshold per AP and UE");
  add_common(threshold, o);
  threshold->add_option("--realization", o.realization, "geometry index");

  auto* limits = app.add_subcommand("limits", "single-user high-SNR SINR limits");
  add_common(limits, o);
  limits->add_option("--capacity", o.capacity, "C_m for every AP");
  limits->add_option("--fraction", o.fraction, "C_p / C");
  limits->add_option("--realization", o.realization, "geometry index");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kBadConfig;
  }

  try {
    if (*sweep) return do_sweep(o, cmd);
    if (*cdf) return do_cdf(o, cmd);
    if (*validate) {
      if (validate->count("--power") == 0) o.power = "full";
      return do_validate(o, cmd);
    }
    if (*power) {
      if (power->count("--power") == 0) o.power = "gp";
      return do_power_opt(o, cmd);
    }
    if (*threshold) return do_threshold(o, cmd);
    if (*limits) return do_limits(o, cmd);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kBadConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "bad argument: " << e.what() << '\n';
    return kBadConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidationFailed;
  }
  return kOk;
}
