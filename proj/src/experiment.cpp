#include "cfmimo/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "cfmimo/allocation.hpp"
#include "cfmimo/netmodel.hpp"
#include "cfmimo/poweropt.hpp"
#include "cfmimo/random.hpp"
#include "cfmimo/rates.hpp"

#ifndef CFMIMO_VERSION
#define CFMIMO_VERSION "unknown"
#endif

namespace cfmimo {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean(const std::vector<double>& v) {
  if (v.empty()) return kNaN;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

bool is_integer(double v) { return std::floor(v) == v; }

}  // namespace

std::string to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::kCapacity: return "C";
    case SweepAxis::kXi: return "xi";
    case SweepAxis::kXiT: return "xi_t";
    case SweepAxis::kXiR: return "xi_r";
    case SweepAxis::kAps: return "M";
    case SweepAxis::kUes: return "K";
    case SweepAxis::kRho: return "rho";
  }
  return "?";
}

std::string to_string(PowerMode p) {
  switch (p) {
    case PowerMode::kFull: return "full";
    case PowerMode::kGp: return "gp";
    case PowerMode::kSumSe: return "sum-se";
  }
  return "?";
}

SweepAxis parse_sweep_axis(const std::string& name) {
  for (SweepAxis a : {SweepAxis::kCapacity, SweepAxis::kXi, SweepAxis::kXiT, SweepAxis::kXiR,
                      SweepAxis::kAps, SweepAxis::kUes, SweepAxis::kRho})
    if (to_string(a) == name) return a;
  throw ConfigError("unknown sweep axis '" + name + "' (C, xi, xi_t, xi_r, M, K, rho)");
}

PowerMode parse_power_mode(const std::string& name) {
  for (PowerMode p : {PowerMode::kFull, PowerMode::kGp, PowerMode::kSumSe})
    if (to_string(p) == name) return p;
  throw ConfigError("unknown power mode '" + name + "' (full, gp, sum-se)");
}

SystemConfig ExperimentSpec::config_at(double value) const {
  SystemConfig c = cfg;
  switch (axis) {
    case SweepAxis::kCapacity: break;
    case SweepAxis::kXi: c.xi_t = c.xi_r = value; break;
    case SweepAxis::kXiT: c.xi_t = value; break;
    case SweepAxis::kXiR: c.xi_r = value; break;
    case SweepAxis::kAps: c.num_aps = static_cast<int>(value); break;
    case SweepAxis::kUes: c.num_ues = c.pilot_len = static_cast<int>(value); break;
    case SweepAxis::kRho: c.pilot_power_w = c.data_power_w = value; break;
  }
  return c;
}

double ExperimentSpec::capacity_at(double value) const {
  return axis == SweepAxis::kCapacity ? value : capacity;
}

void ExperimentSpec::validate() const {
  if (grid.empty()) throw ConfigError("sweep grid is empty");
  if (strategies.empty()) throw ConfigError("no strategies requested");
  if (realizations < 1) throw ConfigError("realizations must be >= 1");
  if (!(capacity >= 0)) throw ConfigError("capacity must be >= 0");
  cfg.validate();
  for (double v : grid) {
    if (!std::isfinite(v)) throw ConfigError("grid values must be finite");
    if ((axis == SweepAxis::kAps || axis == SweepAxis::kUes) && (!is_integer(v) || v < 1))
      throw ConfigError(to_string(axis) + " grid values must be positive integers");
    if (axis == SweepAxis::kCapacity && v < 0) throw ConfigError("C grid values must be >= 0");
    config_at(v).validate();
  }
}

std::uint64_t geometry_seed(std::uint64_t master, int realization) {
  return derive_seed(master, Stream::kGeometry, static_cast<std::uint64_t>(realization));
}

RunResult run_pipeline(Strategy strategy, AllocationMode mode, PowerMode power,
                       const Eigen::MatrixXd& beta, double capacity, const SystemConfig& cfg) {
  const auto M = beta.rows();
  const auto K = beta.cols();
  const Eigen::VectorXd cap = Eigen::VectorXd::Constant(M, capacity);
  RunResult out;
  out.eta = Eigen::VectorXd::Ones(K);

  FronthaulPlan plan = allocate(strategy, mode, cap, beta, out.eta, cfg);
  out.fraction = strategy == Strategy::kEmcf || capacity <= 0
                     ? kNaN
                     : plan.csi_capacity(0) / plan.capacity(0);

  if (power != PowerMode::kFull) {
    if (strategy == Strategy::kEmcf) {
      out.note = "power control n/a for emcf";
    } else {
      GpProblem gp;
      try {
        gp = build_gp(beta, plan, cfg);
      } catch (const GpInfeasible&) {
        // Negative lower-bound corrections: optimize the upper-bound problem.
        FronthaulPlan ub = plan;
        ub.strategy = Strategy::kEcfUpper;
        gp = build_gp(beta, ub, cfg);
        out.note = "lb gp infeasible, ub coefficients";
      }
      try {
        out.eta = power == PowerMode::kGp ? solve_gp(gp, cfg).eta : optimize_sum_se(gp, cfg).eta;
      } catch (const GpNotConverged& e) {
        out.eta = e.best().eta;
        out.note += (out.note.empty() ? "" : "; ") + std::string(e.what());
      }
      refresh_for_power(plan, mode, beta, out.eta, cfg);
    }
  }

  const auto rows = evaluate(beta, plan, out.eta, cfg);
  out.rates.resize(K);
  out.sinr.resize(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& r = rows[static_cast<std::size_t>(k)];
    out.rates(k) = r.clamped ? 0.0 : r.rate;
    out.sinr(k) = r.clamped ? 0.0 : r.sinr;
  }
  out.sse = sum_se(out.rates);
  out.ee = energy_efficiency(out.rates, cap, out.eta, cfg);
  return out;
}

RateReport run_sweep(const ExperimentSpec& spec) {
  spec.validate();
  RateReport report;
  for (int p = 0; p < static_cast<int>(spec.grid.size()); ++p) {
    const double v = spec.grid[static_cast<std::size_t>(p)];
    const SystemConfig cfg = spec.config_at(v);
    const double capacity = spec.capacity_at(v);
    for (int r = 0; r < spec.realizations; ++r) {
      const auto map = make_scenario(cfg, geometry_seed(spec.seed, r));
      for (Strategy s : spec.strategies) {
        RateRow row{p, v, r, s, {}, {}};
        try {
          row.result = run_pipeline(s, spec.allocation, spec.power, map.beta, capacity, cfg);
        } catch (const std::exception& e) {
          row.error = e.what();
        }
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

double Cdf::percentile(double p) const {
  if (samples.empty()) return kNaN;
  const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(samples.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, samples.size() - 1);
  return samples[lo] + (pos - static_cast<double>(lo)) * (samples[hi] - samples[lo]);
}

std::vector<SummaryRow> RateReport::summary() const {
  std::map<std::pair<int, int>, std::vector<const RateRow*>> groups;
  for (const auto& r : rows) groups[{r.point, static_cast<int>(r.strategy)}].push_back(&r);
  std::vector<SummaryRow> out;
  for (const auto& [key, members] : groups) {
    SummaryRow s;
    s.point = key.first;
    s.strategy = static_cast<Strategy>(key.second);
    s.value = members.front()->value;
    Cdf sse;
    std::vector<double> ee;
    for (const RateRow* r : members) {
      if (!r->error.empty()) continue;
      sse.samples.push_back(r->result.sse);
      ee.push_back(r->result.ee);
    }
    std::sort(sse.samples.begin(), sse.samples.end());
    s.ok = static_cast<int>(ee.size());
    s.mean_sse = mean(sse.samples);
    s.mean_ee = mean(ee);
    s.p05_sse = sse.percentile(5);
    s.p50_sse = sse.percentile(50);
    s.p95_sse = sse.percentile(95);
    out.push_back(s);
  }
  return out;
}

double RateReport::mean_sse(int point, Strategy strategy) const {
  std::vector<double> v;
  for (const auto& r : rows)
    if (r.point == point && r.strategy == strategy && r.error.empty()) v.push_back(r.result.sse);
  return mean(v);
}

CdfReport run_cdf(const ExperimentSpec& spec, bool allow_small) {
  spec.validate();
  if (!allow_small && spec.realizations < 100)
    throw ConfigError("cdf needs at least 100 realizations");
  const PowerMode optimized_power =
      spec.power == PowerMode::kFull ? PowerMode::kGp : spec.power;
  CdfReport report;
  for (Strategy s : spec.strategies) {
    report.series.push_back({s, "optimized", {}, {}});
    report.series.push_back({s, "baseline", {}, {}});
  }
  for (int r = 0; r < spec.realizations; ++r) {
    const auto map = make_scenario(spec.cfg, geometry_seed(spec.seed, r));
    for (std::size_t i = 0; i < report.series.size(); ++i) {
      auto& series = report.series[i];
      const bool optimized = i % 2 == 0;
      try {
        const auto res = optimized
                             ? run_pipeline(series.strategy, AllocationMode::kProposed,
                                            optimized_power, map.beta, spec.capacity, spec.cfg)
                             : run_pipeline(series.strategy, AllocationMode::kEqual,
                                            PowerMode::kFull, map.beta, spec.capacity, spec.cfg);
        series.sse.samples.push_back(res.sse);
        for (double x : res.rates) series.per_ue.samples.push_back(x);
      } catch (const std::exception& e) {
        report.errors.push_back("realization " + std::to_string(r) + " " +
                                to_string(series.strategy) + " " + series.label + ": " + e.what());
      }
    }
  }
  for (auto& s : report.series) {
    std::sort(s.sse.samples.begin(), s.sse.samples.end());
    std::sort(s.per_ue.samples.begin(), s.per_ue.samples.end());
  }
  return report;
}

ValidationReport run_validation(const ExperimentSpec& spec, const OracleOptions& opts) {
  spec.validate();
  const SystemConfig& cfg = spec.cfg;
  const auto map = make_scenario(cfg, geometry_seed(spec.seed, 0));
  const Eigen::VectorXd cap = Eigen::VectorXd::Constant(cfg.num_aps, spec.capacity);
  const Eigen::VectorXd eta = Eigen::VectorXd::Ones(cfg.num_ues);
  ValidationReport out;
  const auto append = [&](const std::vector<McEstimate>& rows) {
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
  };
  bool ecf_done = false;
  for (Strategy s : spec.strategies) {
    const FronthaulPlan plan = allocate(s, spec.allocation, cap, map.beta, eta, cfg);
    if (s == Strategy::kCfe) {
      append(mc_terms_cfe(map.beta, plan, eta, cfg, opts).rows);
    } else if (is_ecf(s)) {
      // One simulation covers both bounds.
      if (ecf_done) continue;
      ecf_done = true;
      append(mc_terms_ecf(map.beta, plan, eta, cfg, opts).rows);
    } else {
      append(mc_emcf(map.beta, plan, eta, cfg, opts).rows);
    }
  }
  out.pass = std::all_of(out.rows.begin(), out.rows.end(),
                         [](const McEstimate& r) { return r.pass; });
  return out;
}

std::string version_string() { return CFMIMO_VERSION; }

void write_header(std::ostream& os, const ExperimentSpec& spec, const std::string& command) {
  os << "# cfmimo " << version_string() << '\n';
  os << "# command: " << command << '\n';
  os << "# seed: " << spec.seed << '\n';
  os << "# config source: " << spec.config_source << '\n';
  os << "# strategies:";
  for (Strategy s : spec.strategies) os << ' ' << to_string(s);
  os << '\n';
  os << "# axis: " << to_string(spec.axis) << "  grid:";
  for (double v : spec.grid) os << ' ' << v;
  os << '\n';
  os << "# capacity: " << spec.capacity << "  realizations: " << spec.realizations
     << "  allocation: " << to_string(spec.allocation)
     << "  power: " << to_string(spec.power) << '\n';
  os << "# pipeline: stats -> allocation -> power control -> rates\n";
  std::istringstream text(to_config_text(spec.cfg));
  for (std::string line; std::getline(text, line);) os << "#   " << line << '\n';
}

void write_sweep_csv(std::ostream& os, const RateReport& r) {
  os << std::setprecision(10);
  os << "point,value,realization,strategy,ue,rate,sinr,eta,sse,ee,fraction,note,error\n";
  for (const auto& row : r.rows) {
    const auto prefix = [&](std::ostream& o) {
      o << row.point << ',' << row.value << ',' << row.realization << ','
        << to_string(row.strategy) << ',';
    };
    if (!row.error.empty()) {
      prefix(os);
      os << ",,,,,,,,\"" << row.error << "\"\n";
      continue;
    }
    const auto& res = row.result;
    for (Eigen::Index k = 0; k < res.rates.size(); ++k) {
      prefix(os);
      os << k << ',' << res.rates(k) << ',' << res.sinr(k) << ',' << res.eta(k) << ','
         << res.sse << ',' << res.ee << ',' << res.fraction << ",\"" << res.note << "\",\n";
    }
  }
}

void write_summary_csv(std::ostream& os, const RateReport& r) {
  os << std::setprecision(10);
  os << "point,value,strategy,ok,mean_sse,mean_ee,p05_sse,p50_sse,p95_sse\n";
  for (const auto& s : r.summary())
    os << s.point << ',' << s.value << ',' << to_string(s.strategy) << ',' << s.ok << ','
       << s.mean_sse << ',' << s.mean_ee << ',' << s.p05_sse << ',' << s.p50_sse << ','
       << s.p95_sse << '\n';
}

void write_cdf_csv(std::ostream& os, const CdfReport& r) {
  os << std::setprecision(10);
  os << "strategy,series,quantity,index,value,cdf\n";
  for (const auto& s : r.series)
    for (const auto* c : {&s.sse, &s.per_ue}) {
      const auto n = c->samples.size();
      for (std::size_t i = 0; i < n; ++i)
        os << to_string(s.strategy) << ',' << s.label << ',' << (c == &s.sse ? "sse" : "ue_se")
           << ',' << i << ',' << c->samples[i] << ','
           << static_cast<double>(i + 1) / static_cast<double>(n) << '\n';
    }
  for (const auto& e : r.errors) os << "# error: " << e << '\n';
}

void write_percentile_csv(std::ostream& os, const CdfReport& r) {
  os << std::setprecision(10);
  os << "strategy,series,quantity,p05,p10,p50,p90,p95,mean\n";
  for (const auto& s : r.series)
    for (const auto* c : {&s.sse, &s.per_ue})
      os << to_string(s.strategy) << ',' << s.label << ',' << (c == &s.sse ? "sse" : "ue_se")
         << ',' << c->percentile(5) << ',' << c->percentile(10) << ',' << c->percentile(50)
         << ',' << c->percentile(90) << ',' << c->percentile(95) << ','
         << mean(c->samples) << '\n';
}

}  // namespace cfmimo
