#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cfmimo/config.hpp"
#include "cfmimo/oracle.hpp"
#include "cfmimo/plan.hpp"

namespace cfmimo {

/// Parameter varied along a sweep. kXi sets xi_t and xi_r together; kRho sets
/// the pilot and data powers together.
enum class SweepAxis { kCapacity, kXi, kXiT, kXiR, kAps, kUes, kRho };

/// kGp maximizes prod SINR; kSumSe runs successive GPs on
/// the sum-SE objective.
enum class PowerMode { kFull, kGp, kSumSe };

std::string to_string(SweepAxis a);
std::string to_string(PowerMode p);
SweepAxis parse_sweep_axis(const std::string& name);
PowerMode parse_power_mode(const std::string& name);

struct ExperimentSpec {
  SystemConfig cfg = default_config();
  std::string config_source = "defaults";
  std::vector<Strategy> strategies{Strategy::kCfe, Strategy::kEcfLower, Strategy::kEcfUpper,
                                   Strategy::kEmcf};
  SweepAxis axis = SweepAxis::kCapacity;
  std::vector<double> grid{0.5, 1.0, 2.0, 4.0};
  double capacity = 1.0;  // C_m for every AP when the axis is not kCapacity
  int realizations = 20;
  PowerMode power = PowerMode::kFull;
  AllocationMode allocation = AllocationMode::kProposed;
  std::uint64_t seed = 1;

  /// Throws ConfigError on an empty grid, no strategies, realizations < 1, or
  /// a grid value the axis cannot take.
  void validate() const;

  /// Scenario at one grid point.
  SystemConfig config_at(double value) const;
  double capacity_at(double value) const;
};

/// Geometry seed of realization r; shared by every grid point and strategy.
std::uint64_t geometry_seed(std::uint64_t master, int realization);

/// One strategy on one geometry: allocate at full power, optionally power
/// control, re-derive the power-dependent distortions, evaluate.
struct RunResult {
  Eigen::VectorXd rates;
  Eigen::VectorXd sinr;
  Eigen::VectorXd eta;
  double sse = 0.0;
  double ee = 0.0;
  double fraction = 0.0;  // C_p / C (NaN for EMCF and dark links)
  std::string note;       // e.g. power-control fallbacks
};

RunResult run_pipeline(Strategy strategy, AllocationMode mode, PowerMode power,
                       const Eigen::MatrixXd& beta, double capacity, const SystemConfig& cfg);

struct RateRow {
  int point = 0;
  double value = 0.0;
  int realization = 0;
  Strategy strategy = Strategy::kCfe;
  RunResult result;
  std::string error;  // non-empty: the pipeline threw and `result` is empty
};

struct SummaryRow {
  int point = 0;
  double value = 0.0;
  Strategy strategy = Strategy::kCfe;
  int ok = 0;       // realizations that produced a result
  double mean_sse = 0.0;
  double mean_ee = 0.0;
  double p05_sse = 0.0;
  double p50_sse = 0.0;
  double p95_sse = 0.0;
};

struct RateReport {
  std::vector<RateRow> rows;  // sorted by (point, realization, strategy)
  std::vector<SummaryRow> summary() const;
  /// Mean SSE of a strategy at a grid point (NaN if no realization succeeded).
  double mean_sse(int point, Strategy strategy) const;
};

RateReport run_sweep(const ExperimentSpec& spec);

/// Empirical distribution of one quantity: sorted samples and percentiles.
struct Cdf {
  std::vector<double> samples;
  double percentile(double p) const;  // linear interpolation, p in [0, 100]
};

struct CdfSeries {
  Strategy strategy = Strategy::kCfe;
  std::string label;  // "optimized" or "baseline"
  Cdf sse;
  Cdf per_ue;
};

/// Optimized (proposed allocation + power control) against baseline (equal
/// split, full power) over spec.realizations geometries at spec.capacity.
struct CdfReport {
  std::vector<CdfSeries> series;
  std::vector<std::string> errors;
};

/// Requires realizations >= 100 unless `allow_small` (tests).
CdfReport run_cdf(const ExperimentSpec& spec, bool allow_small = false);

/// Oracle pairings on the first geometry at spec.capacity and full power.
struct ValidationReport {
  std::vector<McEstimate> rows;
  bool pass = true;
};

ValidationReport run_validation(const ExperimentSpec& spec, const OracleOptions& opts);

/// "git describe"-style string fixed at configure time.
std::string version_string();

/// '#'-prefixed block: version, command, seed, spec fields and the full config.
void write_header(std::ostream& os, const ExperimentSpec& spec, const std::string& command);

void write_sweep_csv(std::ostream& os, const RateReport& r);
void write_summary_csv(std::ostream& os, const RateReport& r);
void write_cdf_csv(std::ostream& os, const CdfReport& r);
void write_percentile_csv(std::ostream& os, const CdfReport& r);

}  // namespace cfmimo
