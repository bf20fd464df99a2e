#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>

#include "cfmimo/experiment.hpp"

using namespace cfmimo;

namespace {

ExperimentSpec desk(int realizations) {
  ExperimentSpec spec;
  spec.cfg.num_aps = 20;
  spec.cfg.num_ues = spec.cfg.pilot_len = 4;
  spec.realizations = realizations;
  return spec;
}

std::string sweep_csv(const ExperimentSpec& spec) {
  std::ostringstream os;
  write_sweep_csv(os, run_sweep(spec));
  return os.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CFMIMO_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("sweeps are reproducible") {
  ExperimentSpec spec = desk(3);
  spec.grid = {0.5, 2.0};
  const std::string a = sweep_csv(spec);
  CHECK(a == sweep_csv(spec));
  spec.seed = 2;
  CHECK(a != sweep_csv(spec));
}

TEST_CASE("sum SE grows with fronthaul capacity") {
  ExperimentSpec spec = desk(10);
  spec.cfg.xi_t = spec.cfg.xi_r = 0.9;
  spec.grid = {0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  const auto report = run_sweep(spec);
  for (Strategy s : spec.strategies)
    for (int p = 1; p < static_cast<int>(spec.grid.size()); ++p) {
      INFO(to_string(s) << " point " << p);
      CHECK(report.mean_sse(p, s) >= report.mean_sse(p - 1, s) - 1e-9);
    }
  for (const auto& row : report.rows) CHECK(row.error.empty());
}

TEST_CASE("transmitter impairments cost more than receiver impairments") {
  ExperimentSpec spec = desk(10);
  spec.capacity = 4.0;
  spec.grid = {0.8};
  spec.axis = SweepAxis::kXiT;
  const auto t = run_sweep(spec);
  spec.axis = SweepAxis::kXiR;
  const auto r = run_sweep(spec);
  for (Strategy s : spec.strategies) {
    INFO(to_string(s));
    CHECK(t.mean_sse(0, s) < r.mean_sse(0, s));
  }
}

TEST_CASE("sweep axes set the scenario") {
  ExperimentSpec spec = desk(1);
  spec.axis = SweepAxis::kXi;
  CHECK(spec.config_at(0.7).xi_t == 0.7);
  CHECK(spec.config_at(0.7).xi_r == 0.7);
  spec.axis = SweepAxis::kUes;
  CHECK(spec.config_at(6).num_ues == 6);
  CHECK(spec.config_at(6).pilot_len == 6);
  spec.axis = SweepAxis::kCapacity;
  CHECK(spec.capacity_at(3.0) == 3.0);
  spec.axis = SweepAxis::kAps;
  CHECK(spec.capacity_at(3.0) == spec.capacity);
}

TEST_CASE("invalid specs are rejected") {
  ExperimentSpec spec = desk(1);
  spec.grid.clear();
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = desk(0);
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = desk(1);
  spec.strategies.clear();
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = desk(1);
  spec.axis = SweepAxis::kUes;
  spec.grid = {2.5};
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = desk(1);
  spec.grid = {-1.0};
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  CHECK_THROWS(run_cdf(desk(10)));
}

TEST_CASE("power control and allocation beat the baseline in the tail") {
  ExperimentSpec spec = desk(40);
  spec.capacity = 1.0;
  spec.power = PowerMode::kSumSe;
  spec.strategies = {Strategy::kCfe, Strategy::kEcfUpper};
  const auto report = run_cdf(spec, true);
  REQUIRE(report.series.size() == 4);
  for (const auto& s : report.series) {
    const auto& v = s.sse.samples;
    CHECK(v.size() == 40);
    for (std::size_t i = 1; i < v.size(); ++i) CHECK(v[i - 1] <= v[i]);
    CHECK(s.per_ue.samples.size() == 160);
  }
  for (Strategy st : spec.strategies) {
    const CdfSeries* opt = nullptr;
    const CdfSeries* base = nullptr;
    for (const auto& s : report.series)
      if (s.strategy == st) (s.label == "optimized" ? opt : base) = &s;
    REQUIRE(opt);
    REQUIRE(base);
    CHECK(opt->sse.percentile(5) >= base->sse.percentile(5));
    CHECK(opt->sse.percentile(50) >= base->sse.percentile(50));
  }
  std::ostringstream os;
  write_cdf_csv(os, report);
  CHECK(os.str().find(",1\n") != std::string::npos);
}

TEST_CASE("percentiles interpolate") {
  Cdf c{{1.0, 2.0, 3.0, 4.0, 5.0}};
  CHECK(c.percentile(0) == 1.0);
  CHECK(c.percentile(100) == 5.0);
  CHECK(c.percentile(50) == 3.0);
  CHECK(c.percentile(62.5) == doctest::Approx(3.5));
}

TEST_CASE("output header records the run") {
  ExperimentSpec spec = desk(2);
  spec.seed = 77;
  std::ostringstream os;
  write_header(os, spec, "cfmimo sweep --seed 77");
  const std::string h = os.str();
  for (const char* needle : {"# cfmimo ", "# command: cfmimo sweep --seed 77", "# seed: 77",
                             "M = 20", "K = 4", "xi_t = ", "P_bh = "})
    CHECK(h.find(needle) != std::string::npos);
  std::istringstream lines(h);
  for (std::string line; std::getline(lines, line);) CHECK(line.rfind("#", 0) == 0);
}

TEST_CASE("command line exit codes") {
  const std::string small = "--set M=6 --set K=2 --realizations 1";
  CHECK(run_cli("sweep --grid 1 " + small) == 0);
  CHECK(run_cli("sweep --grid '' " + small) == 2);
  CHECK(run_cli("sweep --grid 1,x " + small) == 2);
  CHECK(run_cli("sweep --set bogus=1") == 2);
  CHECK(run_cli("sweep --axis Q " + small) == 2);
  CHECK(run_cli("no-such-command") == 2);
  CHECK(run_cli("validate --draws 100000 " + small) == 0);
  CHECK(run_cli("validate --draws 20000 --strategies cfe --fault-term iui --fault-factor 2 " +
                small) == 1);
  CHECK(run_cli("power-opt --capacity 1 " + small) == 0);
  CHECK(run_cli("threshold --set M=6 --set K=2") == 0);
  CHECK(run_cli("limits --capacity 2 --set M=6") == 0);
}
