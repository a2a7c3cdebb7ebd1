#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "matchprior/matchprior.hpp"

namespace matchprior::run {

struct GridSpec {
  double lo = 0;
  double hi = 1;
  Index n = 257;
  std::string layout = "uniform";  // or "cell-centered"
};

struct ModelSpec {
  GridSpec grid;
  std::string kind = "bernoulli";  // or "table"
  std::vector<double> labels;
  std::vector<double> nu;
  std::vector<std::vector<double>> q;
};

struct ScheduleSpec {
  double a = 0;
  double eps = 0;
};

struct DemoSpec {
  double c_min = 0.3;
  double c_max = 0.7;
  double c_step = 0.01;
  double c = 0.2;
  double cell = 0.01;
  double alpha = 0.5;
  double beta = 4;
  double delta = 0.25;
  double eta = 0.25;
  Index n = 401;
};

struct RunConfig {
  ModelSpec model;
  RegionConfig<double> region;
  PerturbationSystem<double> perturbation;
  bool perturbation_gamma_set = false;
  std::optional<ScheduleSpec> schedule;
  SolverConfig<double> solver;
  std::optional<std::vector<double>> init_mass;
  DemoSpec demo;
  std::filesystem::path out = ".";
};

/// Parses a JSON document; throws ConfigError on malformed input.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

struct Overrides {
  std::optional<double> alpha;
  std::optional<double> a;
  std::optional<double> tol;
  std::optional<Index> max_iters;
  std::optional<double> damping;
  std::optional<std::uint64_t> seed;
};

/// Applies command-line overrides and the parameter schedule, then validates.
void finalize(RunConfig& cfg, const Overrides& o);

Grid build_grid(const GridSpec& g);
Model<double> build_model(const ModelSpec& spec);
DiscreteMeasure<double> initial_prior(const RunConfig& cfg, const Grid& grid);
RegionFamily<double> build_family(const RunConfig& cfg, const Model<double>& m);

/// Fixed 17-significant-digit formatting used for every artifact.
std::string fmt(double v);

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

void write_csv(const std::filesystem::path& path, const Table& t);
Table coverage_table(const Grid& grid, const CoverageReport<double>& r);
Table prior_table(const DiscreteMeasure<double>& prior);
Table trace_table(const std::vector<TraceEntry<double>>& trace);

/// Exit codes: 0 converged or done, 1 not converged, 2 configuration error.
int run_solve(const RunConfig& cfg);
int run_coverage(const RunConfig& cfg);
int run_region(const RunConfig& cfg);

// Demos on textbook discontinuities of ordinary regions.

struct BallJumpRow {
  double c;
  double radius;
};
/// Credible ball radius of the mixture (1-c) U[-0.1,0.1] + c U([-11,-10] u [10,11]).
std::vector<BallJumpRow> ball_jump(const DemoSpec& d);

struct HpdFlip {
  Grid grid;
  Vector<double> psi_1;
  Vector<double> psi_2;
};
/// HPD indicators of 2 + c sin and 2 - c sin on [0, 2 pi].
HpdFlip hpd_flip(const DemoSpec& d);

struct Figure1 {
  Grid grid;
  Vector<double> psi_ball;
  Vector<double> psi_relaxed;
  Vector<double> psi_perturbed;
  double relaxed_level;
  double correction;
};
/// Ordinary, relaxed and perturbed balls of the flat posterior on [-1, 1].
Figure1 figure1(const DemoSpec& d);

int run_demo(const std::string& kind, const RunConfig& cfg);

}  // namespace matchprior::run
