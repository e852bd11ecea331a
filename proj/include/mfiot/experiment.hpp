#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfiot/mfg.hpp"
#include "mfiot/model.hpp"

namespace mfiot::cli {

// Flat key-value experiment description. Every key is optional; defaults
// reproduce the reference parameterization. Arrival rate is human-facing
// (packets/hour) and converted to the per-frame probability internally.
struct ExperimentConfig {
  double lambda_s = 10.0;
  double lambda_u = 3000.0;
  double p_b = 0.1;
  double arrival_rate_per_hour = 60.0;
  double theta = 10.0;
  int j_mpr = 3;
  int n_channels = 30;
  int queue_size = 10;
  double p_max = 0.025;
  double t_frame = 0.01;
  double e_max = 1e-4;
  double sigma0 = 1e-23;
  double alpha = 4.0;

  int grid_x = 100;
  int grid_y = 30;

  double tol = 0.0;       // <= 0: 1e-5 * p_max
  int max_iters = 200;
  double damping = 0.5;
  double tol2 = 1e-8;
  int max_iters2 = 500;
  double damping2 = 0.5;
  double p0_init = -1.0;  // < 0: p_max / 2
  std::string m0_shape = "uniform";  // uniform | point:<J> | file:<path>

  std::string sweep_param;
  std::vector<double> sweep_values;

  std::uint64_t seed = 1;
  long replications = 20000;
  double radius = 10.0;  // sampling disk radius [km]

  std::string out_dir = ".";
  int workers = 1;
};

/// Parses a config file ('#' comments, blank lines, key = value entries).
/// Unknown keys throw.
ExperimentConfig parse_config_file(const std::string& path);

/// Applies one "key=value" override in the same key space as the file.
void apply_override(ExperimentConfig& cfg, const std::string& assignment);

SystemParams to_params(const ExperimentConfig& cfg);
SolveOptions to_solve_options(const ExperimentConfig& cfg);
Eigen::VectorXd make_m0(const ExperimentConfig& cfg, const Grid& g);

// Summary metrics of one converged (or flagged) equilibrium.
struct SummaryRow {
  double p_s = 0.0;
  double pi_a = 0.0;
  double t_h = 0.0;
  double e_nt = 0.0;
  double q = 0.0;
  double d = 0.0;
  int iterations = 0;
  double residual = 0.0;
  double depleted_fraction = 0.0;
  bool converged = false;
};

SummaryRow summarize(const SystemParams& p, const Grid& g,
                     const EquilibriumResult& result);

/// Locale-independent numeric formatting shared by every CSV writer.
std::string format_csv(double v);

/// Writes policy.csv, meanfield.csv, costate.csv (long format t,e,value)
/// and summary.csv under cfg.out_dir. Returns 0 on convergence, 2
/// otherwise. Configuration and I/O failures throw.
int run_solve(const ExperimentConfig& cfg);

/// Solves one point per sweep value (in parallel up to cfg.workers) and
/// writes sweep.csv with rows in axis order. Returns 0 when every point
/// converged, 2 otherwise.
int run_sweep(const ExperimentConfig& cfg);

/// Runs every analytic-vs-Monte-Carlo cross-check and writes validate.csv
/// with one row per check. Returns 0 unless some sufficiently precise
/// check fails.
int run_validate(const ExperimentConfig& cfg);

}  // namespace mfiot::cli
