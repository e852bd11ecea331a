#pragma once

#include <Eigen/Core>

namespace mfiot {

// Unit conventions used throughout the library: lengths in km, densities
// per km^2, power in W, energy in J, time in s. With the km length unit the
// path loss r^-alpha is dimensionless (and treated as 1 below 1 km).
struct SystemParams {
  double lambda_s = 10.0;    // base-station density [1/km^2]
  double lambda_u = 3000.0;  // IoT device density [1/km^2]
  double p_b = 0.1;          // access-barring probability
  double p_a = 60.0 * 0.01 / 3600.0;  // per-frame arrival probability
  double theta = 10.0;       // SINR decoding threshold
  int j_mpr = 3;             // decodable simultaneous packets per channel
  int n_channels = 30;       // orthogonal channels
  int queue_size = 10;       // device queue capacity [packets]
  double p_max = 0.025;      // maximum transmit power [W]
  double t_frame = 0.01;     // frame duration [s]
  double e_max = 1e-4;       // per-frame energy budget [J]
  double sigma0 = 1e-23;     // noise power [W]
  double alpha = 4.0;        // path-loss exponent, must exceed 2
  double gamma_shape = 3.575;  // Voronoi cell-area gamma shape constant
};

/// Converts a human-facing arrival rate (packets/hour) to the per-frame
/// Bernoulli probability.
double arrival_rate_to_p_a(double packets_per_hour, double t_frame);

/// Per-channel spatial density of devices transmitting in a given frame,
/// lambda_u * (1 - p_b) * pi_a / L.
double active_density(const SystemParams& p, double pi_a);

/// Throws std::invalid_argument naming the offending field.
void validate_params(const SystemParams& p);

// Uniform time x energy lattice: X time steps of width dt = t_frame / X and
// Y energy steps of width de = e_max / Y. Node (n, i) sits at
// (n * dt, i * de) for n = 0..X, i = 0..Y.
struct Grid {
  int n_time = 0;
  int n_energy = 0;
  double dt = 0.0;
  double de = 0.0;

  double time(int n) const { return n * dt; }
  double energy(int i) const { return i * de; }
  int time_index(double t) const;
  int energy_index(double e) const;
};

Grid make_grid(const SystemParams& p, int n_time = 100, int n_energy = 30);

/// Returns the advection CFL number p_max * dt / de.
/// Throws std::invalid_argument when it exceeds 1 (explicit upwind
/// transport would be unstable).
double validate_grid(const SystemParams& p, const Grid& g);

enum class FieldRole { policy, density, costate };

// Real-valued lattice function; values(i, n) is energy node i at time
// node n, so a column is one time slice.
struct Field {
  Eigen::MatrixXd values;
  FieldRole role = FieldRole::policy;

  Eigen::Index n_time() const { return values.cols() - 1; }
  Eigen::Index n_energy() const { return values.rows() - 1; }
};

Field make_field(const Grid& g, FieldRole role, double fill = 0.0);

/// Density slice with sum_i m_i * de == 1, constant across nodes.
Eigen::VectorXd uniform_density_slice(const Grid& g);

/// Density slice with all mass at the node nearest to `energy`.
Eigen::VectorXd point_density_slice(const Grid& g, double energy);

/// Throws unless `slice` has Y+1 nonnegative entries summing to 1/de.
void check_density_slice(const Eigen::VectorXd& slice, const Grid& g);

/// Throws unless `f` is a (Y+1) x (X+1) field on `g`.
void check_field_shape(const Field& f, const Grid& g, const char* name);

}  // namespace mfiot
