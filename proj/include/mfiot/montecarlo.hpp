#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "mfiot/model.hpp"

namespace mfiot::mc {

/// Splittable deterministic stream: the engine for replication `stream` of
/// a run seeded with `seed` is independent of execution order, so serial
/// and parallel runs produce identical statistics.
std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream);

/// Homogeneous Poisson point process in a disk: Poisson(intensity pi R^2)
/// points placed uniformly. Columns are (x, y) in km.
Eigen::Matrix2Xd sample_ppp(double intensity_per_km2, double radius_km,
                            std::uint64_t seed,
                            const Eigen::Vector2d& center = Eigen::Vector2d::Zero());

// One spatial draw of the network: station and device patterns in the disk
// C_R, the nearest-station association, and a unit-mean exponential fading
// draw per device link.
struct NetworkSample {
  Eigen::Matrix2Xd bs_points;
  Eigen::Matrix2Xd device_points;
  Eigen::VectorXi associations;  // index into bs_points, nearest station
  Eigen::VectorXd fading;        // Exp(1) per device
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.0;
  std::uint64_t rng_seed = 0;
};

/// Fills `associations` with each device's nearest station (bucket-grid
/// accelerated; ties broken by lowest index).
void associate_nearest(NetworkSample& sample);

NetworkSample make_network_sample(const SystemParams& p, double radius_km,
                                  std::uint64_t seed);

// Empirical law of the device-to-serving-station distance, collected only
// from devices in the inner half radius to dodge edge effects.
struct EmpiricalDistanceCdf {
  std::vector<double> distances;  // sorted ascending
  double evaluate(double r) const;
  /// Kolmogorov-Smirnov distance to the closed-form distance law.
  double ks_statistic(const SystemParams& p) const;
  /// Rejection bound 1.63 / sqrt(n).
  double ks_bound() const;
};

/// Throws when fewer than 10^4 interior link distances are available.
EmpiricalDistanceCdf empirical_distance_cdf(std::span<const NetworkSample> samples);

// Per-cell active-transmitter counts pooled over interior stations.
struct ActiveCountHistogram {
  std::vector<std::int64_t> counts;  // counts[k] = cells with k actives
  std::int64_t cells = 0;
  Eigen::VectorXd pmf() const;
  double mean() const;
  double mean_se() const;
};

/// Draws `n_samples` independent network samples (device process thinned
/// by the per-channel transmit probability during generation) and counts
/// actives per interior Voronoi cell. Throws when fewer than 10^4 cells
/// accumulate.
ActiveCountHistogram empirical_active_count(const SystemParams& p, double pi_a,
                                            int n_samples, double radius_km,
                                            std::uint64_t seed);

/// Total-variation distance between the histogram and the closed-form
/// active-count pmf (model tail included).
double active_count_tv(const SystemParams& p, double pi_a,
                       const ActiveCountHistogram& hist);

struct McEstimate {
  double mean = 0.0;
  double se = 0.0;
  long replications = 0;
};

/// Shot-noise interference at the disk center: mean over replications of
/// sum_j power * min(1, r_j^-alpha) for an active-device process of
/// intensity lambda_a(pi_a). The near-field cap mirrors the analytic
/// convention.
McEstimate estimate_interference(const SystemParams& p, double pi_a, double power,
                                 double radius_km, int replications,
                                 std::uint64_t seed);

/// Fraction of replications in which a device at the closed-form nearest
/// distance clears the SINR threshold against a fresh interferer draw
/// (Rayleigh fading on every link, capped interferer path loss).
/// interferer_power < 0 means the interferers transmit at `power` too.
McEstimate estimate_p_theta(const SystemParams& p, double pi_a, double power,
                            double radius_km, int replications,
                            std::uint64_t seed, double interferer_power = -1.0);

// Frame-driven single-queue simulation.
struct QueueSimResult {
  Eigen::VectorXd occupancy;     // empirical distribution over 0..M
  double mean_queue = 0.0;       // time-average queue length
  double mean_delay = 0.0;       // frames from arrival to departure
  double mean_head_frames = 0.0; // frames a packet spends at head of line
  long delivered = 0;
  long dropped = 0;
};

/// Simulates arrivals, barring, and service frame by frame. Requires
/// n_frames >= 10^5.
QueueSimResult simulate_queue(double p_a, double p_b, double p_s, int queue_size,
                              long n_frames, std::uint64_t seed);

/// Forward-Euler particle transport of n_particles energies sampled from
/// m0, stepped with the policy interpolated linearly in energy; returns a
/// (Y+1) x (X+1) matrix of per-slice histogram densities on the grid.
Eigen::MatrixXd particle_transport(const Eigen::VectorXd& m0, const Field& policy,
                                   int n_particles, const Grid& g,
                                   std::uint64_t seed);

/// Total-variation distance (1/2) sum_i |a_i - b_i| de between two density
/// slices on the same grid.
double tv_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double de);

}  // namespace mfiot::mc
