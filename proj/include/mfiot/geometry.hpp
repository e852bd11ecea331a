#pragma once

#include <Eigen/Core>

#include "mfiot/model.hpp"

namespace mfiot {

// Mean interference seen by a generic device and the population-average
// transmit power it derives from, both indexed by time node.
struct InterferenceTrace {
  Eigen::VectorXd i_mf;  // [W]
  Eigen::VectorXd p_mf;  // [W]
};

/// CDF of the distance from a device to its nearest base station,
/// 1 - exp(-lambda_s * pi * r0^2).
double nearest_distance_cdf(const SystemParams& p, double r0_km);

/// Density of the nearest-base-station distance,
/// 2 pi lambda_s r exp(-lambda_s pi r^2).
double nearest_distance_pdf(const SystemParams& p, double r_km);

/// Gamma approximation of the Voronoi cell-area density
/// (shape 3.575, rate lambda_s * 3.575).
double cell_area_pdf(const SystemParams& p, double v_km2);

/// Probability that a cell serves exactly k active devices on one channel:
/// the gamma-mixed Poisson (negative-binomial form) pmf evaluated through
/// log-gamma arithmetic so large k does not overflow.
double active_count_pmf(const SystemParams& p, double pi_a, int k);

/// Probability that at most j_mpr active devices share the channel, i.e.
/// the sum of active_count_pmf over k = 0..J.
double collision_free_prob(const SystemParams& p, double pi_a);

/// Population-average interference at a tagged receiver for a given
/// average transmit power: 2 pi lambda_u ((1-p_b) pi_a / L)
/// (1/2 + 1/(alpha-2)) * p_mf. The bracketed constant carries the
/// near-field convention of unit path loss below 1 km.
double mean_field_interference(const SystemParams& p, double pi_a, double p_mf_watts);

/// Population-average power per time node, sum_i P(i,n) m(i,n) de.
Eigen::VectorXd mean_field_power(const Field& mean_field, const Field& policy,
                                 const Grid& g);

/// Bundles mean_field_interference applied to a power trace.
InterferenceTrace interference_trace(const SystemParams& p, double pi_a,
                                     const Eigen::VectorXd& p_mf);

}  // namespace mfiot
