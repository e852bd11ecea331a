#pragma once

#include <Eigen/Core>

#include <vector>

#include "mfiot/geometry.hpp"
#include "mfiot/model.hpp"

namespace mfiot {

// Queue-length chain of a single device over frames. States 0..M count
// buffered packets; at most one packet arrives and at most one departs per
// frame, so the transition matrix is tridiagonal and row-stochastic.
struct MarkovModel {
  Eigen::MatrixXd transition;  // (M+1) x (M+1), entry (j, k) = P[j -> k]
  double p_a = 0.0;
  double p_b = 0.0;
  double p_s = 0.0;
  int queue_size = 0;
};

struct SteadyState {
  Eigen::VectorXd pi;  // stationary distribution over queue lengths
  double pi_a = 0.0;   // probability of a nonempty queue, 1 - pi(0)
};

MarkovModel transition_matrix(double p_a, double p_b, double p_s, int queue_size);

/// Closed-form birth-death stationary distribution. Throws when the chain
/// cannot drain, i.e. (1 - p_a) * (1 - p_b) * p_s == 0.
SteadyState steady_state(const MarkovModel& model);

/// Probability that a device's queue is nonempty at steady state given the
/// per-attempt success probability. Returns 0 when p_a == 0 and 1 when the
/// chain cannot drain.
double activity_probability(const SystemParams& p, double p_s);

/// Standard normal tail probability.
double q_function(double x);

/// sqrt(pi/a) exp(b^2/(4a)) Q(b / sqrt(2a)), evaluated through the scaled
/// complementary error function so the product never overflows.
double g_closed_form(double a, double b);

/// Integral of exp(-a s^(alpha/2) - b s) over s in [0, inf). Closed form
/// for alpha == 4, adaptive quadrature with an analytic tail cutoff
/// otherwise.
double sinr_tail_integral(double a, double b, double alpha);

/// SINR-threshold component of the per-attempt success probability: the
/// fading-averaged exceedance probability integrated against the mean
/// field, before the collision-free factor. Cells with zero transmit power
/// contribute nothing. Left-point rule in time, node rule in energy.
double sinr_success_component(const SystemParams& p, const Field& policy,
                              const Field& mean_field,
                              const InterferenceTrace& interference,
                              const Grid& g);

/// Per-attempt success probability, collision_free_prob(pi_a) times the
/// SINR component.
double success_probability(const SystemParams& p, const Field& policy,
                           const Field& mean_field,
                           const InterferenceTrace& interference, double pi_a,
                           const Grid& g);

struct FixedPointOptions {
  double damping = 0.5;
  double tol = 1e-8;
  int max_iters = 500;
  double p_s_init = 1.0;
};

struct FixedPointResult {
  double p_s = 0.0;
  double pi_a = 0.0;
  InterferenceTrace interference;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  std::vector<double> residual_history;
};

/// Self-consistent (p_s, pi_a) for a fixed policy and mean field:
/// alternates the activity probability, the interference trace, and the
/// success probability with a damped update until |dp_s| + |dpi_a| falls
/// below tol. Non-convergence is flagged, not thrown.
FixedPointResult fixed_point_ps_pia(const SystemParams& p, const Field& policy,
                                    const Field& mean_field, const Grid& g,
                                    const FixedPointOptions& opts = {});

/// Average per-frame service rate (1 - p_b) * p_s.
double throughput(double p_b, double p_s);

/// True when arrivals outpace service and queues grow to capacity.
bool saturated(double p_a, double t_h);

/// Mean number of frames a head-of-line packet needs, 1 / T_h.
/// Throws when T_h == 0.
double avg_transmissions(double t_h);

/// Mean queue length sum_k k pi_k.
double avg_queue(const SteadyState& ss);

/// Mean sojourn frames per packet: (Q + 1) / T_h.
double avg_delay(const SteadyState& ss, double t_h);

}  // namespace mfiot
