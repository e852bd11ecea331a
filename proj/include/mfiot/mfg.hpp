#pragma once

#include <Eigen/Core>

#include <vector>

#include "mfiot/geometry.hpp"
#include "mfiot/model.hpp"
#include "mfiot/queueing.hpp"

namespace mfiot {

// Role aliases for the three lattice functions the equilibrium couples.
using PowerPolicy = Field;  // transmit power, in [0, p_max], zero at e = 0
using MeanField = Field;    // energy density, normalized per time slice
using Costate = Field;      // shadow value of the transport constraint

/// SINR of a generic device at the mean nearest-station distance:
/// power * (2 sqrt(lambda_s))^alpha / (sigma0 + i_mf).
double mf_sinr(const SystemParams& p, double power, double i_mf);

/// The SINR-per-watt factor (2 sqrt(lambda_s))^alpha / (sigma0 + i_mf).
double mf_sinr_gain(const SystemParams& p, double i_mf);

/// Running cost (1 - p_s) * power - p_s * log2(1 + SINR): energy spent
/// weighted against throughput earned.
double running_cost(const SystemParams& p, double power, double i_mf, double p_s);

/// Partial derivative of running_cost with respect to power.
double running_cost_dpower(const SystemParams& p, double power, double i_mf,
                           double p_s);

/// One explicit upwind transport step: energy spending moves mass down the
/// energy axis with zero inflow at the top and an absorbing bottom node.
/// Requires policy_slice(0) == 0 and the CFL bound; mass is conserved
/// exactly by the telescoping flux.
Eigen::VectorXd fpk_step(const Eigen::VectorXd& m_slice,
                         const Eigen::VectorXd& policy_slice, const Grid& g);

/// Forward transport of m0 through every time step under `policy`.
MeanField fpk_forward(const Eigen::VectorXd& m0, const PowerPolicy& policy,
                      const Grid& g);

/// One backward costate step with an explicit source slice:
/// mu_i^{n-1} = mu_i^n - (dt/de) P_i^n (mu_i^n - mu_{i-1}^n) + F_i^n dt,
/// with the one-sided convention mu_{-1} := mu_0 at the bottom node.
Eigen::VectorXd hjb_step_with_cost(const Eigen::VectorXd& mu_slice,
                                   const Eigen::VectorXd& policy_slice,
                                   const Eigen::VectorXd& cost_slice,
                                   const Grid& g);

/// As above with the running cost evaluated from (policy, p_s, i_mf).
Eigen::VectorXd hjb_step(const SystemParams& p, const Eigen::VectorXd& mu_slice,
                         const Eigen::VectorXd& policy_slice, double p_s,
                         double i_mf, const Grid& g);

/// Backward sweep from the zero terminal slice down to t = 0.
Costate hjb_backward(const SystemParams& p, const PowerPolicy& policy, double p_s,
                     const InterferenceTrace& interference, const Grid& g);

/// Pointwise minimizer of the power-gradient condition
/// d(running_cost)/dP = dmu_de. With h = (1 - p_s) - dmu_de the closed
/// form is p_s / (ln2 * h) - 1/gain, clipped to [0, p_max]; h <= 0 means
/// the objective decreases in power everywhere, so p_max.
double optimal_power_update(const SystemParams& p, double dmu_de, double p_s,
                            double i_mf);

struct SolveOptions {
  double damping = 0.5;
  double tol = 0.0;      // <= 0 selects 1e-5 * p_max
  int max_iters = 200;
  double p0_init = -1.0;  // < 0 selects p_max / 2
  FixedPointOptions fixed_point{};
};

struct EquilibriumResult {
  PowerPolicy policy;
  MeanField mean_field;
  Costate costate;
  double p_s = 0.0;
  double pi_a = 0.0;
  InterferenceTrace interference;
  int iterations = 0;
  double final_residual = 0.0;
  bool converged = false;
  std::vector<double> residual_history;
};

/// Successive-sweep equilibrium iteration: forward transport, the
/// (p_s, pi_a) fixed point, the backward costate sweep, then a damped
/// pointwise power update, repeated until the undamped update moves the
/// policy by less than tol in sup norm. Non-convergence is flagged in the
/// result, never thrown. Fully deterministic for identical inputs.
EquilibriumResult solve_equilibrium(const SystemParams& p, const Grid& g,
                                    const Eigen::VectorXd& m0,
                                    const SolveOptions& opts = {});

/// Fraction of the final-time mean field sitting at the empty-battery node.
double depleted_fraction(const EquilibriumResult& result, const Grid& g);

}  // namespace mfiot
