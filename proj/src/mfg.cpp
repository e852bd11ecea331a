#include "mfiot/mfg.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mfiot {

namespace {
constexpr double kLn2 = std::numbers::ln2_v<double>;
}

double mf_sinr_gain(const SystemParams& p, double i_mf) {
  if (i_mf < 0.0) throw std::invalid_argument("mf_sinr_gain: negative interference");
  return std::pow(2.0 * std::sqrt(p.lambda_s), p.alpha) / (p.sigma0 + i_mf);
}

double mf_sinr(const SystemParams& p, double power, double i_mf) {
  if (power < 0.0) throw std::invalid_argument("mf_sinr: negative power");
  return power * mf_sinr_gain(p, i_mf);
}

double running_cost(const SystemParams& p, double power, double i_mf, double p_s) {
  return (1.0 - p_s) * power - p_s * std::log2(1.0 + mf_sinr(p, power, i_mf));
}

double running_cost_dpower(const SystemParams& p, double power, double i_mf,
                           double p_s) {
  const double gain = mf_sinr_gain(p, i_mf);
  return (1.0 - p_s) - p_s * gain / (kLn2 * (1.0 + gain * power));
}

Eigen::VectorXd fpk_step(const Eigen::VectorXd& m_slice,
                         const Eigen::VectorXd& policy_slice, const Grid& g) {
  const int y = g.n_energy;
  if (m_slice.size() != y + 1 || policy_slice.size() != y + 1)
    throw std::invalid_argument("fpk_step: slice length does not match grid");
  if (policy_slice(0) != 0.0)
    throw std::invalid_argument("fpk_step: policy must vanish at the empty node");
  const double r = g.dt / g.de;
  if (policy_slice.maxCoeff() * r > 1.0 + 1e-12)
    throw std::invalid_argument("fpk_step: CFL condition violated");

  // Donor-cell form m_i (1 - r P_i) + r P_{i+1} m_{i+1}: a convex
  // combination, so the output cannot go negative under the CFL bound.
  Eigen::VectorXd next(y + 1);
  for (int i = 0; i < y; ++i) {
    const double keep = std::max(0.0, 1.0 - r * policy_slice(i));
    next(i) = m_slice(i) * keep + r * policy_slice(i + 1) * m_slice(i + 1);
  }
  next(y) = m_slice(y) * std::max(0.0, 1.0 - r * policy_slice(y));

  for (int i = 0; i <= y; ++i) {
    if (next(i) < 0.0) {
      if (next(i) < -1e-12)
        throw std::runtime_error("fpk_step: transport produced a negative cell");
      next(i) = 0.0;
    }
  }
  return next;
}

MeanField fpk_forward(const Eigen::VectorXd& m0, const PowerPolicy& policy,
                      const Grid& g) {
  check_field_shape(policy, g, "policy");
  check_density_slice(m0, g);
  MeanField m = make_field(g, FieldRole::density);
  m.values.col(0) = m0;
  for (int n = 0; n < g.n_time; ++n)
    m.values.col(n + 1) = fpk_step(m.values.col(n), policy.values.col(n), g);
  return m;
}

Eigen::VectorXd hjb_step_with_cost(const Eigen::VectorXd& mu_slice,
                                   const Eigen::VectorXd& policy_slice,
                                   const Eigen::VectorXd& cost_slice,
                                   const Grid& g) {
  const int y = g.n_energy;
  if (mu_slice.size() != y + 1 || policy_slice.size() != y + 1 ||
      cost_slice.size() != y + 1)
    throw std::invalid_argument("hjb_step: slice length does not match grid");
  Eigen::VectorXd prev(y + 1);
  const double r = g.dt / g.de;
  prev(0) = mu_slice(0) + cost_slice(0) * g.dt;  // mu_{-1} := mu_0
  for (int i = 1; i <= y; ++i) {
    prev(i) = mu_slice(i) - r * policy_slice(i) * (mu_slice(i) - mu_slice(i - 1)) +
              cost_slice(i) * g.dt;
  }
  return prev;
}

Eigen::VectorXd hjb_step(const SystemParams& p, const Eigen::VectorXd& mu_slice,
                         const Eigen::VectorXd& policy_slice, double p_s,
                         double i_mf, const Grid& g) {
  Eigen::VectorXd cost(policy_slice.size());
  for (Eigen::Index i = 0; i < policy_slice.size(); ++i)
    cost(i) = running_cost(p, policy_slice(i), i_mf, p_s);
  return hjb_step_with_cost(mu_slice, policy_slice, cost, g);
}

Costate hjb_backward(const SystemParams& p, const PowerPolicy& policy, double p_s,
                     const InterferenceTrace& interference, const Grid& g) {
  check_field_shape(policy, g, "policy");
  if (interference.i_mf.size() != g.n_time + 1)
    throw std::invalid_argument("hjb_backward: interference trace length mismatch");
  Costate mu = make_field(g, FieldRole::costate);
  mu.values.col(g.n_time).setZero();
  for (int n = g.n_time; n >= 1; --n) {
    mu.values.col(n - 1) = hjb_step(p, mu.values.col(n), policy.values.col(n), p_s,
                                    interference.i_mf(n), g);
  }
  return mu;
}

double optimal_power_update(const SystemParams& p, double dmu_de, double p_s,
                            double i_mf) {
  const double h = (1.0 - p_s) - dmu_de;
  if (h <= 0.0) return p.p_max;
  const double gain = mf_sinr_gain(p, i_mf);
  const double stationary = p_s / (kLn2 * h) - 1.0 / gain;
  if (stationary <= 0.0) return 0.0;
  return stationary < p.p_max ? stationary : p.p_max;
}

namespace {

PowerPolicy policy_from_costate(const SystemParams& p, const Costate& mu,
                                double p_s, const InterferenceTrace& interference,
                                const Grid& g) {
  PowerPolicy next = make_field(g, FieldRole::policy);
  for (int n = 0; n <= g.n_time; ++n) {
    const double i_mf = interference.i_mf(n);
    next.values(0, n) = 0.0;  // a depleted device cannot transmit
    for (int i = 1; i <= g.n_energy; ++i) {
      const double dmu_de = (mu.values(i, n) - mu.values(i - 1, n)) / g.de;
      next.values(i, n) = optimal_power_update(p, dmu_de, p_s, i_mf);
    }
  }
  return next;
}

}  // namespace

EquilibriumResult solve_equilibrium(const SystemParams& p, const Grid& g,
                                    const Eigen::VectorXd& m0,
                                    const SolveOptions& opts) {
  validate_params(p);
  validate_grid(p, g);
  check_density_slice(m0, g);
  const double tol = opts.tol > 0.0 ? opts.tol : 1e-5 * p.p_max;
  const double p0 = opts.p0_init >= 0.0 ? opts.p0_init : 0.5 * p.p_max;
  if (p0 > p.p_max)
    throw std::invalid_argument("solve_equilibrium: initial power exceeds p_max");
  if (!(opts.damping > 0.0 && opts.damping <= 1.0))
    throw std::invalid_argument("solve_equilibrium: damping must lie in (0, 1]");

  EquilibriumResult res;
  res.policy = make_field(g, FieldRole::policy, p0);
  res.policy.values.row(0).setZero();

  bool fp_ok = true;
  for (int k = 1; k <= opts.max_iters; ++k) {
    res.mean_field = fpk_forward(m0, res.policy, g);
    const FixedPointResult fp =
        fixed_point_ps_pia(p, res.policy, res.mean_field, g, opts.fixed_point);
    fp_ok = fp.converged;
    res.p_s = fp.p_s;
    res.pi_a = fp.pi_a;
    res.interference = fp.interference;
    res.costate = hjb_backward(p, res.policy, fp.p_s, fp.interference, g);
    PowerPolicy candidate =
        policy_from_costate(p, res.costate, fp.p_s, fp.interference, g);

    res.final_residual =
        (candidate.values - res.policy.values).cwiseAbs().maxCoeff();
    res.residual_history.push_back(res.final_residual);
    res.iterations = k;
    if (res.final_residual < tol) {
      // Keep the undamped update: it satisfies the power-gradient
      // condition exactly for the costate and interference returned.
      res.policy = std::move(candidate);
      res.converged = fp_ok;
      break;
    }
    res.policy.values = (1.0 - opts.damping) * res.policy.values +
                        opts.damping * candidate.values;
    res.policy.values.row(0).setZero();
  }
  return res;
}

double depleted_fraction(const EquilibriumResult& result, const Grid& g) {
  return result.mean_field.values(0, g.n_time) * g.de;
}

}  // namespace mfiot
