#include "mfiot/queueing.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mfiot/numerics.hpp"

namespace mfiot {

namespace {
constexpr double kPi = std::numbers::pi_v<double>;

void require_probability(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0))
    throw std::invalid_argument(std::string(name) + ": probability out of range");
}
}  // namespace

MarkovModel transition_matrix(double p_a, double p_b, double p_s, int queue_size) {
  require_probability(p_a, "p_a");
  require_probability(p_b, "p_b");
  require_probability(p_s, "p_s");
  if (queue_size < 1) throw std::invalid_argument("queue_size must be >= 1");

  const int m = queue_size;
  const double depart = (1.0 - p_b) * p_s;  // unbarred attempt succeeds
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(m + 1, m + 1);
  k(0, 0) = 1.0 - p_a;
  k(0, 1) = p_a;
  for (int j = 1; j <= m - 1; ++j) {
    k(j, j - 1) = (1.0 - p_a) * depart;
    k(j, j) = (1.0 - p_a) * p_b + (1.0 - p_a) * (1.0 - p_b) * (1.0 - p_s) +
              p_a * (1.0 - p_b) * p_s;
    k(j, j + 1) = p_a * (1.0 - p_b) * (1.0 - p_s) + p_a * p_b;
  }
  k(m, m - 1) = (1.0 - p_a) * depart;
  k(m, m) = 1.0 - (1.0 - p_a) * depart;

  MarkovModel model;
  model.transition = std::move(k);
  model.p_a = p_a;
  model.p_b = p_b;
  model.p_s = p_s;
  model.queue_size = m;
  return model;
}

SteadyState steady_state(const MarkovModel& model) {
  const int m = model.queue_size;
  const double drain = (1.0 - model.p_a) * (1.0 - model.p_b) * model.p_s;
  if (drain <= 0.0)
    throw std::invalid_argument(
        "steady_state: degenerate chain, (1-p_a)(1-p_b)p_s must be positive");

  // Birth-death product form: pi_i = pi_0 * prod_{j<i} up_j / down_{j+1},
  // accumulated in log space so extreme up/down ratios cannot overflow.
  Eigen::VectorXd log_weight(m + 1);
  log_weight(0) = 0.0;
  for (int i = 1; i <= m; ++i) {
    const double up = model.transition(i - 1, i);
    const double down = model.transition(i, i - 1);
    log_weight(i) = log_weight(i - 1) + std::log(up) - std::log(down);
  }
  const Eigen::VectorXd weight =
      (log_weight.array() - log_weight.maxCoeff()).exp();
  SteadyState ss;
  ss.pi = weight / weight.sum();
  ss.pi_a = 1.0 - ss.pi(0);
  return ss;
}

double activity_probability(const SystemParams& p, double p_s) {
  require_probability(p_s, "p_s");
  if (p.p_a == 0.0) return 0.0;
  if ((1.0 - p.p_a) * (1.0 - p.p_b) * p_s <= 0.0) return 1.0;  // queues never drain
  return steady_state(transition_matrix(p.p_a, p.p_b, p_s, p.queue_size)).pi_a;
}

double q_function(double x) {
  return 0.5 * std::erfc(x / std::numbers::sqrt2_v<double>);
}

double g_closed_form(double a, double b) {
  if (!(a > 0.0)) throw std::invalid_argument("g_closed_form: a must be positive");
  if (b < 0.0) throw std::invalid_argument("g_closed_form: b must be nonnegative");
  // sqrt(pi/a) exp(z^2) Q(z sqrt(2)) with z = b / (2 sqrt(a)) collapses to
  // sqrt(pi/a) erfcx(z) / 2, which stays finite for any b^2/(4a).
  const double z = b / (2.0 * std::sqrt(a));
  return 0.5 * std::sqrt(kPi / a) * erfcx(z);
}

double sinr_tail_integral(double a, double b, double alpha) {
  if (!(a > 0.0)) throw std::invalid_argument("sinr_tail_integral: a must be positive");
  if (!(b > 0.0)) throw std::invalid_argument("sinr_tail_integral: b must be positive");
  if (!(alpha > 2.0))
    throw std::invalid_argument("sinr_tail_integral: alpha must exceed 2");
  if (alpha == 4.0) return g_closed_form(a, b);

  // Truncate where both exponents exceed 45; the analytic tail bound
  // exp(-a S^(alpha/2)) exp(-b S) / b is then below 1e-12 of the result.
  const double half_alpha = 0.5 * alpha;
  const double cutoff =
      2.0 * std::max(std::pow(45.0 / a, 1.0 / half_alpha), 45.0 / b);
  auto integrand = [&](double s) {
    return std::exp(-a * std::pow(s, half_alpha) - b * s);
  };
  return integrate_adaptive(integrand, 0.0, cutoff, 1e-12);
}

double sinr_success_component(const SystemParams& p, const Field& policy,
                              const Field& mean_field,
                              const InterferenceTrace& interference,
                              const Grid& g) {
  check_field_shape(policy, g, "policy");
  check_field_shape(mean_field, g, "mean_field");
  if (interference.i_mf.size() != g.n_time + 1)
    throw std::invalid_argument("interference trace length does not match grid");

  const double b = kPi * p.lambda_s;
  double acc = 0.0;
  for (int n = 0; n < g.n_time; ++n) {  // left-point rule in time
    const double noise_plus_i = p.sigma0 + interference.i_mf(n);
    double slice = 0.0;
    for (int i = 0; i <= g.n_energy; ++i) {
      const double power = policy.values(i, n);
      const double mass = mean_field.values(i, n);
      if (power <= 0.0 || mass <= 0.0) continue;  // silent cells never succeed
      const double a = p.theta * noise_plus_i / power;
      slice += sinr_tail_integral(a, b, p.alpha) * mass;
    }
    acc += slice;
  }
  return b * acc * g.de * g.dt / p.t_frame;
}

double success_probability(const SystemParams& p, const Field& policy,
                           const Field& mean_field,
                           const InterferenceTrace& interference, double pi_a,
                           const Grid& g) {
  return collision_free_prob(p, pi_a) *
         sinr_success_component(p, policy, mean_field, interference, g);
}

FixedPointResult fixed_point_ps_pia(const SystemParams& p, const Field& policy,
                                    const Field& mean_field, const Grid& g,
                                    const FixedPointOptions& opts) {
  if (!(opts.p_s_init > 0.0 && opts.p_s_init <= 1.0))
    throw std::invalid_argument("fixed_point_ps_pia: p_s_init must lie in (0, 1]");
  const Eigen::VectorXd p_mf = mean_field_power(mean_field, policy, g);

  FixedPointResult r;
  if (p.p_a == 0.0) {
    // No arrivals decouples the system: pi_a = 0 and p_s follows directly.
    r.pi_a = 0.0;
    r.interference = interference_trace(p, 0.0, p_mf);
    r.p_s = success_probability(p, policy, mean_field, r.interference, 0.0, g);
    r.iterations = 1;
    r.residual = 0.0;
    r.converged = true;
    r.residual_history.push_back(0.0);
    return r;
  }

  double p_s = opts.p_s_init;
  double pi_a = activity_probability(p, p_s);
  for (int k = 1; k <= opts.max_iters; ++k) {
    const InterferenceTrace trace = interference_trace(p, pi_a, p_mf);
    const double p_s_raw = success_probability(p, policy, mean_field, trace, pi_a, g);
    const double p_s_next = (1.0 - opts.damping) * p_s + opts.damping * p_s_raw;
    const double pi_a_next = activity_probability(p, p_s_next);
    const double residual = std::abs(p_s_next - p_s) + std::abs(pi_a_next - pi_a);
    p_s = p_s_next;
    pi_a = pi_a_next;
    r.iterations = k;
    r.residual = residual;
    r.residual_history.push_back(residual);
    if (residual < opts.tol) {
      r.converged = true;
      break;
    }
  }
  r.p_s = p_s;
  r.pi_a = pi_a;
  r.interference = interference_trace(p, pi_a, p_mf);
  return r;
}

double throughput(double p_b, double p_s) {
  require_probability(p_b, "p_b");
  require_probability(p_s, "p_s");
  return (1.0 - p_b) * p_s;
}

bool saturated(double p_a, double t_h) { return p_a > t_h; }

double avg_transmissions(double t_h) {
  if (!(t_h > 0.0)) throw std::invalid_argument("avg_transmissions: zero service rate");
  return 1.0 / t_h;
}

double avg_queue(const SteadyState& ss) {
  double q = 0.0;
  for (Eigen::Index k = 1; k < ss.pi.size(); ++k) q += static_cast<double>(k) * ss.pi(k);
  return q;
}

double avg_delay(const SteadyState& ss, double t_h) {
  const double e_nt = avg_transmissions(t_h);
  return avg_queue(ss) * e_nt + e_nt;
}

}  // namespace mfiot
