#include "mfiot/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace mfiot {

namespace {
constexpr double kPi = std::numbers::pi_v<double>;
}

double nearest_distance_cdf(const SystemParams& p, double r0_km) {
  if (r0_km < 0.0) throw std::invalid_argument("nearest_distance_cdf: negative radius");
  return -std::expm1(-p.lambda_s * kPi * r0_km * r0_km);
}

double nearest_distance_pdf(const SystemParams& p, double r_km) {
  if (r_km < 0.0) throw std::invalid_argument("nearest_distance_pdf: negative radius");
  return 2.0 * kPi * p.lambda_s * r_km * std::exp(-p.lambda_s * kPi * r_km * r_km);
}

double cell_area_pdf(const SystemParams& p, double v_km2) {
  if (!(v_km2 > 0.0)) throw std::invalid_argument("cell_area_pdf: area must be positive");
  const double c = p.gamma_shape;
  const double rate = p.lambda_s * c;
  const double log_pdf = (c - 1.0) * std::log(v_km2) + c * std::log(rate) -
                         std::lgamma(c) - rate * v_km2;
  return std::exp(log_pdf);
}

double active_count_pmf(const SystemParams& p, double pi_a, int k) {
  if (k < 0) throw std::invalid_argument("active_count_pmf: negative count");
  if (!(pi_a >= 0.0 && pi_a <= 1.0))
    throw std::invalid_argument("active_count_pmf: pi_a out of range");
  const double lambda_a = active_density(p, pi_a);
  if (lambda_a == 0.0) return k == 0 ? 1.0 : 0.0;
  const double c = p.gamma_shape;
  const double rate = p.lambda_s * c;
  const double log_pmf = std::lgamma(k + c) - std::lgamma(k + 1.0) - std::lgamma(c) +
                         k * std::log(lambda_a) + c * std::log(rate) -
                         (k + c) * std::log(lambda_a + rate);
  return std::exp(log_pmf);
}

double collision_free_prob(const SystemParams& p, double pi_a) {
  double sum = 0.0;
  for (int j = 0; j <= p.j_mpr; ++j) sum += active_count_pmf(p, pi_a, j);
  return sum < 1.0 ? sum : 1.0;
}

double mean_field_interference(const SystemParams& p, double pi_a, double p_mf_watts) {
  if (!(p.alpha > 2.0))
    throw std::invalid_argument("mean_field_interference: alpha must exceed 2");
  if (p_mf_watts < 0.0)
    throw std::invalid_argument("mean_field_interference: negative power");
  const double thinned = (1.0 - p.p_b) * pi_a / p.n_channels;
  const double path_loss_integral = 0.5 + 1.0 / (p.alpha - 2.0);
  return 2.0 * kPi * p.lambda_u * thinned * path_loss_integral * p_mf_watts;
}

Eigen::VectorXd mean_field_power(const Field& mean_field, const Field& policy,
                                 const Grid& g) {
  check_field_shape(mean_field, g, "mean_field");
  check_field_shape(policy, g, "policy");
  if (mean_field.role != FieldRole::density)
    throw std::invalid_argument("mean_field_power: first field must be a density");
  if (policy.role != FieldRole::policy)
    throw std::invalid_argument("mean_field_power: second field must be a policy");
  const Eigen::RowVectorXd sums =
      policy.values.cwiseProduct(mean_field.values).colwise().sum();
  return sums.transpose() * g.de;
}

InterferenceTrace interference_trace(const SystemParams& p, double pi_a,
                                     const Eigen::VectorXd& p_mf) {
  const double unit = mean_field_interference(p, pi_a, 1.0);
  InterferenceTrace trace;
  trace.p_mf = p_mf;
  trace.i_mf = unit * p_mf;
  return trace;
}

}  // namespace mfiot
