#include "mfiot/model.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace mfiot {

namespace {

[[noreturn]] void fail(const std::string& msg) { throw std::invalid_argument(msg); }

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) fail(std::string(name) + " must be positive");
}

void require_probability(double v, const char* name) {
  if (!(v >= 0.0 && v <= 1.0)) fail(std::string(name) + ": probability out of range");
}

}  // namespace

double arrival_rate_to_p_a(double packets_per_hour, double t_frame) {
  return packets_per_hour * t_frame / 3600.0;
}

double active_density(const SystemParams& p, double pi_a) {
  return p.lambda_u * (1.0 - p.p_b) * pi_a / p.n_channels;
}

void validate_params(const SystemParams& p) {
  require_positive(p.lambda_s, "lambda_s");
  require_positive(p.lambda_u, "lambda_u");
  require_probability(p.p_b, "p_b");
  require_probability(p.p_a, "p_a");
  require_positive(p.theta, "theta");
  if (p.j_mpr < 1) fail("j_mpr must be a positive integer");
  if (p.n_channels < 1) fail("n_channels must be a positive integer");
  if (p.queue_size < 1) fail("queue_size must be a positive integer");
  require_positive(p.p_max, "p_max");
  require_positive(p.t_frame, "t_frame");
  require_positive(p.e_max, "e_max");
  require_positive(p.sigma0, "sigma0");
  if (!(p.alpha > 2.0)) fail("alpha must exceed 2");
  if (p.gamma_shape != 3.575) fail("gamma_shape must be 3.575");
}

int Grid::time_index(double t) const {
  auto n = static_cast<int>(std::lround(t / dt));
  return n < 0 ? 0 : (n > n_time ? n_time : n);
}

int Grid::energy_index(double e) const {
  auto i = static_cast<int>(std::lround(e / de));
  return i < 0 ? 0 : (i > n_energy ? n_energy : i);
}

Grid make_grid(const SystemParams& p, int n_time, int n_energy) {
  if (n_time < 1 || n_energy < 1) fail("grid sizes must be positive integers");
  Grid g;
  g.n_time = n_time;
  g.n_energy = n_energy;
  g.dt = p.t_frame / n_time;
  g.de = p.e_max / n_energy;
  return g;
}

double validate_grid(const SystemParams& p, const Grid& g) {
  if (g.n_time < 1 || g.n_energy < 1 || !(g.dt > 0.0) || !(g.de > 0.0))
    fail("grid is not initialized");
  const double cfl = p.p_max * g.dt / g.de;
  if (cfl > 1.0) {
    std::ostringstream os;
    os << "CFL condition violated: p_max*dt/de = " << cfl << " exceeds 1";
    fail(os.str());
  }
  return cfl;
}

Field make_field(const Grid& g, FieldRole role, double fill) {
  Field f;
  f.role = role;
  f.values = Eigen::MatrixXd::Constant(g.n_energy + 1, g.n_time + 1, fill);
  return f;
}

Eigen::VectorXd uniform_density_slice(const Grid& g) {
  const int n = g.n_energy + 1;
  return Eigen::VectorXd::Constant(n, 1.0 / (n * g.de));
}

Eigen::VectorXd point_density_slice(const Grid& g, double energy) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(g.n_energy + 1);
  m(g.energy_index(energy)) = 1.0 / g.de;
  return m;
}

void check_density_slice(const Eigen::VectorXd& slice, const Grid& g) {
  if (slice.size() != g.n_energy + 1) fail("density slice has wrong length");
  if ((slice.array() < 0.0).any()) fail("density slice has negative entries");
  const double mass = slice.sum() * g.de;
  if (std::abs(mass - 1.0) > 1e-9) fail("density slice is not normalized");
}

void check_field_shape(const Field& f, const Grid& g, const char* name) {
  if (f.values.rows() != g.n_energy + 1 || f.values.cols() != g.n_time + 1)
    fail(std::string(name) + ": field shape does not match grid");
}

}  // namespace mfiot
