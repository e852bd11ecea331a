#include "mfiot/experiment.hpp"

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <locale>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "mfiot/montecarlo.hpp"
#include "mfiot/queueing.hpp"

namespace mfiot::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t lo = 0;
  std::size_t hi = s.size();
  while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
  while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
  return s.substr(lo, hi - lo);
}

double parse_double(const std::string& v, const std::string& key) {
  std::size_t pos = 0;
  double out = 0.0;
  try {
    out = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad numeric value for " + key);
  }
  if (pos != v.size())
    throw std::invalid_argument("config: trailing characters in value for " + key);
  return out;
}

long parse_long(const std::string& v, const std::string& key) {
  const double d = parse_double(v, key);
  if (d != std::floor(d))
    throw std::invalid_argument("config: " + key + " must be an integer");
  return static_cast<long>(d);
}

std::vector<double> parse_list(const std::string& v, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(item, key));
  }
  if (out.empty()) throw std::invalid_argument("config: empty list for " + key);
  return out;
}

void set_key(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "lambda_s") cfg.lambda_s = parse_double(value, key);
  else if (key == "lambda_u") cfg.lambda_u = parse_double(value, key);
  else if (key == "p_b") cfg.p_b = parse_double(value, key);
  else if (key == "arrival_rate_per_hour") cfg.arrival_rate_per_hour = parse_double(value, key);
  else if (key == "theta") cfg.theta = parse_double(value, key);
  else if (key == "J") cfg.j_mpr = static_cast<int>(parse_long(value, key));
  else if (key == "L") cfg.n_channels = static_cast<int>(parse_long(value, key));
  else if (key == "M") cfg.queue_size = static_cast<int>(parse_long(value, key));
  else if (key == "p_max") cfg.p_max = parse_double(value, key);
  else if (key == "t_frame") cfg.t_frame = parse_double(value, key);
  else if (key == "e_max") cfg.e_max = parse_double(value, key);
  else if (key == "sigma0") cfg.sigma0 = parse_double(value, key);
  else if (key == "alpha") cfg.alpha = parse_double(value, key);
  else if (key == "X") cfg.grid_x = static_cast<int>(parse_long(value, key));
  else if (key == "Y") cfg.grid_y = static_cast<int>(parse_long(value, key));
  else if (key == "tol") cfg.tol = parse_double(value, key);
  else if (key == "max_iters") cfg.max_iters = static_cast<int>(parse_long(value, key));
  else if (key == "damping") cfg.damping = parse_double(value, key);
  else if (key == "tol2") cfg.tol2 = parse_double(value, key);
  else if (key == "max_iters2") cfg.max_iters2 = static_cast<int>(parse_long(value, key));
  else if (key == "damping2") cfg.damping2 = parse_double(value, key);
  else if (key == "p0_init") cfg.p0_init = parse_double(value, key);
  else if (key == "m0_shape") cfg.m0_shape = value;
  else if (key == "sweep_param") cfg.sweep_param = value;
  else if (key == "sweep_values") cfg.sweep_values = parse_list(value, key);
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(parse_long(value, key));
  else if (key == "replications") cfg.replications = parse_long(value, key);
  else if (key == "radius") cfg.radius = parse_double(value, key);
  else if (key == "out") cfg.out_dir = value;
  else if (key == "workers") cfg.workers = static_cast<int>(parse_long(value, key));
  else throw std::invalid_argument("config: unknown key '" + key + "'");
}

void apply_axis(ExperimentConfig& cfg, const std::string& axis, double value) {
  std::ostringstream os;
  os.imbue(std::locale::classic());
  os.precision(17);
  os << value;
  set_key(cfg, axis, os.str());
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot open " + path.string());
    path_ = path.string();
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }
  void close() {
    out_.close();
    if (!out_) throw std::runtime_error("write failed for " + path_);
  }

 private:
  std::ofstream out_;
  std::string path_;
};

void write_field_csv(const std::filesystem::path& path, const Field& f,
                     const Grid& g) {
  CsvWriter w(path);
  w.row({"t", "e", "value"});
  for (int n = 0; n <= g.n_time; ++n)
    for (int i = 0; i <= g.n_energy; ++i)
      w.row({format_csv(g.time(n)), format_csv(g.energy(i)),
             format_csv(f.values(i, n))});
  w.close();
}

}  // namespace

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  ExperimentConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: line " + std::to_string(line_no) +
                                  " is not key = value");
    set_key(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

void apply_override(ExperimentConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override must be key=value: " + assignment);
  set_key(cfg, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

SystemParams to_params(const ExperimentConfig& cfg) {
  SystemParams p;
  p.lambda_s = cfg.lambda_s;
  p.lambda_u = cfg.lambda_u;
  p.p_b = cfg.p_b;
  p.p_a = arrival_rate_to_p_a(cfg.arrival_rate_per_hour, cfg.t_frame);
  p.theta = cfg.theta;
  p.j_mpr = cfg.j_mpr;
  p.n_channels = cfg.n_channels;
  p.queue_size = cfg.queue_size;
  p.p_max = cfg.p_max;
  p.t_frame = cfg.t_frame;
  p.e_max = cfg.e_max;
  p.sigma0 = cfg.sigma0;
  p.alpha = cfg.alpha;
  return p;
}

SolveOptions to_solve_options(const ExperimentConfig& cfg) {
  SolveOptions o;
  o.damping = cfg.damping;
  o.tol = cfg.tol;
  o.max_iters = cfg.max_iters;
  o.p0_init = cfg.p0_init;
  o.fixed_point.damping = cfg.damping2;
  o.fixed_point.tol = cfg.tol2;
  o.fixed_point.max_iters = cfg.max_iters2;
  return o;
}

Eigen::VectorXd make_m0(const ExperimentConfig& cfg, const Grid& g) {
  if (cfg.m0_shape == "uniform") return uniform_density_slice(g);
  if (cfg.m0_shape.rfind("point:", 0) == 0)
    return point_density_slice(g, parse_double(cfg.m0_shape.substr(6), "m0_shape"));
  if (cfg.m0_shape.rfind("file:", 0) == 0) {
    std::ifstream in(cfg.m0_shape.substr(5));
    if (!in) throw std::runtime_error("cannot open m0 file " + cfg.m0_shape.substr(5));
    Eigen::VectorXd m(g.n_energy + 1);
    for (Eigen::Index i = 0; i < m.size(); ++i)
      if (!(in >> m(i))) throw std::runtime_error("m0 file needs Y+1 values");
    if ((m.array() < 0.0).any())
      throw std::invalid_argument("m0 file has negative entries");
    const double mass = m.sum() * g.de;
    if (!(mass > 0.0)) throw std::invalid_argument("m0 file has zero mass");
    return m / mass;
  }
  throw std::invalid_argument("unknown m0_shape '" + cfg.m0_shape + "'");
}

SummaryRow summarize(const SystemParams& p, const Grid& g,
                     const EquilibriumResult& result) {
  SummaryRow row;
  row.p_s = result.p_s;
  row.pi_a = result.pi_a;
  row.t_h = throughput(p.p_b, result.p_s);
  row.iterations = result.iterations;
  row.residual = result.final_residual;
  row.depleted_fraction = depleted_fraction(result, g);
  row.converged = result.converged;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (row.t_h > 0.0 && (1.0 - p.p_a) * row.t_h > 0.0) {
    row.e_nt = avg_transmissions(row.t_h);
    const SteadyState ss = steady_state(transition_matrix(p.p_a, p.p_b, result.p_s,
                                                          p.queue_size));
    row.q = avg_queue(ss);
    row.d = p.p_a > 0.0 ? avg_delay(ss, row.t_h) : nan;  // no packets, no delay
  } else {
    // Either no service or saturated arrivals: the chain has no proper
    // steady state, so the queue metrics are reported as undefined.
    row.e_nt = row.t_h > 0.0 ? avg_transmissions(row.t_h)
                             : std::numeric_limits<double>::infinity();
    row.q = nan;
    row.d = nan;
  }
  return row;
}

std::string format_csv(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

namespace {

EquilibriumResult solve_from_config(const ExperimentConfig& cfg, SystemParams& p,
                                    Grid& g) {
  p = to_params(cfg);
  validate_params(p);
  g = make_grid(p, cfg.grid_x, cfg.grid_y);
  validate_grid(p, g);
  return solve_equilibrium(p, g, make_m0(cfg, g), to_solve_options(cfg));
}

void write_summary_csv(const std::filesystem::path& path, const SummaryRow& row) {
  CsvWriter w(path);
  w.row({"p_s", "pi_a", "t_h", "e_nt", "q", "d", "iterations", "residual",
         "depleted_fraction", "converged"});
  w.row({format_csv(row.p_s), format_csv(row.pi_a), format_csv(row.t_h),
         format_csv(row.e_nt), format_csv(row.q), format_csv(row.d),
         std::to_string(row.iterations), format_csv(row.residual),
         format_csv(row.depleted_fraction), row.converged ? "1" : "0"});
  w.close();
}

}  // namespace

int run_solve(const ExperimentConfig& cfg) {
  SystemParams p;
  Grid g;
  const EquilibriumResult result = solve_from_config(cfg, p, g);
  const std::filesystem::path out(cfg.out_dir);
  std::filesystem::create_directories(out);
  write_field_csv(out / "policy.csv", result.policy, g);
  write_field_csv(out / "meanfield.csv", result.mean_field, g);
  write_field_csv(out / "costate.csv", result.costate, g);
  write_summary_csv(out / "summary.csv", summarize(p, g, result));
  return result.converged ? 0 : 2;
}

int run_sweep(const ExperimentConfig& cfg) {
  if (cfg.sweep_param.empty())
    throw std::invalid_argument("sweep requires sweep_param and sweep_values");
  if (cfg.sweep_values.empty())
    throw std::invalid_argument("sweep_values must not be empty");
  if (cfg.workers < 1) throw std::invalid_argument("workers must be >= 1");

  // Materialize and validate every point before running anything.
  std::vector<ExperimentConfig> points;
  points.reserve(cfg.sweep_values.size());
  for (double v : cfg.sweep_values) {
    ExperimentConfig point = cfg;
    apply_axis(point, cfg.sweep_param, v);
    const SystemParams p = to_params(point);
    validate_params(p);
    validate_grid(p, make_grid(p, point.grid_x, point.grid_y));
    points.push_back(std::move(point));
  }

  std::vector<SummaryRow> rows(points.size());
  std::vector<std::exception_ptr> errors(points.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < points.size();) {
      try {
        SystemParams p;
        Grid g;
        const EquilibriumResult r = solve_from_config(points[i], p, g);
        rows[i] = summarize(p, g, r);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n_workers =
      std::min<std::size_t>(cfg.workers, points.size());
  std::vector<std::thread> pool;
  for (int w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);

  const std::filesystem::path out(cfg.out_dir);
  std::filesystem::create_directories(out);
  CsvWriter w(out / "sweep.csv");
  w.row({cfg.sweep_param, "p_s", "pi_a", "t_h", "d", "q", "e_nt", "converged"});
  bool all_converged = true;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const SummaryRow& r = rows[i];
    w.row({format_csv(cfg.sweep_values[i]), format_csv(r.p_s), format_csv(r.pi_a),
           format_csv(r.t_h), format_csv(r.d), format_csv(r.q), format_csv(r.e_nt),
           r.converged ? "1" : "0"});
    all_converged = all_converged && r.converged;
  }
  w.close();
  return all_converged ? 0 : 2;
}

namespace {

struct CheckRow {
  std::string name;
  double analytic = 0.0;
  double mc_mean = 0.0;
  double mc_se = 0.0;   // pass gate is |analytic - mc_mean| <= 3 * mc_se
  int verdict = 1;      // 1 pass, 0 fail, -1 insufficient precision
};

CheckRow make_check(std::string name, double analytic, double mc, double se) {
  CheckRow row;
  row.name = std::move(name);
  row.analytic = analytic;
  row.mc_mean = mc;
  row.mc_se = se;
  row.verdict = std::abs(analytic - mc) <= 3.0 * se ? 1 : 0;
  return row;
}

}  // namespace

int run_validate(const ExperimentConfig& cfg) {
  const SystemParams p = to_params(cfg);
  validate_params(p);
  const Grid g = make_grid(p, cfg.grid_x, cfg.grid_y);
  validate_grid(p, g);
  const long reps = cfg.replications;
  std::vector<CheckRow> checks;

  // Distance law: KS gate encoded through the 3-se pass rule.
  {
    const long wanted = 10000;
    const double sample_lambda_u = 20.0;
    SystemParams sp = p;
    sp.lambda_u = sample_lambda_u;
    std::vector<mc::NetworkSample> samples;
    long got = 0;
    for (int k = 0; k < 200 && got < wanted; ++k) {
      samples.push_back(mc::make_network_sample(sp, cfg.radius, cfg.seed + 1000 + k));
      const auto& s = samples.back();
      for (Eigen::Index j = 0; j < s.device_points.cols(); ++j)
        if (s.device_points.col(j).norm() <= 0.5 * s.radius) ++got;
      if (reps < 1000) break;  // deliberately small run
    }
    if (got < wanted) {
      checks.push_back({"distance_cdf_ks", 0.0, 0.0, 0.0, -1});
    } else {
      const auto cdf = mc::empirical_distance_cdf(samples);
      checks.push_back(make_check("distance_cdf_ks", 0.0, cdf.ks_statistic(p),
                                  cdf.ks_bound() / 3.0));
    }
  }

  // Active-count law at a representative activity level.
  {
    const double pi_a = 0.1;
    if (reps < 1000) {
      checks.push_back({"active_count_tv", 0.0, 0.0, 0.0, -1});
      checks.push_back({"active_count_mean", 0.0, 0.0, 0.0, -1});
    } else {
      const double cells_per_sample =
          p.lambda_s * std::numbers::pi_v<double> * 0.25 * cfg.radius * cfg.radius;
      const int n_samples =
          static_cast<int>(std::ceil(12000.0 / std::max(1.0, cells_per_sample)));
      const auto hist =
          mc::empirical_active_count(p, pi_a, n_samples, cfg.radius, cfg.seed + 2000);
      checks.push_back(make_check("active_count_tv", 0.0,
                                  mc::active_count_tv(p, pi_a, hist), 0.02 / 3.0));
      checks.push_back(make_check("active_count_mean",
                                  active_density(p, pi_a) / p.lambda_s, hist.mean(),
                                  hist.mean_se()));
    }
  }

  // Shot-noise interference against the closed form.
  {
    const double pi_a = 0.1;
    const double power = 0.5 * p.p_max;
    if (reps < 100) {
      checks.push_back({"interference_campbell", 0.0, 0.0, 0.0, -1});
    } else {
      const auto est = mc::estimate_interference(p, pi_a, power, 30.0,
                                                 static_cast<int>(std::min<long>(reps, 5000)),
                                                 cfg.seed + 3000);
      checks.push_back(make_check("interference_campbell",
                                  mean_field_interference(p, pi_a, power), est.mean,
                                  std::max(est.se, 1e-30)));
    }
  }

  // SINR exceedance on a degenerate mean field and constant power.
  {
    const double pi_a = 0.1;
    const double power = p.p_max;
    if (reps < 100) {
      checks.push_back({"p_theta_sinr", 0.0, 0.0, 0.0, -1});
    } else {
      const double i_mf = mean_field_interference(p, pi_a, power);
      const double a = p.theta * (p.sigma0 + i_mf) / power;
      const double b = std::numbers::pi_v<double> * p.lambda_s;
      const double analytic = b * sinr_tail_integral(a, b, p.alpha);
      const double r_int = 50.0 / std::sqrt(std::max(1e-9, active_density(p, pi_a)));
      const auto est = mc::estimate_p_theta(p, pi_a, power, r_int,
                                            static_cast<int>(std::min<long>(reps, 20000)),
                                            cfg.seed + 4000);
      // The analytic form freezes interference at its mean, so allow the
      // documented 0.03 absolute gap on top of sampling noise.
      checks.push_back(make_check("p_theta_sinr", analytic, est.mean,
                                  std::max(est.se, 0.01)));
    }
  }

  // Equilibrium-dependent checks share one solve.
  {
    const EquilibriumResult eq =
        solve_equilibrium(p, g, make_m0(cfg, g), to_solve_options(cfg));
    if (p.p_a > 0.0 && eq.p_s > 0.0 && eq.p_s <= 1.0) {
      const auto sim = mc::simulate_queue(p.p_a, p.p_b, eq.p_s, p.queue_size,
                                          1000000, cfg.seed + 5000);
      const SteadyState ss =
          steady_state(transition_matrix(p.p_a, p.p_b, eq.p_s, p.queue_size));
      checks.push_back(make_check("queue_occupancy_tv", 0.0,
                                  mc::tv_distance(sim.occupancy, ss.pi, 1.0),
                                  0.01 / 3.0));
      const double t_h = throughput(p.p_b, eq.p_s);
      const double se_head =
          std::sqrt((1.0 - t_h) / (t_h * t_h * std::max<long>(sim.delivered, 1)));
      checks.push_back(make_check("queue_head_frames", avg_transmissions(t_h),
                                  sim.mean_head_frames, std::max(se_head, 1e-9)));
    }
  }

  // Transport scheme against the particle oracle on a lattice that
  // resolves the solution: a smooth bump advected at constant speed.
  {
    const Grid fine = make_grid(p, 16 * cfg.grid_x, 16 * cfg.grid_y);
    Eigen::VectorXd m0(fine.n_energy + 1);
    for (int i = 0; i <= fine.n_energy; ++i) {
      const double e = fine.energy(i);
      const double c = 0.7 * p.e_max;
      const double w = 0.12 * p.e_max;
      m0(i) = std::exp(-0.5 * (e - c) * (e - c) / (w * w));
    }
    m0 /= m0.sum() * fine.de;
    Field pol = make_field(fine, FieldRole::policy, 0.2 * p.p_max);
    pol.values.row(0).setZero();
    const MeanField ref = fpk_forward(m0, pol, fine);
    const Eigen::MatrixXd hist =
        mc::particle_transport(m0, pol, 100000, fine, cfg.seed + 6000);
    checks.push_back(make_check(
        "particle_transport_tv", 0.0,
        mc::tv_distance(hist.col(fine.n_time), ref.values.col(fine.n_time), fine.de),
        0.02 / 3.0));
  }

  const std::filesystem::path out(cfg.out_dir);
  std::filesystem::create_directories(out);
  CsvWriter w(out / "validate.csv");
  w.row({"check", "analytic", "mc_mean", "mc_se", "pass"});
  bool any_fail = false;
  for (const CheckRow& row : checks) {
    w.row({row.name, format_csv(row.analytic), format_csv(row.mc_mean),
           format_csv(row.mc_se),
           row.verdict == 1 ? "1" : (row.verdict == 0 ? "0" : "insufficient")});
    any_fail = any_fail || row.verdict == 0;
  }
  w.close();
  return any_fail ? 1 : 0;
}

}  // namespace mfiot::cli
