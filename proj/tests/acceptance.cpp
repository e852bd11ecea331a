// End-to-end acceptance suite. Each criterion prints one PASS/FAIL line;
// the process exits nonzero if any requested criterion fails.
//
// Usage: acceptance [criterion ...]   (default: run all seven)

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mfiot/experiment.hpp"
#include "mfiot/mfg.hpp"
#include "mfiot/montecarlo.hpp"
#include "mfiot/queueing.hpp"
#include "oracles.hpp"

using namespace mfiot;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi_v<double>;

struct Gate {
  bool ok = true;
  void expect(bool cond, const char* what, double got, double want) {
    std::printf("    %-52s got %-12.6g want %-12.6g %s\n", what, got, want,
                cond ? "ok" : "VIOLATED");
    ok = ok && cond;
  }
  void note(const char* what, double value) {
    std::printf("    %-52s %.6g (informational)\n", what, value);
  }
};

SystemParams reference_params(double lambda_s, double arrival_per_hour, int j,
                              double lambda_u = 3000.0) {
  SystemParams p;
  p.lambda_s = lambda_s;
  p.lambda_u = lambda_u;
  p.j_mpr = j;
  p.p_a = arrival_rate_to_p_a(arrival_per_hour, p.t_frame);
  return p;
}

EquilibriumResult solve_reference(const SystemParams& p, const Grid& g) {
  return solve_equilibrium(p, g, uniform_density_slice(g));
}

cli::SummaryRow solve_point(const SystemParams& p) {
  const Grid g = make_grid(p, 100, 30);
  return cli::summarize(p, g, solve_reference(p, g));
}

// ---------------------------------------------------------------------------

bool criterion_depletion() {
  Gate gate;
  const SystemParams p = reference_params(1.0, 12.0, 3);
  const Grid g = make_grid(p, 100, 30);
  const EquilibriumResult r = solve_reference(p, g);
  gate.expect(r.converged, "equilibrium converged", r.converged, 1.0);
  const double depleted = depleted_fraction(r, g);
  gate.expect(std::abs(depleted - 0.13) <= 0.05,
              "depleted mass at t = T_f within 0.13 +/- 0.05", depleted, 0.13);
  return gate.ok;
}

// ---------------------------------------------------------------------------

bool check_monotone(Gate& gate, const std::vector<double>& values, bool increasing,
                    const char* what) {
  bool ok = true;
  for (std::size_t k = 1; k < values.size(); ++k) {
    const double slack = 1e-9 * (std::abs(values[k - 1]) + 1e-300);
    ok = ok && (increasing ? values[k] >= values[k - 1] - slack
                           : values[k] <= values[k - 1] + slack);
  }
  std::printf("    %-52s [", what);
  for (double v : values) std::printf(" %.5g", v);
  std::printf(" ] %s\n", ok ? "ok" : "VIOLATED");
  gate.ok = gate.ok && ok;
  return ok;
}

bool criterion_trends() {
  Gate gate;
  struct Sweep {
    const char* what;
    std::vector<SystemParams> points;
    std::function<double(const cli::SummaryRow&)> metric;
    bool increasing;
  };
  const std::vector<double> ls{1.0, 5.0, 10.0, 20.0};
  const std::vector<double> lu{1000.0, 2000.0, 3000.0, 4000.0, 5000.0};
  const std::vector<double> arr{1.0, 10.0, 20.0, 40.0, 60.0};
  const std::vector<int> js{1, 3, 5, 7};

  std::vector<Sweep> sweeps;
  {
    Sweep s{"p_s nondecreasing in lambda_s (1 pkt / 5 min)", {}, nullptr, true};
    for (double v : ls) s.points.push_back(reference_params(v, 12.0, 3));
    s.metric = [](const cli::SummaryRow& r) { return r.p_s; };
    sweeps.push_back(std::move(s));
  }
  {
    Sweep s{"delay nonincreasing in lambda_s (1 pkt / min)", {}, nullptr, false};
    for (double v : ls) s.points.push_back(reference_params(v, 60.0, 3));
    s.metric = [](const cli::SummaryRow& r) { return r.d; };
    sweeps.push_back(std::move(s));
  }
  {
    Sweep s{"delay nonincreasing in J", {}, nullptr, false};
    for (int v : js) s.points.push_back(reference_params(10.0, 60.0, v));
    s.metric = [](const cli::SummaryRow& r) { return r.d; };
    sweeps.push_back(std::move(s));
  }
  {
    Sweep s{"delay nondecreasing in lambda_u", {}, nullptr, true};
    for (double v : lu) s.points.push_back(reference_params(10.0, 60.0, 3, v));
    s.metric = [](const cli::SummaryRow& r) { return r.d; };
    sweeps.push_back(std::move(s));
  }
  {
    Sweep s{"p_s nonincreasing in lambda_u", {}, nullptr, false};
    for (double v : lu) s.points.push_back(reference_params(10.0, 60.0, 3, v));
    s.metric = [](const cli::SummaryRow& r) { return r.p_s; };
    sweeps.push_back(std::move(s));
  }
  {
    Sweep s{"p_s nonincreasing in arrival rate", {}, nullptr, false};
    for (double v : arr) s.points.push_back(reference_params(10.0, v, 3));
    s.metric = [](const cli::SummaryRow& r) { return r.p_s; };
    sweeps.push_back(std::move(s));
  }

  // Flatten and solve with four workers.
  std::vector<const SystemParams*> jobs;
  for (const auto& s : sweeps)
    for (const auto& p : s.points) jobs.push_back(&p);
  std::vector<cli::SummaryRow> rows(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < jobs.size();)
      rows[i] = solve_point(*jobs[i]);
  };
  std::vector<std::future<void>> pool;
  for (int w = 0; w < 4; ++w) pool.push_back(std::async(std::launch::async, worker));
  for (auto& f : pool) f.get();

  std::size_t offset = 0;
  for (const auto& s : sweeps) {
    std::vector<double> values;
    bool converged = true;
    for (std::size_t k = 0; k < s.points.size(); ++k) {
      converged = converged && rows[offset + k].converged;
      values.push_back(s.metric(rows[offset + k]));
    }
    gate.expect(converged, "all sweep points converged", converged, 1.0);
    check_monotone(gate, values, s.increasing, s.what);
    offset += s.points.size();
  }
  return gate.ok;
}

// ---------------------------------------------------------------------------

bool criterion_markov_oracle() {
  Gate gate;
  std::mt19937_64 rng(19937);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const double p_a = 0.95 * u(rng);
    const double p_b = 0.95 * u(rng);
    const double p_s = 0.05 + 0.95 * u(rng);
    const int m = 1 + static_cast<int>(u(rng) * 11);
    const MarkovModel model = transition_matrix(p_a, p_b, p_s, m);
    const SteadyState ss = steady_state(model);
    const Eigen::VectorXd power = oracles::stationary_power_iteration(model.transition);
    worst = std::max(worst, (ss.pi - power).cwiseAbs().maxCoeff());
  }
  gate.expect(worst < 1e-10, "closed form vs power iteration, sup norm", worst, 1e-10);

  const double p_a = 0.3, p_b = 0.1, p_s = 0.7;
  const auto sim = mc::simulate_queue(p_a, p_b, p_s, 10, 1000000, 20240101);
  const auto ss = steady_state(transition_matrix(p_a, p_b, p_s, 10));
  const double tv = mc::tv_distance(sim.occupancy, ss.pi, 1.0);
  gate.expect(tv < 0.01, "discrete-event occupancy vs closed form, TV", tv, 0.01);
  return gate.ok;
}

// ---------------------------------------------------------------------------

bool criterion_special_function() {
  Gate gate;
  const double exact = g_closed_form(1.0, 0.0);
  gate.expect(std::abs(exact - 0.5 * std::sqrt(kPi)) < 1e-14,
              "g(1, 0) equals sqrt(pi)/2", exact, 0.5 * std::sqrt(kPi));

  std::vector<double> as, bs;
  for (int k = 0; k <= 14; ++k) as.push_back(std::pow(10.0, -3.0 + 0.5 * k));
  as.push_back(282.8);
  for (int k = 0; k <= 8; ++k) bs.push_back(std::pow(10.0, -2.0 + 0.5 * k));
  bs.push_back(31.42);

  double worst = 0.0;
  for (double a : as) {
    for (double b : bs) {
      const double lib = g_closed_form(a, b);
      const double cutoff = 2.0 * std::max(std::sqrt(45.0 / a), 45.0 / b);
      const double quad = oracles::integrate_simpson(
          [a, b](double s) { return std::exp(-a * s * s - b * s); }, 0.0, cutoff,
          1e-15);
      worst = std::max(worst, std::abs(lib - quad) / quad);
    }
  }
  gate.expect(worst < 1e-10, "closed form vs quadrature, relative error", worst, 1e-10);
  return gate.ok;
}

// ---------------------------------------------------------------------------

bool criterion_spatial_oracles() {
  Gate gate;
  SystemParams p;  // lambda_s = 10, Table-style defaults
  const double pi_a = 0.1;  // lambda_a = 9 per channel

  {
    SystemParams sampler = p;
    sampler.lambda_u = 20.0;
    std::vector<mc::NetworkSample> samples;
    long interior = 0;
    int k = 0;
    while (interior < 10000 && k < 40) {
      samples.push_back(mc::make_network_sample(sampler, 10.0, 52000 + k++));
      const auto& s = samples.back();
      for (Eigen::Index j = 0; j < s.device_points.cols(); ++j)
        if (s.device_points.col(j).norm() <= 0.5 * s.radius) ++interior;
    }
    const auto cdf = mc::empirical_distance_cdf(samples);
    gate.expect(cdf.ks_statistic(p) < cdf.ks_bound(),
                "distance law KS statistic under the band", cdf.ks_statistic(p),
                cdf.ks_bound());
  }
  {
    const auto hist = mc::empirical_active_count(p, pi_a, 16, 10.0, 53000);
    const double tv = mc::active_count_tv(p, pi_a, hist);
    gate.expect(tv < 0.02, "active-count pmf vs mixture law, TV", tv, 0.02);
  }
  {
    const double analytic = mean_field_interference(p, pi_a, 0.0125);
    gate.expect(std::abs(analytic - 0.7069) < 2e-4,
                "interference hand value at lambda_a = 9", analytic, 0.7069);
    const auto est = mc::estimate_interference(p, pi_a, 0.0125, 30.0, 3000, 54000);
    gate.expect(std::abs(est.mean - analytic) <= 3.0 * est.se,
                "shot-noise mean within 3 SE of closed form",
                std::abs(est.mean - analytic), 3.0 * est.se);
  }
  {
    // Tagged device at p_max against a population averaging p_max / 2.
    const double power = p.p_max;
    const double i_mf = mean_field_interference(p, pi_a, 0.5 * p.p_max);
    const double a = p.theta * (p.sigma0 + i_mf) / power;
    const double b = kPi * p.lambda_s;
    const double analytic = b * g_closed_form(a, b);
    gate.expect(std::abs(analytic - 0.739) < 2e-3,
                "SINR exceedance hand value", analytic, 0.739);
    const double radius = 50.0 / std::sqrt(active_density(p, pi_a));
    const auto est = mc::estimate_p_theta(p, pi_a, power, radius, 20000, 55000,
                                          0.5 * p.p_max);
    gate.expect(std::abs(est.mean - analytic) < 0.03,
                "sampled exceedance within 0.03 of analytic",
                std::abs(est.mean - analytic), 0.03);
  }
  return gate.ok;
}

// ---------------------------------------------------------------------------

bool criterion_solver_consistency() {
  Gate gate;
  SystemParams p;  // reference defaults
  const Grid g = make_grid(p, 100, 30);
  const double cfl = validate_grid(p, g);
  gate.expect(std::abs(cfl - 0.75) < 1e-12, "CFL number on the default lattice", cfl,
              0.75);

  const EquilibriumResult r = solve_reference(p, g);
  gate.expect(r.converged, "equilibrium converged", r.converged, 1.0);

  double mass_err = 0.0;
  for (int n = 0; n <= g.n_time; ++n)
    mass_err = std::max(mass_err,
                        std::abs(r.mean_field.values.col(n).sum() * g.de - 1.0));
  gate.expect(mass_err < 1e-9, "mass conservation per slice", mass_err, 1e-9);

  const double tol = 1e-5 * p.p_max;
  double foc = 0.0;
  for (int n = 0; n <= g.n_time; ++n) {
    for (int i = 1; i <= g.n_energy; ++i) {
      const double power = r.policy.values(i, n);
      if (power <= 0.0 || power >= p.p_max) continue;
      const double dmu_de =
          (r.costate.values(i, n) - r.costate.values(i - 1, n)) / g.de;
      foc = std::max(foc, std::abs(running_cost_dpower(p, power,
                                                       r.interference.i_mf(n), r.p_s) -
                                   dmu_de));
    }
  }
  gate.expect(foc < 10.0 * tol, "stationarity residual on interior cells", foc,
              10.0 * tol);

  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> upow(1e-4, p.p_max);
  std::uniform_real_distribution<double> ui(0.0, 1.0);
  double grad_err = 0.0;
  for (int k = 0; k < 200; ++k) {
    const double power = upow(rng);
    const double i_mf = ui(rng);
    const double p_s = ui(rng);
    const double h = 1e-6 * std::max(power, 1e-3);
    const double fd = oracles::central_difference(
        [&](double x) { return running_cost(p, x, i_mf, p_s); }, power, h);
    const double analytic = running_cost_dpower(p, power, i_mf, p_s);
    grad_err = std::max(grad_err, std::abs(analytic - fd) / std::abs(fd));
  }
  gate.expect(grad_err < 1e-6, "cost gradient vs central differences", grad_err, 1e-6);

  {
    // Particle oracle on a lattice that resolves the transported profile.
    const Grid fine = make_grid(p, 1600, 480);
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
    const Eigen::MatrixXd hist = mc::particle_transport(m0, pol, 100000, fine, 60606);
    const double tv =
        mc::tv_distance(hist.col(fine.n_time), ref.values.col(fine.n_time), fine.de);
    gate.expect(tv < 0.02, "particle oracle vs transport scheme, TV", tv, 0.02);
  }
  {
    // The equilibrium's terminal state concentrates in a boundary layer at
    // e = 0 that stays below the grid scale; report how the two
    // descriptions split it without gating on the full TV.
    const Eigen::VectorXd m0 = uniform_density_slice(g);
    const Eigen::MatrixXd hist = mc::particle_transport(m0, r.policy, 100000, g, 70707);
    gate.note("equilibrium policy: TV at T_f (boundary layer)",
              mc::tv_distance(hist.col(g.n_time), r.mean_field.values.col(g.n_time),
                              g.de));
    double fpk_low = 0.0;
    double hist_low = 0.0;
    for (int i = 0; i < 3; ++i) {
      fpk_low += r.mean_field.values(i, g.n_time) * g.de;
      hist_low += hist(i, g.n_time) * g.de;
    }
    gate.expect(std::abs(fpk_low - hist_low) < 0.02,
                "near-empty mass (bottom 3 nodes) agreement",
                std::abs(fpk_low - hist_low), 0.02);
  }
  return gate.ok;
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_bytes(Gate& gate, const fs::path& a, const fs::path& b, const char* what) {
  const bool ok = slurp(a) == slurp(b);
  std::printf("    %-52s %s\n", what, ok ? "byte-identical" : "DIFFER");
  gate.ok = gate.ok && ok;
  return ok;
}

bool criterion_determinism() {
  Gate gate;
  const fs::path root = fs::temp_directory_path() / "mfiot_acceptance_7";
  fs::remove_all(root);
  fs::create_directories(root);

  cli::ExperimentConfig solve_cfg;
  solve_cfg.out_dir = (root / "solve_a").string();
  cli::run_solve(solve_cfg);
  solve_cfg.out_dir = (root / "solve_b").string();
  cli::run_solve(solve_cfg);
  for (const char* name : {"policy.csv", "meanfield.csv", "costate.csv", "summary.csv"})
    same_bytes(gate, root / "solve_a" / name, root / "solve_b" / name, name);

  cli::ExperimentConfig sweep_cfg;
  sweep_cfg.sweep_param = "lambda_s";
  sweep_cfg.sweep_values = {1.0, 5.0, 10.0, 20.0};
  sweep_cfg.workers = 4;
  sweep_cfg.out_dir = (root / "sweep_a").string();
  cli::run_sweep(sweep_cfg);
  sweep_cfg.out_dir = (root / "sweep_b").string();
  cli::run_sweep(sweep_cfg);
  sweep_cfg.workers = 1;
  sweep_cfg.out_dir = (root / "sweep_c").string();
  cli::run_sweep(sweep_cfg);
  same_bytes(gate, root / "sweep_a" / "sweep.csv", root / "sweep_b" / "sweep.csv",
             "sweep.csv, repeated 4-worker runs");
  same_bytes(gate, root / "sweep_a" / "sweep.csv", root / "sweep_c" / "sweep.csv",
             "sweep.csv, 4 workers vs 1 worker");

  cli::ExperimentConfig val_cfg;
  val_cfg.replications = 2000;
  val_cfg.out_dir = (root / "val_a").string();
  cli::run_validate(val_cfg);
  val_cfg.out_dir = (root / "val_b").string();
  cli::run_validate(val_cfg);
  same_bytes(gate, root / "val_a" / "validate.csv", root / "val_b" / "validate.csv",
             "validate.csv, repeated runs");

  fs::remove_all(root);
  return gate.ok;
}

// ---------------------------------------------------------------------------

struct Criterion {
  int number;
  const char* title;
  bool (*run)();
};

const Criterion kCriteria[] = {
    {1, "depletion fraction at the sparse-station operating point", criterion_depletion},
    {2, "monotone trend suite over the parameter sweeps", criterion_trends},
    {3, "Markov steady state vs power iteration and simulation", criterion_markov_oracle},
    {4, "tail-integral closed form vs adaptive quadrature", criterion_special_function},
    {5, "stochastic-geometry Monte Carlo oracles", criterion_spatial_oracles},
    {6, "solver internal consistency", criterion_solver_consistency},
    {7, "byte-identical outputs across repeated runs", criterion_determinism},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  for (int k = 1; k < argc; ++k) wanted.push_back(std::atoi(argv[k]));
  if (wanted.empty())
    for (const Criterion& c : kCriteria) wanted.push_back(c.number);

  bool all_ok = true;
  for (int n : wanted) {
    const Criterion* found = nullptr;
    for (const Criterion& c : kCriteria)
      if (c.number == n) found = &c;
    if (found == nullptr) {
      std::fprintf(stderr, "unknown criterion %d\n", n);
      return 1;
    }
    std::printf("criterion %d: %s\n", found->number, found->title);
    bool ok = false;
    try {
      ok = found->run();
    } catch (const std::exception& e) {
      std::printf("    exception: %s\n", e.what());
    }
    std::printf("criterion %d: %s\n", found->number, ok ? "PASS" : "FAIL");
    all_ok = all_ok && ok;
  }
  return all_ok ? 0 : 1;
}
