#include "mfiot/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "mfiot/geometry.hpp"

namespace mfiot::mc {

namespace {

constexpr double kPi = std::numbers::pi_v<double>;

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Bucket grid over the sampling disk for nearest-station queries.
class NearestIndex {
 public:
  NearestIndex(const Eigen::Matrix2Xd& pts, const Eigen::Vector2d& center,
               double radius)
      : pts_(pts), x0_(center.x() - radius), y0_(center.y() - radius) {
    if (pts.cols() == 0) throw std::invalid_argument("no stations to associate");
    const double span = 2.0 * radius;
    n_ = std::max<int>(1, static_cast<int>(std::sqrt(static_cast<double>(pts.cols()))));
    h_ = span / n_;
    buckets_.resize(static_cast<std::size_t>(n_) * n_);
    for (Eigen::Index j = 0; j < pts.cols(); ++j)
      buckets_[bucket_of(pts(0, j), pts(1, j))].push_back(static_cast<int>(j));
  }

  int nearest(const Eigen::Vector2d& q) const {
    const int cx = clamp_cell((q.x() - x0_) / h_);
    const int cy = clamp_cell((q.y() - y0_) / h_);
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int ring = 0; ring < 2 * n_; ++ring) {
      if (best >= 0) {
        const double ring_min = (ring - 1) * h_;
        if (ring_min > 0.0 && ring_min * ring_min > best_d2) break;
      }
      scan_ring(q, cx, cy, ring, best, best_d2);
    }
    return best;
  }

 private:
  int clamp_cell(double v) const {
    const int c = static_cast<int>(std::floor(v));
    return c < 0 ? 0 : (c >= n_ ? n_ - 1 : c);
  }

  std::size_t bucket_of(double x, double y) const {
    return static_cast<std::size_t>(clamp_cell((x - x0_) / h_)) * n_ +
           clamp_cell((y - y0_) / h_);
  }

  void scan_cell(const Eigen::Vector2d& q, int ix, int iy, int& best,
                 double& best_d2) const {
    if (ix < 0 || iy < 0 || ix >= n_ || iy >= n_) return;
    for (int j : buckets_[static_cast<std::size_t>(ix) * n_ + iy]) {
      const double d2 = (pts_.col(j) - q).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = j;
      }
    }
  }

  void scan_ring(const Eigen::Vector2d& q, int cx, int cy, int ring, int& best,
                 double& best_d2) const {
    if (ring == 0) {
      scan_cell(q, cx, cy, best, best_d2);
      return;
    }
    for (int dx = -ring; dx <= ring; ++dx) {
      scan_cell(q, cx + dx, cy - ring, best, best_d2);
      scan_cell(q, cx + dx, cy + ring, best, best_d2);
    }
    for (int dy = -ring + 1; dy <= ring - 1; ++dy) {
      scan_cell(q, cx - ring, cy + dy, best, best_d2);
      scan_cell(q, cx + ring, cy + dy, best, best_d2);
    }
  }

  const Eigen::Matrix2Xd& pts_;
  double x0_, y0_, h_;
  int n_;
  std::vector<std::vector<int>> buckets_;
};

Eigen::Matrix2Xd sample_disk_points(long count, double radius,
                                    const Eigen::Vector2d& center,
                                    std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::Matrix2Xd pts(2, count);
  for (long j = 0; j < count; ++j) {
    const double r = radius * std::sqrt(unit(rng));
    const double ang = 2.0 * kPi * unit(rng);
    pts(0, j) = center.x() + r * std::cos(ang);
    pts(1, j) = center.y() + r * std::sin(ang);
  }
  return pts;
}

}  // namespace

std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(stream)));
}

Eigen::Matrix2Xd sample_ppp(double intensity_per_km2, double radius_km,
                            std::uint64_t seed, const Eigen::Vector2d& center) {
  if (intensity_per_km2 < 0.0 || !(radius_km > 0.0))
    throw std::invalid_argument("sample_ppp: bad intensity or radius");
  auto rng = make_stream(seed, 0);
  const double mean = intensity_per_km2 * kPi * radius_km * radius_km;
  long count = 0;
  if (mean > 0.0) count = std::poisson_distribution<long>(mean)(rng);
  return sample_disk_points(count, radius_km, center, rng);
}

void associate_nearest(NetworkSample& sample) {
  NearestIndex index(sample.bs_points, sample.center, sample.radius);
  sample.associations.resize(sample.device_points.cols());
  for (Eigen::Index j = 0; j < sample.device_points.cols(); ++j)
    sample.associations(j) = index.nearest(sample.device_points.col(j));
}

NetworkSample make_network_sample(const SystemParams& p, double radius_km,
                                  std::uint64_t seed) {
  NetworkSample s;
  s.radius = radius_km;
  s.rng_seed = seed;
  s.bs_points = sample_ppp(p.lambda_s, radius_km, splitmix64(seed) + 1);
  s.device_points = sample_ppp(p.lambda_u, radius_km, splitmix64(seed) + 2);
  auto rng = make_stream(seed, 3);
  std::exponential_distribution<double> exp1(1.0);
  s.fading.resize(s.device_points.cols());
  for (Eigen::Index j = 0; j < s.fading.size(); ++j) s.fading(j) = exp1(rng);
  associate_nearest(s);
  return s;
}

double EmpiricalDistanceCdf::evaluate(double r) const {
  const auto it = std::upper_bound(distances.begin(), distances.end(), r);
  return static_cast<double>(it - distances.begin()) / distances.size();
}

double EmpiricalDistanceCdf::ks_statistic(const SystemParams& p) const {
  const double n = static_cast<double>(distances.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    const double f = nearest_distance_cdf(p, distances[i]);
    ks = std::max(ks, std::abs(f - static_cast<double>(i + 1) / n));
    ks = std::max(ks, std::abs(f - static_cast<double>(i) / n));
  }
  return ks;
}

double EmpiricalDistanceCdf::ks_bound() const {
  return 1.63 / std::sqrt(static_cast<double>(distances.size()));
}

EmpiricalDistanceCdf empirical_distance_cdf(std::span<const NetworkSample> samples) {
  EmpiricalDistanceCdf cdf;
  for (const NetworkSample& s : samples) {
    if (s.associations.size() != s.device_points.cols())
      throw std::invalid_argument("empirical_distance_cdf: sample lacks associations");
    const double inner = 0.5 * s.radius;
    for (Eigen::Index j = 0; j < s.device_points.cols(); ++j) {
      if ((s.device_points.col(j) - s.center).norm() > inner) continue;
      const int bs = s.associations(j);
      cdf.distances.push_back(
          (s.device_points.col(j) - s.bs_points.col(bs)).norm());
    }
  }
  if (cdf.distances.size() < 10000)
    throw std::invalid_argument(
        "empirical_distance_cdf: need at least 1e4 interior link distances");
  std::sort(cdf.distances.begin(), cdf.distances.end());
  return cdf;
}

Eigen::VectorXd ActiveCountHistogram::pmf() const {
  Eigen::VectorXd p(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k)
    p(static_cast<Eigen::Index>(k)) = static_cast<double>(counts[k]) / cells;
  return p;
}

double ActiveCountHistogram::mean() const {
  double acc = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k)
    acc += static_cast<double>(k) * counts[k];
  return acc / cells;
}

double ActiveCountHistogram::mean_se() const {
  const double mu = mean();
  double var = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k)
    var += (static_cast<double>(k) - mu) * (static_cast<double>(k) - mu) * counts[k];
  var /= static_cast<double>(cells - 1);
  return std::sqrt(var / static_cast<double>(cells));
}

ActiveCountHistogram empirical_active_count(const SystemParams& p, double pi_a,
                                            int n_samples, double radius_km,
                                            std::uint64_t seed) {
  const double transmit_prob = (1.0 - p.p_b) * pi_a / p.n_channels;
  ActiveCountHistogram hist;
  for (int s = 0; s < n_samples; ++s) {
    auto rng = make_stream(seed, static_cast<std::uint64_t>(s) + 1);
    const double bs_mean = p.lambda_s * kPi * radius_km * radius_km;
    const long n_bs = std::poisson_distribution<long>(bs_mean)(rng);
    if (n_bs == 0) continue;
    const Eigen::Matrix2Xd bs =
        sample_disk_points(n_bs, radius_km, Eigen::Vector2d::Zero(), rng);

    // Thin the device process during generation: inactive devices never
    // need coordinates, which keeps dense-device draws cheap.
    const double dev_mean = p.lambda_u * kPi * radius_km * radius_km;
    const long n_dev = std::poisson_distribution<long>(dev_mean)(rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<Eigen::Vector2d> actives;
    for (long j = 0; j < n_dev; ++j) {
      if (unit(rng) >= transmit_prob) continue;
      const double r = radius_km * std::sqrt(unit(rng));
      const double ang = 2.0 * kPi * unit(rng);
      actives.emplace_back(r * std::cos(ang), r * std::sin(ang));
    }

    NearestIndex index(bs, Eigen::Vector2d::Zero(), radius_km);
    std::vector<std::int64_t> per_cell(n_bs, 0);
    for (const auto& a : actives) ++per_cell[index.nearest(a)];

    const double inner = 0.5 * radius_km;
    for (long b = 0; b < n_bs; ++b) {
      if (bs.col(b).norm() > inner) continue;
      const auto k = static_cast<std::size_t>(per_cell[b]);
      if (hist.counts.size() <= k) hist.counts.resize(k + 1, 0);
      ++hist.counts[k];
      ++hist.cells;
    }
  }
  if (hist.cells < 10000)
    throw std::invalid_argument(
        "empirical_active_count: need at least 1e4 interior cells");
  return hist;
}

double active_count_tv(const SystemParams& p, double pi_a,
                       const ActiveCountHistogram& hist) {
  const Eigen::VectorXd pmf = hist.pmf();
  double tv = 0.0;
  double model_mass = 0.0;
  for (Eigen::Index k = 0; k < pmf.size(); ++k) {
    const double model = active_count_pmf(p, pi_a, static_cast<int>(k));
    model_mass += model;
    tv += std::abs(pmf(k) - model);
  }
  tv += std::max(0.0, 1.0 - model_mass);  // model tail beyond observed support
  return 0.5 * tv;
}

McEstimate estimate_interference(const SystemParams& p, double pi_a, double power,
                                 double radius_km, int replications,
                                 std::uint64_t seed) {
  if (!(p.alpha > 2.0))
    throw std::invalid_argument("estimate_interference: alpha must exceed 2");
  if (power < 0.0) throw std::invalid_argument("estimate_interference: negative power");
  const double lambda_a = active_density(p, pi_a);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int rep = 0; rep < replications; ++rep) {
    auto rng = make_stream(seed, static_cast<std::uint64_t>(rep) + 1);
    const double mean = lambda_a * kPi * radius_km * radius_km;
    long count = 0;
    if (mean > 0.0 && power > 0.0)
      count = std::poisson_distribution<long>(mean)(rng);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double total = 0.0;
    for (long j = 0; j < count; ++j) {
      const double r = radius_km * std::sqrt(unit(rng));
      total += power * std::min(1.0, std::pow(r, -p.alpha));
    }
    sum += total;
    sum_sq += total * total;
  }
  McEstimate est;
  est.replications = replications;
  est.mean = sum / replications;
  const double var =
      std::max(0.0, (sum_sq - sum * sum / replications) / (replications - 1.0));
  est.se = std::sqrt(var / replications);
  return est;
}

McEstimate estimate_p_theta(const SystemParams& p, double pi_a, double power,
                            double radius_km, int replications,
                            std::uint64_t seed, double interferer_power) {
  if (!(power > 0.0)) throw std::invalid_argument("estimate_p_theta: power must be positive");
  const double p_int = interferer_power < 0.0 ? power : interferer_power;
  const double lambda_a = active_density(p, pi_a);
  long successes = 0;
  for (int rep = 0; rep < replications; ++rep) {
    auto rng = make_stream(seed, static_cast<std::uint64_t>(rep) + 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::exponential_distribution<double> exp1(1.0);

    // Nearest-station distance by inverse CDF, own-link fading, then a
    // fresh interferer pattern with capped path loss and Rayleigh fading.
    const double r_own =
        std::sqrt(-std::log1p(-unit(rng)) / (p.lambda_s * kPi));
    const double fading = exp1(rng);
    const double signal = power * fading * std::pow(r_own, -p.alpha);

    double interference = 0.0;
    const double mean = lambda_a * kPi * radius_km * radius_km;
    long count = 0;
    if (mean > 0.0) count = std::poisson_distribution<long>(mean)(rng);
    for (long j = 0; j < count; ++j) {
      const double r = radius_km * std::sqrt(unit(rng));
      interference += p_int * exp1(rng) * std::min(1.0, std::pow(r, -p.alpha));
    }
    if (signal >= p.theta * (p.sigma0 + interference)) ++successes;
  }
  McEstimate est;
  est.replications = replications;
  est.mean = static_cast<double>(successes) / replications;
  est.se = std::sqrt(std::max(0.0, est.mean * (1.0 - est.mean) / replications));
  return est;
}

QueueSimResult simulate_queue(double p_a, double p_b, double p_s, int queue_size,
                              long n_frames, std::uint64_t seed) {
  if (n_frames < 100000)
    throw std::invalid_argument("simulate_queue: need at least 1e5 frames");
  auto rng = make_stream(seed, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Eigen::VectorXd occupancy = Eigen::VectorXd::Zero(queue_size + 1);
  std::deque<long> arrival_frame;  // FIFO of queued packets
  long head_since = 0;             // frame the current head became eligible
  double delay_sum = 0.0;
  double head_sum = 0.0;
  long delivered = 0;
  long dropped = 0;
  double queue_sum = 0.0;

  for (long frame = 0; frame < n_frames; ++frame) {
    const bool arrival = unit(rng) < p_a;
    if (!arrival_frame.empty()) {
      const bool attempt = unit(rng) >= p_b;
      if (attempt && unit(rng) < p_s) {
        delay_sum += static_cast<double>(frame - arrival_frame.front());
        head_sum += static_cast<double>(frame - head_since + 1);
        ++delivered;
        arrival_frame.pop_front();
        head_since = frame + 1;
      }
    } else {
      head_since = frame + 1;
    }
    if (arrival) {
      if (static_cast<int>(arrival_frame.size()) < queue_size)
        arrival_frame.push_back(frame);
      else
        ++dropped;
    }
    occupancy(static_cast<Eigen::Index>(arrival_frame.size())) += 1.0;
    queue_sum += static_cast<double>(arrival_frame.size());
  }

  QueueSimResult res;
  res.occupancy = occupancy / static_cast<double>(n_frames);
  res.mean_queue = queue_sum / static_cast<double>(n_frames);
  res.mean_delay = delivered > 0 ? delay_sum / delivered : 0.0;
  res.mean_head_frames = delivered > 0 ? head_sum / delivered : 0.0;
  res.delivered = delivered;
  res.dropped = dropped;
  return res;
}

Eigen::MatrixXd particle_transport(const Eigen::VectorXd& m0, const Field& policy,
                                   int n_particles, const Grid& g,
                                   std::uint64_t seed) {
  check_field_shape(policy, g, "policy");
  check_density_slice(m0, g);
  if (n_particles < 1) throw std::invalid_argument("particle_transport: no particles");

  // Systematic inverse-CDF sampling of the start node: quantiles at
  // (u0 + k) / N with one random offset. Low-variance and still seeded.
  Eigen::VectorXd cum(m0.size());
  double acc = 0.0;
  for (Eigen::Index i = 0; i < m0.size(); ++i) {
    acc += m0(i) * g.de;
    cum(i) = acc;
  }
  cum(m0.size() - 1) = 1.0;

  auto power_at = [&](int n, double e) {
    const double pos = e / g.de;
    const int lo = std::min(g.n_energy - 1, std::max(0, static_cast<int>(pos)));
    const double w = std::min(1.0, std::max(0.0, pos - lo));
    return (1.0 - w) * policy.values(lo, n) + w * policy.values(lo + 1, n);
  };

  Eigen::MatrixXd hist = Eigen::MatrixXd::Zero(g.n_energy + 1, g.n_time + 1);
  auto rng = make_stream(seed, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double offset = unit(rng);
  for (int particle = 0; particle < n_particles; ++particle) {
    const double u = (offset + particle) / n_particles;
    const auto it = std::lower_bound(cum.data(), cum.data() + cum.size(), u);
    double e = g.energy(static_cast<int>(it - cum.data()));
    hist(g.energy_index(e), 0) += 1.0;
    for (int n = 0; n < g.n_time; ++n) {
      e = std::max(0.0, e - power_at(n, e) * g.dt);
      hist(g.energy_index(e), n + 1) += 1.0;
    }
  }
  return hist / (static_cast<double>(n_particles) * g.de);
}

double tv_distance(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double de) {
  if (a.size() != b.size()) throw std::invalid_argument("tv_distance: length mismatch");
  return 0.5 * (a - b).cwiseAbs().sum() * de;
}

}  // namespace mfiot::mc
