#include "tvslab/brownian1d.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tvslab/bridge.hpp"
#include "tvslab/errors.hpp"
#include "tvslab/rng.hpp"

namespace tvslab {

namespace {

constexpr std::uint64_t kPathKey = 0x626d7061ULL;
constexpr std::uint64_t kCrossKey = 0x63726f73ULL;
constexpr std::uint64_t kMinKey = 0x6d696e73ULL;

void check_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidParameter("dt must be finite and > 0");
}

// Increment source shared by stored and streamed paths.
class Walker {
 public:
  Walker(std::uint64_t seed, double dt) : rng_(hash_key(seed, kPathKey)), sd_(std::sqrt(dt)), seed_(seed), dt_(dt) {}
  double step() { return sd_ * rng_.normal(); }
  double dt() const { return dt_; }
  std::uint64_t seed() const { return seed_; }

 private:
  Stream rng_;
  double sd_;
  std::uint64_t seed_;
  double dt_;
};

// Crossing of (lower, upper) between x0 and x1 (both inside) over dt.
// Returns 0 none, 1 lower, 2 upper.
int step_crossing(double x0, double x1, double dt, double lower, double upper, std::uint64_t seed, std::size_t i) {
  const double pl = std::exp(-2.0 * (x0 - lower) * (x1 - lower) / dt);
  const double pu = std::exp(-2.0 * (upper - x0) * (upper - x1) / dt);
  const double u = keyed_uniform(seed, kCrossKey, i);
  if (u < pl) return 1;
  if (u < pl + pu * (1.0 - pl)) return 2;
  return 0;
}

// Exit check for the move x0 -> x1 at step i; 0 when still inside.
int exit_check(double x0, double x1, double dt, double lower, double upper, bool correct, std::uint64_t seed,
               std::size_t i) {
  if (x1 <= lower) return 1;
  if (x1 >= upper) return 2;
  return correct ? step_crossing(x0, x1, dt, lower, upper, seed, i) : 0;
}

}  // namespace

Path1D simulate_bm(double t_max, double dt, std::uint64_t seed) {
  check_dt(dt);
  if (!(t_max >= 0.0)) throw InvalidParameter("simulate_bm: t_max must be >= 0");
  const double steps = std::ceil(t_max / dt - 1e-9);
  if (steps > static_cast<double>(kMaxPathSteps)) throw InvalidParameter("simulate_bm: more than 1e8 steps");
  const auto n = static_cast<std::size_t>(steps);
  Path1D p;
  p.dt = dt;
  p.seed = seed;
  p.values.resize(n + 1);
  p.values[0] = 0.0;
  Walker w(seed, dt);
  for (std::size_t i = 1; i <= n; ++i) p.values[i] = p.values[i - 1] + w.step();
  return p;
}

std::optional<ExitRecord> exit_time(const Path1D& path, double a, double b, bool bridge_correction) {
  if (!(a > 0.0 && b > 0.0)) throw InvalidParameter("exit_time: a and b must be > 0");
  for (std::size_t i = 1; i < path.values.size(); ++i) {
    const int e = exit_check(path.values[i - 1], path.values[i], path.dt, -a, b, bridge_correction, path.seed, i);
    if (e != 0) return ExitRecord{static_cast<double>(i) * path.dt, i, e == 1 ? ExitSide::kLower : ExitSide::kUpper, 1};
  }
  return std::nullopt;
}

LevyPair levy_transform(const Path1D& path) {
  LevyPair out;
  const std::size_t n = path.values.size();
  out.reflected.resize(n);
  out.infimum.resize(n);
  double inf = n > 0 ? path.values[0] : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i > 0) {
      const double m = bridge_min_quantile(path.values[i - 1], path.values[i], path.dt,
                                           keyed_uniform(path.seed, kMinKey, i));
      inf = std::min({inf, m, path.values[i]});
    }
    out.infimum[i] = inf;
    out.reflected[i] = path.values[i] - inf;
  }
  return out;
}

double local_time_estimate(const Path1D& path, std::size_t k, double eps) {
  if (!(eps > 0.0)) throw InvalidParameter("local_time_estimate: eps must be > 0");
  k = std::min(k, path.values.empty() ? 0 : path.values.size() - 1);
  std::size_t down = 0;
  bool armed = false;
  for (std::size_t i = 0; i <= k; ++i) {
    const double x = path.values[i];
    if (armed && (x == 0.0 || (x > 0.0) != (path.values[i - 1] > 0.0))) {
      ++down;
      armed = false;
    }
    if (std::abs(x) >= eps) armed = true;
  }
  return eps * static_cast<double>(down);
}

std::optional<ExitRecord> iterated_excursion_time(const Path1D& path, double a, double r, bool bridge_correction) {
  if (!(r > 0.0 && r < a)) throw InvalidParameter("iterated_excursion_time: need 0 < r < a");
  int round = 1;
  for (std::size_t i = 1; i < path.values.size(); ++i) {
    const double lower = -static_cast<double>(round) * r;
    const double upper = a - static_cast<double>(round) * r;
    const int e = exit_check(path.values[i - 1], path.values[i], path.dt, lower, upper, bridge_correction, path.seed, i);
    if (e == 2) return ExitRecord{static_cast<double>(i) * path.dt, i, ExitSide::kUpper, round};
    if (e == 1) ++round;
  }
  return std::nullopt;
}

ExitRecord sample_exit(double a, double b, double dt, std::uint64_t seed, bool bridge_correction) {
  check_dt(dt);
  if (!(a > 0.0 && b > 0.0)) throw InvalidParameter("sample_exit: a and b must be > 0");
  Walker w(seed, dt);
  double x = 0.0;
  for (std::size_t i = 1; i <= kMaxPathSteps; ++i) {
    const double y = x + w.step();
    const int e = exit_check(x, y, dt, -a, b, bridge_correction, seed, i);
    if (e != 0) return {static_cast<double>(i) * dt, i, e == 1 ? ExitSide::kLower : ExitSide::kUpper, 1};
    x = y;
  }
  throw DomainError("sample_exit: no exit within 1e8 steps");
}

ExitRecord sample_iterated_excursion(double a, double r, double dt, std::uint64_t seed, bool bridge_correction) {
  check_dt(dt);
  if (!(r > 0.0 && r < a)) throw InvalidParameter("sample_iterated_excursion: need 0 < r < a");
  Walker w(seed, dt);
  double x = 0.0;
  int round = 1;
  for (std::size_t i = 1; i <= kMaxPathSteps; ++i) {
    const double y = x + w.step();
    const double lower = -static_cast<double>(round) * r;
    const double upper = a - static_cast<double>(round) * r;
    const int e = exit_check(x, y, dt, lower, upper, bridge_correction, seed, i);
    if (e == 2) return {static_cast<double>(i) * dt, i, ExitSide::kUpper, round};
    if (e == 1) ++round;
    x = y;
  }
  throw DomainError("sample_iterated_excursion: no exit within 1e8 steps");
}

TauSigmaReport identity_tau_sigma(std::size_t n_paths, double a, double r, double dt, std::uint64_t seed) {
  if (n_paths < 10000) throw InvalidParameter("identity_tau_sigma: need at least 1e4 paths");
  TauSigmaReport rep;
  rep.tau.reserve(n_paths);
  rep.sigma.reserve(n_paths);
  rep.rounds.reserve(n_paths);
  for (std::size_t i = 0; i < n_paths; ++i) {
    const ExitRecord t = sample_iterated_excursion(a, r, dt, hash_key(seed, 0x746175, i));
    rep.tau.push_back(t.time);
    rep.rounds.push_back(t.rounds);
    rep.sigma.push_back(sample_exit(a, a - r, dt, hash_key(seed, 0x736967, i)).time);
  }
  rep.ks = ks_two_sample(rep.tau, rep.sigma);
  rep.mean_tau = mean(rep.tau);
  rep.mean_sigma = mean(rep.sigma);
  rep.se_tau = std_error(rep.tau);
  rep.se_sigma = std_error(rep.sigma);
  return rep;
}

std::string empirical_cdf_csv(std::span<const double> xs, const std::string& name, std::size_t points) {
  if (xs.empty()) throw InvalidParameter("empirical_cdf_csv: empty sample");
  std::vector<double> s(xs.begin(), xs.end());
  std::sort(s.begin(), s.end());
  std::ostringstream out;
  out.precision(10);
  out << name << ",F\n";
  points = std::max<std::size_t>(points, 2);
  for (std::size_t k = 0; k < points; ++k) {
    const std::size_t idx = std::min(s.size() - 1, k * (s.size() - 1) / (points - 1));
    out << s[idx] << ',' << static_cast<double>(idx + 1) / static_cast<double>(s.size()) << '\n';
  }
  return out.str();
}

}  // namespace tvslab
