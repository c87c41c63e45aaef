#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "tvslab/brownian1d.hpp"
#include "tvslab/constants.hpp"
#include "tvslab/errors.hpp"
#include "tvslab/rng.hpp"
#include "tvslab/stats.hpp"

using namespace tvslab;

namespace {

struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  double s = 0.0, s2 = 0.0;
  for (double x : xs) {
    s += x;
    s2 += x * x;
  }
  const double n = static_cast<double>(xs.size());
  const double m = s / n;
  return {m, std::sqrt((s2 / n - m * m) / (n - 1.0))};
}

struct ExitStats {
  double p_upper = 0.0;
  Moments time;
};

ExitStats exit_stats(double a, double b, double dt, int n, std::uint64_t seed, bool bc = true) {
  std::vector<double> t;
  int up = 0;
  for (int i = 0; i < n; ++i) {
    const ExitRecord e = sample_exit(a, b, dt, hash_key(seed, static_cast<std::uint64_t>(i)), bc);
    up += e.side == ExitSide::kUpper;
    t.push_back(e.time);
  }
  return {static_cast<double>(up) / n, moments(t)};
}

}  // namespace

TEST_CASE("simulated paths") {
  const Path1D p = simulate_bm(1.0, 1e-3, 5);
  CHECK(p.values.size() == 1001);
  CHECK(p.values[0] == 0.0);
  CHECK(p.dt == 1e-3);
  CHECK(simulate_bm(1.0, 1e-3, 5).values == p.values);
  CHECK(simulate_bm(1.0, 1e-3, 6).values != p.values);
  CHECK(simulate_bm(0.0, 1e-3, 5).values.size() == 1);
  CHECK_THROWS_AS(simulate_bm(1.0, 1e-9, 5), InvalidParameter);
  CHECK_THROWS_AS(simulate_bm(1.0, 0.0, 5), InvalidParameter);
  CHECK_THROWS_AS(simulate_bm(-1.0, 1e-3, 5), InvalidParameter);
}

TEST_CASE("B_1 has unit variance") {
  std::vector<double> end;
  for (int i = 0; i < 4000; ++i) end.push_back(simulate_bm(1.0, 1e-2, hash_key(11, static_cast<std::uint64_t>(i))).values.back());
  const Moments m = moments(end);
  CHECK(std::abs(m.mean) < 4.0 * m.se);
  double v = 0.0;
  for (double x : end) v += x * x;
  v /= static_cast<double>(end.size());
  // var of the sample second moment is 2/n
  CHECK(std::abs(v - 1.0) < 4.0 * std::sqrt(2.0 / 4000.0));
}

TEST_CASE("expected running maximum uses the exact bridge minimum") {
  // E sup_{[0,1]} B = E(-inf B) = sqrt(2/pi); a grid minimum alone is biased low
  std::vector<double> mins, grid;
  for (int i = 0; i < 6000; ++i) {
    const Path1D p = simulate_bm(1.0, 1e-2, hash_key(12, static_cast<std::uint64_t>(i)));
    mins.push_back(-levy_transform(p).infimum.back());
    grid.push_back(-*std::min_element(p.values.begin(), p.values.end()));
  }
  const Moments m = moments(mins);
  CHECK(std::abs(m.mean - std::sqrt(2.0 / std::numbers::pi)) < 4.0 * m.se);
  CHECK(moments(grid).mean < std::sqrt(2.0 / std::numbers::pi) - 0.04);
}

TEST_CASE("Levy transform") {
  const Path1D p = simulate_bm(2.0, 1e-3, 3);
  const LevyPair l = levy_transform(p);
  REQUIRE(l.reflected.size() == p.values.size());
  CHECK(l.infimum[0] == 0.0);
  for (std::size_t i = 0; i < l.reflected.size(); ++i) {
    CHECK(l.reflected[i] >= 0.0);
    CHECK(l.infimum[i] <= std::min(0.0, p.values[i]));
    if (i > 0) CHECK(l.infimum[i] <= l.infimum[i - 1]);
  }
  // B_1 - I_1 has the law of |B_1|
  std::vector<double> refl, absn;
  Stream rng(99);
  for (int i = 0; i < 3000; ++i) {
    refl.push_back(levy_transform(simulate_bm(1.0, 1e-2, hash_key(13, static_cast<std::uint64_t>(i)))).reflected.back());
    absn.push_back(std::abs(rng.normal()));
  }
  CHECK(ks_two_sample(refl, absn).p_value > 0.01);
}

TEST_CASE("exit side and time") {
  const ExitStats s = exit_stats(1.0, 1.0, 1e-3, 20000, 21);
  CHECK(std::abs(s.p_upper - 0.5) < 3.0 * std::sqrt(0.25 / 20000.0));
  CHECK(std::abs(s.time.mean - 1.0) < 4.0 * s.time.se);
  const ExitStats t = exit_stats(kLambda, kTwoLambda, 1e-3, 20000, 22);
  CHECK(std::abs(t.p_upper - 1.0 / 3.0) < 3.0 * std::sqrt(2.0 / 9.0 / 20000.0));
  CHECK(std::abs(t.time.mean - kLambda * kTwoLambda) < 4.0 * t.time.se);
  // symmetric window of half-width 2 lambda: E = 4 lambda^2 = pi / 2
  const ExitStats c = exit_stats(kTwoLambda, kTwoLambda, 1e-3, 20000, 23);
  CHECK(std::abs(c.time.mean - std::numbers::pi / 2.0) < 4.0 * c.time.se);
  CHECK_THROWS_AS(sample_exit(0.0, 1.0, 1e-3, 1), InvalidParameter);
}

TEST_CASE("bridge correction removes most of the time-step bias") {
  const ExitStats raw_coarse = exit_stats(1.0, 1.0, 1e-2, 8000, 31, false);
  const ExitStats raw_fine = exit_stats(1.0, 1.0, 1e-3, 8000, 31, false);
  const ExitStats fixed_coarse = exit_stats(1.0, 1.0, 1e-2, 8000, 31, true);
  // without correction exits are detected late, by about 0.58 sqrt(dt) per side
  CHECK(raw_coarse.time.mean > raw_fine.time.mean);
  CHECK(raw_coarse.time.mean - 1.0 > 5.0 * raw_coarse.time.se);
  CHECK(std::abs(fixed_coarse.time.mean - 1.0) < 4.0 * fixed_coarse.time.se);
}

TEST_CASE("path and streaming exits agree") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Path1D p = simulate_bm(30.0, 1e-3, seed);
    const auto e = exit_time(p, 0.7, 1.1);
    REQUIRE(e.has_value());
    const ExitRecord s = sample_exit(0.7, 1.1, 1e-3, seed);
    CHECK(e->step == s.step);
    CHECK(e->side == s.side);
    CHECK(e->time == doctest::Approx(s.time));
    const auto it = iterated_excursion_time(p, 1.0, 0.4);
    REQUIRE(it.has_value());
    const ExitRecord si = sample_iterated_excursion(1.0, 0.4, 1e-3, seed);
    CHECK(it->step == si.step);
    CHECK(it->rounds == si.rounds);
  }
}

TEST_CASE("short paths may not exit") {
  const Path1D p = simulate_bm(1e-3, 1e-3, 4);
  CHECK_FALSE(exit_time(p, 5.0, 5.0).has_value());
  CHECK_FALSE(iterated_excursion_time(p, 5.0, 1.0).has_value());
  CHECK_THROWS_AS(iterated_excursion_time(p, 1.0, 1.0), InvalidParameter);
  CHECK_THROWS_AS(exit_time(p, -1.0, 1.0), InvalidParameter);
}

TEST_CASE("iterated windows use geometric rounds") {
  const double a = 1.0, r = 0.5;
  std::vector<double> counts;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const ExitRecord e = sample_iterated_excursion(a, r, 1e-3, hash_key(41, static_cast<std::uint64_t>(i)));
    CHECK(e.side == ExitSide::kUpper);
    if (counts.size() < static_cast<std::size_t>(e.rounds)) counts.resize(static_cast<std::size_t>(e.rounds), 0.0);
    counts[static_cast<std::size_t>(e.rounds - 1)] += 1.0;
  }
  const double p = r / a;
  std::vector<double> expected(counts.size() + 1), observed = counts;
  observed.push_back(0.0);
  for (std::size_t k = 0; k < counts.size(); ++k) expected[k] = n * p * std::pow(1.0 - p, static_cast<double>(k));
  expected.back() = n * std::pow(1.0 - p, static_cast<double>(counts.size()));
  CHECK(chi_square(observed, expected).p_value > 0.01);

  // windows barely shifting: almost always one round
  int one = 0;
  for (int i = 0; i < 2000; ++i) one += sample_iterated_excursion(1.0, 0.95, 1e-3, hash_key(42, static_cast<std::uint64_t>(i))).rounds == 1;
  CHECK(std::abs(one / 2000.0 - 0.95) < 4.0 * std::sqrt(0.95 * 0.05 / 2000.0));
}

TEST_CASE("tau and sigma equal in law") {
  CHECK_THROWS_AS(identity_tau_sigma(100, 1.0, 0.5, 1e-3, 1), InvalidParameter);
  const TauSigmaReport r = identity_tau_sigma(10000, 1.0, 0.5, 1e-3, 7);
  CHECK(r.tau.size() == 10000);
  CHECK(r.sigma.size() == 10000);
  CHECK(r.rounds.size() == 10000);
  CHECK(r.ks.p_value > 0.01);
  // E sigma_{-a, a-r} = a (a - r)
  CHECK(std::abs(r.mean_tau - 0.5) < 4.0 * r.se_tau);
  CHECK(std::abs(r.mean_sigma - 0.5) < 4.0 * r.se_sigma);
}

TEST_CASE("local time estimate counts returns from eps") {
  Path1D p;
  p.dt = 1.0;
  p.values = {0.0, 1.0, -0.2, 1.5, 0.5, -1.0};
  CHECK(local_time_estimate(p, 5, 1.0) == 2.0);
  CHECK(local_time_estimate(p, 1, 1.0) == 0.0);
  CHECK(local_time_estimate(p, 2, 1.0) == 1.0);
  CHECK(local_time_estimate(p, 100, 0.5) == 1.0);
  CHECK_THROWS_AS(local_time_estimate(p, 5, 0.0), InvalidParameter);
  const Path1D q = simulate_bm(1.0, 1e-3, 2);
  double prev = 0.0;
  for (std::size_t k = 0; k < q.values.size(); k += 50) {
    const double l = local_time_estimate(q, k, std::sqrt(q.dt));
    CHECK(l >= prev);
    prev = l;
  }
}

TEST_CASE("empirical CDF csv") {
  const std::vector<double> xs = {3.0, 1.0, 2.0, 4.0};
  const std::string csv = empirical_cdf_csv(xs, "tau", 4);
  CHECK(csv == "tau,F\n1,0.25\n2,0.5\n3,0.75\n4,1\n");
  CHECK_THROWS_AS(empirical_cdf_csv(std::vector<double>{}, "x"), InvalidParameter);
}
