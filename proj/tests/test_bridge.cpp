#include <cmath>
#include <vector>

#include "doctest.h"
#include "tvslab/bridge.hpp"
#include "tvslab/constants.hpp"
#include "tvslab/errors.hpp"
#include "tvslab/rng.hpp"

using namespace tvslab;

namespace {

// Fine-step bridge paths; the min/max of each path and the first level hit.
struct McResult {
  double below = 0.0;  // P(min <= lower)
  double stay = 0.0;   // P(lower < path < upper)
  double lower_first = 0.0;
  double upper_first = 0.0;
  double mid_var = 0.0;
  int n = 0;
};

McResult bridge_mc(double u, double v, double rho, double lower, double upper, int paths, int steps,
                   std::uint64_t seed) {
  Stream rng(seed);
  McResult r;
  r.n = paths;
  const double dt = rho / steps;
  const double sd = std::sqrt(dt);
  std::vector<double> w(static_cast<std::size_t>(steps) + 1);
  double mid_sum = 0.0;
  double mid_sq = 0.0;
  for (int p = 0; p < paths; ++p) {
    w[0] = 0.0;
    for (int i = 1; i <= steps; ++i) w[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i) - 1] + sd * rng.normal();
    const double wend = w[static_cast<std::size_t>(steps)];
    bool hit_low = false;
    bool hit_up = false;
    int first = 0;
    double prev = u;
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      const double x = u + (v - u) * t + w[static_cast<std::size_t>(i)] - t * wend;
      if (i == steps / 2) {
        mid_sum += x;
        mid_sq += x * x;
      }
      if (i > 0) {
        // Brownian-bridge crossing inside the step, one level at a time.
        const bool lo = x <= lower || rng.uniform() < std::exp(-2.0 * (prev - lower) * (x - lower) / dt);
        const bool up = x >= upper || rng.uniform() < std::exp(-2.0 * (upper - prev) * (upper - x) / dt);
        if (lo && !hit_low && !hit_up && !up) first = 1;
        if (up && !hit_low && !hit_up && !lo) first = 2;
        if (lo && up && !hit_low && !hit_up) first = rng.uniform() < 0.5 ? 1 : 2;
        hit_low = hit_low || lo;
        hit_up = hit_up || up;
      }
      prev = x;
    }
    r.below += hit_low;
    r.stay += !hit_low && !hit_up;
    r.lower_first += hit_low && hit_up && first == 1;
    r.upper_first += hit_low && hit_up && first == 2;
  }
  r.below /= paths;
  r.stay /= paths;
  r.lower_first /= paths;
  r.upper_first /= paths;
  const double m = mid_sum / paths;
  r.mid_var = mid_sq / paths - m * m;
  return r;
}

double se(double p, int n) { return std::sqrt(std::max(p * (1.0 - p), 1e-6) / n); }

}  // namespace

TEST_CASE("one-sided exit probability") {
  CHECK(bridge_one_sided_exit_prob(-1.0, 0.5, 1.0, -1.0) == 1.0);
  CHECK(bridge_one_sided_exit_prob(0.0, 0.0, 1.0, -kLambda) == doctest::Approx(std::exp(-M_PI / 4)).epsilon(1e-14));
  double prev = 1.0;
  for (double rho : {1.0, 0.5, 0.1, 0.01}) {
    const double p = bridge_one_sided_exit_prob(0.0, 0.0, rho, -0.3);
    CHECK(p < prev);
    prev = p;
  }
  CHECK_THROWS_AS(bridge_one_sided_exit_prob(0.0, 0.0, 0.0, -1.0), InvalidParameter);
  CHECK(bridge_upper_exit_prob(0.2, 0.1, 1.0, 1.0) == doctest::Approx(std::exp(-2.0 * 0.8 * 0.9)));
}

TEST_CASE("corridor stay probability limits") {
  CHECK(bridge_corridor_stay_prob(0.0, 1.0, 1.0, 1.0, 1.0) == 0.0);
  CHECK(bridge_corridor_stay_prob(2.0, 0.0, 1.0, 1.0, 1.0) == 0.0);
  CHECK(bridge_corridor_stay_prob(0.1, -0.2, 1.0, 50.0, 50.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(bridge_corridor_stay_prob(0.0, 0.0, 1.0, -1.0, 0.5), InvalidParameter);
  // width large: reduces to the one-sided formula
  CHECK(bridge_corridor_stay_prob(0.3, -0.1, 1.0, 0.5, 40.0) ==
        doctest::Approx(1.0 - bridge_one_sided_exit_prob(0.3, -0.1, 1.0, -0.5)).epsilon(1e-12));
}

TEST_CASE("corridor stay probability is monotone") {
  for (double a : {0.4, kLambda, 1.2}) {
    double prev = 2.0;
    for (double u : {0.0, 0.1, 0.2, 0.3}) {
      const double p = bridge_corridor_stay_prob(u, 0.0, 1.0, a, a);
      CHECK(p <= prev + 1e-15);
      prev = p;
    }
    prev = -1.0;
    for (double b : {0.5, 0.8, 1.3, 2.0}) {
      const double p = bridge_corridor_stay_prob(0.1, -0.2, 1.0, a, b);
      CHECK(p >= prev - 1e-15);
      prev = p;
    }
  }
}

TEST_CASE("series agree with a fine-step Monte Carlo") {
  struct Case {
    double u, v, rho, lo, hi;
  };
  const Case cases[] = {{0.0, 0.0, 1.0, -kLambda, kLambda},
                        {0.3, -0.2, 1.0, -kLambda, kLambda},
                        {0.5, 0.4, 1.0, -2 * kLambda, 0.7},
                        {-0.1, 0.2, 0.5, -0.4, 0.5}};
  std::uint64_t seed = 11;
  for (const Case& c : cases) {
    const int n = 40000;
    const McResult mc = bridge_mc(c.u, c.v, c.rho, c.lo, c.hi, n, 2000, seed++);
    const double stay = bridge_stay_prob_between(c.u, c.v, c.rho, c.lo, c.hi);
    const double below = bridge_one_sided_exit_prob(c.u, c.v, c.rho, c.lo);
    const ExitOrder o = bridge_exit_order(c.u, c.v, c.rho, c.lo, c.hi);
    CAPTURE(c.u);
    CAPTURE(c.v);
    CHECK(std::abs(mc.stay - stay) < 3.5 * se(stay, n));
    CHECK(std::abs(mc.below - below) < 3.5 * se(below, n));
    CHECK(std::abs(mc.lower_first - o.lower_first) < 3.5 * se(o.lower_first, n) + 2e-3);
    CHECK(std::abs(mc.upper_first - o.upper_first) < 3.5 * se(o.upper_first, n) + 2e-3);
  }
}

TEST_CASE("midpoint variance is rho/4") {
  const McResult mc = bridge_mc(0.0, 0.0, 1.0, -100.0, 100.0, 20000, 200, 5);
  CHECK(mc.mid_var == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("coupled draw reproduces the stay law and the exit order") {
  // Averaging the thresholded draw over its uniforms must give the series.
  struct Case {
    double u, v, lo, hi;
  };
  for (const Case c : {Case{0.0, 0.0, -kLambda, kLambda}, Case{0.4, -0.3, -0.6, 0.9}, Case{0.1, 0.5, -1.5, 0.7}}) {
    const int n = 200000;
    double stays = 0.0;
    double lower_first = 0.0;
    double upper_first = 0.0;
    for (int i = 0; i < n; ++i) {
      const BridgeDraw d = draw_bridge(c.u, c.v, 1.0, keyed_uniform(3, i, 1), keyed_uniform(3, i, 2), keyed_uniform(3, i, 3));
      const Segment s{c.u, c.v, 1.0};
      stays += segment_stays(s, d, c.lo, c.hi);
      const std::uint8_t mask = segment_crossed(s, d, c.lo, c.hi);
      if (mask == (kLowerLevel | kUpperLevel)) {
        (segment_first_exit(s, d, c.lo, c.hi) == kLowerLevel ? lower_first : upper_first) += 1.0;
      }
    }
    stays /= n;
    lower_first /= n;
    upper_first /= n;
    const double p = bridge_stay_prob_between(c.u, c.v, 1.0, c.lo, c.hi);
    const ExitOrder o = bridge_exit_order(c.u, c.v, 1.0, c.lo, c.hi);
    CHECK(std::abs(stays - p) < 4.0 * se(p, n));
    CHECK(std::abs(lower_first - o.lower_first) < 4.0 * se(o.lower_first, n));
    CHECK(std::abs(upper_first - o.upper_first) < 4.0 * se(o.upper_first, n));
  }
}

TEST_CASE("draws are nested across corridors") {
  for (int i = 0; i < 5000; ++i) {
    const double u = 2.0 * keyed_uniform(9, i, 7) - 1.0;
    const double v = 2.0 * keyed_uniform(9, i, 8) - 1.0;
    const BridgeDraw d = draw_bridge(u, v, 1.0, keyed_uniform(9, i, 1), keyed_uniform(9, i, 2), keyed_uniform(9, i, 3));
    const Segment s{u, v, 1.0};
    if (segment_stays(s, d, -kLambda, kLambda)) {
      CHECK(segment_stays(s, d, -2 * kLambda, 2 * kLambda));
      CHECK(segment_stays(s, d, -kLambda, 3 * kLambda));
    }
  }
}

TEST_CASE("edge marks") {
  // all-zero field: stays in a wide corridor
  auto dom = make_disk_domain(40);
  FieldSample zero{dom, std::vector<double>(static_cast<std::size_t>(dom->vertex_count()), 0.0), 0, SamplingMethod::kDirect};
  const EdgeMarks wide = sample_edge_marks(zero, 10 * kLambda, 10 * kLambda, 1);
  int exits = 0;
  for (EdgeId e = 0; e < dom->edge_count(); ++e) exits += !wide.stays(e);
  CHECK(exits == 0);
  for (EdgeId e = 0; e < dom->edge_count(); ++e) {
    CHECK((wide.stays(e) == (wide.crossed_levels[static_cast<std::size_t>(e)] == 0)));
  }
  FieldSample high = zero;
  for (VertexId v = 0; v < dom->interior_count(); ++v) high.values[static_cast<std::size_t>(v)] = 2.0;
  const EdgeMarks m = sample_edge_marks(high, 1.0, 1.0, 1);
  for (EdgeId e = 0; e < dom->edge_count(); ++e) {
    CHECK_FALSE(m.stays(e));
    CHECK((m.crossed_levels[static_cast<std::size_t>(e)] & kUpperLevel));
  }
  CHECK_THROWS_AS(sample_edge_marks(zero, 0.0, 1.0, 1), InvalidParameter);
}
