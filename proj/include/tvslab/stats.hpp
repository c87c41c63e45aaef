#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "tvslab/lattice.hpp"

namespace tvslab {

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

struct TestReport {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  std::string method;  // "KS", "chi-square", "trend"
};

struct DimensionFit {
  std::vector<int> box_sizes;
  std::vector<std::size_t> counts;
  double slope = 0.0;
  double r2 = 0.0;
  int min_box = 0;
  int max_box = 0;
};

// Two-sample Kolmogorov-Smirnov. Exact path counting when the effective
// sample size n*m/(n+m) is below 50, Kolmogorov asymptotics otherwise.
TestReport ks_two_sample(std::span<const double> xs, std::span<const double> ys);

// Pearson chi-square; adjacent bins are merged until every expected count is
// at least 5. `constraints` is subtracted from the merged bin count for the
// degrees of freedom (1 for a fixed total).
TestReport chi_square(std::span<const double> observed, std::span<const double> expected,
                      int constraints = 1);

// Independence test on a rows x cols contingency table given row-major.
TestReport chi_square_independence(std::span<const double> table, std::size_t rows, std::size_t cols);

Interval wilson_ci(std::size_t successes, std::size_t n, double level = 0.95);

enum class Direction { kDecreasing, kIncreasing };

// `meshes` are resolutions (e.g. radii) in ascending order; `direction` is
// the expected change as the resolution grows. One-sided regression of
// per-replica values on log2(mesh). p is the
// probability of a slope at least this far in `direction` under no trend;
// `statistic` is the fitted slope. Also fails when consecutive mesh means
// step against the direction by more than their joint noise.
struct TrendReport {
  TestReport test;
  std::vector<double> means;
  std::vector<double> std_errors;
  bool monotone = true;
  bool pass(double alpha = 0.05) const { return monotone && test.p_value < alpha; }
};
TrendReport mesh_trend(std::span<const double> meshes, const std::vector<std::vector<double>>& values,
                       Direction direction);

// Box counting on lattice points over dyadic boxes in [min_box, max_box];
// slope of log(count) against log(1/size).
DimensionFit box_counting_dimension(std::span<const Point> points, int min_box, int max_box);

double mean(std::span<const double> xs);
double std_error(std::span<const double> xs);

}  // namespace tvslab
