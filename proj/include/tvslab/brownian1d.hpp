#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tvslab/stats.hpp"

namespace tvslab {

struct Path1D {
  double dt = 0.0;
  std::vector<double> values;  // values[0] = 0
  std::uint64_t seed = 0;
};

inline constexpr std::size_t kMaxPathSteps = 100000000;

Path1D simulate_bm(double t_max, double dt, std::uint64_t seed);

enum class ExitSide { kLower, kUpper };

struct ExitRecord {
  double time = 0.0;
  std::size_t step = 0;
  ExitSide side = ExitSide::kLower;
  int rounds = 1;
};

// First exit from (-a, b). With bridge correction a crossing inside a step
// is detected with the bridge exit probability. nullopt: no exit before the
// path ends.
std::optional<ExitRecord> exit_time(const Path1D& path, double a, double b, bool bridge_correction = true);

struct LevyPair {
  std::vector<double> reflected;  // B - I
  std::vector<double> infimum;    // I, from the exact minimum of each step's bridge
};
LevyPair levy_transform(const Path1D& path);

// eps times the number of downcrossings of |B| from eps to 0 up to step k.
double local_time_estimate(const Path1D& path, std::size_t k, double eps);

// Shifting windows [-j r, a - j r]; stops at the first upper exit.
std::optional<ExitRecord> iterated_excursion_time(const Path1D& path, double a, double r,
                                                  bool bridge_correction = true);

// Streaming versions that generate increments until exit; the increments
// equal those of simulate_bm with the same seed and dt.
ExitRecord sample_exit(double a, double b, double dt, std::uint64_t seed, bool bridge_correction = true);
ExitRecord sample_iterated_excursion(double a, double r, double dt, std::uint64_t seed,
                                     bool bridge_correction = true);

struct TauSigmaReport {
  TestReport ks;
  std::vector<double> tau;
  std::vector<double> sigma;
  std::vector<int> rounds;
  double mean_tau = 0.0;
  double mean_sigma = 0.0;
  double se_tau = 0.0;
  double se_sigma = 0.0;
};
// tau^r_a against sigma_{-a, a-r} on independent path batches.
TauSigmaReport identity_tau_sigma(std::size_t n_paths, double a, double r, double dt, std::uint64_t seed);

// Empirical CDF as "x,F" CSV lines on a grid of `points` quantiles.
std::string empirical_cdf_csv(std::span<const double> xs, const std::string& name, std::size_t points = 200);

}  // namespace tvslab
