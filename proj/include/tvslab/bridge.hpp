#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "tvslab/field.hpp"
#include "tvslab/lattice.hpp"

namespace tvslab {

// Brownian bridge from u to v over time rho (= edge resistance).

// P(min <= level); 1 when an endpoint is at or below the level.
double bridge_one_sided_exit_prob(double u, double v, double rho, double level);
// P(max >= level), by negation symmetry.
double bridge_upper_exit_prob(double u, double v, double rho, double level);

// P(bridge stays in (-a, b)) by the alternating image series, truncated once
// the next term is below 1e-12 and clamped to [0, 1].
double bridge_corridor_stay_prob(double u, double v, double rho, double a, double b);
double bridge_stay_prob_between(double u, double v, double rho, double lower, double upper);

// Inverse of the law of the minimum: the level L with P(min <= L) = p.
double bridge_min_quantile(double u, double v, double rho, double p);

// P(max <= level | min = m), from the derivative in m of the stay series.
double bridge_max_cdf_given_min(double u, double v, double rho, double m, double level);

// Probabilities that both levels are hit, split by which one is hit first
// when starting from u.
struct ExitOrder {
  double lower_first = 0.0;
  double upper_first = 0.0;
};
ExitOrder bridge_exit_order(double u, double v, double rho, double lower, double upper);

enum Level : std::uint8_t { kNoLevel = 0, kLowerLevel = 1, kUpperLevel = 2 };

// Coupled extremum pair of one bridge: the minimum drawn exactly from its
// law, the maximum represented by a uniform compared against its conditional
// CDF. Thresholding one draw at several corridors gives nested events.
struct BridgeDraw {
  double min = 0.0;
  double max_uniform = 0.5;
  double order_uniform = 0.5;
};

BridgeDraw draw_bridge(double u, double v, double rho, double u1, double u2, double u3);

struct Segment {
  double start = 0.0;  // value at the near end
  double end = 0.0;    // value at the far end
  double duration = 1.0;
};

bool segment_stays(const Segment& s, const BridgeDraw& d, double lower, double upper);
bool segment_stays_above(const Segment& s, const BridgeDraw& d, double lower);
// Level crossed first walking from the near end; kNoLevel if the segment stays.
Level segment_first_exit(const Segment& s, const BridgeDraw& d, double lower, double upper);
// Bitmask of levels exceeded anywhere on the segment.
std::uint8_t segment_crossed(const Segment& s, const BridgeDraw& d, double lower, double upper);

// One coupled draw per edge of a field sample, keyed by (seed, edge).
class EdgeBridges {
 public:
  EdgeBridges(const FieldSample& sample, std::uint64_t seed);

  const FieldSample& sample() const { return *sample_; }
  std::uint64_t seed() const { return seed_; }

  Segment segment(EdgeId e, VertexId from) const;
  const BridgeDraw& draw(EdgeId e) const { return draws_[static_cast<std::size_t>(e)]; }

  bool stays(EdgeId e, double lower, double upper) const;
  bool stays_above(EdgeId e, double lower) const;
  Level first_exit(EdgeId e, VertexId from, double lower, double upper) const;

 private:
  std::shared_ptr<const FieldSample> sample_;
  std::uint64_t seed_;
  std::vector<BridgeDraw> draws_;
};

// Corridor events for [-a, b] on every edge.
struct EdgeMarks {
  double a = 0.0;
  double b = 0.0;
  std::uint64_t seed = 0;
  std::vector<std::uint8_t> stays_in_corridor;
  std::vector<std::uint8_t> crossed_levels;  // Level bitmask
  std::shared_ptr<const EdgeBridges> bridges;

  bool stays(EdgeId e) const { return stays_in_corridor[static_cast<std::size_t>(e)] != 0; }
};

EdgeMarks sample_edge_marks(const FieldSample& sample, double a, double b, std::uint64_t seed);
// Marks derived from an existing set of draws: nested across corridors.
EdgeMarks edge_marks_from(std::shared_ptr<const EdgeBridges> bridges, double a, double b);

}  // namespace tvslab
