#include "tvslab/bridge.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tvslab/errors.hpp"
#include "tvslab/rng.hpp"

namespace tvslab {

namespace {

constexpr double kSeriesTol = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

void require_rho(double rho, const char* what) {
  if (!(rho > 0.0)) throw InvalidParameter(std::string(what) + ": rho must be > 0");
}

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

// Stay probability in the open strip (lower, upper); both endpoints inside.
double strip_series(double u, double v, double rho, double lower, double upper) {
  if (!(u > lower && u < upper && v > lower && v < upper)) return 0.0;
  if (std::isinf(upper)) return 1.0 - std::exp(-2.0 * (u - lower) * (v - lower) / rho);
  if (std::isinf(lower)) return 1.0 - std::exp(-2.0 * (upper - u) * (upper - v) / rho);
  const double w = upper - lower;
  const double d = v - u;
  const double p = u - lower;
  const double q = v - lower;
  double sum = 1.0 - std::exp(-2.0 * p * q / rho);
  for (int k = 1; k < 10000; ++k) {
    const double kw = k * w;
    const double a_pos = std::exp(-2.0 * kw * (kw - d) / rho);
    const double a_neg = std::exp(-2.0 * kw * (kw + d) / rho);
    const double b_pos = std::exp(-2.0 * (p - kw) * (q - kw) / rho);
    const double b_neg = std::exp(-2.0 * (p + kw) * (q + kw) / rho);
    sum += a_pos + a_neg - b_pos - b_neg;
    if (std::max({a_pos, a_neg, b_pos, b_neg}) < kSeriesTol) break;
  }
  return clamp01(sum);
}

// P(first passage at `level` happens before the exit through the other side
// of the strip), as a density ratio against the free bridge. `dist0` is the
// distance from u to the level, `w` the strip width.
double first_through(double dist0, double dist_end, double d, double w, double rho) {
  auto term = [&](int k) {
    const double c = dist0 + 2.0 * k * w;
    const double s = std::abs(c) + dist_end;
    const double val = std::exp(-(s * s - d * d) / (2.0 * rho));
    return c >= 0.0 ? val : -val;
  };
  double sum = term(0);
  if (std::isinf(w)) return sum;
  for (int k = 1; k < 10000; ++k) {
    const double tp = term(k);
    const double tn = term(-k);
    sum += tp + tn;
    if (std::max(std::abs(tp), std::abs(tn)) < 1e-15) break;
  }
  return sum;
}

}  // namespace

double bridge_one_sided_exit_prob(double u, double v, double rho, double level) {
  require_rho(rho, "bridge_one_sided_exit_prob");
  if (u <= level || v <= level) return 1.0;
  return std::exp(-2.0 * (u - level) * (v - level) / rho);
}

double bridge_upper_exit_prob(double u, double v, double rho, double level) {
  return bridge_one_sided_exit_prob(-u, -v, rho, -level);
}

double bridge_stay_prob_between(double u, double v, double rho, double lower, double upper) {
  require_rho(rho, "bridge_stay_prob_between");
  if (!(upper > lower)) throw InvalidParameter("bridge_stay_prob_between: empty corridor");
  return strip_series(u, v, rho, lower, upper);
}

double bridge_corridor_stay_prob(double u, double v, double rho, double a, double b) {
  require_rho(rho, "bridge_corridor_stay_prob");
  if (!(a + b > 0.0)) throw InvalidParameter("bridge_corridor_stay_prob: a + b must be > 0");
  return strip_series(u, v, rho, -a, b);
}

double bridge_min_quantile(double u, double v, double rho, double p) {
  require_rho(rho, "bridge_min_quantile");
  const double d = v - u;
  const double s = 0.5 * (-d + std::sqrt(d * d - 2.0 * rho * std::log(p)));
  return u - s;
}

double bridge_max_cdf_given_min(double u, double v, double rho, double m, double level) {
  require_rho(rho, "bridge_max_cdf_given_min");
  if (level <= std::max(u, v)) return 0.0;
  if (std::isinf(level)) return 1.0;
  const double p = u - m;
  const double q = v - m;
  if (!(p > 0.0 && q > 0.0)) {
    // Minimum at an endpoint: the bridge is then a one-sided meander; fall
    // back to the unconditional upper law.
    return 1.0 - bridge_upper_exit_prob(u, v, rho, level);
  }
  const double w = level - m;
  const double d = v - u;
  const double e0 = 2.0 * p * q / rho;  // -log B_0
  const double den = 2.0 * (p + q);
  double sum = 0.0;
  for (int k = 1; k < 10000; ++k) {
    double largest = 0.0;
    for (int sgn : {1, -1}) {
      const int kk = sgn * k;
      const double kw = kk * w;
      const double a_rel = std::exp(-2.0 * kw * (kw - d) / rho + e0);
      const double a_term = a_rel * 2.0 * kk * (2.0 * kw - d);
      const double alpha = p - kw;
      const double beta = q - kw;
      const double b_rel = std::exp(-2.0 * alpha * beta / rho + e0);
      const double b_term = b_rel * 2.0 * (1.0 - kk) * (alpha + beta);
      sum += a_term - b_term;
      largest = std::max({largest, std::abs(a_term), std::abs(b_term)});
    }
    if (largest < 1e-15 * den) break;
  }
  return clamp01(1.0 - sum / den);
}

ExitOrder bridge_exit_order(double u, double v, double rho, double lower, double upper) {
  require_rho(rho, "bridge_exit_order");
  ExitOrder out;
  if (!(u > lower && u < upper)) return out;
  const double w = upper - lower;
  const double d = v - u;
  const double lower_first = first_through(u - lower, std::abs(v - lower), d, w, rho);
  const double upper_first = first_through(upper - u, std::abs(v - upper), d, w, rho);
  const double stay = strip_series(u, v, rho, lower, upper);
  const double p_lower = bridge_one_sided_exit_prob(u, v, rho, lower);
  const double p_upper = bridge_upper_exit_prob(u, v, rho, upper);
  // P(first exit at L and H never hit) = P(H never hit) - P(neither hit).
  const double only_lower = std::max(0.0, (1.0 - p_upper) - stay);
  const double only_upper = std::max(0.0, (1.0 - p_lower) - stay);
  out.lower_first = std::max(0.0, lower_first - only_lower);
  out.upper_first = std::max(0.0, upper_first - only_upper);
  return out;
}

BridgeDraw draw_bridge(double u, double v, double rho, double u1, double u2, double u3) {
  return {bridge_min_quantile(u, v, rho, u1), u2, u3};
}

bool segment_stays_above(const Segment& s, const BridgeDraw& d, double lower) {
  return d.min >= lower && s.start >= lower && s.end >= lower;
}

bool segment_stays(const Segment& s, const BridgeDraw& d, double lower, double upper) {
  if (!segment_stays_above(s, d, lower)) return false;
  if (std::isinf(upper)) return true;
  return bridge_max_cdf_given_min(s.start, s.end, s.duration, d.min, upper) >= d.max_uniform;
}

std::uint8_t segment_crossed(const Segment& s, const BridgeDraw& d, double lower, double upper) {
  std::uint8_t mask = 0;
  if (!segment_stays_above(s, d, lower)) mask |= kLowerLevel;
  if (!std::isinf(upper) &&
      !(bridge_max_cdf_given_min(s.start, s.end, s.duration, d.min, upper) >= d.max_uniform)) {
    mask |= kUpperLevel;
  }
  return mask;
}

Level segment_first_exit(const Segment& s, const BridgeDraw& d, double lower, double upper) {
  if (s.start <= lower) return kLowerLevel;
  if (s.start >= upper) return kUpperLevel;
  const std::uint8_t mask = segment_crossed(s, d, lower, upper);
  if (mask == kNoLevel) return kNoLevel;
  if (mask == kLowerLevel) return kLowerLevel;
  if (mask == kUpperLevel) return kUpperLevel;
  const ExitOrder o = bridge_exit_order(s.start, s.end, s.duration, lower, upper);
  const double total = o.lower_first + o.upper_first;
  if (!(total > 0.0)) {
    return (s.start - lower) <= (upper - s.start) ? kLowerLevel : kUpperLevel;
  }
  return d.order_uniform * total < o.lower_first ? kLowerLevel : kUpperLevel;
}

EdgeBridges::EdgeBridges(const FieldSample& sample, std::uint64_t seed)
    : sample_(std::make_shared<const FieldSample>(sample)), seed_(seed) {
  const LatticeDomain& dom = *sample_->domain;
  draws_.resize(static_cast<std::size_t>(dom.edge_count()));
  for (EdgeId e = 0; e < dom.edge_count(); ++e) {
    const Edge& ed = dom.edge(e);
    const auto ue = static_cast<std::uint64_t>(e);
    draws_[static_cast<std::size_t>(e)] =
        draw_bridge((*sample_)[ed.a], (*sample_)[ed.b], ed.resistance, keyed_uniform(seed, ue, 1),
                    keyed_uniform(seed, ue, 2), keyed_uniform(seed, ue, 3));
  }
}

Segment EdgeBridges::segment(EdgeId e, VertexId from) const {
  const LatticeDomain& dom = *sample_->domain;
  const Edge& ed = dom.edge(e);
  const VertexId to = ed.a == from ? ed.b : ed.a;
  return {(*sample_)[from], (*sample_)[to], ed.resistance};
}

bool EdgeBridges::stays(EdgeId e, double lower, double upper) const {
  const Edge& ed = sample_->domain->edge(e);
  return segment_stays(segment(e, ed.a), draw(e), lower, upper);
}

bool EdgeBridges::stays_above(EdgeId e, double lower) const {
  const Edge& ed = sample_->domain->edge(e);
  return segment_stays_above(segment(e, ed.a), draw(e), lower);
}

Level EdgeBridges::first_exit(EdgeId e, VertexId from, double lower, double upper) const {
  return segment_first_exit(segment(e, from), draw(e), lower, upper);
}

EdgeMarks edge_marks_from(std::shared_ptr<const EdgeBridges> bridges, double a, double b) {
  if (!(a > 0.0 && b > 0.0)) throw InvalidParameter("edge marks: a and b must be > 0");
  EdgeMarks m;
  m.a = a;
  m.b = b;
  m.seed = bridges->seed();
  const LatticeDomain& dom = *bridges->sample().domain;
  const auto n = static_cast<std::size_t>(dom.edge_count());
  m.stays_in_corridor.resize(n);
  m.crossed_levels.resize(n);
  for (EdgeId e = 0; e < dom.edge_count(); ++e) {
    const std::uint8_t mask =
        segment_crossed(bridges->segment(e, dom.edge(e).a), bridges->draw(e), -a, b);
    m.crossed_levels[static_cast<std::size_t>(e)] = mask;
    m.stays_in_corridor[static_cast<std::size_t>(e)] = mask == kNoLevel ? 1 : 0;
  }
  m.bridges = std::move(bridges);
  return m;
}

EdgeMarks sample_edge_marks(const FieldSample& sample, double a, double b, std::uint64_t seed) {
  if (!(a > 0.0 && b > 0.0)) throw InvalidParameter("sample_edge_marks: a and b must be > 0");
  return edge_marks_from(std::make_shared<const EdgeBridges>(sample, seed), a, b);
}

}  // namespace tvslab
