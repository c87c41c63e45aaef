#include "tvslab/tvs.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "tvslab/constants.hpp"
#include "tvslab/errors.hpp"
#include "tvslab/rng.hpp"
#include "tvslab/stats.hpp"

namespace tvslab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLevelTol = 1e-9;
constexpr double kMinDuration = 1e-12;

bool same_level(double x, double y) { return std::abs(x - y) <= kLevelTol * (1.0 + std::abs(x)); }

// Bridge time left after the first passage at `level`, placed where the
// straight line to the reflected endpoint crosses the level.
double remaining_time(double start, double end, double duration, double level) {
  const double before = std::abs(start - level);
  const double after = std::abs(end - level);
  if (before + after <= 0.0) return duration;
  return std::max(kMinDuration, duration * after / (before + after));
}

}  // namespace

std::size_t TwoValuedSet::cluster_size() const {
  return static_cast<std::size_t>(std::count(in_cluster.begin(), in_cluster.end(), 1));
}

std::vector<EdgeId> TwoValuedSet::cut_edges() const {
  std::vector<EdgeId> out;
  for (const Component& c : components) {
    for (const Entry& en : c.entries) out.push_back(en.edge);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::size_t TwoValuedSet::mixed_count() const {
  return static_cast<std::size_t>(
      std::count_if(components.begin(), components.end(), [](const Component& c) { return c.mixed; }));
}

const Component* TwoValuedSet::component_at(VertexId v) const {
  if (v < 0 || static_cast<std::size_t>(v) >= component_of.size()) return nullptr;
  const auto c = component_of[static_cast<std::size_t>(v)];
  return c < 0 ? nullptr : &components[static_cast<std::size_t>(c)];
}

CorridorExplorer::CorridorExplorer(std::shared_ptr<const EdgeBridges> bridges)
    : bridges_(std::move(bridges)), remainder_seed_(hash_key(bridges_->seed(), 0x72656d61ULL)) {
  const auto n = static_cast<std::size_t>(domain().interior_count());
  region_mark_.assign(n, 0);
  cluster_mark_.assign(n, 0);
  part_of_.assign(n, -1);
}

Region CorridorExplorer::root() const {
  const LatticeDomain& dom = domain();
  Region r;
  r.vertices.resize(static_cast<std::size_t>(dom.interior_count()));
  for (VertexId v = 0; v < dom.interior_count(); ++v) r.vertices[static_cast<std::size_t>(v)] = v;
  for (VertexId bv = dom.interior_count(); bv < dom.vertex_count(); ++bv) {
    for (const auto& [inner, e] : dom.boundary_links(bv)) {
      r.entries.push_back({e, bv, inner, bridges_->sample()[bv], dom.edge(e).resistance, 0,
                           bridges_->sample()[bv]});
    }
  }
  return r;
}

bool CorridorExplorer::entry_stays(const Entry& en, double lower, double upper) const {
  const double end = bridges_->sample()[en.inner];
  if (en.depth == 0) {
    const Segment s{en.start, end, en.duration};
    return segment_stays(s, bridges_->draw(en.edge), lower, upper);
  }
  const Segment s{en.start, end, en.duration};
  const auto key = static_cast<std::uint64_t>(en.edge) * 2 + (en.inner == domain().edge(en.edge).a ? 1 : 0);
  const BridgeDraw d = draw_bridge(s.start, s.end, s.duration, keyed_uniform(remainder_seed_, key, en.depth, 1),
                                   keyed_uniform(remainder_seed_, key, en.depth, 2),
                                   keyed_uniform(remainder_seed_, key, en.depth, 3));
  return segment_stays(s, d, lower, upper);
}

// The piece of an entry left after it fails to cross the new cluster.
Entry CorridorExplorer::advance(const Entry& en, double lower, double upper) const {
  if (en.start < lower || en.start > upper) return en;
  const double end = bridges_->sample()[en.inner];
  const Segment s{en.start, end, en.duration};
  Level lv;
  if (en.depth == 0) {
    lv = segment_first_exit(s, bridges_->draw(en.edge), lower, upper);
  } else {
    const auto key = static_cast<std::uint64_t>(en.edge) * 2 + (en.inner == domain().edge(en.edge).a ? 1 : 0);
    const BridgeDraw d = draw_bridge(s.start, s.end, s.duration, keyed_uniform(remainder_seed_, key, en.depth, 1),
                                     keyed_uniform(remainder_seed_, key, en.depth, 2),
                                     keyed_uniform(remainder_seed_, key, en.depth, 3));
    lv = segment_first_exit(s, d, lower, upper);
  }
  const double level = lv == kUpperLevel ? upper : lower;
  Entry out = en;
  out.start = level;
  out.level = level;
  out.duration = remaining_time(en.start, end, en.duration, level);
  out.depth = static_cast<std::uint16_t>(en.depth + 1);
  return out;
}

Entry CorridorExplorer::cut_entry(EdgeId e, VertexId from, VertexId to, double lower, double upper) const {
  Entry full{e, from, to, bridges_->sample()[from], domain().edge(e).resistance, 0, bridges_->sample()[from]};
  return advance(full, lower, upper);
}

CorridorExplorer::Stage CorridorExplorer::explore(const Region& region, double lower, double upper) {
  const LatticeDomain& dom = domain();
  if (token_ > std::numeric_limits<std::uint32_t>::max() - 4) {
    std::fill(region_mark_.begin(), region_mark_.end(), 0);
    std::fill(cluster_mark_.begin(), cluster_mark_.end(), 0);
    token_ = 0;
  }
  const std::uint32_t tok = ++token_;
  for (VertexId v : region.vertices) {
    region_mark_[static_cast<std::size_t>(v)] = tok;
    part_of_[static_cast<std::size_t>(v)] = -1;
  }
  auto in_region = [&](VertexId v) { return dom.is_interior(v) && region_mark_[static_cast<std::size_t>(v)] == tok; };
  auto in_cluster = [&](VertexId v) { return cluster_mark_[static_cast<std::size_t>(v)] == tok; };

  Stage out;
  std::vector<VertexId>& queue = out.cluster;
  for (const Entry& en : region.entries) {
    if (!entry_stays(en, lower, upper)) continue;
    out.open_edges.push_back(en.edge);
    if (in_cluster(en.inner)) continue;
    cluster_mark_[static_cast<std::size_t>(en.inner)] = tok;
    queue.push_back(en.inner);
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const VertexId v = queue[head];
    for (int k = 0; k < 4; ++k) {
      const VertexId w = dom.neighbor(v, k);
      if (!in_region(w)) continue;
      const EdgeId e = dom.incident_edge(v, k);
      if (!bridges_->stays(e, lower, upper)) continue;
      out.open_edges.push_back(e);
      if (in_cluster(w)) continue;
      cluster_mark_[static_cast<std::size_t>(w)] = tok;
      queue.push_back(w);
    }
  }

  // Complement parts by flood fill over all region edges.
  std::vector<VertexId> stack;
  for (VertexId s : region.vertices) {
    if (in_cluster(s) || part_of_[static_cast<std::size_t>(s)] >= 0) continue;
    const auto id = static_cast<std::int32_t>(out.parts.size());
    out.parts.emplace_back();
    Region& part = out.parts.back();
    part_of_[static_cast<std::size_t>(s)] = id;
    stack.push_back(s);
    while (!stack.empty()) {
      const VertexId v = stack.back();
      stack.pop_back();
      part.vertices.push_back(v);
      for (int k = 0; k < 4; ++k) {
        const VertexId w = dom.neighbor(v, k);
        if (!in_region(w) || in_cluster(w) || part_of_[static_cast<std::size_t>(w)] >= 0) continue;
        part_of_[static_cast<std::size_t>(w)] = id;
        stack.push_back(w);
      }
    }
  }

  for (const Entry& en : region.entries) {
    if (in_cluster(en.inner)) continue;  // cut piece between cluster points
    out.parts[static_cast<std::size_t>(part_of_[static_cast<std::size_t>(en.inner)])].entries.push_back(
        advance(en, lower, upper));
  }
  for (VertexId v : out.cluster) {
    for (int k = 0; k < 4; ++k) {
      const VertexId w = dom.neighbor(v, k);
      if (!in_region(w) || in_cluster(w)) continue;
      out.parts[static_cast<std::size_t>(part_of_[static_cast<std::size_t>(w)])].entries.push_back(
          cut_entry(dom.incident_edge(v, k), v, w, lower, upper));
    }
  }
  for (Region& p : out.parts) std::sort(p.vertices.begin(), p.vertices.end());
  return out;
}

Component make_component(Region&& part, double lower, double upper) {
  Component c;
  c.vertices = std::move(part.vertices);
  c.entries = std::move(part.entries);
  double other = 0.0;
  for (const Entry& en : c.entries) {
    if (same_level(en.level, lower)) {
      ++c.lower_cuts;
    } else if (same_level(en.level, upper)) {
      ++c.upper_cuts;
    } else {
      ++c.other_cuts;
      other = en.level;
    }
  }
  if (c.lower_cuts == 0 && c.upper_cuts == 0) {
    c.label = c.entries.empty() ? lower : other;
    c.mixed = true;
    return c;
  }
  c.label = c.upper_cuts > c.lower_cuts ? upper : lower;
  const int total = c.lower_cuts + c.upper_cuts + c.other_cuts;
  const int minority = total - std::max(c.lower_cuts, c.upper_cuts);
  c.mixed = static_cast<double>(minority) > kMixedShare * static_cast<double>(total);
  return c;
}

namespace {

void check_params(double a, double b, const char* what) {
  if (!(a > 0.0 && b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw InvalidParameter(std::string(what) + ": a and b must be finite and > 0");
  }
}

TwoValuedSet assemble(const LatticeDomain& dom, DomainPtr domain, double a, double b,
                      std::vector<Component>&& comps, std::span<const EdgeId> open) {
  TwoValuedSet t;
  t.a = a;
  t.b = b;
  t.domain = std::move(domain);
  const auto n = static_cast<std::size_t>(dom.interior_count());
  t.in_cluster.assign(n, 1);
  t.component_of.assign(n, -1);
  t.stage_of.assign(n, 1);
  t.components = std::move(comps);
  for (std::size_t i = 0; i < t.components.size(); ++i) {
    for (VertexId v : t.components[i].vertices) {
      t.in_cluster[static_cast<std::size_t>(v)] = 0;
      t.component_of[static_cast<std::size_t>(v)] = static_cast<std::int32_t>(i);
      t.stage_of[static_cast<std::size_t>(v)] = 0;
    }
  }
  t.open_edge.assign(static_cast<std::size_t>(dom.edge_count()), 0);
  for (EdgeId e : open) t.open_edge[static_cast<std::size_t>(e)] = 1;
  t.subcritical = a + b < kTwoLambda - kLevelTol;
  return t;
}

}  // namespace

TwoValuedSet extract_tvs(const FieldSample& sample, const EdgeMarks& marks, double a, double b) {
  check_params(a, b, "extract_tvs");
  if (!marks.bridges || marks.a != a || marks.b != b) {
    throw ContractViolation("extract_tvs: edge marks were generated for a different corridor");
  }
  if (marks.bridges->sample().domain != sample.domain || marks.bridges->sample().values != sample.values) {
    throw ContractViolation("extract_tvs: edge marks belong to another sample");
  }
  CorridorExplorer ex(marks.bridges);
  CorridorExplorer::Stage st = ex.explore(ex.root(), -a, b);
  std::vector<Component> comps;
  comps.reserve(st.parts.size());
  for (Region& p : st.parts) comps.push_back(make_component(std::move(p), -a, b));
  return assemble(*sample.domain, sample.domain, a, b, std::move(comps), st.open_edges);
}

FirstPassageSet extract_fps(const FieldSample& sample, std::shared_ptr<const EdgeBridges> bridges, double a) {
  if (!(a > 0.0)) throw InvalidParameter("extract_fps: a must be > 0");
  CorridorExplorer ex(std::move(bridges));
  CorridorExplorer::Stage st = ex.explore(ex.root(), -a, kInf);
  FirstPassageSet f;
  f.a = a;
  f.domain = sample.domain;
  const auto n = static_cast<std::size_t>(sample.domain->interior_count());
  f.in_cluster.assign(n, 1);
  f.component_of.assign(n, -1);
  f.open_edge.assign(static_cast<std::size_t>(sample.domain->edge_count()), 0);
  for (EdgeId e : st.open_edges) f.open_edge[static_cast<std::size_t>(e)] = 1;
  for (Region& p : st.parts) {
    const auto id = static_cast<std::int32_t>(f.components.size());
    f.components.push_back(make_component(std::move(p), -a, kInf));
    for (VertexId v : f.components.back().vertices) {
      f.in_cluster[static_cast<std::size_t>(v)] = 0;
      f.component_of[static_cast<std::size_t>(v)] = id;
    }
  }
  return f;
}

FirstPassageSet extract_fps(const FieldSample& sample, const EdgeMarks& marks_one_sided, double a) {
  if (!marks_one_sided.bridges) throw ContractViolation("extract_fps: marks carry no bridge draws");
  if (marks_one_sided.a != a) throw ContractViolation("extract_fps: marks were generated for another level");
  return extract_fps(sample, marks_one_sided.bridges, a);
}

LabelFrequency component_label_frequency(std::span<const TwoValuedSet> batch, double level) {
  if (batch.empty()) throw InvalidParameter("component_label_frequency: empty batch");
  LabelFrequency f;
  const double a = batch.front().a;
  const double b = batch.front().b;
  for (const TwoValuedSet& t : batch) {
    if (t.a != a || t.b != b) throw ContractViolation("component_label_frequency: mixed parameters");
    const Component* c = t.component_at(t.domain->center());
    if (!c) {
      ++f.center_in_cluster;
      continue;
    }
    if (c->mixed) {
      ++f.center_mixed;
      continue;
    }
    ++f.n;
    if (same_level(c->label, -a)) ++f.minus;
  }
  if (f.n == 0) throw InvalidParameter("component_label_frequency: no labelled center components");
  f.p_minus = static_cast<double>(f.minus) / static_cast<double>(f.n);
  const Interval ci = wilson_ci(f.minus, f.n, level);
  f.ci_low = ci.low;
  f.ci_high = ci.high;
  return f;
}

namespace {

struct Part {
  Region region;
  double label = 0.0;
  bool mixed = false;
  int stage = 0;
  bool truncated = false;
};

// Iterated exploration of the TVS with absolute levels {lo, hi} inside a
// region whose harmonic label is `offset`.
class Schedule {
 public:
  Schedule(CorridorExplorer& ex, std::vector<std::uint16_t>& stage_of, std::vector<EdgeId>& open, int max_rounds)
      : ex_(ex), stage_of_(stage_of), open_(open), max_rounds_(max_rounds) {}

  std::vector<Part> build(Region&& region, double offset, double lo, double hi, int stage) {
    const double a = offset - lo;
    const double b = hi - offset;
    std::vector<Part> out;
    if (stage >= max_rounds_) {
      out.push_back({std::move(region), offset, false, stage, true});
      return out;
    }
    if (near(a + b, kTwoLambda)) return explore_once(std::move(region), lo, hi, stage);
    const double na = a / kLambda;
    const double nb = b / kLambda;
    const double nsum = (a + b) / kLambda;
    if (is_integer(na) && is_integer(nb)) {
      // Repeated A_{-lambda, lambda} inside every part not yet at lo or hi.
      return refine(explore_once(std::move(region), offset - kLambda, offset + kLambda, stage), lo, hi);
    }
    if (is_integer(nsum) && nsum >= 3.0 - 1e-9) {
      const long n = std::lround(nsum);
      long n1 = static_cast<long>(std::floor(na + 1e-9));
      if (n - n1 < 2) --n1;
      const double u = a - static_cast<double>(n1) * kLambda;
      if (near(u, 0.0)) return refine(explore_once(std::move(region), offset - kLambda, offset + kLambda, stage), lo, hi);
      return refine(explore_once(std::move(region), offset - u, offset - u + kTwoLambda, stage), lo, hi);
    }
    return general(std::move(region), offset, lo, hi, stage);
  }

 private:
  static bool near(double x, double y) { return std::abs(x - y) <= 1e-9; }
  static bool is_integer(double x) { return std::abs(x - std::round(x)) <= 1e-9 && std::round(x) >= 1.0; }

  std::vector<Part> explore_once(Region&& region, double lower, double upper, int stage) {
    CorridorExplorer::Stage st = ex_.explore(region, lower, upper);
    for (VertexId v : st.cluster) stage_of_[static_cast<std::size_t>(v)] = static_cast<std::uint16_t>(stage);
    open_.insert(open_.end(), st.open_edges.begin(), st.open_edges.end());
    std::vector<Part> out;
    out.reserve(st.parts.size());
    for (Region& p : st.parts) {
      Component c = make_component(Region{p}, lower, upper);
      out.push_back({std::move(p), c.label, c.mixed, stage, false});
    }
    return out;
  }

  // Parts labelled strictly between lo and hi continue with the remaining corridor.
  std::vector<Part> refine(std::vector<Part>&& parts, double lo, double hi) {
    std::vector<Part> out;
    for (Part& p : parts) {
      if (near(p.label, lo) || near(p.label, hi) || p.label < lo || p.label > hi || p.truncated) {
        out.push_back(std::move(p));
        continue;
      }
      const bool mixed = p.mixed;
      auto sub = build(std::move(p.region), p.label, lo, hi, p.stage + 1);
      for (Part& s : sub) {
        s.mixed = s.mixed || mixed;
        out.push_back(std::move(s));
      }
    }
    return out;
  }

  // a + b > 2 lambda, not a multiple of lambda: alternate explorations of
  // width m lambda between an intermediate level on each side.
  std::vector<Part> general(Region&& region, double offset, double lo, double hi, int stage) {
    const double a = offset - lo;
    const double b = hi - offset;
    double x1;  // intermediate level next to hi's side (b > lambda) or lo's side
    double x2;
    bool upper_side = b > kLambda;
    if (upper_side) {
      const double m = std::floor((b - kLambda + a) / kLambda + 1e-12) + 1.0;
      x1 = offset + m * kLambda - a;  // in (hi - lambda, hi]
      x2 = offset + b - m * kLambda;  // in [lo, lo + lambda)
    } else {
      const double m = std::floor((a - kLambda + b) / kLambda + 1e-12) + 1.0;
      x1 = offset - m * kLambda + b;  // in [lo, lo + lambda)
      x2 = offset - a + m * kLambda;  // in (hi - lambda, hi]
    }
    std::vector<Part> pending;
    {
      auto first = upper_side ? build(std::move(region), offset, lo, x1, stage)
                              : build(std::move(region), offset, x1, hi, stage);
      pending = std::move(first);
    }
    std::vector<Part> out;
    while (!pending.empty()) {
      std::vector<Part> next;
      for (Part& p : pending) {
        const bool at_x1 = near(p.label, x1) && !near(x1, lo) && !near(x1, hi);
        const bool at_x2 = near(p.label, x2) && !near(x2, lo) && !near(x2, hi);
        if (p.truncated || (!at_x1 && !at_x2)) {
          out.push_back(std::move(p));
          continue;
        }
        const bool mixed = p.mixed;
        std::vector<Part> sub;
        if (at_x1) {
          sub = upper_side ? build(std::move(p.region), x1, x2, hi, p.stage + 1)
                           : build(std::move(p.region), x1, lo, x2, p.stage + 1);
        } else {
          sub = upper_side ? build(std::move(p.region), x2, lo, x1, p.stage + 1)
                           : build(std::move(p.region), x2, x1, hi, p.stage + 1);
        }
        for (Part& s : sub) {
          s.mixed = s.mixed || mixed;
          next.push_back(std::move(s));
        }
      }
      pending = std::move(next);
    }
    return out;
  }

  CorridorExplorer& ex_;
  std::vector<std::uint16_t>& stage_of_;
  std::vector<EdgeId>& open_;
  int max_rounds_;
};

}  // namespace

TwoValuedSet iterated_construction(const FieldSample& sample, std::shared_ptr<const EdgeBridges> bridges,
                                   double a, double b, int max_rounds) {
  check_params(a, b, "iterated_construction");
  if (a + b < kTwoLambda - kLevelTol) {
    throw UnsupportedParameter("iterated_construction: a + b < 2 lambda has no schedule");
  }
  CorridorExplorer ex(std::move(bridges));
  const auto n = static_cast<std::size_t>(sample.domain->interior_count());
  std::vector<std::uint16_t> stage_of(n, 0);
  std::vector<EdgeId> open;
  Schedule sched(ex, stage_of, open, max_rounds);
  std::vector<Part> parts = sched.build(ex.root(), 0.0, -a, b, 1);
  std::vector<Component> comps;
  comps.reserve(parts.size());
  for (Part& p : parts) {
    Component c = make_component(std::move(p.region), -a, b);
    c.label = p.label;
    c.mixed = c.mixed || p.mixed || !(same_level(p.label, -a) || same_level(p.label, b));
    c.stage = p.stage;
    c.truncated = p.truncated;
    comps.push_back(std::move(c));
  }
  TwoValuedSet t = assemble(*sample.domain, sample.domain, a, b, std::move(comps), open);
  for (std::size_t v = 0; v < n; ++v) {
    if (t.in_cluster[v]) t.stage_of[v] = stage_of[v];
  }
  return t;
}

bool monotonicity_check(const TwoValuedSet& small, const TwoValuedSet& big) {
  if (small.domain != big.domain) throw ContractViolation("monotonicity_check: different domains");
  if (!(small.a <= big.a + kLevelTol && small.b <= big.b + kLevelTol)) {
    throw InvalidParameter("monotonicity_check: [-a, b] is not contained in [-a', b']");
  }
  for (std::size_t v = 0; v < small.in_cluster.size(); ++v) {
    if (small.in_cluster[v] && !big.in_cluster[v]) return false;
  }
  return true;
}

}  // namespace tvslab
