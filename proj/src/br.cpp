#include "tvslab/br.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tvslab/errors.hpp"

namespace tvslab {

namespace {

bool same_level(double x, double y) { return std::abs(x - y) <= 1e-9 * (1.0 + std::abs(x)); }

struct Pending {
  Region region;
  bool mixed = false;
};

double center_distance(const LatticeDomain& dom, const Component& c) {
  double best = std::numeric_limits<double>::infinity();
  for (VertexId v : c.vertices) {
    const Point& p = dom.coord(v);
    best = std::min(best, std::hypot(static_cast<double>(p.x), static_cast<double>(p.y)));
  }
  return best;
}

}  // namespace

BrSet construct_br(const FieldSample& sample, std::shared_ptr<const EdgeBridges> bridges, double r, int stage_cap) {
  if (!(r > 0.0 && r < kTwoLambda)) throw InvalidParameter("construct_br: r must lie in (0, 2 lambda)");
  if (stage_cap < 1) throw InvalidParameter("construct_br: stage cap must be >= 1");
  const LatticeDomain& dom = *sample.domain;
  CorridorExplorer ex(std::move(bridges));
  BrSet br;
  br.r = r;
  br.stage_cap = stage_cap;
  TwoValuedSet& t = br.set;
  t.a = kTwoLambda;
  t.b = kTwoLambda - r;
  t.domain = sample.domain;
  const auto n = static_cast<std::size_t>(dom.interior_count());
  t.in_cluster.assign(n, 0);
  t.component_of.assign(n, -1);
  t.stage_of.assign(n, 0);
  t.open_edge.assign(static_cast<std::size_t>(dom.edge_count()), 0);

  std::vector<Pending> pending;
  pending.push_back({ex.root(), false});
  std::size_t cluster = 0;
  for (int j = 1; j <= stage_cap && !pending.empty(); ++j) {
    // stage j explores [-j r, 2 lambda - j r] inside parts labelled -(j-1) r
    const double lower = -static_cast<double>(j) * r;
    const double upper = br_label(r, j);
    std::vector<Pending> next;
    for (const Pending& pd : pending) {
      CorridorExplorer::Stage st = ex.explore(pd.region, lower, upper);
      for (VertexId v : st.cluster) {
        t.in_cluster[static_cast<std::size_t>(v)] = 1;
        t.stage_of[static_cast<std::size_t>(v)] = static_cast<std::uint16_t>(j);
      }
      for (EdgeId e : st.open_edges) t.open_edge[static_cast<std::size_t>(e)] = 1;
      cluster += st.cluster.size();
      for (Region& p : st.parts) {
        Component c = make_component(Region{p}, lower, upper);
        c.mixed = c.mixed || pd.mixed;
        c.stage = j;
        if (same_level(c.label, upper)) {
          c.label = br_label(r, j);
          t.components.push_back(std::move(c));
        } else if (j == stage_cap) {
          c.label = lower;
          c.truncated = true;
          t.components.push_back(std::move(c));
        } else {
          next.push_back({std::move(p), c.mixed});
        }
      }
    }
    br.cluster_after_stage.push_back(cluster);
    br.stages_used = j;
    pending = std::move(next);
  }
  for (std::size_t i = 0; i < t.components.size(); ++i) {
    for (VertexId v : t.components[i].vertices) t.component_of[static_cast<std::size_t>(v)] = static_cast<std::int32_t>(i);
  }
  return br;
}

LabelDistanceCheck verify_label_distance(const BrSet& br, const LoopGraph& lg, const DistanceProfile& profile,
                                         bool include_mixed) {
  if (lg.domain != br.set.domain || lg.loops.size() != br.set.components.size() ||
      profile.d_p.size() != lg.loops.size()) {
    throw ContractViolation("verify_label_distance: loop graph and profile do not come from this set");
  }
  LabelDistanceCheck out;
  for (std::size_t i = 0; i < lg.loops.size(); ++i) {
    const Loop& l = lg.loops[i];
    const Component& c = br.set.components[static_cast<std::size_t>(l.component)];
    if ((l.mixed && !include_mixed) || c.truncated) continue;
    ++out.checked;
    const int d = profile.d_p[i];
    if (d == kUnreachable || l.label != br_label(br.r, d)) ++out.violations;
  }
  return out;
}

SetSummary summarize(const TwoValuedSet& t) {
  SetSummary s;
  const auto n = static_cast<double>(t.in_cluster.size());
  s.component_count = static_cast<double>(t.components.size());
  std::size_t largest = 0;
  for (const Component& c : t.components) largest = std::max(largest, c.vertices.size());
  s.largest_fraction = static_cast<double>(largest) / n;
  s.volume_fraction = static_cast<double>(t.cluster_size()) / n;
  return s;
}

double LawMatch::min_p() const {
  return std::min({component_count.p_value, largest_fraction.p_value, volume_fraction.p_value});
}

LawMatch br_law_match(std::span<const SetSummary> br_batch, std::span<const SetSummary> tvs_batch) {
  if (br_batch.empty() || tvs_batch.empty()) throw InvalidParameter("br_law_match: empty batch");
  auto column = [](std::span<const SetSummary> xs, double SetSummary::*field) {
    std::vector<double> out;
    out.reserve(xs.size());
    for (const SetSummary& s : xs) out.push_back(s.*field);
    return out;
  };
  LawMatch m;
  m.component_count = ks_two_sample(column(br_batch, &SetSummary::component_count),
                                    column(tvs_batch, &SetSummary::component_count));
  m.largest_fraction = ks_two_sample(column(br_batch, &SetSummary::largest_fraction),
                                     column(tvs_batch, &SetSummary::largest_fraction));
  m.volume_fraction = ks_two_sample(column(br_batch, &SetSummary::volume_fraction),
                                    column(tvs_batch, &SetSummary::volume_fraction));
  return m;
}

Inclusion br_inclusion(const BrSet& small, const BrSet& big) {
  if (small.set.domain != big.set.domain) throw ContractViolation("br_inclusion: different domains");
  Inclusion inc;
  for (std::size_t v = 0; v < small.set.in_cluster.size(); ++v) {
    if (!small.set.in_cluster[v]) continue;
    ++inc.small;
    inc.contained += big.set.in_cluster[v];
  }
  return inc;
}

Inclusion br_monotonicity(const FieldSample& sample, std::shared_ptr<const EdgeBridges> bridges, double r) {
  if (!bridges || bridges->sample().values != sample.values) {
    throw ContractViolation("br_monotonicity: draws belong to another sample");
  }
  const BrSet coarse = construct_br(sample, bridges, r);
  const BrSet fine = construct_br(sample, bridges, 0.5 * r);
  return br_inclusion(coarse, fine);
}

LabelTrajectory b0_limit_labels(const FieldSample& sample, std::shared_ptr<const EdgeBridges> bridges,
                                std::span<const double> r_sequence) {
  if (r_sequence.size() < 3) throw InvalidParameter("b0_limit_labels: need at least 3 values of r");
  for (std::size_t i = 1; i < r_sequence.size(); ++i) {
    if (!(r_sequence[i] < r_sequence[i - 1])) throw InvalidParameter("b0_limit_labels: r must decrease");
  }
  LabelTrajectory tr;
  const VertexId c = sample.domain->center();
  for (double r : r_sequence) {
    const BrSet br = construct_br(sample, bridges, r);
    tr.r.push_back(r);
    const Component* comp = br.set.component_at(c);
    if (comp && !comp->truncated) {
      tr.label.emplace_back(comp->label);
      tr.stage.push_back(comp->stage);
    } else {
      tr.label.emplace_back(std::nullopt);
      tr.stage.push_back(0);
    }
    const std::size_t k = tr.label.size();
    if (k >= 2 && tr.label[k - 1] && tr.label[k - 2]) tr.differences.push_back(std::abs(*tr.label[k - 1] - *tr.label[k - 2]));
  }
  return tr;
}

CenterLabels center_labels(const TwoValuedSet& t, int min_diameter) {
  CenterLabels o;
  const LatticeDomain& dom = *t.domain;
  const std::int32_t ci = t.component_of[static_cast<std::size_t>(dom.center())];
  if (ci < 0) {
    o.center_in_cluster = true;
    return o;
  }
  const Component& cc = t.components[static_cast<std::size_t>(ci)];
  if (cc.mixed) {
    o.center_mixed = true;
    return o;
  }
  o.center_minus = same_level(cc.label, -t.a);
  // nearest other unmixed macroscopic component
  const LoopGraph lg = extract_loops(t, false);
  double best = std::numeric_limits<double>::infinity();
  const Component* near = nullptr;
  for (std::size_t i = 0; i < t.components.size(); ++i) {
    if (static_cast<std::int32_t>(i) == ci || t.components[i].mixed || lg.loops[i].diameter < min_diameter) continue;
    const double d = center_distance(dom, t.components[i]);
    if (d < best) {
      best = d;
      near = &t.components[i];
    }
  }
  if (near) o.near_minus = same_level(near->label, -t.a);
  return o;
}

Cle4LabelTests cle4_label_tests(std::span<const CenterLabels> obs) {
  if (obs.size() < 200) throw InvalidParameter("cle4_label_tests: need at least 200 samples");
  Cle4LabelTests out;
  std::size_t minus = 0;
  double table[4] = {0.0, 0.0, 0.0, 0.0};
  for (const CenterLabels& o : obs) {
    if (!o.center_minus) continue;
    ++out.labelled;
    minus += *o.center_minus;
    if (!o.near_minus) continue;
    ++out.pairs;
    table[(*o.center_minus ? 0 : 2) + (*o.near_minus ? 0 : 1)] += 1.0;
  }
  if (out.labelled == 0) throw InvalidParameter("cle4_label_tests: no labelled center components");
  out.p_minus = static_cast<double>(minus) / static_cast<double>(out.labelled);
  const double observed[2] = {static_cast<double>(minus), static_cast<double>(out.labelled - minus)};
  const double half = 0.5 * static_cast<double>(out.labelled);
  const double expected[2] = {half, half};
  out.fairness = chi_square(observed, expected);
  out.independence = out.pairs > 0 ? chi_square_independence(table, 2, 2) : TestReport{0.0, 1.0, 0, "chi-square"};
  return out;
}

Cle4LabelTests cle4_label_tests(std::span<const TwoValuedSet> batch, int min_diameter) {
  if (batch.size() < 200) throw InvalidParameter("cle4_label_tests: need at least 200 samples");
  std::vector<CenterLabels> obs;
  obs.reserve(batch.size());
  for (const TwoValuedSet& t : batch) {
    if (t.a != batch.front().a || t.b != batch.front().b) {
      throw ContractViolation("cle4_label_tests: mixed parameters in batch");
    }
    obs.push_back(center_labels(t, min_diameter));
  }
  return cle4_label_tests(obs);
}

LabelFrequency label_frequency(std::span<const CenterLabels> obs, double level) {
  LabelFrequency f;
  for (const CenterLabels& o : obs) {
    if (o.center_in_cluster) ++f.center_in_cluster;
    if (o.center_mixed) ++f.center_mixed;
    if (!o.center_minus) continue;
    ++f.n;
    f.minus += *o.center_minus;
  }
  if (f.n == 0) throw InvalidParameter("label_frequency: no labelled center components");
  f.p_minus = static_cast<double>(f.minus) / static_cast<double>(f.n);
  const Interval ci = wilson_ci(f.minus, f.n, level);
  f.ci_low = ci.low;
  f.ci_high = ci.high;
  return f;
}

BoundaryLabelShare boundary_label_share(const LoopGraph& lg) {
  BoundaryLabelShare s;
  for (const Loop& l : lg.loops) {
    if (!l.touches_boundary || l.mixed) continue;
    ++s.loops;
    s.minus += same_level(l.label, -lg.a);
  }
  return s;
}

}  // namespace tvslab
