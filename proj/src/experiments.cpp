#include "tvslab/experiments.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

#include "tvslab/br.hpp"
#include "tvslab/brownian1d.hpp"
#include "tvslab/constants.hpp"
#include "tvslab/errors.hpp"
#include "tvslab/loops.hpp"
#include "tvslab/rng.hpp"

#ifndef TVSLAB_VERSION
#define TVSLAB_VERSION "unknown"
#endif

namespace tvslab {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::uint64_t name_key(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
  return h;
}

std::string num(double x) {
  if (!std::isfinite(x)) return "nan";
  std::ostringstream s;
  s.precision(10);
  s << x;
  return s.str();
}

class Table {
 public:
  explicit Table(std::vector<std::string> header) : cols_(header.size()) { add(header); }
  void add(const std::vector<std::string>& row) {
    if (row.size() != cols_) throw InternalError("table row width");
    for (std::size_t i = 0; i < row.size(); ++i) text_ += (i ? "," : "") + row[i];
    text_ += '\n';
  }
  const std::string& text() const { return text_; }

 private:
  std::size_t cols_;
  std::string text_;
};

struct Case {
  std::string name;
  double a;  // lambda units
  double b;
  double abs_a() const { return a * kLambda; }
  double abs_b() const { return b * kLambda; }
};

Json case_json(const Case& c) { return {{"name", c.name}, {"a_lambda", c.a}, {"b_lambda", c.b}}; }

// One field sample with its edge bridges; every case of a replica reuses it.
struct Draw {
  FieldSample sample;
  std::shared_ptr<const EdgeBridges> bridges;
};

Draw make_draw(const DomainPtr& dom, std::uint64_t seed) {
  Draw d{sample_dgff(dom, seed), nullptr};
  d.bridges = std::make_shared<const EdgeBridges>(d.sample, hash_key(seed, 0x627264));
  return d;
}

TwoValuedSet tvs_of(const Draw& d, double a, double b) {
  return extract_tvs(d.sample, edge_marks_from(d.bridges, a, b), a, b);
}

struct Ctx {
  const ExperimentConfig& cfg;
  ExperimentReport& rep;
  std::uint64_t base;
  std::map<int, DomainPtr> domains;

  Ctx(const ExperimentConfig& c, ExperimentReport& r) : cfg(c), rep(r), base(hash_key(c.seed, name_key(c.experiment))) {}

  std::vector<int> radii(std::vector<int> def) const { return cfg.radii.empty() ? def : cfg.radii; }
  int replicas(int def) const { return cfg.replicas > 0 ? cfg.replicas : def; }
  double r(double def) const { return cfg.r.value_or(def); }
  std::vector<Case> cases(std::vector<Case> def) const {
    if (!cfg.a && !cfg.b) return def;
    const double a = cfg.a.value_or(cfg.b.value_or(1.0));
    const double b = cfg.b.value_or(a);
    return {{"custom", a, b}};
  }
  const DomainPtr& domain(int radius) {
    auto it = domains.find(radius);
    if (it == domains.end()) it = domains.emplace(radius, make_disk_domain(radius)).first;
    return it->second;
  }
  std::uint64_t seed(std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) const { return hash_key(base, a, b, c); }
  void gate(std::string name, bool pass, Json detail) { rep.gates.push_back({std::move(name), pass, std::move(detail)}); }
  template <class T, class F>
  std::vector<T> map(std::size_t n, F&& fn) const {
    return parallel_map<T>(n, cfg.workers, std::forward<F>(fn));
  }
};

std::vector<double> as_doubles(const std::vector<int>& v) { return {v.begin(), v.end()}; }

Json trend_json(const TrendReport& t, const std::vector<int>& radii) {
  Json j = to_json(t);
  j["radii"] = radii;
  return j;
}

// Loops with diameter >= radius / 16 take part in the macroscopic statistics.
int macro_cutoff(int radius) { return std::max(2, radius / 16); }

// ---------------------------------------------------------------- phases

enum class Phase { kArc, kIntermediate, kCle4 };

Phase phase_of(const Case& c) {
  const double s = c.a + c.b;
  if (s < 2.0 + 1e-9) return Phase::kArc;
  if (s < 4.0 - 1e-9) return Phase::kIntermediate;
  return Phase::kCle4;
}

void run_phases(Ctx& x) {
  const auto radii = x.radii({64, 128, 256});
  const int reps = x.replicas(50);
  const auto cases = x.cases({{"arc", 1, 1}, {"intermediate", 1, 2}, {"cle4", 2, 2}});
  struct Out {
    std::vector<ConnectivityReport> per_case;
    std::vector<std::string> svg;
  };
  Table table({"case", "radius", "replica", "loops", "side_edges", "point_edges", "point_only_share", "side_density",
               "point_density", "giant_gp_share", "bipartite_violations"});
  // [case][radius] -> replica values
  std::vector<std::vector<std::vector<ConnectivityReport>>> res(cases.size(), std::vector<std::vector<ConnectivityReport>>(radii.size()));
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    const int R = radii[ri];
    const DomainPtr dom = x.domain(R);
    const bool figs = x.cfg.svg && ri + 1 == radii.size();
    auto outs = x.map<Out>(static_cast<std::size_t>(reps), [&](std::size_t k) {
      const Draw d = make_draw(dom, x.seed(R, k));
      Out o;
      for (const Case& c : cases) {
        const TwoValuedSet t = tvs_of(d, c.abs_a(), c.abs_b());
        LoopGraph lg = build_adjacency(extract_loops(t, figs && k == 0));
        if (figs && k == 0) o.svg.push_back(svg_string(lg));
        o.per_case.push_back(connectivity_report(restrict_loops(lg, macro_cutoff(R))));
      }
      return o;
    });
    for (std::size_t k = 0; k < outs.size(); ++k) {
      for (std::size_t ci = 0; ci < cases.size(); ++ci) {
        const ConnectivityReport& c = outs[k].per_case[ci];
        res[ci][ri].push_back(c);
        table.add({cases[ci].name, std::to_string(R), std::to_string(k), std::to_string(c.loops), std::to_string(c.side_edges),
                   std::to_string(c.point_edges), num(c.point_only_share), num(c.side_density), num(c.point_density),
                   num(c.giant_gp_share), std::to_string(c.bipartite_violations)});
      }
      for (std::size_t ci = 0; ci < outs[k].svg.size(); ++ci) {
        x.rep.figures.push_back({"phases_" + cases[ci].name + "_r" + std::to_string(R) + ".svg", outs[k].svg[ci]});
      }
    }
  }
  x.rep.tables.push_back({"phases.csv", table.text()});

  const auto meshes = as_doubles(radii);
  auto series = [&](std::size_t ci, auto field) {
    std::vector<std::vector<double>> v(radii.size());
    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
      for (const auto& c : res[ci][ri]) v[ri].push_back(field(c));
    }
    return v;
  };
  Json metrics = Json::object();
  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    const Case& c = cases[ci];
    Json m;
    m["case"] = case_json(c);
    const auto pos = series(ci, [](const ConnectivityReport& r) { return r.point_only_share; });
    const auto sd = series(ci, [](const ConnectivityReport& r) { return r.side_density; });
    const auto pd = series(ci, [](const ConnectivityReport& r) { return r.point_density; });
    const auto gs = series(ci, [](const ConnectivityReport& r) { return r.giant_gp_share; });
    const auto bv = series(ci, [](const ConnectivityReport& r) { return static_cast<double>(r.bipartite_violations); });
    const auto lc = series(ci, [](const ConnectivityReport& r) { return static_cast<double>(r.loops); });
    const TrendReport t_pos = mesh_trend(meshes, pos, Direction::kDecreasing);
    const TrendReport t_sd = mesh_trend(meshes, sd, Direction::kDecreasing);
    const TrendReport t_pd = mesh_trend(meshes, pd, Direction::kDecreasing);
    const TrendReport t_gs = mesh_trend(meshes, gs, Direction::kIncreasing);
    m["macro_loops"] = trend_json(mesh_trend(meshes, lc, Direction::kIncreasing), radii);
    m["point_only_share"] = trend_json(t_pos, radii);
    m["side_density"] = trend_json(t_sd, radii);
    m["point_density"] = trend_json(t_pd, radii);
    m["giant_gp_share"] = trend_json(t_gs, radii);
    double violations = 0.0;
    for (const auto& v : bv) violations += std::accumulate(v.begin(), v.end(), 0.0);
    m["bipartite_violations"] = violations;
    metrics[c.name] = m;
    switch (phase_of(c)) {
      case Phase::kArc:
        x.gate(c.name + ": point-only share decreases", t_pos.pass(), m["point_only_share"]);
        break;
      case Phase::kIntermediate: {
        x.gate(c.name + ": side density decreases", t_sd.pass(), m["side_density"]);
        const bool big = std::all_of(t_gs.means.begin(), t_gs.means.end(), [](double g) { return g >= 0.9; });
        x.gate(c.name + ": giant G_p share >= 0.9 and nondecreasing", big && t_gs.monotone, m["giant_gp_share"]);
        break;
      }
      case Phase::kCle4:
        x.gate(c.name + ": point density decreases", t_pd.pass(), m["point_density"]);
        break;
    }
    x.gate(c.name + ": no label-bipartiteness violations", violations == 0.0, {{"violations", violations}});
  }
  x.rep.metrics = metrics;
}

// ---------------------------------------------------------------- labels-parity

void run_labels_parity(Ctx& x) {
  const auto radii = x.radii({128});
  const int R = radii.back();
  const int reps = x.replicas(20);
  const DomainPtr dom = x.domain(R);
  const Case asym = x.cases({{"asymmetric", 1, 2}}).front();
  const Case sym{"symmetric", 2, 2};
  struct Out {
    ParityRecovery asym;
    std::size_t asym_loops = 0;
    bool sym_refused = false;
    bool sym_anchored = false;  // center loop available as anchor
    double sym_coverage = 0.0;
    double sym_component_share = 0.0;
    double sym_agreement = 1.0;
  };
  auto outs = x.map<Out>(static_cast<std::size_t>(reps), [&](std::size_t k) {
    const Draw d = make_draw(dom, x.seed(R, k));
    Out o;
    {
      const TwoValuedSet t = tvs_of(d, asym.abs_a(), asym.abs_b());
      const LoopGraph lg = build_adjacency(extract_loops(t, false));
      o.asym = recover_labels_by_parity(lg, lg.a, lg.b);
      o.asym_loops = lg.loops.size();
    }
    const TwoValuedSet t = tvs_of(d, sym.abs_a(), sym.abs_b());
    const LoopGraph lg = build_adjacency(extract_loops(t, false));
    try {
      recover_labels_by_parity(lg, lg.a, lg.b);
    } catch (const InvalidParameter&) {
      o.sym_refused = true;
    }
    const std::int32_t ci = t.component_of[static_cast<std::size_t>(dom->center())];
    if (ci >= 0 && !lg.loops[static_cast<std::size_t>(ci)].mixed) {
      o.sym_anchored = true;
      const ParityRecovery p = recover_labels_by_parity(lg, lg.a, lg.b, std::make_pair(ci, lg.loops[static_cast<std::size_t>(ci)].label));
      o.sym_coverage = p.coverage;
      o.sym_agreement = p.agreement;
      // G_p component of the anchor
      const auto adj = lg.adjacency(false);
      std::vector<std::uint8_t> seen(lg.loops.size(), 0);
      std::vector<std::int32_t> stack{ci};
      seen[static_cast<std::size_t>(ci)] = 1;
      std::size_t size = 0;
      while (!stack.empty()) {
        const auto v = stack.back();
        stack.pop_back();
        ++size;
        for (auto w : adj[static_cast<std::size_t>(v)]) {
          if (!seen[static_cast<std::size_t>(w)]) {
            seen[static_cast<std::size_t>(w)] = 1;
            stack.push_back(w);
          }
        }
      }
      o.sym_component_share = static_cast<double>(size) / static_cast<double>(lg.loops.size());
    }
    return o;
  });
  Table table({"replica", "asym_loops", "asym_coverage", "asym_agreement", "asym_reached", "sym_refused",
               "sym_anchored", "sym_coverage", "sym_component_share"});
  double reached = 0.0;
  double agreed = 0.0;
  std::vector<double> cov;
  std::size_t refused = 0;
  std::size_t anchored = 0;
  std::size_t limited = 0;
  std::vector<double> sym_cov;
  for (std::size_t k = 0; k < outs.size(); ++k) {
    const Out& o = outs[k];
    reached += static_cast<double>(o.asym.reached);
    agreed += o.asym.agreement * static_cast<double>(o.asym.reached);
    cov.push_back(o.asym.coverage);
    refused += o.sym_refused;
    if (o.sym_anchored) {
      ++anchored;
      sym_cov.push_back(o.sym_coverage);
      limited += std::abs(o.sym_coverage - o.sym_component_share) < 1e-12;
    }
    table.add({std::to_string(k), std::to_string(o.asym_loops), num(o.asym.coverage), num(o.asym.agreement),
               std::to_string(o.asym.reached), std::to_string(o.sym_refused), std::to_string(o.sym_anchored),
               num(o.sym_coverage), num(o.sym_component_share)});
  }
  x.rep.tables.push_back({"labels_parity.csv", table.text()});
  const double agreement = reached > 0.0 ? agreed / reached : 0.0;
  const double coverage = mean(cov);
  Json m;
  m["radius"] = R;
  m["asymmetric"] = {{"case", case_json(asym)}, {"agreement", agreement}, {"coverage", coverage}, {"reached", reached}};
  m["symmetric"] = {{"refused_without_anchor", refused},
                    {"anchored", anchored},
                    {"coverage_equals_anchor_component", limited},
                    {"mean_anchored_coverage", sym_cov.empty() ? 0.0 : mean(sym_cov)}};
  x.rep.metrics = m;
  x.gate("asymmetric: parity agreement >= 0.99", agreement >= 0.99, m["asymmetric"]);
  x.gate("asymmetric: coverage >= 0.95", coverage >= 0.95, m["asymmetric"]);
  x.gate("symmetric: labels not recoverable without anchor, coverage limited to the anchor component",
         refused == outs.size() && limited == anchored, m["symmetric"]);
}

// ---------------------------------------------------------------- percolation

void run_percolation(Ctx& x) {
  const auto radii = x.radii({64, 128, 256});
  const int reps = x.replicas(50);
  const Case arc_case{"quarter-arcs", 2, 2};
  const Case pt_case{"fixed-points", 1, 10};
  const BoundaryArc east{-0.25 * kPi, 0.25 * kPi};
  const BoundaryArc west{0.75 * kPi, 1.25 * kPi};
  const BoundaryArc p_east{0.0, 0.0};
  const BoundaryArc p_west{kPi, kPi};
  std::vector<std::vector<double>> arcs(radii.size());
  std::vector<std::vector<double>> pts(radii.size());
  Table table({"radius", "replica", "quarter_arcs", "fixed_points"});
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    const int R = radii[ri];
    const DomainPtr dom = x.domain(R);
    auto outs = x.map<std::pair<double, double>>(static_cast<std::size_t>(reps), [&](std::size_t k) {
      const Draw d = make_draw(dom, x.seed(R, k));
      const bool q = percolation_probe(tvs_of(d, arc_case.abs_a(), arc_case.abs_b()), east, west);
      const bool p = percolation_probe(tvs_of(d, pt_case.abs_a(), pt_case.abs_b()), p_east, p_west);
      return std::make_pair(q ? 1.0 : 0.0, p ? 1.0 : 0.0);
    });
    for (std::size_t k = 0; k < outs.size(); ++k) {
      arcs[ri].push_back(outs[k].first);
      pts[ri].push_back(outs[k].second);
      table.add({std::to_string(R), std::to_string(k), num(outs[k].first), num(outs[k].second)});
    }
  }
  x.rep.tables.push_back({"percolation.csv", table.text()});
  const auto meshes = as_doubles(radii);
  const TrendReport t_arc = mesh_trend(meshes, arcs, Direction::kIncreasing);
  const TrendReport t_pt = mesh_trend(meshes, pts, Direction::kDecreasing);
  Json m;
  m["quarter_arcs"] = trend_json(t_arc, radii);
  m["quarter_arcs"]["case"] = case_json(arc_case);
  m["fixed_points"] = trend_json(t_pt, radii);
  m["fixed_points"]["case"] = case_json(pt_case);
  x.rep.metrics = m;
  std::size_t ref = radii.size() - 1;
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    if (radii[ri] == 128) ref = ri;
  }
  x.gate("quarter arcs: frequency >= 0.95 at radius " + std::to_string(radii[ref]), t_arc.means[ref] >= 0.95, m["quarter_arcs"]);
  x.gate("quarter arcs: frequency nondecreasing in radius", t_arc.monotone, m["quarter_arcs"]);
  x.gate("fixed points: frequency decreasing in radius",
         t_pt.pass() && t_pt.means.back() < t_pt.means.front(), m["fixed_points"]);
}

// ---------------------------------------------------------------- dimension

std::vector<Point> frontier_points(const TwoValuedSet& t) {
  const LatticeDomain& dom = *t.domain;
  std::vector<Point> pts;
  for (VertexId v = 0; v < dom.interior_count(); ++v) {
    if (!t.in_cluster[static_cast<std::size_t>(v)]) continue;
    for (int k = 0; k < 4; ++k) {
      const VertexId w = dom.neighbor(v, k);
      if (dom.is_interior(w) && !t.in_cluster[static_cast<std::size_t>(w)]) {
        pts.push_back(dom.coord(v));
        break;
      }
    }
  }
  return pts;
}

double dimension_bound(const Case& c) { return 2.0 - 2.0 / ((c.a + c.b) * (c.a + c.b)); }

void run_dimension(Ctx& x) {
  const int R = x.radii({256}).back();
  const int reps = x.replicas(4);
  const auto cases = x.cases({{"ale", 1, 1}, {"intermediate", 1, 2}, {"critical", 1, 3}, {"cle4", 2, 2}});
  const DomainPtr dom = x.domain(R);
  const int max_box = std::max(8, R / 8);
  struct Out {
    std::vector<DimensionFit> fits;
    std::vector<std::size_t> points;
  };
  auto outs = x.map<Out>(static_cast<std::size_t>(reps), [&](std::size_t k) {
    const Draw d = make_draw(dom, x.seed(R, k));
    Out o;
    for (const Case& c : cases) {
      const auto pts = frontier_points(tvs_of(d, c.abs_a(), c.abs_b()));
      o.points.push_back(pts.size());
      o.fits.push_back(pts.size() >= 100 ? box_counting_dimension(pts, 2, max_box) : DimensionFit{});
    }
    return o;
  });
  Table table({"case", "replica", "points", "slope", "r2"});
  Json m = Json::object();
  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    const Case& c = cases[ci];
    std::vector<double> slopes;
    for (std::size_t k = 0; k < outs.size(); ++k) {
      const DimensionFit& f = outs[k].fits[ci];
      const bool ok = outs[k].points[ci] >= 100;
      if (ok) slopes.push_back(f.slope);
      table.add({c.name, std::to_string(k), std::to_string(outs[k].points[ci]), ok ? num(f.slope) : "nan", ok ? num(f.r2) : "nan"});
    }
    Json j;
    j["case"] = case_json(c);
    j["radius"] = R;
    j["fitted_replicas"] = slopes.size();
    j["mean_slope"] = slopes.empty() ? 0.0 : mean(slopes);
    j["std_error"] = slopes.size() > 1 ? std_error(slopes) : 0.0;
    j["bound"] = dimension_bound(c);
    j["example_fit"] = to_json(outs.front().fits[ci]);
    m[c.name] = j;
    const double s = j["mean_slope"].get<double>();
    x.gate(c.name + ": slope <= bound + 0.05", !slopes.empty() && s <= dimension_bound(c) + 0.05, j);
    if (std::abs(c.a + c.b - 2.0) < 1e-9) {
      x.gate(c.name + ": arc-ensemble slope 1.5 +- 0.1", !slopes.empty() && std::abs(s - 1.5) <= 0.1, j);
    }
  }
  x.rep.tables.push_back({"dimension.csv", table.text()});
  x.rep.metrics = m;
}

// ---------------------------------------------------------------- B_r

void run_br_distance(Ctx& x) {
  const auto radii = x.radii({64, 128, 256});
  const int reps = x.replicas(20);
  const double r = x.r(1.0) * kLambda;
  struct Out {
    LabelDistanceCheck check;
    LabelDistanceCheck with_mixed;
    std::size_t stage_violations = 0;
    std::size_t components = 0;
  };
  std::vector<std::vector<double>> frac(radii.size());
  std::vector<LabelDistanceCheck> pooled(radii.size());
  std::vector<LabelDistanceCheck> pooled_mixed(radii.size());
  std::size_t stage_violations = 0;
  std::size_t stage_checked = 0;
  Table table({"radius", "replica", "checked", "violations", "fraction", "stage_label_violations"});
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    const int R = radii[ri];
    const DomainPtr dom = x.domain(R);
    auto outs = x.map<Out>(static_cast<std::size_t>(reps), [&](std::size_t k) {
      const Draw d = make_draw(dom, x.seed(R, k));
      const BrSet br = construct_br(d.sample, d.bridges, r);
      const LoopGraph lg = build_adjacency(extract_loops(br.set, false));
      Out o;
      const DistanceProfile prof = distance_profile(lg);
      o.check = verify_label_distance(br, lg, prof);
      o.with_mixed = verify_label_distance(br, lg, prof, true);
      for (const Component& c : br.set.components) {
        if (c.truncated) continue;
        ++o.components;
        o.stage_violations += std::abs(c.label - br_label(r, c.stage)) > 1e-12;
      }
      return o;
    });
    for (std::size_t k = 0; k < outs.size(); ++k) {
      const Out& o = outs[k];
      frac[ri].push_back(o.check.fraction());
      pooled[ri].violations += o.check.violations;
      pooled[ri].checked += o.check.checked;
      pooled_mixed[ri].violations += o.with_mixed.violations;
      pooled_mixed[ri].checked += o.with_mixed.checked;
      stage_violations += o.stage_violations;
      stage_checked += o.components;
      table.add({std::to_string(R), std::to_string(k), std::to_string(o.check.checked), std::to_string(o.check.violations),
                 num(o.check.fraction()), std::to_string(o.stage_violations)});
    }
  }
  x.rep.tables.push_back({"br_distance.csv", table.text()});
  const TrendReport t = mesh_trend(as_doubles(radii), frac, Direction::kDecreasing);
  Json m;
  m["r_lambda"] = x.r(1.0);
  m["fraction_trend"] = trend_json(t, radii);
  Json per = Json::array();
  Json per_mixed = Json::array();
  std::size_t ref = radii.size() - 1;
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    per.push_back({{"radius", radii[ri]}, {"checked", pooled[ri].checked}, {"violations", pooled[ri].violations},
                   {"fraction", pooled[ri].fraction()}});
    per_mixed.push_back({{"radius", radii[ri]}, {"checked", pooled_mixed[ri].checked},
                         {"violations", pooled_mixed[ri].violations}, {"fraction", pooled_mixed[ri].fraction()}});
    if (radii[ri] == 128) ref = ri;
  }
  m["pooled"] = per;
  // not gated: mixed loops carry majority labels only
  m["pooled_including_mixed"] = per_mixed;
  m["stage_label"] = {{"checked", stage_checked}, {"violations", stage_violations}};
  x.rep.metrics = m;
  x.gate("label equals 2 lambda - r * stage", stage_violations == 0, m["stage_label"]);
  x.gate("label vs graph distance violations < 5% at radius " + std::to_string(radii[ref]),
         pooled[ref].checked > 0 && pooled[ref].fraction() < 0.05, per[ref]);
  x.gate("violation fraction decreases with radius", t.pass(), m["fraction_trend"]);
}

void run_br_law(Ctx& x) {
  const int R = x.radii({64}).back();
  const int reps = x.replicas(100);
  const double r = x.r(1.0) * kLambda;
  const DomainPtr dom = x.domain(R);
  struct Out {
    SetSummary br;
    SetSummary tvs;
    Inclusion inc;
  };
  auto outs = x.map<Out>(static_cast<std::size_t>(reps), [&](std::size_t k) {
    const Draw d = make_draw(dom, x.seed(R, k, 1));
    const Draw e = make_draw(dom, x.seed(R, k, 2));
    Out o;
    o.br = summarize(construct_br(d.sample, d.bridges, r).set);
    o.tvs = summarize(tvs_of(e, kTwoLambda, kTwoLambda - r));
    o.inc = br_monotonicity(d.sample, d.bridges, r);
    return o;
  });
  std::vector<SetSummary> a;
  std::vector<SetSummary> b;
  Inclusion inc;
  Table table({"replica", "br_components", "br_largest", "br_volume", "tvs_components", "tvs_largest", "tvs_volume",
               "inclusion_small", "inclusion_contained"});
  for (std::size_t k = 0; k < outs.size(); ++k) {
    const Out& o = outs[k];
    a.push_back(o.br);
    b.push_back(o.tvs);
    inc.small += o.inc.small;
    inc.contained += o.inc.contained;
    table.add({std::to_string(k), num(o.br.component_count), num(o.br.largest_fraction), num(o.br.volume_fraction),
               num(o.tvs.component_count), num(o.tvs.largest_fraction), num(o.tvs.volume_fraction),
               std::to_string(o.inc.small), std::to_string(o.inc.contained)});
  }
  x.rep.tables.push_back({"br_law.csv", table.text()});
  const LawMatch lm = br_law_match(a, b);
  Json m;
  m["radius"] = R;
  m["r_lambda"] = x.r(1.0);
  m["component_count"] = to_json(lm.component_count);
  m["largest_fraction"] = to_json(lm.largest_fraction);
  m["volume_fraction"] = to_json(lm.volume_fraction);
  m["inclusion"] = {{"small", inc.small}, {"contained", inc.contained}, {"fraction", inc.fraction()}};
  x.rep.metrics = m;
  x.gate("B_r summaries match the two-valued set (KS p > 0.01)", lm.min_p() > 0.01,
         {{"min_p", lm.min_p()}});
  x.gate("B_r inside B_r/2 on >= 99% of vertices", inc.fraction() >= 0.99, m["inclusion"]);
}

namespace {

// Geom(p) on stages 1..n plus a tail bin for stages beyond the observed range.
TestReport geom_fit(const std::vector<double>& counts, double n, double p) {
  std::vector<double> expected(counts.size() + 1);
  std::vector<double> observed = counts;
  observed.push_back(0.0);
  for (std::size_t k = 0; k < counts.size(); ++k) expected[k] = n * p * std::pow(1.0 - p, static_cast<double>(k));
  expected.back() = n * std::pow(1.0 - p, static_cast<double>(counts.size()));
  return chi_square(observed, expected);
}

void bump(std::vector<double>& counts, int stage) {
  if (counts.size() < static_cast<std::size_t>(stage)) counts.resize(static_cast<std::size_t>(stage), 0.0);
  counts[static_cast<std::size_t>(stage - 1)] += 1.0;
}

}  // namespace

void run_geom_label(Ctx& x) {
  const int R = x.radii({128}).back();
  const int reps = x.replicas(300);
  const double rl = x.r(1.0);
  const double r = rl * kLambda;
  const DomainPtr dom = x.domain(R);
  struct Center {
    int stage = 0;  // 0: in the cluster
    bool mixed = false;
    bool truncated = false;
  };
  auto centers = x.map<Center>(static_cast<std::size_t>(reps), [&](std::size_t k) {
    const Draw d = make_draw(dom, x.seed(R, k));
    const BrSet br = construct_br(d.sample, d.bridges, r);
    const Component* c = br.set.component_at(dom->center());
    if (!c) return Center{};
    return Center{c->stage, c->mixed, c->truncated};
  });
  Table table({"replica", "center_stage", "mixed", "truncated"});
  std::vector<double> counts, counts_all;
  std::size_t n = 0, n_all = 0, in_cluster = 0, mixed = 0, truncated = 0;
  for (std::size_t k = 0; k < centers.size(); ++k) {
    const Center& c = centers[k];
    table.add({std::to_string(k), std::to_string(c.stage), std::to_string(int{c.mixed}), std::to_string(int{c.truncated})});
    if (c.stage == 0) {
      ++in_cluster;
      continue;
    }
    if (c.truncated) {
      ++truncated;
      continue;
    }
    bump(counts_all, c.stage);
    ++n_all;
    if (c.mixed) {
      ++mixed;
      continue;
    }
    bump(counts, c.stage);
    ++n;
  }
  x.rep.tables.push_back({"geom_label.csv", table.text()});
  const double p = r / kTwoLambda;
  Json m;
  m["radius"] = R;
  m["r_lambda"] = rl;
  m["p"] = p;
  m["labelled"] = n;
  m["center_in_cluster"] = in_cluster;
  m["center_mixed"] = mixed;
  m["center_truncated"] = truncated;
  m["counts"] = counts;
  // not gated: stages of mixed centers follow the majority crossing level
  Json all;
  all["n"] = n_all;
  all["counts"] = counts_all;
  if (n_all > 0) all["test"] = to_json(geom_fit(counts_all, static_cast<double>(n_all), p));
  m["including_mixed"] = all;
  if (n == 0) {
    x.rep.metrics = m;
    x.gate("center stage ~ Geom(r / 2 lambda) (chi-square p > 0.01)", false, m);
    return;
  }
  const TestReport t = geom_fit(counts, static_cast<double>(n), p);
  m["test"] = to_json(t);
  x.rep.metrics = m;
  x.gate("center stage ~ Geom(r / 2 lambda) (chi-square p > 0.01)", t.p_value > 0.01, m);
}

// ---------------------------------------------------------------- cle4-labels

void run_cle4_labels(Ctx& x) {
  const int R = x.radii({128}).back();
  const int reps = x.replicas(300);
  const auto cases = x.cases({{"arc", 1, 1}, {"intermediate", 1, 2}, {"cle4", 2, 2}, {"critical", 1, 3}});
  const DomainPtr dom = x.domain(R);
  const int cutoff = macro_cutoff(R);
  struct Out {
    std::vector<CenterLabels> center;
    std::vector<BoundaryLabelShare> boundary;
    std::vector<std::size_t> mixed;
    std::vector<std::size_t> comps;
    std::vector<std::string> svg;
  };
  auto outs = x.map<Out>(static_cast<std::size_t>(reps), [&](std::size_t k) {
    const Draw d = make_draw(dom, x.seed(R, k));
    Out o;
    for (const Case& c : cases) {
      const TwoValuedSet t = tvs_of(d, c.abs_a(), c.abs_b());
      o.center.push_back(center_labels(t, cutoff));
      const LoopGraph lg = extract_loops(t, x.cfg.svg && k == 0);
      if (x.cfg.svg && k == 0) o.svg.push_back(svg_string(lg));
      o.boundary.push_back(boundary_label_share(lg));
      o.mixed.push_back(t.mixed_count());
      o.comps.push_back(t.components.size());
    }
    return o;
  });
  Table table({"case", "replica", "center", "nearest", "boundary_loops", "boundary_minus", "components", "mixed"});
  Json m = Json::object();
  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    const Case& c = cases[ci];
    std::vector<CenterLabels> obs;
    BoundaryLabelShare bs;
    std::size_t mixed = 0;
    std::size_t comps = 0;
    for (std::size_t k = 0; k < outs.size(); ++k) {
      const CenterLabels& o = outs[k].center[ci];
      obs.push_back(o);
      bs.loops += outs[k].boundary[ci].loops;
      bs.minus += outs[k].boundary[ci].minus;
      mixed += outs[k].mixed[ci];
      comps += outs[k].comps[ci];
      const std::string center = o.center_in_cluster ? "cluster" : o.center_mixed ? "mixed" : *o.center_minus ? "-a" : "b";
      const std::string near = o.near_minus ? (*o.near_minus ? "-a" : "b") : "none";
      table.add({c.name, std::to_string(k), center, near, std::to_string(outs[k].boundary[ci].loops),
                 std::to_string(outs[k].boundary[ci].minus), std::to_string(outs[k].comps[ci]), std::to_string(outs[k].mixed[ci])});
    }
    if (x.cfg.svg && !outs.empty()) {
      x.rep.figures.push_back({"cle4_labels_" + c.name + ".svg", outs.front().svg[ci]});
    }
    Json j;
    j["case"] = case_json(c);
    j["radius"] = R;
    j["mixed_components"] = mixed;
    j["components"] = comps;
    j["boundary_loops"] = bs.loops;
    j["boundary_minus_share"] = bs.share();
    const double expect = c.b / (c.a + c.b);
    j["expected_p_minus"] = expect;
    std::size_t labelled = 0;
    for (const auto& o : obs) labelled += o.center_minus.has_value();
    if (labelled == 0) {
      j["label_frequency"] = nullptr;
      x.gate(c.name + ": center label frequency b/(a+b) in 99% Wilson CI", false, j);
    } else {
      const LabelFrequency f = label_frequency(obs, 0.99);
      j["label_frequency"] = {{"p_minus", f.p_minus}, {"ci", {f.ci_low, f.ci_high}}, {"n", f.n},
                              {"center_in_cluster", f.center_in_cluster}, {"center_mixed", f.center_mixed}};
      x.gate(c.name + ": center label frequency b/(a+b) in 99% Wilson CI", expect >= f.ci_low && expect <= f.ci_high, j["label_frequency"]);
    }
    if (std::abs(c.a - c.b) < 1e-12 && std::abs(c.a + c.b - 4.0) < 1e-9 && obs.size() >= 200 && labelled > 0) {
      const Cle4LabelTests t = cle4_label_tests(obs);
      j["fairness"] = to_json(t.fairness);
      j["independence"] = to_json(t.independence);
      j["pairs"] = t.pairs;
      x.gate(c.name + ": fair coin labels (p > 0.01)", t.fairness.p_value > 0.01, j["fairness"]);
      x.gate(c.name + ": center and nearest labels independent (p > 0.01)", t.independence.p_value > 0.01, j["independence"]);
    }
    if (std::abs(c.a + c.b - 4.0) < 1e-9 && c.a < c.b) {
      x.gate(c.name + ": every boundary-touching loop labelled -a", bs.loops > 0 && bs.minus == bs.loops,
             {{"loops", bs.loops}, {"minus", bs.minus}});
    }
    m[c.name] = j;
  }
  x.rep.tables.push_back({"cle4_labels.csv", table.text()});
  x.rep.metrics = m;
}

// ---------------------------------------------------------------- levy1d

void run_levy1d(Ctx& x) {
  const std::size_t n = static_cast<std::size_t>(x.replicas(100000));
  const double dt = x.cfg.dt;
  Json m;
  m["paths"] = n;
  m["dt"] = dt;
  // exit side and time at two corridors
  const std::vector<Case> corridors = {{"unit", 1.0 / kLambda, 1.0 / kLambda}, {"lambda-2lambda", 1, 2}};
  for (std::size_t ci = 0; ci < corridors.size(); ++ci) {
    const Case& c = corridors[ci];
    const double a = c.abs_a();
    const double b = c.abs_b();
    auto recs = x.map<ExitRecord>(n, [&](std::size_t k) { return sample_exit(a, b, dt, x.seed(1, ci, k)); });
    std::vector<double> times;
    std::size_t up = 0;
    for (const auto& e : recs) {
      times.push_back(e.time);
      up += e.side == ExitSide::kUpper;
    }
    const double p_up = static_cast<double>(up) / static_cast<double>(n);
    const double p_exp = a / (a + b);
    const double se_p = std::sqrt(p_exp * (1.0 - p_exp) / static_cast<double>(n));
    const double et = mean(times);
    Json j = {{"a", a}, {"b", b}, {"p_upper", p_up}, {"expected_p_upper", p_exp}, {"se", se_p},
              {"mean_time", et}, {"expected_mean_time", a * b}, {"time_se", std_error(times)}};
    m[c.name] = j;
    x.gate(c.name + ": P(exit at b) = a/(a+b) within 3 SE", std::abs(p_up - p_exp) <= 3.0 * se_p, j);
    x.gate(c.name + ": E[exit time] = ab within 1%", std::abs(et - a * b) <= 0.01 * a * b, j);
    x.rep.tables.push_back({"levy1d_exit_" + c.name + ".csv", empirical_cdf_csv(times, "time")});
  }
  // iterated windows against the direct exit time
  const double a = kTwoLambda;
  const double r = x.r(1.0) * kLambda;
  struct Pair {
    ExitRecord tau;
    double sigma = 0.0;
  };
  auto pairs = x.map<Pair>(n, [&](std::size_t k) {
    return Pair{sample_iterated_excursion(a, r, dt, x.seed(2, 0, k)), sample_exit(a, a - r, dt, x.seed(2, 1, k)).time};
  });
  std::vector<double> tau;
  std::vector<double> sigma;
  std::vector<double> rounds;
  for (const auto& p : pairs) {
    tau.push_back(p.tau.time);
    sigma.push_back(p.sigma);
    const auto k = static_cast<std::size_t>(p.tau.rounds);
    if (rounds.size() < k) rounds.resize(k, 0.0);
    rounds[k - 1] += 1.0;
  }
  const TestReport ks = ks_two_sample(tau, sigma);
  const double q = r / a;
  std::vector<double> expected(rounds.size() + 1);
  std::vector<double> observed = rounds;
  observed.push_back(0.0);
  for (std::size_t k = 0; k < rounds.size(); ++k) expected[k] = static_cast<double>(n) * q * std::pow(1.0 - q, static_cast<double>(k));
  expected.back() = static_cast<double>(n) * std::pow(1.0 - q, static_cast<double>(rounds.size()));
  const TestReport geo = chi_square(observed, expected);
  m["tau_sigma"] = {{"a", a}, {"r", r}, {"ks", to_json(ks)}, {"mean_tau", mean(tau)}, {"mean_sigma", mean(sigma)},
                    {"expected_mean", a * (a - r)}};
  m["rounds"] = {{"counts", rounds}, {"p", q}, {"test", to_json(geo)}};
  x.gate("tau^r_a and sigma_{-a,a-r} equal in law (KS p > 0.01)", ks.p_value > 0.01, m["tau_sigma"]);
  x.gate("rounds ~ Geom(r/a) (chi-square p > 0.01)", geo.p_value > 0.01, m["rounds"]);
  x.rep.tables.push_back({"levy1d_tau.csv", empirical_cdf_csv(tau, "tau")});
  x.rep.tables.push_back({"levy1d_sigma.csv", empirical_cdf_csv(sigma, "sigma")});
  // Levy identity on stored paths, reported only
  const std::size_t np = std::min<std::size_t>(n, 20000);
  struct Lv {
    double refl, absb, inf, lt;
  };
  auto lv = x.map<Lv>(np, [&](std::size_t k) {
    const Path1D p = simulate_bm(1.0, dt, x.seed(3, 0, k));
    const LevyPair l = levy_transform(p);
    return Lv{l.reflected.back(), std::abs(p.values.back()), -l.infimum.back(),
              local_time_estimate(p, p.values.size() - 1, std::sqrt(dt))};
  });
  std::vector<double> refl, absb, inf, lt;
  for (const auto& v : lv) {
    refl.push_back(v.refl);
    absb.push_back(v.absb);
    inf.push_back(v.inf);
    lt.push_back(v.lt);
  }
  m["levy_identity"] = {{"paths", np}, {"reflected_vs_abs", to_json(ks_two_sample(refl, absb))},
                        {"infimum_vs_local_time", to_json(ks_two_sample(inf, lt))},
                        {"mean_minus_infimum", mean(inf)}, {"mean_local_time_estimate", mean(lt)},
                        {"expected_mean", std::sqrt(2.0 / kPi)}};
  x.rep.metrics = m;
}

// ---------------------------------------------------------------- local-finiteness

void run_local_finiteness(Ctx& x) {
  const auto radii = x.radii({64, 128, 256});
  const int reps = x.replicas(20);
  const auto cases = x.cases({{"cle4", 2, 2}});
  const std::vector<double> eps = {0.5, 0.25, 0.1};
  Table table({"case", "radius", "replica", "eps", "count"});
  Json m = Json::object();
  for (std::size_t ci = 0; ci < cases.size(); ++ci) {
    const Case& c = cases[ci];
    std::vector<std::vector<std::vector<double>>> counts(eps.size(), std::vector<std::vector<double>>(radii.size()));
    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
      const int R = radii[ri];
      const DomainPtr dom = x.domain(R);
      auto outs = x.map<std::vector<std::size_t>>(static_cast<std::size_t>(reps), [&](std::size_t k) {
        const Draw d = make_draw(dom, x.seed(R, k));
        return local_finiteness_census(extract_loops(tvs_of(d, c.abs_a(), c.abs_b()), false), eps);
      });
      for (std::size_t k = 0; k < outs.size(); ++k) {
        for (std::size_t e = 0; e < eps.size(); ++e) {
          counts[e][ri].push_back(static_cast<double>(outs[k][e]));
          table.add({c.name, std::to_string(R), std::to_string(k), num(eps[e]), std::to_string(outs[k][e])});
        }
      }
    }
    Json j;
    j["case"] = case_json(c);
    for (std::size_t e = 0; e < eps.size(); ++e) {
      std::vector<double> means;
      for (const auto& v : counts[e]) means.push_back(mean(v));
      j["eps_" + num(eps[e])] = {{"radii", radii}, {"mean_count", means}};
    }
    // eps = 0.1: the count may not move by more than 50% per doubling
    const auto& tenth = counts.back();
    bool stable = true;
    Json ratios = Json::array();
    for (std::size_t ri = 1; ri < radii.size(); ++ri) {
      const double prev = mean(tenth[ri - 1]);
      const double ratio = prev > 0.0 ? mean(tenth[ri]) / prev : 0.0;
      ratios.push_back(ratio);
      stable = stable && ratio >= 0.5 && ratio <= 1.5;
    }
    j["eps_0.1_ratios"] = ratios;
    m[c.name] = j;
    x.gate(c.name + ": loops with diameter > R/10 stable within 50% per doubling", stable, j);
  }
  x.rep.tables.push_back({"local_finiteness.csv", table.text()});
  x.rep.metrics = m;
}

// ---------------------------------------------------------------- below-threshold

void run_below_threshold(Ctx& x) {
  const auto radii = x.radii({64, 128, 256});
  const int reps = x.replicas(20);
  const Case c = x.cases({{"subcritical", 0.75, 0.75}}).front();
  std::vector<std::vector<double>> vol(radii.size());
  Table table({"radius", "replica", "cluster", "interior", "volume_fraction"});
  for (std::size_t ri = 0; ri < radii.size(); ++ri) {
    const int R = radii[ri];
    const DomainPtr dom = x.domain(R);
    auto outs = x.map<std::size_t>(static_cast<std::size_t>(reps), [&](std::size_t k) {
      const Draw d = make_draw(dom, x.seed(R, k));
      return tvs_of(d, c.abs_a(), c.abs_b()).cluster_size();
    });
    for (std::size_t k = 0; k < outs.size(); ++k) {
      const double f = static_cast<double>(outs[k]) / static_cast<double>(dom->interior_count());
      vol[ri].push_back(f);
      table.add({std::to_string(R), std::to_string(k), std::to_string(outs[k]), std::to_string(dom->interior_count()), num(f)});
    }
  }
  x.rep.tables.push_back({"below_threshold.csv", table.text()});
  const TrendReport t = mesh_trend(as_doubles(radii), vol, Direction::kDecreasing);
  bool strict = true;
  for (std::size_t k = 1; k < t.means.size(); ++k) strict = strict && t.means[k] < t.means[k - 1];
  Json m;
  m["case"] = case_json(c);
  m["volume_fraction"] = trend_json(t, radii);
  x.rep.metrics = m;
  x.gate("cluster volume fraction strictly decreasing in radius", strict && t.pass(), m["volume_fraction"]);
}

using Runner = void (*)(Ctx&);

const std::vector<std::pair<std::string, Runner>>& registry() {
  static const std::vector<std::pair<std::string, Runner>> r = {
      {"phases", run_phases},
      {"labels-parity", run_labels_parity},
      {"percolation", run_percolation},
      {"dimension", run_dimension},
      {"br-distance", run_br_distance},
      {"br-law", run_br_law},
      {"geom-label", run_geom_label},
      {"cle4-labels", run_cle4_labels},
      {"levy1d", run_levy1d},
      {"local-finiteness", run_local_finiteness},
      {"below-threshold", run_below_threshold},
  };
  return r;
}

void validate(const ExperimentConfig& cfg) {
  if (!known_experiment(cfg.experiment)) throw InvalidParameter("unknown experiment: " + cfg.experiment);
  for (int R : cfg.radii) {
    if (R < 2) throw InvalidParameter("radius must be >= 2");
  }
  for (std::size_t k = 1; k < cfg.radii.size(); ++k) {
    if (cfg.radii[k] <= cfg.radii[k - 1]) throw InvalidParameter("radii must be strictly increasing");
  }
  for (const auto* v : {&cfg.a, &cfg.b, &cfg.r}) {
    if (*v && !(**v > 0.0 && std::isfinite(**v))) throw InvalidParameter("a, b and r must be positive");
  }
  if (cfg.replicas < 0) throw InvalidParameter("replicas must be >= 0");
  if (cfg.workers < 1) throw InvalidParameter("workers must be >= 1");
  if (!(cfg.dt > 0.0)) throw InvalidParameter("dt must be > 0");
}

Json config_echo(const ExperimentConfig& cfg) {
  Json j;
  j["experiment"] = cfg.experiment;
  j["radii"] = cfg.radii;
  j["a_lambda"] = cfg.a ? Json(*cfg.a) : Json(nullptr);
  j["b_lambda"] = cfg.b ? Json(*cfg.b) : Json(nullptr);
  j["r_lambda"] = cfg.r ? Json(*cfg.r) : Json(nullptr);
  j["replicas"] = cfg.replicas;
  j["seed"] = cfg.seed;
  j["dt"] = cfg.dt;
  j["svg"] = cfg.svg;
  j["lambda"] = kLambda;
  return j;
}

}  // namespace

std::string version_string() { return TVSLAB_VERSION; }

bool ExperimentReport::pass() const {
  return std::all_of(gates.begin(), gates.end(), [](const Gate& g) { return g.pass; });
}

std::vector<std::string> ExperimentReport::failing() const {
  std::vector<std::string> out;
  for (const Gate& g : gates) {
    if (!g.pass) out.push_back(g.name);
  }
  return out;
}

Json ExperimentReport::body() const {
  Json j;
  j["version"] = version_string();
  j["config"] = config;
  j["metrics"] = metrics;
  Json gs = Json::array();
  for (const Gate& g : gates) gs.push_back({{"name", g.name}, {"pass", g.pass}, {"detail", g.detail}});
  j["gates"] = gs;
  j["pass"] = pass();
  return j;
}

Json ExperimentReport::full() const {
  Json j;
  j["body"] = body();
  j["run"] = {{"wall_clock_s", wall_clock_s}, {"workers", workers}};
  return j;
}

const std::vector<std::string>& experiment_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> v;
    for (const auto& [n, f] : registry()) v.push_back(n);
    return v;
  }();
  return names;
}

bool known_experiment(const std::string& name) {
  const auto& v = experiment_names();
  return std::find(v.begin(), v.end(), name) != v.end();
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentReport rep;
  rep.config = config_echo(cfg);
  rep.workers = cfg.workers;
  Ctx ctx(cfg, rep);
  for (const auto& [name, fn] : registry()) {
    if (name == cfg.experiment) fn(ctx);
  }
  rep.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

void write_report(const ExperimentReport& rep, const ExperimentConfig& cfg) {
  if (cfg.out.empty()) return;
  const auto dir = cfg.out / cfg.experiment;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DomainError("cannot create " + dir.string() + ": " + ec.message());
  write_text(dir / "report.json", rep.full().dump(2) + "\n");
  for (const auto& [name, text] : rep.tables) write_text(dir / name, text);
  for (const auto& [name, text] : rep.figures) write_text(dir / name, text);
}

}  // namespace tvslab
