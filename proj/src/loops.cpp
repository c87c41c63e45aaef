#include "tvslab/loops.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "tvslab/errors.hpp"

namespace tvslab {

namespace {

constexpr double kLabelTol = 1e-9;

std::uint64_t corner_key(int x2, int y2) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(x2)) << 32) | static_cast<std::uint32_t>(y2);
}

// Outer contour of the union of unit cells centred on the vertices, in
// doubled coordinates, counter-clockwise.
std::vector<std::pair<double, double>> cell_outline(const LatticeDomain& dom, std::span<const VertexId> verts,
                                                    const std::vector<std::int32_t>& owner, std::int32_t id) {
  struct Step {
    int x0, y0, x1, y1;
  };
  std::vector<Step> steps;
  auto inside = [&](VertexId w) { return dom.is_interior(w) && owner[static_cast<std::size_t>(w)] == id; };
  for (VertexId v : verts) {
    const Point p = dom.coord(v);
    const int x = 2 * p.x;
    const int y = 2 * p.y;
    if (!inside(dom.neighbor(v, 0))) steps.push_back({x + 1, y - 1, x + 1, y + 1});
    if (!inside(dom.neighbor(v, 1))) steps.push_back({x + 1, y + 1, x - 1, y + 1});
    if (!inside(dom.neighbor(v, 2))) steps.push_back({x - 1, y + 1, x - 1, y - 1});
    if (!inside(dom.neighbor(v, 3))) steps.push_back({x - 1, y - 1, x + 1, y - 1});
  }
  std::unordered_multimap<std::uint64_t, std::size_t> from;
  from.reserve(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) from.emplace(corner_key(steps[i].x0, steps[i].y0), i);
  std::vector<char> used(steps.size(), 0);
  std::vector<std::pair<int, int>> best;
  long long best_area = 0;
  for (std::size_t s = 0; s < steps.size(); ++s) {
    if (used[s]) continue;
    std::vector<std::pair<int, int>> cyc;
    std::size_t cur = s;
    while (!used[cur]) {
      used[cur] = 1;
      cyc.emplace_back(steps[cur].x0, steps[cur].y0);
      auto range = from.equal_range(corner_key(steps[cur].x1, steps[cur].y1));
      std::size_t next = steps.size();
      for (auto it = range.first; it != range.second; ++it) {
        if (!used[it->second] && (next == steps.size() || it->second < next)) next = it->second;
      }
      if (next == steps.size()) break;
      cur = next;
    }
    long long area = 0;
    for (std::size_t i = 0; i < cyc.size(); ++i) {
      const auto& [xa, ya] = cyc[i];
      const auto& [xb, yb] = cyc[(i + 1) % cyc.size()];
      area += static_cast<long long>(xa) * yb - static_cast<long long>(xb) * ya;
    }
    if (area > best_area) {
      best_area = area;
      best = std::move(cyc);
    }
  }
  // drop collinear corners
  std::vector<std::pair<double, double>> out;
  const std::size_t n = best.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& p = best[(i + n - 1) % n];
    const auto& q = best[i];
    const auto& r = best[(i + 1) % n];
    const long long cross = static_cast<long long>(q.first - p.first) * (r.second - q.second) -
                            static_cast<long long>(q.second - p.second) * (r.first - q.first);
    if (cross != 0) out.emplace_back(0.5 * q.first, 0.5 * q.second);
  }
  return out;
}

struct Dsu {
  std::vector<std::int32_t> parent;
  explicit Dsu(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  std::int32_t find(std::int32_t x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  }
  void unite(std::int32_t a, std::int32_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

// Components of a loop graph with all boundary-touching loops merged.
std::vector<std::int32_t> merged_components(const LoopGraph& lg, bool side) {
  const std::size_t n = lg.loops.size();
  Dsu d(n + 1);
  const auto root = static_cast<std::int32_t>(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (lg.loops[i].touches_boundary) d.unite(static_cast<std::int32_t>(i), root);
  }
  for (const auto& [i, j] : side ? lg.side_edges : lg.point_edges) d.unite(i, j);
  std::vector<std::int32_t> comp(n);
  for (std::size_t i = 0; i < n; ++i) comp[i] = d.find(static_cast<std::int32_t>(i));
  return comp;
}

std::vector<int> bfs_from_boundary(const LoopGraph& lg, bool side) {
  const auto adj = lg.adjacency(side);
  std::vector<int> dist(lg.loops.size(), kUnreachable);
  std::vector<std::int32_t> queue;
  for (std::size_t i = 0; i < lg.loops.size(); ++i) {
    if (lg.loops[i].touches_boundary) {
      dist[i] = 1;
      queue.push_back(static_cast<std::int32_t>(i));
    }
  }
  for (std::size_t h = 0; h < queue.size(); ++h) {
    const auto u = static_cast<std::size_t>(queue[h]);
    for (std::int32_t w : adj[u]) {
      if (dist[static_cast<std::size_t>(w)] != kUnreachable) continue;
      dist[static_cast<std::size_t>(w)] = dist[u] + 1;
      queue.push_back(w);
    }
  }
  return dist;
}

double angle_of(const Point& p) {
  double t = std::atan2(static_cast<double>(p.y), static_cast<double>(p.x));
  if (t < 0.0) t += 2.0 * std::numbers::pi;
  return t;
}

double wrap(double t) {
  t = std::fmod(t, 2.0 * std::numbers::pi);
  return t < 0.0 ? t + 2.0 * std::numbers::pi : t;
}

}  // namespace

std::vector<std::vector<std::int32_t>> LoopGraph::adjacency(bool side) const {
  std::vector<std::vector<std::int32_t>> adj(loops.size());
  for (const auto& [i, j] : side ? side_edges : point_edges) {
    adj[static_cast<std::size_t>(i)].push_back(j);
    adj[static_cast<std::size_t>(j)].push_back(i);
  }
  return adj;
}

LoopGraph extract_loops(const TwoValuedSet& tvs, bool outlines) {
  LoopGraph lg;
  lg.domain = tvs.domain;
  lg.a = tvs.a;
  lg.b = tvs.b;
  const LatticeDomain& dom = *tvs.domain;
  lg.loops.reserve(tvs.components.size());
  for (std::size_t i = 0; i < tvs.components.size(); ++i) {
    const Component& c = tvs.components[i];
    Loop l;
    l.component = static_cast<std::int32_t>(i);
    l.label = c.label;
    l.mixed = c.mixed;
    for (const Entry& en : c.entries) {
      l.frontier.push_back(en.outer);
      l.cut_edges.push_back(en.edge);
      if (dom.is_boundary(en.outer)) l.touches_boundary = true;
    }
    std::sort(l.frontier.begin(), l.frontier.end());
    l.frontier.erase(std::unique(l.frontier.begin(), l.frontier.end()), l.frontier.end());
    std::sort(l.cut_edges.begin(), l.cut_edges.end());
    l.cut_edges.erase(std::unique(l.cut_edges.begin(), l.cut_edges.end()), l.cut_edges.end());
    int x0 = std::numeric_limits<int>::max(), x1 = std::numeric_limits<int>::min();
    int y0 = x0, y1 = x1;
    auto extend = [&](VertexId v) {
      const Point& p = dom.coord(v);
      x0 = std::min(x0, p.x);
      x1 = std::max(x1, p.x);
      y0 = std::min(y0, p.y);
      y1 = std::max(y1, p.y);
    };
    for (VertexId v : c.vertices) extend(v);
    for (VertexId v : l.frontier) extend(v);
    l.diameter = c.vertices.empty() ? 0 : std::max(x1 - x0, y1 - y0);
    if (outlines) l.outline = cell_outline(dom, c.vertices, tvs.component_of, static_cast<std::int32_t>(i));
    lg.loops.push_back(std::move(l));
  }
  return lg;
}

LoopGraph build_adjacency(LoopGraph lg, int min_side_len) {
  if (min_side_len < 2) throw InvalidParameter("build_adjacency: min_side_len must be >= 2");
  lg.min_side_len = min_side_len;
  lg.side_edges.clear();
  lg.point_edges.clear();
  const LatticeDomain& dom = *lg.domain;
  std::unordered_map<VertexId, std::vector<std::int32_t>> touching;
  for (std::size_t i = 0; i < lg.loops.size(); ++i) {
    for (VertexId v : lg.loops[i].frontier) {
      if (dom.is_interior(v)) touching[v].push_back(static_cast<std::int32_t>(i));
    }
  }
  std::map<std::pair<std::int32_t, std::int32_t>, std::vector<VertexId>> shared;
  for (const auto& [v, ls] : touching) {
    for (std::size_t p = 0; p < ls.size(); ++p) {
      for (std::size_t q = p + 1; q < ls.size(); ++q) {
        shared[{std::min(ls[p], ls[q]), std::max(ls[p], ls[q])}].push_back(v);
      }
    }
  }
  for (auto& [pair, verts] : shared) {
    lg.point_edges.push_back(pair);
    if (static_cast<int>(verts.size()) < min_side_len) continue;
    std::unordered_set<VertexId> set(verts.begin(), verts.end());
    std::unordered_set<VertexId> seen;
    int longest = 0;
    for (VertexId s : verts) {
      if (seen.count(s)) continue;
      int size = 0;
      std::vector<VertexId> stack{s};
      seen.insert(s);
      while (!stack.empty()) {
        const VertexId v = stack.back();
        stack.pop_back();
        ++size;
        for (int k = 0; k < 4; ++k) {
          const VertexId w = dom.neighbor(v, k);
          if (set.count(w) && !seen.count(w)) {
            seen.insert(w);
            stack.push_back(w);
          }
        }
      }
      longest = std::max(longest, size);
    }
    if (longest >= min_side_len) lg.side_edges.push_back(pair);
  }
  return lg;
}

LoopGraph restrict_loops(const LoopGraph& lg, int min_diameter) {
  LoopGraph out;
  out.domain = lg.domain;
  out.a = lg.a;
  out.b = lg.b;
  out.min_side_len = lg.min_side_len;
  std::vector<std::int32_t> index(lg.loops.size(), -1);
  for (std::size_t i = 0; i < lg.loops.size(); ++i) {
    if (lg.loops[i].diameter < min_diameter) continue;
    index[i] = static_cast<std::int32_t>(out.loops.size());
    out.loops.push_back(lg.loops[i]);
  }
  auto carry = [&](const auto& edges, auto& into) {
    for (const auto& [i, j] : edges) {
      const auto x = index[static_cast<std::size_t>(i)];
      const auto y = index[static_cast<std::size_t>(j)];
      if (x >= 0 && y >= 0) into.emplace_back(x, y);
    }
  };
  carry(lg.side_edges, out.side_edges);
  carry(lg.point_edges, out.point_edges);
  return out;
}

DistanceProfile distance_profile(const LoopGraph& lg) {
  return {bfs_from_boundary(lg, false), bfs_from_boundary(lg, true)};
}

ConnectivityReport connectivity_report(const LoopGraph& lg) {
  ConnectivityReport r;
  r.loops = lg.loops.size();
  r.side_edges = lg.side_edges.size();
  r.point_edges = lg.point_edges.size();
  if (r.loops == 0) return r;
  auto count = [](const std::vector<std::int32_t>& comp, std::size_t* giant) {
    std::unordered_map<std::int32_t, std::size_t> sizes;
    for (std::int32_t c : comp) ++sizes[c];
    std::size_t g = 0;
    for (const auto& [c, s] : sizes) g = std::max(g, s);
    if (giant) *giant = g;
    return sizes.size();
  };
  std::size_t giant = 0;
  r.components_gs = count(merged_components(lg, true), nullptr);
  r.components_gp = count(merged_components(lg, false), &giant);
  const auto n = static_cast<double>(r.loops);
  r.side_density = static_cast<double>(r.side_edges) / n;
  r.point_density = static_cast<double>(r.point_edges) / n;
  r.point_only_share =
      r.point_edges == 0 ? 0.0 : static_cast<double>(r.point_edges - r.side_edges) / static_cast<double>(r.point_edges);
  r.giant_gp_share = static_cast<double>(giant) / n;
  for (const auto& [i, j] : lg.point_edges) {
    const Loop& x = lg.loops[static_cast<std::size_t>(i)];
    const Loop& y = lg.loops[static_cast<std::size_t>(j)];
    if (!x.mixed && !y.mixed && std::abs(x.label - y.label) <= kLabelTol) ++r.bipartite_violations;
  }
  return r;
}

ParityRecovery recover_labels_by_parity(const LoopGraph& lg, double a, double b,
                                        std::optional<std::pair<std::int32_t, double>> anchor) {
  if (std::abs(a - b) <= kLabelTol && !anchor) {
    throw InvalidParameter("recover_labels_by_parity: a == b needs an anchor loop label");
  }
  const std::size_t n = lg.loops.size();
  ParityRecovery out;
  out.labels.assign(n, std::nullopt);
  if (n == 0) return out;
  const auto adj = lg.adjacency(false);
  std::vector<std::int32_t> queue;
  if (anchor) {
    if (anchor->first < 0 || static_cast<std::size_t>(anchor->first) >= n) {
      throw InvalidParameter("recover_labels_by_parity: anchor loop out of range");
    }
    out.labels[static_cast<std::size_t>(anchor->first)] = anchor->second;
    queue.push_back(anchor->first);
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      if (lg.loops[i].touches_boundary) {
        out.labels[i] = -a;
        queue.push_back(static_cast<std::int32_t>(i));
      }
    }
  }
  // BFS depth fixes the parity, so the result does not depend on visit order.
  for (std::size_t h = 0; h < queue.size(); ++h) {
    const auto u = static_cast<std::size_t>(queue[h]);
    const double flipped = std::abs(*out.labels[u] + a) <= kLabelTol ? b : -a;
    for (std::int32_t w : adj[u]) {
      if (out.labels[static_cast<std::size_t>(w)]) continue;
      out.labels[static_cast<std::size_t>(w)] = flipped;
      queue.push_back(w);
    }
  }
  out.reached = queue.size();
  out.coverage = static_cast<double>(out.reached) / static_cast<double>(n);
  std::size_t checked = 0;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!out.labels[i] || lg.loops[i].mixed) continue;
    ++checked;
    agree += std::abs(*out.labels[i] - lg.loops[i].label) <= kLabelTol;
  }
  out.agreement = checked == 0 ? 1.0 : static_cast<double>(agree) / static_cast<double>(checked);
  return out;
}

std::vector<VertexId> arc_vertices(const LatticeDomain& dom, const BoundaryArc& arc) {
  std::vector<VertexId> out;
  const double span = wrap(arc.theta1 - arc.theta0);
  if (span == 0.0) {
    VertexId best = -1;
    double best_d = 1e9;
    for (VertexId v = dom.interior_count(); v < dom.vertex_count(); ++v) {
      const double d = std::abs(wrap(angle_of(dom.coord(v)) - arc.theta0 + std::numbers::pi) - std::numbers::pi);
      if (d < best_d) {
        best_d = d;
        best = v;
      }
    }
    out.push_back(best);
    return out;
  }
  for (VertexId v = dom.interior_count(); v < dom.vertex_count(); ++v) {
    if (wrap(angle_of(dom.coord(v)) - arc.theta0) <= span) out.push_back(v);
  }
  return out;
}

bool percolation_probe(const DomainPtr& domain, std::span<const std::uint8_t> open_edge, const BoundaryArc& arc1,
                       const BoundaryArc& arc2) {
  const LatticeDomain& dom = *domain;
  if (open_edge.size() != static_cast<std::size_t>(dom.edge_count())) {
    throw ContractViolation("percolation_probe: open-edge flags do not match the domain");
  }
  const auto s1 = arc_vertices(dom, arc1);
  const auto s2 = arc_vertices(dom, arc2);
  std::vector<std::uint8_t> target(static_cast<std::size_t>(dom.vertex_count()), 0);
  for (VertexId v : s2) target[static_cast<std::size_t>(v)] = 1;
  for (VertexId v : s1) {
    if (target[static_cast<std::size_t>(v)]) throw InvalidParameter("percolation_probe: arcs overlap");
  }
  std::vector<std::uint8_t> seen(static_cast<std::size_t>(dom.vertex_count()), 0);
  std::vector<VertexId> queue;
  for (VertexId v : s1) {
    seen[static_cast<std::size_t>(v)] = 1;
    queue.push_back(v);
  }
  auto visit = [&](VertexId w, EdgeId e) {
    if (!open_edge[static_cast<std::size_t>(e)] || seen[static_cast<std::size_t>(w)]) return false;
    if (dom.is_boundary(w)) {
      if (target[static_cast<std::size_t>(w)]) return true;
      return false;  // the path may not run along the rest of the boundary
    }
    seen[static_cast<std::size_t>(w)] = 1;
    queue.push_back(w);
    return false;
  };
  for (std::size_t h = 0; h < queue.size(); ++h) {
    const VertexId v = queue[h];
    if (dom.is_boundary(v)) {
      for (const auto& [w, e] : dom.boundary_links(v)) {
        if (visit(w, e)) return true;
      }
      continue;
    }
    for (int k = 0; k < 4; ++k) {
      if (visit(dom.neighbor(v, k), dom.incident_edge(v, k))) return true;
    }
  }
  return false;
}

bool percolation_probe(const TwoValuedSet& tvs, const BoundaryArc& arc1, const BoundaryArc& arc2) {
  return percolation_probe(tvs.domain, tvs.open_edge, arc1, arc2);
}

std::vector<std::size_t> local_finiteness_census(const LoopGraph& lg, std::span<const double> eps_fractions) {
  std::vector<std::size_t> out;
  const double radius = lg.domain->radius();
  for (double eps : eps_fractions) {
    if (!(eps > 0.0)) throw InvalidParameter("local_finiteness_census: eps must be > 0");
    out.push_back(static_cast<std::size_t>(std::count_if(lg.loops.begin(), lg.loops.end(), [&](const Loop& l) {
      return static_cast<double>(l.diameter) > eps * radius;
    })));
  }
  return out;
}

}  // namespace tvslab
