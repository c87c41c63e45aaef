#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "doctest.h"
#include "tvslab/tvs.hpp"

namespace tvslab::testing {

// Hand-built set: the listed cells form components with the given labels,
// every other interior vertex is in the cluster, all edges between cluster
// vertices are open.
inline TwoValuedSet fixture(int radius, const std::vector<std::pair<std::vector<Point>, double>>& comps, double a, double b) {
  TwoValuedSet t;
  t.a = a;
  t.b = b;
  t.domain = make_disk_domain(radius);
  const LatticeDomain& dom = *t.domain;
  const auto n = static_cast<std::size_t>(dom.interior_count());
  t.in_cluster.assign(n, 1);
  t.component_of.assign(n, -1);
  t.stage_of.assign(n, 1);
  for (std::size_t c = 0; c < comps.size(); ++c) {
    Component comp;
    comp.label = comps[c].second;
    for (const Point& p : comps[c].first) {
      const VertexId v = dom.find(p.x, p.y);
      REQUIRE(dom.is_interior(v));
      comp.vertices.push_back(v);
      t.in_cluster[static_cast<std::size_t>(v)] = 0;
      t.component_of[static_cast<std::size_t>(v)] = static_cast<std::int32_t>(c);
    }
    t.components.push_back(comp);
  }
  for (std::size_t c = 0; c < t.components.size(); ++c) {
    Component& comp = t.components[c];
    for (VertexId v : comp.vertices) {
      for (int k = 0; k < 4; ++k) {
        const VertexId w = dom.neighbor(v, k);
        if (dom.is_interior(w) && t.component_of[static_cast<std::size_t>(w)] == static_cast<std::int32_t>(c)) continue;
        Entry e;
        e.edge = dom.incident_edge(v, k);
        e.outer = w;
        e.inner = v;
        e.level = comp.label;
        comp.entries.push_back(e);
        (std::abs(comp.label + a) < 1e-12 ? comp.lower_cuts : comp.upper_cuts)++;
      }
    }
  }
  t.open_edge.assign(static_cast<std::size_t>(dom.edge_count()), 0);
  for (EdgeId e = 0; e < dom.edge_count(); ++e) {
    const Edge& ed = dom.edge(e);
    const bool ia = t.in_cluster[static_cast<std::size_t>(ed.a)];
    const bool ib = dom.is_boundary(ed.b) || t.in_cluster[static_cast<std::size_t>(ed.b)];
    t.open_edge[static_cast<std::size_t>(e)] = ia && ib;
  }
  return t;
}

inline std::vector<Point> rect(int x0, int x1, int y0, int y1) {
  std::vector<Point> out;
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) out.push_back({x, y});
  return out;
}

}  // namespace tvslab::testing
