#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace tvslab {

using VertexId = std::int32_t;
using EdgeId = std::int32_t;

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct Edge {
  VertexId a = 0;  // always an interior vertex
  VertexId b = 0;  // interior or boundary
  double resistance = 1.0;
};

namespace detail {
struct FactorCache;
}

// Lattice disk {x^2 + y^2 <= N^2} plus the ring of outside vertices that are
// 4-adjacent to it. Interior vertices come first (row-major), then the
// boundary ring (row-major). Boundary vertices carry the zero boundary
// condition.
class LatticeDomain {
 public:
  int radius() const { return radius_; }
  VertexId interior_count() const { return n_interior_; }
  VertexId boundary_count() const { return static_cast<VertexId>(coords_.size()) - n_interior_; }
  VertexId vertex_count() const { return static_cast<VertexId>(coords_.size()); }
  EdgeId edge_count() const { return static_cast<EdgeId>(edges_.size()); }

  bool is_interior(VertexId v) const { return v >= 0 && v < n_interior_; }
  bool is_boundary(VertexId v) const { return v >= n_interior_ && v < vertex_count(); }

  const Point& coord(VertexId v) const { return coords_[static_cast<std::size_t>(v)]; }
  std::span<const Point> coords() const { return coords_; }
  std::span<const Edge> edges() const { return edges_; }
  const Edge& edge(EdgeId e) const { return edges_[static_cast<std::size_t>(e)]; }

  // Neighbour k in {E, N, W, S} of an interior vertex, and the joining edge.
  VertexId neighbor(VertexId v, int k) const { return nbr_[static_cast<std::size_t>(v) * 4 + k]; }
  EdgeId incident_edge(VertexId v, int k) const { return nbr_edge_[static_cast<std::size_t>(v) * 4 + k]; }

  // Interior neighbours of a boundary vertex with their edges.
  std::span<const std::pair<VertexId, EdgeId>> boundary_links(VertexId b) const;

  VertexId other_end(EdgeId e, VertexId v) const {
    const Edge& ed = edge(e);
    return ed.a == v ? ed.b : ed.a;
  }

  // -1 when (x, y) is not a vertex of the domain.
  VertexId find(int x, int y) const;
  VertexId center() const { return find(0, 0); }

  detail::FactorCache& cache() const { return *cache_; }

 private:
  friend LatticeDomain build_disk_domain(int radius_cells);

  int radius_ = 0;
  VertexId n_interior_ = 0;
  std::vector<Point> coords_;
  std::vector<Edge> edges_;
  std::vector<VertexId> nbr_;
  std::vector<EdgeId> nbr_edge_;
  std::vector<std::uint32_t> bd_offsets_;
  std::vector<std::pair<VertexId, EdgeId>> bd_links_;
  int grid_side_ = 0;
  std::vector<VertexId> grid_;
  std::shared_ptr<detail::FactorCache> cache_;
};

LatticeDomain build_disk_domain(int radius_cells);

using DomainPtr = std::shared_ptr<const LatticeDomain>;
DomainPtr make_disk_domain(int radius_cells);

}  // namespace tvslab
