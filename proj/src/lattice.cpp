#include "tvslab/lattice.hpp"

#include <algorithm>
#include <string>

#include "factor_cache.hpp"
#include "tvslab/errors.hpp"

namespace tvslab {

namespace {
constexpr int kDx[4] = {1, 0, -1, 0};
constexpr int kDy[4] = {0, 1, 0, -1};
}  // namespace

LatticeDomain build_disk_domain(int radius_cells) {
  if (radius_cells < 2) {
    throw InvalidParameter("build_disk_domain: radius_cells must be >= 2, got " +
                           std::to_string(radius_cells));
  }
  LatticeDomain d;
  d.radius_ = radius_cells;
  const long long r2 = static_cast<long long>(radius_cells) * radius_cells;
  const int half = radius_cells + 1;
  d.grid_side_ = 2 * half + 1;
  d.grid_.assign(static_cast<std::size_t>(d.grid_side_) * d.grid_side_, -1);
  auto inside = [&](int x, int y) { return static_cast<long long>(x) * x + static_cast<long long>(y) * y <= r2; };
  auto slot = [&](int x, int y) {
    return static_cast<std::size_t>(y + half) * d.grid_side_ + static_cast<std::size_t>(x + half);
  };

  for (int y = -radius_cells; y <= radius_cells; ++y) {
    for (int x = -radius_cells; x <= radius_cells; ++x) {
      if (inside(x, y)) {
        d.grid_[slot(x, y)] = static_cast<VertexId>(d.coords_.size());
        d.coords_.push_back({x, y});
      }
    }
  }
  d.n_interior_ = static_cast<VertexId>(d.coords_.size());

  for (int y = -half; y <= half; ++y) {
    for (int x = -half; x <= half; ++x) {
      if (inside(x, y)) continue;
      bool touches = false;
      for (int k = 0; k < 4; ++k) touches = touches || inside(x + kDx[k], y + kDy[k]);
      if (touches) {
        d.grid_[slot(x, y)] = static_cast<VertexId>(d.coords_.size());
        d.coords_.push_back({x, y});
      }
    }
  }

  const auto n_int = static_cast<std::size_t>(d.n_interior_);
  d.nbr_.assign(n_int * 4, -1);
  d.nbr_edge_.assign(n_int * 4, -1);
  // Edge to E and N created by the owner; W and S reuse the neighbour's edge
  // when that neighbour is interior, else a fresh boundary edge.
  for (VertexId v = 0; v < d.n_interior_; ++v) {
    const Point p = d.coords_[static_cast<std::size_t>(v)];
    for (int k = 0; k < 4; ++k) {
      const VertexId w = d.grid_[slot(p.x + kDx[k], p.y + kDy[k])];
      d.nbr_[static_cast<std::size_t>(v) * 4 + k] = w;
    }
  }
  for (VertexId v = 0; v < d.n_interior_; ++v) {
    for (int k = 0; k < 4; ++k) {
      const VertexId w = d.nbr_[static_cast<std::size_t>(v) * 4 + k];
      auto& slot_e = d.nbr_edge_[static_cast<std::size_t>(v) * 4 + k];
      if (slot_e >= 0) continue;
      const auto e = static_cast<EdgeId>(d.edges_.size());
      d.edges_.push_back({v, w, 1.0});
      slot_e = e;
      if (w < d.n_interior_) d.nbr_edge_[static_cast<std::size_t>(w) * 4 + ((k + 2) % 4)] = e;
    }
  }

  const std::size_t n_bd = d.coords_.size() - n_int;
  std::vector<std::vector<std::pair<VertexId, EdgeId>>> links(n_bd);
  for (EdgeId e = 0; e < static_cast<EdgeId>(d.edges_.size()); ++e) {
    const Edge& ed = d.edges_[static_cast<std::size_t>(e)];
    if (ed.b >= d.n_interior_) links[static_cast<std::size_t>(ed.b - d.n_interior_)].push_back({ed.a, e});
  }
  d.bd_offsets_.assign(n_bd + 1, 0);
  for (std::size_t i = 0; i < n_bd; ++i) {
    d.bd_offsets_[i + 1] = d.bd_offsets_[i] + static_cast<std::uint32_t>(links[i].size());
    d.bd_links_.insert(d.bd_links_.end(), links[i].begin(), links[i].end());
  }
  d.cache_ = std::make_shared<detail::FactorCache>();
  return d;
}

DomainPtr make_disk_domain(int radius_cells) {
  return std::make_shared<const LatticeDomain>(build_disk_domain(radius_cells));
}

std::span<const std::pair<VertexId, EdgeId>> LatticeDomain::boundary_links(VertexId b) const {
  const auto i = static_cast<std::size_t>(b - n_interior_);
  return std::span<const std::pair<VertexId, EdgeId>>(bd_links_).subspan(
      bd_offsets_[i], bd_offsets_[i + 1] - bd_offsets_[i]);
}

VertexId LatticeDomain::find(int x, int y) const {
  const int half = radius_ + 1;
  if (x < -half || x > half || y < -half || y > half) return -1;
  return grid_[static_cast<std::size_t>(y + half) * grid_side_ + static_cast<std::size_t>(x + half)];
}

}  // namespace tvslab
