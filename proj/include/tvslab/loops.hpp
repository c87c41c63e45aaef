#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "tvslab/lattice.hpp"
#include "tvslab/tvs.hpp"

namespace tvslab {

struct Loop {
  std::int32_t component = -1;
  std::vector<VertexId> frontier;  // sorted cluster/boundary vertices next to the component
  std::vector<EdgeId> cut_edges;
  double label = 0.0;
  bool mixed = false;
  bool touches_boundary = false;
  int diameter = 0;  // max-metric extent of the component's vertices and frontier
  std::vector<std::pair<double, double>> outline;  // outer contour of the component cells
};

struct LoopGraph {
  DomainPtr domain;
  double a = 0.0;
  double b = 0.0;
  std::vector<Loop> loops;
  int min_side_len = 2;
  std::vector<std::pair<std::int32_t, std::int32_t>> side_edges;   // E_s, i < j, sorted
  std::vector<std::pair<std::int32_t, std::int32_t>> point_edges;  // E_p, i < j, sorted

  std::vector<std::vector<std::int32_t>> adjacency(bool side) const;
};

// Outlines are only traced when asked for (rendering).
LoopGraph extract_loops(const TwoValuedSet& tvs, bool outlines = true);

// Fills E_s and E_p. A side contact is a 4-connected run of at least
// min_side_len shared frontier vertices.
LoopGraph build_adjacency(LoopGraph lg, int min_side_len = 2);

// Sub-graph of the loops whose diameter is at least min_diameter lattice
// units; edges between kept loops are carried over with new indices.
LoopGraph restrict_loops(const LoopGraph& lg, int min_diameter);

inline constexpr int kUnreachable = std::numeric_limits<int>::max();

struct DistanceProfile {
  std::vector<int> d_p;  // 1 + G_p distance to a boundary-touching loop
  std::vector<int> d_s;
};
DistanceProfile distance_profile(const LoopGraph& lg);

struct ConnectivityReport {
  std::size_t loops = 0;
  std::size_t side_edges = 0;
  std::size_t point_edges = 0;
  std::size_t components_gs = 0;  // boundary-touching loops merged into one node
  std::size_t components_gp = 0;
  double side_density = 0.0;      // |E_s| / loops
  double point_density = 0.0;     // |E_p| / loops
  double point_only_share = 0.0;  // |E_p \ E_s| / |E_p|, 0 when E_p is empty
  double giant_gp_share = 0.0;    // loops in the largest G_p component
  std::size_t bipartite_violations = 0;  // E_p edges joining unmixed loops of equal label
};
ConnectivityReport connectivity_report(const LoopGraph& lg);

struct ParityRecovery {
  std::vector<std::optional<double>> labels;
  double coverage = 0.0;   // share of loops that received a label
  double agreement = 1.0;  // among reached unmixed loops, share matching the true label
  std::size_t reached = 0;
};

// Labels propagated by parity along G_p from the boundary-touching loops
// (seeded -a), or from an anchor loop with a given label. With a == b an
// anchor is required.
ParityRecovery recover_labels_by_parity(const LoopGraph& lg, double a, double b,
                                        std::optional<std::pair<std::int32_t, double>> anchor = std::nullopt);

struct BoundaryArc {
  double theta0 = 0.0;  // radians, counter-clockwise from theta0 to theta1
  double theta1 = 0.0;
};

// Boundary ring vertices whose angle lies on the arc; a zero-length arc picks
// the single nearest boundary vertex.
std::vector<VertexId> arc_vertices(const LatticeDomain& dom, const BoundaryArc& arc);

// True iff the arcs are joined by a path of open cluster edges that meets the
// boundary only on the two arcs.
bool percolation_probe(const TwoValuedSet& tvs, const BoundaryArc& arc1, const BoundaryArc& arc2);
bool percolation_probe(const DomainPtr& domain, std::span<const std::uint8_t> open_edge,
                       const BoundaryArc& arc1, const BoundaryArc& arc2);

// Loops with diameter > eps * radius, one count per eps.
std::vector<std::size_t> local_finiteness_census(const LoopGraph& lg, std::span<const double> eps_fractions);

}  // namespace tvslab
