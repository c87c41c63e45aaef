#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "tvslab/bridge.hpp"
#include "tvslab/field.hpp"
#include "tvslab/lattice.hpp"

namespace tvslab {

// A path piece entering a region: the rest of `edge` after its last frontier
// point, running from `outer` (a cluster vertex) to `inner`.
struct Entry {
  EdgeId edge = -1;
  VertexId outer = -1;
  VertexId inner = -1;
  double start = 0.0;     // field value where the piece starts
  double duration = 1.0;  // bridge time left on the edge
  std::uint16_t depth = 0;
  double level = 0.0;  // frontier level seen by the region
};

struct Region {
  std::vector<VertexId> vertices;
  std::vector<Entry> entries;
};

// A component is flagged mixed when the minority crossing level accounts for
// more than this share of its cut edges.
inline constexpr double kMixedShare = 0.2;

struct Component {
  std::vector<VertexId> vertices;
  std::vector<Entry> entries;  // surrounding cut edges
  int lower_cuts = 0;          // entries at level -a
  int upper_cuts = 0;          // entries at level b
  int other_cuts = 0;
  double label = 0.0;
  bool mixed = false;
  int stage = 1;  // construction round that closed the component
  bool truncated = false;
};

struct TwoValuedSet {
  double a = 0.0;
  double b = 0.0;
  DomainPtr domain;
  std::vector<std::uint8_t> in_cluster;      // per interior vertex
  std::vector<std::int32_t> component_of;    // per interior vertex, -1 in cluster
  std::vector<std::uint16_t> stage_of;       // round that added a cluster vertex
  std::vector<std::uint8_t> open_edge;       // per edge: cluster path runs along it
  std::vector<Component> components;
  bool subcritical = false;                  // a + b < 2 lambda

  std::size_t cluster_size() const;
  std::vector<EdgeId> cut_edges() const;
  std::size_t mixed_count() const;
  // Component containing v, or nullptr when v is in the cluster.
  const Component* component_at(VertexId v) const;
};

struct FirstPassageSet {
  double a = 0.0;
  DomainPtr domain;
  std::vector<std::uint8_t> in_cluster;
  std::vector<std::uint8_t> open_edge;
  std::vector<std::int32_t> component_of;
  std::vector<Component> components;
};

// Explores corridor clusters inside regions of one metric-graph sample.
class CorridorExplorer {
 public:
  explicit CorridorExplorer(std::shared_ptr<const EdgeBridges> bridges);

  const EdgeBridges& bridges() const { return *bridges_; }
  const LatticeDomain& domain() const { return *bridges_->sample().domain; }

  // All interior vertices, entered from the boundary ring.
  Region root() const;

  struct Stage {
    std::vector<VertexId> cluster;
    std::vector<EdgeId> open_edges;  // entries and edges the cluster grew along
    std::vector<Region> parts;  // entries carry the frontier level of each cut
  };
  // Cluster of points reachable from the region's entries while the field
  // stays in [lower, upper], and the complementary parts.
  Stage explore(const Region& region, double lower, double upper);

 private:
  bool entry_stays(const Entry& en, double lower, double upper) const;
  Entry advance(const Entry& en, double lower, double upper) const;
  Entry cut_entry(EdgeId e, VertexId from, VertexId to, double lower, double upper) const;

  std::shared_ptr<const EdgeBridges> bridges_;
  std::uint64_t remainder_seed_;
  std::vector<std::uint32_t> region_mark_;
  std::vector<std::uint32_t> cluster_mark_;
  std::vector<std::int32_t> part_of_;
  std::uint32_t token_ = 0;
};

// Labels a part by the majority of its frontier levels relative to
// {lower, upper}.
Component make_component(Region&& part, double lower, double upper);

TwoValuedSet extract_tvs(const FieldSample& sample, const EdgeMarks& marks, double a, double b);
FirstPassageSet extract_fps(const FieldSample& sample, const EdgeMarks& marks_one_sided, double a);
FirstPassageSet extract_fps(const FieldSample& sample, std::shared_ptr<const EdgeBridges> bridges,
                            double a);

struct LabelFrequency {
  double p_minus = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::size_t minus = 0;
  std::size_t n = 0;              // samples with a labelled, unmixed center component
  std::size_t center_in_cluster = 0;
  std::size_t center_mixed = 0;
};

// Frequency of label -a for the component containing the domain center.
LabelFrequency component_label_frequency(std::span<const TwoValuedSet> batch, double level = 0.99);

// Iterated exploration following the nested-TVS schedule; stage_of records
// the round in which each cluster vertex was added.
TwoValuedSet iterated_construction(const FieldSample& sample,
                                   std::shared_ptr<const EdgeBridges> bridges, double a, double b,
                                   int max_rounds = 256);

bool monotonicity_check(const TwoValuedSet& small, const TwoValuedSet& big);

}  // namespace tvslab
