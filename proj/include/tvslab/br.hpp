#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "tvslab/constants.hpp"
#include "tvslab/loops.hpp"
#include "tvslab/stats.hpp"
#include "tvslab/tvs.hpp"

namespace tvslab {

inline constexpr int kDefaultStageCap = 64;

// 2 lambda - k r, the only label a component closed at stage k can carry.
inline double br_label(double r, int k) { return kTwoLambda - static_cast<double>(k) * r; }

struct BrSet {
  double r = 0.0;
  int stage_cap = kDefaultStageCap;
  // a = 2 lambda, b = 2 lambda - r; component labels are 2 lambda - k r with
  // k = Component::stage, truncated components keep the level -cap r.
  TwoValuedSet set;
  std::vector<std::size_t> cluster_after_stage;  // cumulative cluster size
  int stages_used = 0;
};

BrSet construct_br(const FieldSample& sample, std::shared_ptr<const EdgeBridges> bridges, double r,
                   int stage_cap = kDefaultStageCap);

// Components whose label differs from 2 lambda - r d_p; truncated loops are
// skipped, mixed ones too unless include_mixed.
struct LabelDistanceCheck {
  std::size_t violations = 0;
  std::size_t checked = 0;
  double fraction() const { return checked == 0 ? 0.0 : static_cast<double>(violations) / static_cast<double>(checked); }
};
LabelDistanceCheck verify_label_distance(const BrSet& br, const LoopGraph& lg, const DistanceProfile& profile,
                                         bool include_mixed = false);

// Summaries compared between ensembles.
struct SetSummary {
  double component_count = 0.0;
  double largest_fraction = 0.0;  // largest component / interior vertices
  double volume_fraction = 0.0;   // cluster / interior vertices
};
SetSummary summarize(const TwoValuedSet& t);

struct LawMatch {
  TestReport component_count;
  TestReport largest_fraction;
  TestReport volume_fraction;
  double min_p() const;
};
LawMatch br_law_match(std::span<const SetSummary> br_batch, std::span<const SetSummary> tvs_batch);

// Share of B_r cluster vertices that also lie in B_{r/2} on the same draws.
struct Inclusion {
  std::size_t small = 0;
  std::size_t contained = 0;
  double fraction() const { return small == 0 ? 1.0 : static_cast<double>(contained) / static_cast<double>(small); }
};
Inclusion br_inclusion(const BrSet& small, const BrSet& big);
Inclusion br_monotonicity(const FieldSample& sample, std::shared_ptr<const EdgeBridges> bridges, double r);

// Center-component labels along a dyadic r sequence.
struct LabelTrajectory {
  std::vector<double> r;
  std::vector<std::optional<double>> label;  // empty when the center is in the cluster
  std::vector<int> stage;
  std::vector<double> differences;           // |label_j - label_{j-1}| where both exist
};
LabelTrajectory b0_limit_labels(const FieldSample& sample, std::shared_ptr<const EdgeBridges> bridges,
                                std::span<const double> r_sequence);

struct Cle4LabelTests {
  TestReport fairness;      // center labels against p(-a) = 1/2
  TestReport independence;  // center label vs nearest macroscopic loop label
  std::size_t labelled = 0;
  std::size_t pairs = 0;
  double p_minus = 0.0;
};
// Center component label and the label of the nearest other unmixed loop of
// diameter >= min_diameter; one record per sample.
struct CenterLabels {
  bool center_in_cluster = false;
  bool center_mixed = false;
  std::optional<bool> center_minus;
  std::optional<bool> near_minus;
};
CenterLabels center_labels(const TwoValuedSet& t, int min_diameter);
Cle4LabelTests cle4_label_tests(std::span<const CenterLabels> obs);
Cle4LabelTests cle4_label_tests(std::span<const TwoValuedSet> batch, int min_diameter);
LabelFrequency label_frequency(std::span<const CenterLabels> obs, double level = 0.99);

// Share of unmixed boundary-touching loops labelled -a.
struct BoundaryLabelShare {
  std::size_t loops = 0;
  std::size_t minus = 0;
  double share() const { return loops == 0 ? 1.0 : static_cast<double>(minus) / static_cast<double>(loops); }
};
BoundaryLabelShare boundary_label_share(const LoopGraph& lg);

}  // namespace tvslab
