#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "tvslab/lattice.hpp"

namespace tvslab {

enum class SamplingMethod { kAuto, kDirect, kIterative };

std::string to_string(SamplingMethod m);

// Radius above which kAuto switches to the conjugate-direction sampler.
inline constexpr int kDirectSamplingMaxRadius = 256;
inline constexpr double kIterativeTolerance = 1e-10;

struct FieldSample {
  DomainPtr domain;
  std::vector<double> values;  // one per vertex, absolute field units
  std::uint64_t seed = 0;
  SamplingMethod method = SamplingMethod::kDirect;

  double operator[](VertexId v) const { return values[static_cast<std::size_t>(v)]; }
};

// Discrete GFF with covariance (-Delta)^{-1}, zero on the boundary ring.
FieldSample sample_dgff(const DomainPtr& domain, std::uint64_t seed,
                        SamplingMethod method = SamplingMethod::kAuto);

// Entry of (-Delta)^{-1} with zero boundary condition.
double green_function(const LatticeDomain& domain, VertexId x, VertexId y);

// Column G(., y) over interior vertices.
std::vector<double> green_column(const LatticeDomain& domain, VertexId y);

// Discrete-harmonic extension into `region` (interior vertices) from values
// on the region's outer vertex boundary.
std::map<VertexId, double> harmonic_extension(const LatticeDomain& domain,
                                              std::span<const VertexId> region,
                                              const std::map<VertexId, double>& boundary_values);

// Markov resampling: outside `region` the sample is kept; inside it is the
// harmonic extension of the outside values plus an independent
// zero-boundary field of the region.
FieldSample conditional_resample(const FieldSample& sample, std::span<const VertexId> region,
                                 std::uint64_t seed);

}  // namespace tvslab
