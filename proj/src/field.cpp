#include "tvslab/field.hpp"

#include <cmath>
#include <string>
#include <unordered_map>

#include <Eigen/Dense>

#include "factor_cache.hpp"
#include "tvslab/errors.hpp"
#include "tvslab/rng.hpp"

namespace tvslab {

namespace detail {

const SparseMatrix& precision(const LatticeDomain& domain) {
  auto& c = domain.cache();
  std::call_once(c.precision_once, [&] {
    const auto n = domain.interior_count();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(n) * 5);
    std::vector<double> diag(static_cast<std::size_t>(n), 0.0);
    for (const Edge& e : domain.edges()) {
      const double cond = 1.0 / e.resistance;
      diag[static_cast<std::size_t>(e.a)] += cond;
      if (domain.is_interior(e.b)) {
        diag[static_cast<std::size_t>(e.b)] += cond;
        t.emplace_back(e.a, e.b, -cond);
        t.emplace_back(e.b, e.a, -cond);
      }
    }
    for (VertexId v = 0; v < n; ++v) t.emplace_back(v, v, diag[static_cast<std::size_t>(v)]);
    c.precision.resize(n, n);
    c.precision.setFromTriplets(t.begin(), t.end());
    c.precision.makeCompressed();
  });
  return c.precision;
}

const Cholesky& factorization(const LatticeDomain& domain) {
  auto& c = domain.cache();
  std::call_once(c.factor_once, [&] {
    auto f = std::make_unique<Cholesky>(precision(domain));
    if (f->info() != Eigen::Success) throw InternalError("sparse Cholesky of -Delta failed");
    c.factor = std::move(f);
  });
  return *c.factor;
}

}  // namespace detail

namespace {

Eigen::VectorXd normals(Stream& s, Eigen::Index n) {
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z[i] = s.normal();
  return z;
}

// x = P^{-1} L^{-T} z has covariance Q^{-1} when Q = P^{-1} L L^T P.
Eigen::VectorXd direct_sample(const detail::Cholesky& f, Stream& s, Eigen::Index n) {
  Eigen::VectorXd y = f.matrixU().solve(normals(s, n));
  return f.permutationPinv() * y;
}

// Conjugate-direction sampler: accumulates search directions scaled by
// independent normals until the CG residual drops below the tolerance.
Eigen::VectorXd iterative_sample(const detail::SparseMatrix& q, Stream& s, double tol) {
  const Eigen::Index n = q.rows();
  Eigen::VectorXd b = normals(s, n);
  Eigen::VectorXd r = b;
  Eigen::VectorXd p = r;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
  double rr = r.squaredNorm();
  const double stop = tol * tol * rr;
  for (Eigen::Index it = 0; it < 20 * n + 100 && rr > stop; ++it) {
    const Eigen::VectorXd qp = q * p;
    const double d = p.dot(qp);
    if (!(d > 0.0)) throw InternalError("conjugate-direction sampler lost positivity");
    const double gamma = rr / d;
    y += (s.normal() / std::sqrt(d)) * p;
    r -= gamma * qp;
    const double rr_new = r.squaredNorm();
    p = r + (rr_new / rr) * p;
    rr = rr_new;
  }
  return y;
}

void require_interior(const LatticeDomain& domain, VertexId v, const char* what) {
  if (!domain.is_interior(v)) {
    throw DomainError(std::string(what) + ": vertex " + std::to_string(v) + " is not interior");
  }
}

}  // namespace

std::string to_string(SamplingMethod m) {
  switch (m) {
    case SamplingMethod::kAuto: return "auto";
    case SamplingMethod::kDirect: return "direct-factorization";
    case SamplingMethod::kIterative: return "iterative";
  }
  return "unknown";
}

FieldSample sample_dgff(const DomainPtr& domain, std::uint64_t seed, SamplingMethod method) {
  if (!domain) throw InvalidParameter("sample_dgff: null domain");
  if (method == SamplingMethod::kAuto) {
    method = domain->radius() <= kDirectSamplingMaxRadius ? SamplingMethod::kDirect
                                                          : SamplingMethod::kIterative;
  }
  const Eigen::Index n = domain->interior_count();
  Stream stream(hash_key(seed, 0x64676666ULL));
  Eigen::VectorXd x = method == SamplingMethod::kDirect
                          ? direct_sample(detail::factorization(*domain), stream, n)
                          : iterative_sample(detail::precision(*domain), stream, kIterativeTolerance);
  FieldSample out{domain, std::vector<double>(static_cast<std::size_t>(domain->vertex_count()), 0.0),
                  seed, method};
  for (Eigen::Index i = 0; i < n; ++i) out.values[static_cast<std::size_t>(i)] = x[i];
  return out;
}

std::vector<double> green_column(const LatticeDomain& domain, VertexId y) {
  require_interior(domain, y, "green_function");
  Eigen::VectorXd e = Eigen::VectorXd::Zero(domain.interior_count());
  e[y] = 1.0;
  const Eigen::VectorXd g = detail::factorization(domain).solve(e);
  return {g.data(), g.data() + g.size()};
}

double green_function(const LatticeDomain& domain, VertexId x, VertexId y) {
  require_interior(domain, x, "green_function");
  const auto col = green_column(domain, y);
  return col[static_cast<std::size_t>(x)];
}

namespace {

struct RegionSystem {
  std::vector<VertexId> vertices;
  std::unordered_map<VertexId, Eigen::Index> local;
  detail::SparseMatrix matrix;
};

RegionSystem region_system(const LatticeDomain& domain, std::span<const VertexId> region) {
  RegionSystem sys;
  sys.vertices.assign(region.begin(), region.end());
  for (std::size_t i = 0; i < sys.vertices.size(); ++i) {
    const VertexId v = sys.vertices[i];
    if (!domain.is_interior(v)) throw ContractViolation("region contains a non-interior vertex");
    if (!sys.local.emplace(v, static_cast<Eigen::Index>(i)).second) {
      throw ContractViolation("region lists a vertex twice");
    }
  }
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t i = 0; i < sys.vertices.size(); ++i) {
    const VertexId v = sys.vertices[i];
    double diag = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double cond = 1.0 / domain.edge(domain.incident_edge(v, k)).resistance;
      diag += cond;
      auto it = sys.local.find(domain.neighbor(v, k));
      if (it != sys.local.end()) t.emplace_back(static_cast<Eigen::Index>(i), it->second, -cond);
    }
    t.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i), diag);
  }
  const auto n = static_cast<Eigen::Index>(sys.vertices.size());
  sys.matrix.resize(n, n);
  sys.matrix.setFromTriplets(t.begin(), t.end());
  sys.matrix.makeCompressed();
  return sys;
}

template <class Lookup>
Eigen::VectorXd harmonic_solve(const LatticeDomain& domain, const RegionSystem& sys,
                               const detail::Cholesky& f, Lookup&& outside_value) {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sys.vertices.size()));
  for (std::size_t i = 0; i < sys.vertices.size(); ++i) {
    const VertexId v = sys.vertices[i];
    for (int k = 0; k < 4; ++k) {
      const VertexId w = domain.neighbor(v, k);
      if (sys.local.count(w)) continue;
      const double cond = 1.0 / domain.edge(domain.incident_edge(v, k)).resistance;
      rhs[static_cast<Eigen::Index>(i)] += cond * outside_value(w);
    }
  }
  return f.solve(rhs);
}

}  // namespace

std::map<VertexId, double> harmonic_extension(const LatticeDomain& domain,
                                              std::span<const VertexId> region,
                                              const std::map<VertexId, double>& boundary_values) {
  std::map<VertexId, double> out;
  if (region.empty()) return out;
  const RegionSystem sys = region_system(domain, region);
  for (VertexId v : sys.vertices) {
    for (int k = 0; k < 4; ++k) {
      const VertexId w = domain.neighbor(v, k);
      if (!sys.local.count(w) && !boundary_values.count(w)) {
        throw ContractViolation("harmonic_extension: boundary vertex " + std::to_string(w) +
                                " has no boundary value");
      }
    }
  }
  detail::Cholesky f(sys.matrix);
  if (f.info() != Eigen::Success) throw InternalError("harmonic_extension: factorization failed");
  const Eigen::VectorXd h =
      harmonic_solve(domain, sys, f, [&](VertexId w) { return boundary_values.at(w); });
  for (std::size_t i = 0; i < sys.vertices.size(); ++i) out[sys.vertices[i]] = h[static_cast<Eigen::Index>(i)];
  for (const auto& [v, val] : boundary_values) out.emplace(v, val);
  return out;
}

FieldSample conditional_resample(const FieldSample& sample, std::span<const VertexId> region,
                                 std::uint64_t seed) {
  if (region.empty()) return sample;
  const LatticeDomain& domain = *sample.domain;
  const RegionSystem sys = region_system(domain, region);
  detail::Cholesky f(sys.matrix);
  if (f.info() != Eigen::Success) throw InternalError("conditional_resample: factorization failed");
  const Eigen::VectorXd h = harmonic_solve(domain, sys, f, [&](VertexId w) { return sample[w]; });
  Stream stream(hash_key(seed, 0x72657361ULL));
  const Eigen::VectorXd fresh = direct_sample(f, stream, static_cast<Eigen::Index>(sys.vertices.size()));
  FieldSample out = sample;
  out.seed = seed;
  for (std::size_t i = 0; i < sys.vertices.size(); ++i) {
    const auto li = static_cast<Eigen::Index>(i);
    out.values[static_cast<std::size_t>(sys.vertices[i])] = h[li] + fresh[li];
  }
  return out;
}

}  // namespace tvslab
