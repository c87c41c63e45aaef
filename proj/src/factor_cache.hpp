#pragma once

#include <memory>
#include <mutex>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "tvslab/lattice.hpp"

namespace tvslab::detail {

using SparseMatrix = Eigen::SparseMatrix<double>;
using Cholesky = Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

// Interior precision operator -Delta and its lazily computed factorization.
struct FactorCache {
  std::once_flag precision_once;
  SparseMatrix precision;
  std::once_flag factor_once;
  std::unique_ptr<Cholesky> factor;
};

const SparseMatrix& precision(const LatticeDomain& domain);
const Cholesky& factorization(const LatticeDomain& domain);

}  // namespace tvslab::detail
