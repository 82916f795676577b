#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "viralfb/error.hpp"

namespace viralfb::linalg {

/// Thomas algorithm for a tridiagonal system. lower[0] and upper[m-1] are
/// ignored. The matrices assembled here are diagonally dominant M-matrices,
/// so no pivoting is performed.
inline std::vector<double> solve_tridiagonal(std::span<const double> lower, std::span<const double> diag,
                                             std::span<const double> upper, std::span<const double> rhs) {
  const std::size_t m = diag.size();
  std::vector<double> c(m), d(m);
  double denom = diag[0];
  if (denom == 0.0) throw ConsistencyError("tridiagonal solve: zero pivot");
  c[0] = m > 1 ? upper[0] / denom : 0.0;
  d[0] = rhs[0] / denom;
  for (std::size_t i = 1; i < m; ++i) {
    denom = diag[i] - lower[i] * c[i - 1];
    if (denom == 0.0) throw ConsistencyError("tridiagonal solve: zero pivot");
    c[i] = i + 1 < m ? upper[i] / denom : 0.0;
    d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
  }
  for (std::size_t i = m - 1; i-- > 0;) d[i] -= c[i] * d[i + 1];
  return d;
}

/// Block-tridiagonal system with M x M blocks, solved by block elimination.
template <int M>
struct BlockTridiagonal {
  using Block = Eigen::Matrix<double, M, M>;
  using Vec = Eigen::Matrix<double, M, 1>;

  explicit BlockTridiagonal(std::size_t rows)
      : lower(rows, Block::Zero()), diag(rows, Block::Zero()), upper(rows, Block::Zero()), rhs(rows, Vec::Zero()) {}

  std::vector<Block> lower, diag, upper;
  std::vector<Vec> rhs;

  std::vector<Vec> solve() const {
    const std::size_t m = diag.size();
    std::vector<Block> c(m);
    std::vector<Vec> d(m);
    Eigen::PartialPivLU<Block> lu(diag[0]);
    c[0] = lu.solve(upper[0]);
    d[0] = lu.solve(rhs[0]);
    for (std::size_t i = 1; i < m; ++i) {
      const Block pivot = diag[i] - lower[i] * c[i - 1];
      lu.compute(pivot);
      if (!(std::abs(lu.determinant()) > 0.0)) throw ConsistencyError("block tridiagonal solve: singular pivot");
      if (i + 1 < m) c[i] = lu.solve(upper[i]);
      d[i] = lu.solve(rhs[i] - lower[i] * d[i - 1]);
    }
    for (std::size_t i = m - 1; i-- > 0;) d[i] -= c[i] * d[i + 1];
    return d;
  }
};

}  // namespace viralfb::linalg
