#pragma once

#include <span>
#include <vector>

namespace sturmian {

/// Number of eigenvalues < x of the symmetric tridiagonal matrix with
/// diagonal `diag` and off-diagonal `off` (off.size() == diag.size() - 1),
/// from the signs of the LDL^T pivots of (T - x).
long sturm_count(std::span<const double> diag, std::span<const double> off, double x);

/// All eigenvalues, ascending, by Sturm-count bisection. Each eigenvalue is
/// resolved to the spacing of adjacent doubles.
std::vector<double> tridiagonal_eigenvalues(std::span<const double> diag, std::span<const double> off);

}  // namespace sturmian
