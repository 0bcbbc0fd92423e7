#pragma once

#include "semidelay/delays.hpp"
#include "semidelay/history.hpp"

#include <cstddef>
#include <vector>

namespace semidelay {

/// Agent `receiver` uses x_sender(t - tau_delay(t)) with gain `weight`.
/// Indices are 0-based here; scenario files use 1-based indices.
struct Link {
  Index receiver = 0;
  Index sender = 0;
  double weight = 1.0;
  std::size_t delay = 0;

  friend bool operator==(const Link&, const Link&) = default;
};

struct ConsensusNetwork {
  Index agents = 0;
  std::vector<Link> links;
  std::vector<DelayProfile> profiles;

  std::size_t delay_count() const noexcept { return profiles.size(); }
};

/// E (diagonal) and F_1..F_m of x' = E x + sum_k F_k x(t - tau_k).
struct SystemMatrices {
  Matrix E;
  std::vector<Matrix> F;

  Index dimension() const noexcept { return E.rows(); }
  std::size_t delay_count() const noexcept { return F.size(); }
  Matrix F_total() const;
};

/// F_k(i,j) = a_ij for every link (i,j) carrying delay k; E(i,i) = -sum_k sum_j F_k(i,j).
///
/// The diagonal is the row sum, so every row of E + F sums to zero by
/// construction. Throws ModelError on empty, duplicate or malformed links.
SystemMatrices build_system_matrices(const ConsensusNetwork& net);

/// Row sums of E + F accumulated in the same order as the construction
/// (exactly zero for matrices from build_system_matrices).
Vector row_sums(const SystemMatrices& m);
Vector column_sums(const SystemMatrices& m);

struct LaplacianReport {
  bool row_sums_zero = false;
  bool col_sums_zero = false;
  bool nonnegative_Fk = false;
  bool rank_is_n_minus_1 = false;
  Index rank = 0;
  double row_sum_error = 0.0;
  double col_sum_error = 0.0;

  bool passed() const noexcept {
    return row_sums_zero && col_sums_zero && nonnegative_Fk && rank_is_n_minus_1;
  }
};

/// Checks (E+F)1 = 0, (E+F)^T 1 = 0, F_k >= 0 and rank(E+F) = n-1.
LaplacianReport validate_laplacian_structure(const SystemMatrices& m, double tol = 1e-12);

/// Numerical rank: pivots above tol * ||A||_inf under complete-pivoting elimination.
Index rank_deficiency(const Matrix& a, double tol = 1e-10);

}  // namespace semidelay
