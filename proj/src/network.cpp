#include "semidelay/network.hpp"

#include "semidelay/error.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

namespace semidelay {

Matrix SystemMatrices::F_total() const {
  Matrix total = Matrix::Zero(E.rows(), E.cols());
  for (const auto& fk : F) total += fk;
  return total;
}

SystemMatrices build_system_matrices(const ConsensusNetwork& net) {
  if (net.agents < 1) throw ModelError("network needs at least one agent");
  if (net.links.empty()) throw ModelError("network has no links");
  if (net.profiles.empty()) throw ModelError("network has no delay profiles");

  const Index n = net.agents;
  const std::size_t m = net.profiles.size();
  SystemMatrices out;
  out.E = Matrix::Zero(n, n);
  out.F.assign(m, Matrix::Zero(n, n));

  std::set<std::tuple<Index, Index, std::size_t>> seen;
  for (const auto& link : net.links) {
    if (link.receiver < 0 || link.receiver >= n || link.sender < 0 || link.sender >= n) {
      throw ModelError(fmt::format("link ({}, {}) references an agent outside 1..{}",
                                   link.receiver + 1, link.sender + 1, n));
    }
    if (link.receiver == link.sender) {
      throw ModelError(fmt::format("self-link on agent {}", link.receiver + 1));
    }
    if (link.delay >= m) {
      throw ModelError(fmt::format("link ({}, {}) uses delay {} but only {} profiles exist",
                                   link.receiver + 1, link.sender + 1, link.delay + 1, m));
    }
    if (!(link.weight > 0.0) || !std::isfinite(link.weight)) {
      throw ModelError(fmt::format("link ({}, {}) has non-positive weight {}", link.receiver + 1,
                                   link.sender + 1, link.weight));
    }
    if (!seen.emplace(link.receiver, link.sender, link.delay).second) {
      throw ModelError(fmt::format("duplicate link ({}, {}) on delay {}", link.receiver + 1,
                                   link.sender + 1, link.delay + 1));
    }
    out.F[link.delay](link.receiver, link.sender) = link.weight;
  }

  for (Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      for (Index j = 0; j < n; ++j) s += out.F[k](i, j);
    }
    out.E(i, i) = -s;
  }
  return out;
}

Vector row_sums(const SystemMatrices& m) {
  const Index n = m.dimension();
  Vector r(n);
  for (Index i = 0; i < n; ++i) {
    double s = 0.0;
    for (const auto& fk : m.F) {
      for (Index j = 0; j < n; ++j) s += fk(i, j);
    }
    double e = 0.0;
    for (Index j = 0; j < n; ++j) e += m.E(i, j);
    r[i] = e + s;
  }
  return r;
}

Vector column_sums(const SystemMatrices& m) {
  return (m.E + m.F_total()).colwise().sum().transpose();
}

LaplacianReport validate_laplacian_structure(const SystemMatrices& m, double tol) {
  LaplacianReport rep;
  const Index n = m.dimension();
  rep.row_sum_error = n > 0 ? row_sums(m).cwiseAbs().maxCoeff() : 0.0;
  rep.col_sum_error = n > 0 ? column_sums(m).cwiseAbs().maxCoeff() : 0.0;
  rep.row_sums_zero = rep.row_sum_error <= tol;
  rep.col_sums_zero = rep.col_sum_error <= tol;
  rep.nonnegative_Fk = std::all_of(m.F.begin(), m.F.end(),
                                   [](const Matrix& fk) { return (fk.array() >= 0.0).all(); });
  rep.rank = rank_deficiency(m.E + m.F_total());
  rep.rank_is_n_minus_1 = rep.rank == n - 1;
  return rep;
}

Index rank_deficiency(const Matrix& a, double tol) {
  if (a.size() == 0) return 0;
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  if (norm == 0.0) return 0;
  const double threshold = tol * norm;

  Matrix w = a;
  const Index rows = w.rows();
  const Index cols = w.cols();
  Index rank = 0;
  for (Index step = 0; step < std::min(rows, cols); ++step) {
    Index pr = step;
    Index pc = step;
    double best = 0.0;
    for (Index i = step; i < rows; ++i) {
      for (Index j = step; j < cols; ++j) {
        if (std::abs(w(i, j)) > best) {
          best = std::abs(w(i, j));
          pr = i;
          pc = j;
        }
      }
    }
    if (best <= threshold) break;
    w.row(step).swap(w.row(pr));
    w.col(step).swap(w.col(pc));
    ++rank;
    const double pivot = w(step, step);
    for (Index i = step + 1; i < rows; ++i) {
      const double factor = w(i, step) / pivot;
      if (factor == 0.0) continue;
      w.row(i).tail(cols - step) -= factor * w.row(step).tail(cols - step);
    }
  }
  return rank;
}

}  // namespace semidelay
