#pragma once

// Closed-form solve of J x = b for the fixed Jacobian structures.
//
// The elimination order was worked out by hand on the structural pattern.
// Unknown names below: a_k = depth of point k in view 0, b_k / c_k = depth of
// point k in view 1 / 2, l = Scranton line offset.
//
// 5pt (rows e0..e8 follow FivePoint::kEquations):
//   e0..e3 each hold a single b_k (k = 1..4): pivot b_k on them. What is left
//   of e5 and e6 holds a3 and a4 alone among {a3, a4}: pivot those. Rows e4,
//   e7, e8 then form a dense 3x3 core in (a1, a2, b0).
//
// Scranton (rows e0..e11 follow Scranton::kEquations):
//   e0..e2 pivot b1..b3, e6..e8 pivot c1..c3. After that e3 is the only use of
//   b0 among the view-1 rows left, e9 likewise for c0. Rows e4, e5, e10, e11
//   form a dense 4x4 core in (a1, a2, a3, l).
//
// The static pivots are generically nonzero. The small core uses partial
// pivoting, which costs nothing at this size.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <utility>

#include "hcpick/error.hpp"
#include "hcpick/kinds.hpp"

namespace hcpick {

inline constexpr double kPivotTolerance = 1e-14;
// A static pivot this much smaller than the rest of its column would amplify
// rounding errors, so such systems take the dense path.
inline constexpr double kStaticPivotRatio = 1e-6;

template <class K>
struct EliminationPlan;

template <>
struct EliminationPlan<FivePoint> {
  // (row, column) pairs, applied in order.
  static constexpr std::array<std::pair<int, int>, 6> kPivots = {{
      {0, 5}, {1, 6}, {2, 7}, {3, 8},  // b1..b4
      {5, 2}, {6, 3},                  // a3, a4
  }};
  static constexpr std::array<int, 3> kCoreRows = {4, 7, 8};
  static constexpr std::array<int, 3> kCoreCols = {0, 1, 4};  // a1, a2, b0
};

template <>
struct EliminationPlan<Scranton> {
  static constexpr std::array<std::pair<int, int>, 8> kPivots = {{
      {0, 4}, {1, 5}, {2, 6},     // b1..b3
      {6, 8}, {7, 9}, {8, 10},    // c1..c3
      {3, 3}, {9, 7},             // b0, c0
  }};
  static constexpr std::array<int, 4> kCoreRows = {4, 5, 10, 11};
  static constexpr std::array<int, 4> kCoreCols = {0, 1, 2, 11};  // a1, a2, a3, l
};

namespace detail {

template <class T>
double magnitude(const T& v) {
  return std::abs(v);
}

[[noreturn]] inline void throw_singular(double pivot) {
  throw SingularSystemError("pattern solve: pivot magnitude " + std::to_string(pivot) +
                            " below tolerance");
}

/// In-place Gaussian elimination with partial pivoting on rows of [A | b].
/// Writes the solution into x at the positions listed in cols.
template <class T, std::size_t M, class XVec>
void dense_solve(std::array<std::array<T, M + 1>, M>& a, const std::array<int, M>& cols, XVec& x) {
  constexpr int n = static_cast<int>(M);
  for (int k = 0; k < n; ++k) {
    int best = k;
    for (int i = k + 1; i < n; ++i) {
      if (magnitude(a[i][k]) > magnitude(a[best][k])) best = i;
    }
    if (magnitude(a[best][k]) < kPivotTolerance) throw_singular(magnitude(a[best][k]));
    std::swap(a[k], a[best]);
    for (int i = k + 1; i < n; ++i) {
      const T f = a[i][k] / a[k][k];
      for (int j = k; j <= n; ++j) a[i][j] -= f * a[k][j];
    }
  }
  for (int k = n - 1; k >= 0; --k) {
    T acc = a[k][n];
    for (int j = k + 1; j < n; ++j) acc -= a[k][j] * x(cols[j]);
    x(cols[k]) = acc / a[k][k];
  }
}

/// Full partial-pivot solve, used only when a static pivot vanishes.
template <class K, class T>
SolutionVec<K, T> dense_fallback(const JacobianMat<K, T>& J, const SolutionVec<K, T>& rhs) {
  constexpr int N = K::kUnknowns;
  std::array<std::array<T, N + 1>, N> a;
  std::array<int, N> cols;
  for (int i = 0; i < N; ++i) {
    cols[i] = i;
    for (int j = 0; j < N; ++j) a[i][j] = J(i, j);
    a[i][N] = rhs(i);
  }
  SolutionVec<K, T> x;
  dense_solve<T, N>(a, cols, x);
  return x;
}

}  // namespace detail

/// Solves J x = rhs using the fixed elimination plan of kind K. Entries of J
/// outside the structural pattern must be zero. If one of the static pivots
/// vanishes (possible only for special, non-generic matrices) the system is
/// handed to a dense partial-pivot solve instead.
template <class K, class T>
SolutionVec<K, T> solve_pattern(const JacobianMat<K, T>& J_in, const SolutionVec<K, T>& rhs_in) {
  using Plan = EliminationPlan<K>;
  constexpr int N = K::kUnknowns;
  constexpr std::size_t kCore = Plan::kCoreRows.size();

  JacobianMat<K, T> J = J_in;
  SolutionVec<K, T> rhs = rhs_in;
  std::array<bool, N> row_done{};
  for (const auto& [pr, pc] : Plan::kPivots) {
    const T pivot = J(pr, pc);
    double column_max = 0;
    for (int r = 0; r < N; ++r) {
      if (!row_done[r]) column_max = std::max(column_max, detail::magnitude(J(r, pc)));
    }
    if (detail::magnitude(pivot) < std::max(kPivotTolerance, kStaticPivotRatio * column_max))
      return detail::dense_fallback<K, T>(J_in, rhs_in);
    row_done[pr] = true;
    for (int r = 0; r < N; ++r) {
      if (row_done[r] || J(r, pc) == T(0)) continue;
      const T f = J(r, pc) / pivot;
      for (int c = 0; c < N; ++c) {
        if (J(pr, c) != T(0)) J(r, c) -= f * J(pr, c);
      }
      J(r, pc) = T(0);
      rhs(r) -= f * rhs(pr);
    }
  }

  std::array<std::array<T, kCore + 1>, kCore> core;
  for (std::size_t i = 0; i < kCore; ++i) {
    for (std::size_t j = 0; j < kCore; ++j) core[i][j] = J(Plan::kCoreRows[i], Plan::kCoreCols[j]);
    core[i][kCore] = rhs(Plan::kCoreRows[i]);
  }
  SolutionVec<K, T> x = SolutionVec<K, T>::Zero();
  detail::dense_solve<T, kCore>(core, Plan::kCoreCols, x);

  // Back-substitution through the static pivots, last first. Each pivot row
  // only references its own column and columns resolved after it.
  for (int s = static_cast<int>(Plan::kPivots.size()) - 1; s >= 0; --s) {
    const auto [pr, pc] = Plan::kPivots[s];
    T acc = rhs(pr);
    for (int c = 0; c < N; ++c) {
      if (c != pc && J(pr, c) != T(0)) acc -= J(pr, c) * x(c);
    }
    x(pc) = acc / J(pr, pc);
  }
  return x;
}

}  // namespace hcpick
