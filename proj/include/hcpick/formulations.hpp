#pragma once

// Depth formulations of the 5-point and Scranton problems.
//
// Each equation equates the squared distance between two points reconstructed
// in view vi with the same distance reconstructed in view vj:
//
//   r = |l_k,i v_k,i - l_m,i v_m,i|^2 - |l_k,j v_k,j - l_m,j v_m,j|^2,  v = [x; 1].
//
// Scalars are templated so the same code serves the real tracker and the
// complex arc tracker. The "squared norm" is the bilinear form sum(z_i^2),
// never the Hermitian one, so the residual stays a polynomial.

#include <algorithm>
#include <array>
#include <utility>
#include <vector>

#include "hcpick/kinds.hpp"

namespace hcpick {

template <class T>
using Vec3T = std::array<T, 3>;

template <class T>
inline T bdot(const Vec3T<T>& a, const Vec3T<T>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

/// Homogeneous image vectors and the points they lift to under a solution.
template <class K, class T>
struct LiftedPoints {
  static constexpr int kCount = K::kViews * K::kPoints;
  std::array<Vec3T<T>, kCount> ray;    // [x; y; 1], relaxed for (0, 0)
  std::array<Vec3T<T>, kCount> point;  // depth * ray
  std::array<T, kCount> depth;

  static constexpr int slot(int point, int view) { return view * K::kPoints + point; }
};

template <class K, class T, class ProblemLike>
LiftedPoints<K, T> lift(const ProblemLike& problem, const SolutionVec<K, T>& solution) {
  LiftedPoints<K, T> out;
  for (int v = 0; v < K::kViews; ++v) {
    for (int p = 0; p < K::kPoints; ++p) {
      const int s = LiftedPoints<K, T>::slot(p, v);
      const int c = coord_index<K>(p, v);
      out.ray[s] = {T(problem(c)), T(problem(c + 1)), T(1)};
      out.depth[s] = depth_of<K, T>(solution, p, v);
    }
  }
  if constexpr (K::kRelaxed) out.ray[0][1] += line_offset<K, T>(solution);
  for (int s = 0; s < LiftedPoints<K, T>::kCount; ++s) {
    for (int a = 0; a < 3; ++a) out.point[s][a] = out.depth[s] * out.ray[s][a];
  }
  return out;
}

template <class K, class T>
T equation_residual(const LiftedPoints<K, T>& lp, const EquationIndex& e) {
  using L = LiftedPoints<K, T>;
  Vec3T<T> di, dj;
  for (int a = 0; a < 3; ++a) {
    di[a] = lp.point[L::slot(e.k, e.vi)][a] - lp.point[L::slot(e.m, e.vi)][a];
    dj[a] = lp.point[L::slot(e.k, e.vj)][a] - lp.point[L::slot(e.m, e.vj)][a];
  }
  return bdot(di, di) - bdot(dj, dj);
}

/// Residual vector f(p, s) of the square system.
template <class K, class T = double, class ProblemLike>
SolutionVec<K, T> evaluate(const ProblemLike& problem, const SolutionVec<K, T>& solution) {
  const auto lp = lift<K, T>(problem, solution);
  SolutionVec<K, T> r;
  for (int row = 0; row < K::kUnknowns; ++row) r(row) = equation_residual<K, T>(lp, K::kEquations[row]);
  return r;
}

/// Residual of an arbitrary constraint, e.g. the one left out of the square 5pt system.
template <class K, class T = double, class ProblemLike>
T evaluate_constraint(const ProblemLike& problem, const SolutionVec<K, T>& solution,
                      const EquationIndex& e) {
  return equation_residual<K, T>(lift<K, T>(problem, solution), e);
}

/// Residual, Jacobian w.r.t. the unknowns and derivative along a problem-space
/// direction, evaluated together. Any output pointer may be null.
template <class K, class T, class ProblemLike, class DirectionLike>
void linearize(const ProblemLike& problem, const DirectionLike* direction,
               const SolutionVec<K, T>& solution, SolutionVec<K, T>* residual,
               JacobianMat<K, T>* jac, SolutionVec<K, T>* dir_deriv) {
  using L = LiftedPoints<K, T>;
  const auto lp = lift<K, T>(problem, solution);
  if (jac) jac->setZero();
  for (int row = 0; row < K::kUnknowns; ++row) {
    const EquationIndex& e = K::kEquations[row];
    const int ki = L::slot(e.k, e.vi), mi = L::slot(e.m, e.vi);
    const int kj = L::slot(e.k, e.vj), mj = L::slot(e.m, e.vj);
    Vec3T<T> di, dj;
    for (int a = 0; a < 3; ++a) {
      di[a] = lp.point[ki][a] - lp.point[mi][a];
      dj[a] = lp.point[kj][a] - lp.point[mj][a];
    }
    if (residual) (*residual)(row) = bdot(di, di) - bdot(dj, dj);
    if (jac) {
      auto add = [&](int point, int view, T value) {
        const int col = depth_index<K>(point, view);
        if (col >= 0) (*jac)(row, col) += value;
      };
      add(e.k, e.vi, T(2) * bdot(di, lp.ray[ki]));
      add(e.m, e.vi, T(-2) * bdot(di, lp.ray[mi]));
      add(e.k, e.vj, T(-2) * bdot(dj, lp.ray[kj]));
      add(e.m, e.vj, T(2) * bdot(dj, lp.ray[mj]));
      if constexpr (K::kRelaxed) {
        // Only (point 0, view 0) carries the offset; its depth is the gauge 1.
        if (e.k == 0 && e.vi == 0) (*jac)(row, K::kOffsetIndex) += T(2) * di[1];
      }
    }
    if (dir_deriv && direction) {
      // The image point moves along [dx; dy; 0], scaled by its depth.
      auto moved = [&](int point, int view, int s) {
        const int c = coord_index<K>(point, view);
        return Vec3T<T>{lp.depth[s] * T((*direction)(c)), lp.depth[s] * T((*direction)(c + 1)), T(0)};
      };
      const auto dki = moved(e.k, e.vi, ki), dmi = moved(e.m, e.vi, mi);
      const auto dkj = moved(e.k, e.vj, kj), dmj = moved(e.m, e.vj, mj);
      Vec3T<T> ddi, ddj;
      for (int a = 0; a < 3; ++a) {
        ddi[a] = dki[a] - dmi[a];
        ddj[a] = dkj[a] - dmj[a];
      }
      (*dir_deriv)(row) = T(2) * (bdot(di, ddi) - bdot(dj, ddj));
    }
  }
}

/// Analytic Jacobian dH/ds.
template <class K, class T = double, class ProblemLike>
JacobianMat<K, T> jacobian_s(const ProblemLike& problem, const SolutionVec<K, T>& solution) {
  JacobianMat<K, T> j;
  linearize<K, T, ProblemLike, ProblemLike>(problem, nullptr, solution, nullptr, &j, nullptr);
  return j;
}

/// dH/dt for the linear segment p(t) = (1 - t) p0 + t p1 at a fixed solution.
template <class K>
SolutionVec<K> jacobian_t(const ProblemVec<K>& start_problem, const ProblemVec<K>& target_problem,
                          const SolutionVec<K>& solution, double t) {
  const ProblemVec<K> pt = (1.0 - t) * start_problem + t * target_problem;
  const ProblemVec<K> dir = target_problem - start_problem;
  SolutionVec<K> out;
  linearize<K, double>(pt, &dir, solution, nullptr, nullptr, &out);
  return out;
}

/// Structural nonzeros of dH/ds, row-major.
template <class K>
struct SparsePattern {
  static constexpr int N = K::kUnknowns;
  std::array<std::array<bool, N>, N> mask{};

  bool contains(int row, int col) const { return mask[row][col]; }

  std::vector<std::pair<int, int>> entries() const {
    std::vector<std::pair<int, int>> out;
    for (int r = 0; r < N; ++r)
      for (int c = 0; c < N; ++c)
        if (mask[r][c]) out.emplace_back(r, c);
    return out;
  }

  int nonzeros() const {
    int n = 0;
    for (const auto& row : mask) n += static_cast<int>(std::count(row.begin(), row.end(), true));
    return n;
  }
};

template <class K>
constexpr SparsePattern<K> sparse_pattern() {
  SparsePattern<K> p{};
  for (int row = 0; row < K::kUnknowns; ++row) {
    const EquationIndex& e = K::kEquations[row];
    for (auto [pt, view] : {std::pair{e.k, e.vi}, std::pair{e.m, e.vi}, std::pair{e.k, e.vj},
                            std::pair{e.m, e.vj}}) {
      const int col = depth_index<K>(pt, view);
      if (col >= 0) p.mask[row][col] = true;
    }
    if constexpr (K::kRelaxed) {
      if (e.k == 0 && e.vi == 0) p.mask[row][K::kOffsetIndex] = true;
    }
  }
  return p;
}

}  // namespace hcpick
