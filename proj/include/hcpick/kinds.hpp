#pragma once

// Problem kinds handled by the library and the fixed-size containers that go
// with them. Everything downstream is templated on one of the two kind tags.

#include <array>
#include <complex>
#include <string>
#include <string_view>

#include <Eigen/Core>

#include "hcpick/error.hpp"

namespace hcpick {

enum class Kind { FivePoint, Scranton };

/// One depth-distance constraint: points (k, m) seen in views (vi, vj), all 0-based.
struct EquationIndex {
  int k, m, vi, vj;
};

/// Five points in two calibrated views. Unknowns are the nine depths left
/// after fixing the first point's depth in the first view to one.
struct FivePoint {
  static constexpr Kind kind = Kind::FivePoint;
  static constexpr const char* name = "5pt";
  static constexpr int kViews = 2;
  static constexpr int kPoints = 5;
  static constexpr int kProblemDim = 2 * kViews * kPoints;  // 20
  static constexpr int kUnknowns = kViews * kPoints - 1;     // 9
  static constexpr bool kRelaxed = false;

  // C(5,2) = 10 point pairs minus the dropped pair (4,5), views (1,2).
  static constexpr std::array<EquationIndex, kUnknowns> kEquations = {{
      {0, 1, 0, 1}, {0, 2, 0, 1}, {0, 3, 0, 1}, {0, 4, 0, 1}, {1, 2, 0, 1},
      {1, 3, 0, 1}, {1, 4, 0, 1}, {2, 3, 0, 1}, {2, 4, 0, 1},
  }};
  static constexpr EquationIndex kDroppedEquation = {3, 4, 0, 1};
};

/// Four points in three views with the first point in the first view relaxed
/// along a vertical image line. Unknowns: eleven depths plus the line offset.
struct Scranton {
  static constexpr Kind kind = Kind::Scranton;
  static constexpr const char* name = "scranton";
  static constexpr int kViews = 3;
  static constexpr int kPoints = 4;
  static constexpr int kProblemDim = 2 * kViews * kPoints;  // 24
  static constexpr int kUnknowns = kViews * kPoints;        // 11 depths + l
  static constexpr bool kRelaxed = true;
  static constexpr int kOffsetIndex = kUnknowns - 1;

  // All six point pairs over view pairs (1,2) and (1,3).
  static constexpr std::array<EquationIndex, kUnknowns> kEquations = {{
      {0, 1, 0, 1}, {0, 2, 0, 1}, {0, 3, 0, 1}, {1, 2, 0, 1}, {1, 3, 0, 1}, {2, 3, 0, 1},
      {0, 1, 0, 2}, {0, 2, 0, 2}, {0, 3, 0, 2}, {1, 2, 0, 2}, {1, 3, 0, 2}, {2, 3, 0, 2},
  }};
};

template <class K, class T = double>
using ProblemVec = Eigen::Matrix<T, K::kProblemDim, 1>;
template <class K, class T = double>
using SolutionVec = Eigen::Matrix<T, K::kUnknowns, 1>;
template <class K, class T = double>
using JacobianMat = Eigen::Matrix<T, K::kUnknowns, K::kUnknowns, Eigen::RowMajor>;

using Complex = std::complex<double>;

// Problem layout: view-major, then point, then (x, y).
template <class K>
constexpr int coord_index(int point, int view) {
  return 2 * (view * K::kPoints + point);
}

// Solution layout: view-major depths with the gauge slot (point 0, view 0)
// omitted, followed by the line offset for Scranton. Returns -1 for the gauge.
template <class K>
constexpr int depth_index(int point, int view) {
  if (view == 0) return point - 1;
  return (K::kPoints - 1) + (view - 1) * K::kPoints + point;
}

template <class K>
struct PsPair {
  static constexpr Kind kind = K::kind;
  ProblemVec<K> problem;
  SolutionVec<K> solution;
};

/// Depth of (point, view) including the fixed gauge depth.
template <class K, class T>
T depth_of(const SolutionVec<K, T>& s, int point, int view) {
  const int idx = depth_index<K>(point, view);
  return idx < 0 ? T(1) : s(idx);
}

template <class K, class T>
T line_offset(const SolutionVec<K, T>& s) {
  if constexpr (K::kRelaxed) {
    return s(K::kOffsetIndex);
  } else {
    return T(0);
  }
}

inline std::string_view kind_name(Kind k) {
  return k == Kind::FivePoint ? FivePoint::name : Scranton::name;
}

inline Kind parse_kind(std::string_view s) {
  if (s == "5pt" || s == "fivepoint" || s == "FivePoint") return Kind::FivePoint;
  if (s == "scranton" || s == "Scranton" || s == "4pt") return Kind::Scranton;
  throw ParseError("unknown problem kind '" + std::string(s) + "'");
}

/// Calls f(FivePoint{}) or f(Scranton{}) for a runtime kind.
template <class F>
decltype(auto) visit_kind(Kind k, F&& f) {
  if (k == Kind::FivePoint) return f(FivePoint{});
  return f(Scranton{});
}

}  // namespace hcpick
