#pragma once

// Canonical form of a problem modulo camera rotations, camera order and
// correspondence order.
//
// Default strategy (A): per camera, the mean of the unit rays is turned onto
// the optical axis. The ray with the largest angle to its camera's mean picks
// the reference correspondence j* and camera i*. Every camera is then rolled
// about the optical axis so that j* lands on the positive x axis, camera i*
// becomes the first camera, and correspondences are sorted counterclockwise
// in the first view starting at j*.
//
// The remaining strategies exist for the normalization study only:
//   B  like A but the center is refined by re-centering the projected points
//      ten times,
//   C  the ray closest to the mean is used as the center,
//   D  mean ray as center, dominant direction of the projected points on +x,
//   E  closest ray as center, dominant direction on +x,
//   None  identity.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "hcpick/error.hpp"
#include "hcpick/kinds.hpp"

namespace hcpick {

enum class Strategy { None, A, B, C, D, E };

inline std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::None: return "none";
    case Strategy::A: return "A";
    case Strategy::B: return "B";
    case Strategy::C: return "C";
    case Strategy::D: return "D";
    case Strategy::E: return "E";
  }
  return "?";
}

inline Strategy parse_strategy(std::string_view s) {
  if (s == "A" || s == "a") return Strategy::A;
  if (s == "B" || s == "b") return Strategy::B;
  if (s == "C" || s == "c") return Strategy::C;
  if (s == "D" || s == "d") return Strategy::D;
  if (s == "E" || s == "e") return Strategy::E;
  if (s == "none" || s == "None") return Strategy::None;
  throw ParseError("unknown normalization strategy '" + std::string(s) + "'");
}

template <class K>
struct NormalizationRecord {
  std::array<Eigen::Matrix3d, K::kViews> rotation;  // indexed by original camera
  std::array<int, K::kViews> camera_perm;           // normalized index -> original camera
  std::array<int, K::kPoints> point_perm;           // normalized index -> original point
  // Third coordinate of R [x; 1] per (original camera, original point): the
  // factor between original and normalized depths.
  std::array<std::array<double, K::kPoints>, K::kViews> depth_scale;
  Strategy strategy = Strategy::A;
};

template <class K>
struct Normalized {
  ProblemVec<K> problem;
  NormalizationRecord<K> record;
};

namespace detail {

/// Minimal rotation taking unit vector m onto e3. For m = -e3 the half turn
/// about the x axis is used.
inline Eigen::Matrix3d rotation_to_e3(const Eigen::Vector3d& m) {
  const Eigen::Vector3d e3 = Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d axis = m.cross(e3);
  const double s = axis.norm();
  const double c = m.dot(e3);
  if (s < 1e-15) {
    if (c > 0) return Eigen::Matrix3d::Identity();
    return Eigen::AngleAxisd(std::numbers::pi, Eigen::Vector3d::UnitX()).toRotationMatrix();
  }
  return Eigen::AngleAxisd(std::atan2(s, c), axis / s).toRotationMatrix();
}

/// Rotation about e3 taking the in-plane direction (x, y) onto +x.
inline Eigen::Matrix3d roll_to_x(double x, double y) {
  return Eigen::AngleAxisd(-std::atan2(y, x), Eigen::Vector3d::UnitZ()).toRotationMatrix();
}

inline double ray_angle(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  return std::atan2(a.cross(b).norm(), a.dot(b));
}

}  // namespace detail

template <class K>
Normalized<K> normalize(const ProblemVec<K>& problem, Strategy strategy = Strategy::A) {
  constexpr int V = K::kViews, P = K::kPoints;
  using Eigen::Matrix3d;
  using Eigen::Vector3d;

  Normalized<K> out;
  auto& rec = out.record;
  rec.strategy = strategy;

  std::array<std::array<Vector3d, P>, V> ray;
  for (int v = 0; v < V; ++v)
    for (int j = 0; j < P; ++j) {
      const int c = coord_index<K>(j, v);
      ray[v][j] = Vector3d(problem(c), problem(c + 1), 1.0).normalized();
    }

  if (strategy == Strategy::None) {
    out.problem = problem;
    for (int v = 0; v < V; ++v) {
      rec.rotation[v].setIdentity();
      rec.camera_perm[v] = v;
      for (int j = 0; j < P; ++j) rec.depth_scale[v][j] = 1.0;
    }
    std::iota(rec.point_perm.begin(), rec.point_perm.end(), 0);
    return out;
  }

  // Per-camera center direction.
  std::array<Vector3d, V> center;
  for (int v = 0; v < V; ++v) {
    Vector3d mean = Vector3d::Zero();
    for (int j = 0; j < P; ++j) mean += ray[v][j];
    if (mean.norm() < 1e-12) throw NormalizationError("normalize: mean ray vanishes");
    mean.normalize();
    if (strategy == Strategy::C || strategy == Strategy::E) {
      int best = 0;
      for (int j = 1; j < P; ++j)
        if (detail::ray_angle(ray[v][j], mean) < detail::ray_angle(ray[v][best], mean)) best = j;
      center[v] = ray[v][best];
    } else if (strategy == Strategy::B) {
      Vector3d c = mean;
      for (int it = 0; it < 10; ++it) {
        const Matrix3d R = detail::rotation_to_e3(c);
        Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
        for (int j = 0; j < P; ++j) {
          const Vector3d w = R * ray[v][j];
          if (w.z() <= 0) throw NormalizationError("normalize: ray behind the centered chart");
          centroid += w.template head<2>() / w.z();
        }
        centroid /= P;
        c = (R.transpose() * Vector3d(centroid.x(), centroid.y(), 1.0)).normalized();
      }
      center[v] = c;
    } else {
      center[v] = mean;
    }
  }

  // Reference correspondence: the largest angle to its camera's center.
  int istar = 0, jstar = 0;
  double widest = -1;
  for (int v = 0; v < V; ++v)
    for (int j = 0; j < P; ++j) {
      const double a = detail::ray_angle(ray[v][j], center[v]);
      if (a > widest) {
        widest = a;
        istar = v;
        jstar = j;
      }
    }
  if (widest < 1e-12) throw NormalizationError("normalize: zero angular spread");

  for (int v = 0; v < V; ++v) {
    const Matrix3d R0 = detail::rotation_to_e3(center[v]);
    // With the closest ray as center, j* itself can be the center of a camera
    // other than i*. The roll then follows that camera's widest ray.
    int ref = jstar;
    if (detail::ray_angle(ray[v][jstar], center[v]) < 1e-12)
      for (int j = 0; j < P; ++j)
        if (detail::ray_angle(ray[v][j], center[v]) > detail::ray_angle(ray[v][ref], center[v])) ref = j;
    Eigen::Vector2d dir;
    if (strategy == Strategy::D || strategy == Strategy::E) {
      // Dominant axis of the projected points, oriented towards the reference.
      std::array<Eigen::Vector2d, P> xy;
      Eigen::Vector2d mean2 = Eigen::Vector2d::Zero();
      for (int j = 0; j < P; ++j) {
        const Vector3d w = R0 * ray[v][j];
        xy[j] = w.template head<2>() / w.z();
        mean2 += xy[j];
      }
      mean2 /= P;
      Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
      for (int j = 0; j < P; ++j) cov += (xy[j] - mean2) * (xy[j] - mean2).transpose();
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
      dir = es.eigenvectors().col(1);
      if (dir.dot(xy[ref]) < 0) dir = -dir;
    } else {
      dir = Eigen::Vector2d((R0 * ray[v][ref]).template head<2>());
    }
    rec.rotation[v] = dir.norm() > 1e-14 ? Matrix3d(detail::roll_to_x(dir.x(), dir.y()) * R0) : R0;
  }

  // Camera order: descending angle of j* to the optical axis, ties by index.
  std::array<double, V> cam_angle;
  for (int v = 0; v < V; ++v)
    cam_angle[v] = detail::ray_angle(rec.rotation[v] * ray[v][jstar], Vector3d::UnitZ());
  std::iota(rec.camera_perm.begin(), rec.camera_perm.end(), 0);
  std::stable_sort(rec.camera_perm.begin(), rec.camera_perm.end(),
                   [&](int a, int b) { return cam_angle[a] > cam_angle[b]; });
  if constexpr (V == 2) {
    // Two cameras: the reference camera is first by definition.
    if (rec.camera_perm[0] != istar) std::swap(rec.camera_perm[0], rec.camera_perm[1]);
  }

  // Projected points.
  std::array<std::array<Eigen::Vector2d, P>, V> img;
  for (int v = 0; v < V; ++v)
    for (int j = 0; j < P; ++j) {
      const Vector3d w = rec.rotation[v] * ray[v][j];
      if (w.z() <= 1e-12) throw NormalizationError("normalize: point at infinity after rotation");
      img[v][j] = w.template head<2>() / w.z();
      const int c = coord_index<K>(j, v);
      rec.depth_scale[v][j] = (rec.rotation[v] * Vector3d(problem(c), problem(c + 1), 1.0)).z();
    }

  // Counterclockwise order in the first normalized view, starting at j*.
  const int first = rec.camera_perm[0];
  const double ref_angle = std::atan2(img[first][jstar].y(), img[first][jstar].x());
  std::array<double, P> polar, radius;
  for (int j = 0; j < P; ++j) {
    double a = std::atan2(img[first][j].y(), img[first][j].x()) - ref_angle;
    while (a < 0) a += 2 * std::numbers::pi;
    while (a >= 2 * std::numbers::pi) a -= 2 * std::numbers::pi;
    radius[j] = img[first][j].norm();
    // A point sitting on the optical axis (strategies C and E) has no polar
    // angle of its own; it goes directly after j*.
    if (radius[j] < 1e-9) a = 0.0;
    polar[j] = j == jstar ? -1.0 : a;
  }
  std::iota(rec.point_perm.begin(), rec.point_perm.end(), 0);
  std::sort(rec.point_perm.begin(), rec.point_perm.end(), [&](int a, int b) {
    if (polar[a] != polar[b]) return polar[a] < polar[b];
    if (radius[a] != radius[b]) return radius[a] < radius[b];
    return a < b;
  });

  for (int nv = 0; nv < V; ++nv)
    for (int nj = 0; nj < P; ++nj) {
      const auto& x = img[rec.camera_perm[nv]][rec.point_perm[nj]];
      const int c = coord_index<K>(nj, nv);
      out.problem(c) = x.x();
      out.problem(c + 1) = x.y();
    }
  return out;
}

/// Maps a solution of the normalized problem back to the original problem,
/// re-gauged so that the original first depth is one. The Scranton line offset
/// stays a normalized-frame quantity.
template <class K>
SolutionVec<K> denormalize_solution(const SolutionVec<K>& normalized, const NormalizationRecord<K>& rec) {
  std::array<std::array<double, K::kPoints>, K::kViews> depth;
  for (int nv = 0; nv < K::kViews; ++nv)
    for (int nj = 0; nj < K::kPoints; ++nj) {
      const int ov = rec.camera_perm[nv], oj = rec.point_perm[nj];
      depth[ov][oj] = depth_of<K, double>(normalized, nj, nv) / rec.depth_scale[ov][oj];
    }
  const double gauge = depth[0][0];
  if (!(gauge > 0)) throw GaugeError("denormalize_solution: non-positive gauge depth");
  SolutionVec<K> out;
  for (int v = 0; v < K::kViews; ++v)
    for (int j = 0; j < K::kPoints; ++j) {
      const int d = depth_index<K>(j, v);
      if (d >= 0) out(d) = depth[v][j] / gauge;
    }
  if constexpr (K::kRelaxed) out(K::kOffsetIndex) = normalized(K::kOffsetIndex);
  return out;
}

/// Forward map of an original-problem solution into the normalized frame.
/// Exact for Scranton only when the line offset is zero.
template <class K>
SolutionVec<K> normalize_solution(const SolutionVec<K>& original, const NormalizationRecord<K>& rec) {
  std::array<std::array<double, K::kPoints>, K::kViews> depth;
  for (int nv = 0; nv < K::kViews; ++nv)
    for (int nj = 0; nj < K::kPoints; ++nj) {
      const int ov = rec.camera_perm[nv], oj = rec.point_perm[nj];
      depth[nv][nj] = depth_of<K, double>(original, oj, ov) * rec.depth_scale[ov][oj];
    }
  const double gauge = depth[0][0];
  if (!(gauge > 0)) throw GaugeError("normalize_solution: non-positive gauge depth");
  SolutionVec<K> out;
  for (int v = 0; v < K::kViews; ++v)
    for (int j = 0; j < K::kPoints; ++j) {
      const int d = depth_index<K>(j, v);
      if (d >= 0) out(d) = depth[v][j] / gauge;
    }
  if constexpr (K::kRelaxed) out(K::kOffsetIndex) = original(K::kOffsetIndex);
  return out;
}

/// Normalized problem together with the forward-mapped solution.
template <class K>
PsPair<K> normalize_pair(const PsPair<K>& pair, Strategy strategy = Strategy::A,
                         NormalizationRecord<K>* record = nullptr) {
  const Normalized<K> n = normalize<K>(pair.problem, strategy);
  if (record) *record = n.record;
  return PsPair<K>{n.problem, normalize_solution<K>(pair.solution, n.record)};
}

}  // namespace hcpick
