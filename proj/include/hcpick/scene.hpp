#pragma once

// Synthetic scenes, p-s pair fabrication, pose recovery from depths and the
// twisted-pair symmetry of the two-view problem.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hcpick/error.hpp"
#include "hcpick/formulations.hpp"
#include "hcpick/kinds.hpp"

namespace hcpick {

using Eigen::Matrix3d;
using Eigen::Vector2d;
using Eigen::Vector3d;

/// World-to-camera transform: X_cam = R X_world + t.
struct CameraPose {
  Matrix3d R = Matrix3d::Identity();
  Vector3d t = Vector3d::Zero();

  Vector3d center() const { return -R.transpose() * t; }
  Vector3d to_camera(const Vector3d& X) const { return R * X + t; }
};

/// Relative pose between two cameras: X_b = R X_a + t, t known up to positive scale.
struct Pose {
  Matrix3d R = Matrix3d::Identity();
  Vector3d t = Vector3d::Zero();
};

struct SceneModel {
  std::vector<Vector3d> points;
  std::vector<CameraPose> cameras;
  std::set<std::pair<int, int>> visibility;  // (point, camera)

  bool visible(int point, int camera) const { return visibility.count({point, camera}) > 0; }
};

struct SceneConfig {
  int n_points = 5;
  int n_cameras = 2;
  double depth_min = 4.0;      // camera distance from the cloud center
  double depth_max = 8.0;
  double baseline_min = 0.5;   // distance from every camera to the first one
  double baseline_max = 3.0;
  double fov_deg = 60.0;       // full opening angle of the view cone
  double box_half = 1.0;       // points are drawn from [-box_half, box_half]^3
  double look_jitter = 0.2;    // the look-at target is perturbed within this radius
  int max_retries = 1000;
};

inline bool in_view(const CameraPose& cam, const Vector3d& X, double fov_deg) {
  const Vector3d Xc = cam.to_camera(X);
  if (Xc.z() <= 0) return false;
  const double half = 0.5 * fov_deg * std::numbers::pi / 180.0;
  return std::atan2(Xc.head<2>().norm(), Xc.z()) < half;
}

namespace detail {

inline Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    Vector3d v(n(rng), n(rng), n(rng));
    const double len = v.norm();
    if (len > 1e-12) return v / len;
  }
}

inline CameraPose look_at(const Vector3d& center, const Vector3d& target, double roll) {
  const Vector3d z = (target - center).normalized();
  Vector3d helper = std::abs(z.x()) < 0.9 ? Vector3d::UnitX() : Vector3d::UnitY();
  Vector3d x = helper.cross(z).normalized();
  Vector3d y = z.cross(x);
  const double c = std::cos(roll), s = std::sin(roll);
  const Vector3d xr = c * x + s * y;
  const Vector3d yr = -s * x + c * y;
  CameraPose cam;
  cam.R.row(0) = xr.transpose();
  cam.R.row(1) = yr.transpose();
  cam.R.row(2) = z.transpose();
  cam.t = -cam.R * center;
  return cam;
}

}  // namespace detail

/// Random scene whose points are all visible in all cameras.
inline SceneModel synth_scene(const SceneConfig& cfg, std::mt19937_64& rng) {
  if (cfg.n_points < 1 || cfg.n_cameras < 1 || cfg.depth_min <= 0 || cfg.depth_max < cfg.depth_min ||
      cfg.baseline_min < 0 || cfg.baseline_max < cfg.baseline_min || cfg.fov_deg <= 0 ||
      cfg.box_half <= 0) {
    throw GenerationError("synth_scene: invalid configuration");
  }
  std::uniform_real_distribution<double> depth(cfg.depth_min, cfg.depth_max);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> box(-cfg.box_half, cfg.box_half);

  SceneModel scene;
  auto jittered_target = [&]() -> Vector3d { return cfg.look_jitter * std::cbrt(unit(rng)) * detail::random_unit(rng); };
  const Vector3d c0 = depth(rng) * detail::random_unit(rng);
  scene.cameras.push_back(detail::look_at(c0, jittered_target(), 2 * std::numbers::pi * unit(rng)));
  for (int c = 1; c < cfg.n_cameras; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < cfg.max_retries && !placed; ++attempt) {
      const Vector3d center = depth(rng) * detail::random_unit(rng);
      const double base = (center - c0).norm();
      if (base < cfg.baseline_min || base > cfg.baseline_max) continue;
      scene.cameras.push_back(detail::look_at(center, jittered_target(), 2 * std::numbers::pi * unit(rng)));
      placed = true;
    }
    if (!placed) throw GenerationError("synth_scene: could not place camera within the baseline range");
  }
  for (int p = 0; p < cfg.n_points; ++p) {
    bool placed = false;
    for (int attempt = 0; attempt < cfg.max_retries && !placed; ++attempt) {
      const Vector3d X(box(rng), box(rng), box(rng));
      const bool ok = std::all_of(scene.cameras.begin(), scene.cameras.end(),
                                  [&](const CameraPose& cam) { return in_view(cam, X, cfg.fov_deg); });
      if (!ok) continue;
      scene.points.push_back(X);
      placed = true;
    }
    if (!placed) throw GenerationError("synth_scene: point rejection sampling exhausted");
  }
  for (int p = 0; p < cfg.n_points; ++p)
    for (int c = 0; c < cfg.n_cameras; ++c) scene.visibility.insert({p, c});
  return scene;
}

inline SceneModel synth_scene(const SceneConfig& cfg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return synth_scene(cfg, rng);
}

/// Pose of camera b relative to camera a.
inline Pose relative_pose(const CameraPose& a, const CameraPose& b) {
  Pose p;
  p.R = b.R * a.R.transpose();
  p.t = b.t - p.R * a.t;
  return p;
}

/// Rotation by angle_rad about a unit axis.
inline Matrix3d axis_angle(const Vector3d& axis, double angle_rad) {
  return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

/// Turns camera `index` about its own center by angle_deg around a random axis.
inline SceneModel rotate_camera(const SceneModel& scene, int index, double angle_deg, std::mt19937_64& rng) {
  SceneModel out = scene;
  CameraPose& cam = out.cameras.at(index);
  const Vector3d c = cam.center();
  cam.R = axis_angle(detail::random_unit(rng), angle_deg * std::numbers::pi / 180.0) * cam.R;
  cam.t = -cam.R * c;
  return out;
}

/// Projects points into cameras in the frame of the first listed camera and
/// fixes the gauge so that the first point's depth in the first camera is 1.
template <class K>
PsPair<K> fabricate_pair(const SceneModel& scene, const std::vector<int>& cameras,
                         const std::vector<int>& points) {
  if (static_cast<int>(cameras.size()) != K::kViews || static_cast<int>(points.size()) != K::kPoints) {
    throw FabricationError("fabricate_pair: wrong number of cameras or points for the problem kind");
  }
  std::array<std::array<Vector3d, K::kPoints>, K::kViews> Xc;
  for (int v = 0; v < K::kViews; ++v) {
    const int cam = cameras[v];
    if (cam < 0 || cam >= static_cast<int>(scene.cameras.size()))
      throw FabricationError("fabricate_pair: camera index out of range");
    for (int i = 0; i < K::kPoints; ++i) {
      const int pt = points[i];
      if (pt < 0 || pt >= static_cast<int>(scene.points.size()) || !scene.visible(pt, cam))
        throw FabricationError("fabricate_pair: requested point is not visible");
      Xc[v][i] = scene.cameras[cam].to_camera(scene.points[pt]);
      if (!(Xc[v][i].z() > 0)) throw FabricationError("fabricate_pair: point behind camera");
    }
  }
  // Distinct points must give distinct rays in every view.
  for (int v = 0; v < K::kViews; ++v)
    for (int i = 0; i < K::kPoints; ++i)
      for (int j = i + 1; j < K::kPoints; ++j)
        if (Xc[v][i].normalized().cross(Xc[v][j].normalized()).norm() < 1e-9)
          throw FabricationError("fabricate_pair: coincident rays");

  PsPair<K> pair;
  const double gauge = Xc[0][0].z();
  for (int v = 0; v < K::kViews; ++v) {
    for (int i = 0; i < K::kPoints; ++i) {
      const int c = coord_index<K>(i, v);
      pair.problem(c) = Xc[v][i].x() / Xc[v][i].z();
      pair.problem(c + 1) = Xc[v][i].y() / Xc[v][i].z();
      const int d = depth_index<K>(i, v);
      if (d >= 0) pair.solution(d) = Xc[v][i].z() / gauge;
    }
  }
  if constexpr (K::kRelaxed) pair.solution(K::kOffsetIndex) = 0.0;
  return pair;
}

/// Fresh random scene with exactly the points and cameras of one problem.
template <class K>
PsPair<K> sample_pair(const SceneConfig& base, std::mt19937_64& rng, std::vector<Pose>* gt_poses = nullptr) {
  SceneConfig cfg = base;
  cfg.n_points = K::kPoints;
  cfg.n_cameras = K::kViews;
  std::vector<int> cams(K::kViews), pts(K::kPoints);
  for (int i = 0; i < K::kViews; ++i) cams[i] = i;
  for (int i = 0; i < K::kPoints; ++i) pts[i] = i;
  for (int attempt = 0; attempt < 100; ++attempt) {
    const SceneModel scene = synth_scene(cfg, rng);
    try {
      PsPair<K> pair = fabricate_pair<K>(scene, cams, pts);
      if (gt_poses) {
        gt_poses->clear();
        for (int a = 0; a < K::kViews; ++a)
          for (int b = a + 1; b < K::kViews; ++b)
            gt_poses->push_back(relative_pose(scene.cameras[a], scene.cameras[b]));
      }
      return pair;
    } catch (const FabricationError&) {
    }
  }
  throw GenerationError("sample_pair: repeated degenerate fabrication");
}

/// Depth-lifted 3D point of (point, view) in the frame of that view.
template <class K>
Vector3d lifted_point(const PsPair<K>& pair, int point, int view) {
  const int c = coord_index<K>(point, view);
  Vector3d v(pair.problem(c), pair.problem(c + 1), 1.0);
  if constexpr (K::kRelaxed) {
    if (point == 0 && view == 0) v.y() += line_offset<K, double>(pair.solution);
  }
  return depth_of<K, double>(pair.solution, point, view) * v;
}

enum class Tetrahedron { A234, A235 };

/// Rotation R with X_b = R X_a estimated from the tetrahedron spanned by the
/// lifted points. The result is a proper rotation only for meaningful solutions.
template <class K>
Matrix3d recover_rotation(const PsPair<K>& pair, Tetrahedron which = Tetrahedron::A234, int view_a = 0,
                          int view_b = 1) {
  const std::array<int, 3> idx =
      which == Tetrahedron::A234 ? std::array<int, 3>{1, 2, 3} : std::array<int, 3>{1, 2, 4};
  if (idx[2] >= K::kPoints) throw DegeneracyError("recover_rotation: tetrahedron needs a fifth point");
  auto tetra = [&](int view) {
    Matrix3d A;
    const Vector3d X1 = lifted_point(pair, 0, view);
    for (int col = 0; col < 3; ++col) A.col(col) = lifted_point(pair, idx[col], view) - X1;
    return A;
  };
  const Matrix3d A1 = tetra(view_a);
  const Matrix3d A2 = tetra(view_b);
  if (std::abs(A1.determinant()) <= 1e-12) throw DegeneracyError("recover_rotation: singular tetrahedron");
  return A2 * A1.inverse();
}

/// Relative poses for every view pair (a < b): one for 5pt, three for Scranton
/// in the order (0,1), (0,2), (1,2).
template <class K>
std::vector<Pose> recover_pose(const PsPair<K>& pair) {
  std::vector<Pose> out;
  for (int a = 0; a < K::kViews; ++a) {
    for (int b = a + 1; b < K::kViews; ++b) {
      Pose p;
      p.R = recover_rotation(pair, Tetrahedron::A234, a, b);
      p.t = lifted_point(pair, 0, b) - p.R * lifted_point(pair, 0, a);
      out.push_back(p);
    }
  }
  return out;
}

/// The twisted-pair partner of a two-view solution, re-gauged to lambda_11 = 1.
inline PsPair<FivePoint> twisted_pair(const PsPair<FivePoint>& pair) {
  using K = FivePoint;
  const Pose pose = recover_pose(pair).front();
  const double tt = pose.t.squaredNorm();
  std::array<std::array<double, K::kPoints>, K::kViews> tw;
  for (int i = 0; i < K::kPoints; ++i) {
    const double den = lifted_point(pair, i, 1).squaredNorm() - lifted_point(pair, i, 0).squaredNorm();
    if (std::abs(den) < 1e-12 * std::max(1.0, tt))
      throw SymmetryUndefinedError("twisted_pair: zero denominator");
    for (int v = 0; v < K::kViews; ++v) {
      const double sign = v == 0 ? 1.0 : -1.0;
      tw[v][i] = sign * tt * depth_of<K, double>(pair.solution, i, v) / den;
    }
  }
  const double gauge = tw[0][0];
  if (gauge == 0) throw SymmetryUndefinedError("twisted_pair: zero gauge depth");
  PsPair<K> out = pair;
  for (int v = 0; v < K::kViews; ++v)
    for (int i = 0; i < K::kPoints; ++i) {
      const int d = depth_index<K>(i, v);
      if (d >= 0) out.solution(d) = tw[v][i] / gauge;
    }
  return out;
}

struct PoseError {
  double rot_deg = 0;
  double trans_deg = 0;
};

inline double rotation_angle_deg(const Matrix3d& R) {
  // Going through the quaternion avoids the acos precision loss near zero.
  const Eigen::AngleAxisd aa(Eigen::Quaterniond(R).normalized());
  return std::abs(aa.angle()) * 180.0 / std::numbers::pi;
}

inline double angle_between_deg(const Vector3d& a, const Vector3d& b) {
  const double na = a.norm(), nb = b.norm();
  if (na == 0 || nb == 0) throw UndefinedAngleError("angle between vectors: zero vector");
  // atan2 form stays accurate near 0 and 180 degrees.
  return std::atan2(a.cross(b).norm(), a.dot(b)) * 180.0 / std::numbers::pi;
}

inline PoseError pose_error(const Pose& estimate, const Pose& truth) {
  PoseError e;
  e.rot_deg = rotation_angle_deg(estimate.R.transpose() * truth.R);
  e.trans_deg = angle_between_deg(estimate.t, truth.t);
  return e;
}

}  // namespace hcpick
