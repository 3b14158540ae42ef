#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "hcpick/formulations.hpp"
#include "hcpick/scene.hpp"

using namespace hcpick;

namespace {

bool same_scene(const SceneModel& a, const SceneModel& b) {
  if (a.points.size() != b.points.size() || a.cameras.size() != b.cameras.size()) return false;
  for (std::size_t i = 0; i < a.points.size(); ++i)
    if (a.points[i] != b.points[i]) return false;
  for (std::size_t i = 0; i < a.cameras.size(); ++i)
    if (a.cameras[i].R != b.cameras[i].R || a.cameras[i].t != b.cameras[i].t) return false;
  return a.visibility == b.visibility;
}

SceneConfig config(int points, int cameras) {
  SceneConfig c;
  c.n_points = points;
  c.n_cameras = cameras;
  return c;
}

}  // namespace

TEST(Scene, FullVisibilityAndValidCameras) {
  const SceneModel s = synth_scene(config(5, 2), 7);
  ASSERT_EQ(s.points.size(), 5u);
  ASSERT_EQ(s.cameras.size(), 2u);
  for (int p = 0; p < 5; ++p)
    for (int c = 0; c < 2; ++c) {
      EXPECT_TRUE(s.visible(p, c));
      EXPECT_GT(s.cameras[c].to_camera(s.points[p]).z(), 0);
    }
  for (const auto& cam : s.cameras) {
    EXPECT_LE((cam.R.transpose() * cam.R - Matrix3d::Identity()).norm(), 1e-10);
    EXPECT_GT(cam.R.determinant(), 0);
  }
}

TEST(Scene, Deterministic) {
  EXPECT_TRUE(same_scene(synth_scene(config(5, 2), 7), synth_scene(config(5, 2), 7)));
  EXPECT_FALSE(same_scene(synth_scene(config(5, 2), 7), synth_scene(config(5, 2), 8)));
}

TEST(Scene, InvalidConfigThrows) {
  SceneConfig c = config(5, 2);
  c.depth_min = -1;
  EXPECT_THROW(synth_scene(c, 1), GenerationError);
}

TEST(Scene, ImpossibleBaselineThrows) {
  SceneConfig c = config(5, 2);
  c.baseline_min = 100;
  c.baseline_max = 200;
  EXPECT_THROW(synth_scene(c, 1), GenerationError);
}

TEST(Scene, EveryScrantonTupleOfALargeSceneIsExact) {
  const SceneModel s = synth_scene(config(100, 3), 1);
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> pick(0, 99);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<int> pts;
    while (pts.size() < 4) {
      const int p = pick(rng);
      if (std::find(pts.begin(), pts.end(), p) == pts.end()) pts.push_back(p);
    }
    const auto pair = fabricate_pair<Scranton>(s, {0, 1, 2}, pts);
    EXPECT_LT(evaluate<Scranton>(pair.problem, pair.solution).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_EQ(pair.solution(Scranton::kOffsetIndex), 0.0);
    EXPECT_GT(pair.solution.head(11).minCoeff(), 0.0);
  }
}

TEST(Fabrication, IdenticalCamerasGiveEqualDepths) {
  SceneModel s = synth_scene(config(5, 2), 3);
  s.cameras[1] = s.cameras[0];
  const auto pair = fabricate_pair<FivePoint>(s, {0, 1}, {0, 1, 2, 3, 4});
  EXPECT_DOUBLE_EQ(pair.solution(4), 1.0);
  for (int i = 1; i < 5; ++i) EXPECT_NEAR(pair.solution(i - 1), pair.solution(4 + i), 1e-15);
  EXPECT_LT(evaluate<FivePoint>(pair.problem, pair.solution).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_LT((recover_rotation(pair) - Matrix3d::Identity()).norm(), 1e-10);
}

TEST(Fabrication, GenericFivePointIsExact) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 500; ++i) {
    const auto pair = sample_pair<FivePoint>(SceneConfig{}, rng);
    EXPECT_LT(evaluate<FivePoint>(pair.problem, pair.solution).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT(std::abs(evaluate_constraint<FivePoint>(pair.problem, pair.solution, FivePoint::kDroppedEquation)),
              1e-10);
    EXPECT_GT(pair.solution.minCoeff(), 0.0);
  }
}

TEST(Fabrication, RejectsWrongCountsAndInvisiblePoints) {
  SceneModel s = synth_scene(config(5, 2), 3);
  EXPECT_THROW(fabricate_pair<FivePoint>(s, {0, 1}, {0, 1, 2, 3}), FabricationError);
  s.visibility.erase({2, 1});
  EXPECT_THROW(fabricate_pair<FivePoint>(s, {0, 1}, {0, 1, 2, 3, 4}), FabricationError);
}

TEST(Fabrication, RejectsCoincidentRays) {
  SceneModel s = synth_scene(config(5, 2), 3);
  const Vector3d c = s.cameras[0].center();
  s.points[1] = c + 0.5 * (s.points[0] - c);  // same ray from camera 0
  EXPECT_THROW(fabricate_pair<FivePoint>(s, {0, 1}, {0, 1, 2, 3, 4}), FabricationError);
}

TEST(PoseRecovery, FabricatedPairMatchesScene) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    std::vector<Pose> gt;
    const auto pair = sample_pair<FivePoint>(SceneConfig{}, rng, &gt);
    const Matrix3d R234 = recover_rotation(pair, Tetrahedron::A234);
    const Matrix3d R235 = recover_rotation(pair, Tetrahedron::A235);
    EXPECT_LT((R234 - gt[0].R).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT((R234 - R235).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_NEAR(R234.determinant(), 1.0, 1e-8);
    const Pose pose = recover_pose(pair).front();
    EXPECT_LT(angle_between_deg(pose.t, gt[0].t) * std::numbers::pi / 180, 1e-6);
    // Reprojection: lifted points of view 0 map onto the rays of view 1.
    for (int p = 0; p < 5; ++p) {
      const Vector3d X1 = pose.R * lifted_point(pair, p, 0) + pose.t;
      const int c = coord_index<FivePoint>(p, 1);
      EXPECT_NEAR(X1.x() / X1.z(), pair.problem(c), 1e-6);
      EXPECT_NEAR(X1.y() / X1.z(), pair.problem(c + 1), 1e-6);
    }
  }
}

TEST(PoseRecovery, ScrantonGivesThreePoses) {
  std::mt19937_64 rng(6);
  std::vector<Pose> gt;
  const auto pair = sample_pair<Scranton>(SceneConfig{}, rng, &gt);
  const auto poses = recover_pose(pair);
  ASSERT_EQ(poses.size(), 3u);
  for (int k = 0; k < 3; ++k) {
    const PoseError e = pose_error(poses[k], gt[k]);
    EXPECT_LT(e.rot_deg, 1e-6);
    EXPECT_LT(e.trans_deg, 1e-6);
  }
  EXPECT_THROW(recover_rotation(pair, Tetrahedron::A235), DegeneracyError);
}

TEST(PoseRecovery, SignFlippedSecondViewHasNegativeDeterminant) {
  std::mt19937_64 rng(7);
  auto pair = sample_pair<FivePoint>(SceneConfig{}, rng);
  pair.solution.tail(5) *= -1.0;
  EXPECT_NEAR(recover_rotation(pair).determinant(), -1.0, 1e-8);
  // Still computed, no validity filtering at this level.
  EXPECT_NO_THROW(recover_pose(pair));
}

TEST(PoseRecovery, IdentityCase) {
  SceneModel s = synth_scene(config(5, 2), 9);
  s.cameras[1] = s.cameras[0];
  const auto pose = recover_pose(fabricate_pair<FivePoint>(s, {0, 1}, {0, 1, 2, 3, 4})).front();
  EXPECT_LT((pose.R - Matrix3d::Identity()).norm(), 1e-10);
  EXPECT_LT(pose.t.norm(), 1e-10);
}

TEST(PoseRecovery, SingularTetrahedronThrows) {
  PsPair<FivePoint> pair;
  pair.problem.setZero();
  pair.solution.setOnes();
  EXPECT_THROW(recover_rotation(pair), DegeneracyError);
}

namespace {

// A pair where the second camera is farther from every point than the first,
// so all twisted-pair denominators are positive.
PsPair<FivePoint> far_second_camera_pair(std::mt19937_64& rng) {
  for (;;) {
    SceneConfig cfg;
    cfg.depth_min = 4;
    cfg.depth_max = 8;
    SceneModel s = synth_scene(cfg, rng);
    const auto pair = fabricate_pair<FivePoint>(s, {0, 1}, {0, 1, 2, 3, 4});
    bool ok = true;
    for (int i = 0; i < 5; ++i)
      ok = ok && lifted_point(pair, i, 1).squaredNorm() > 1.2 * lifted_point(pair, i, 0).squaredNorm();
    if (ok) return pair;
  }
}

}  // namespace

TEST(TwistedPair, InvolutionSignsAndResidual) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pair = far_second_camera_pair(rng);
    const auto tw = twisted_pair(pair);
    EXPECT_LT(evaluate<FivePoint>(tw.problem, tw.solution).cwiseAbs().maxCoeff(), 1e-8);
    for (int i = 0; i < 5; ++i) {
      EXPECT_EQ(std::signbit(depth_of<FivePoint, double>(tw.solution, i, 1)),
                !std::signbit(depth_of<FivePoint, double>(pair.solution, i, 1)));
      EXPECT_EQ(std::signbit(depth_of<FivePoint, double>(tw.solution, i, 0)),
                std::signbit(depth_of<FivePoint, double>(pair.solution, i, 0)));
    }
    const auto back = twisted_pair(tw);
    EXPECT_LT((back.solution - pair.solution).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(TwistedPair, ZeroDenominatorThrows) {
  SceneModel s = synth_scene(config(5, 2), 12);
  s.cameras[1] = s.cameras[0];
  const auto pair = fabricate_pair<FivePoint>(s, {0, 1}, {0, 1, 2, 3, 4});
  EXPECT_THROW(twisted_pair(pair), SymmetryUndefinedError);
}

TEST(PoseErrorMetric, Basics) {
  Pose a;
  a.R = axis_angle(Vector3d(1, 2, 3), 0.4);
  a.t = Vector3d(1, 0, 0.5);
  PoseError e = pose_error(a, a);
  EXPECT_NEAR(e.rot_deg, 0, 1e-12);
  EXPECT_NEAR(e.trans_deg, 0, 1e-12);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (int i = 0; i < 20; ++i) {
    Pose b = a;
    b.R = axis_angle(Vector3d(n(rng), n(rng), n(rng)), 10 * std::numbers::pi / 180) * a.R;
    b.t = 3.0 * a.t;  // scale does not matter
    e = pose_error(b, a);
    EXPECT_NEAR(e.rot_deg, 10.0, 1e-6);
    EXPECT_NEAR(e.trans_deg, 0.0, 1e-6);
    const PoseError rev = pose_error(a, b);
    EXPECT_NEAR(rev.rot_deg, e.rot_deg, 1e-9);
    EXPECT_NEAR(rev.trans_deg, e.trans_deg, 1e-9);
  }
  Pose c = a;
  c.t = -a.t;
  EXPECT_NEAR(pose_error(c, a).trans_deg, 180.0, 1e-9);
  c.t.setZero();
  EXPECT_THROW(pose_error(c, a), UndefinedAngleError);
}
