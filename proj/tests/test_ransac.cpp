#include <gtest/gtest.h>

#include <random>

#include "hcpick/ransac.hpp"

using namespace hcpick;

namespace {

template <class K>
class RansacTest : public ::testing::Test {};
using Kinds = ::testing::Types<FivePoint, Scranton>;
TYPED_TEST_SUITE(RansacTest, Kinds);

// Sampson distance as |r| / |grad r| with the gradient of the algebraic
// residual taken by central differences over the four image coordinates.
double sampson_oracle(const Pose& pose, const Vector2d& xa, const Vector2d& xb) {
  const Matrix3d E = skew(pose.t) * pose.R;
  auto r = [&](const Eigen::Vector4d& x) {
    return Vector3d(x(2), x(3), 1).dot(E * Vector3d(x(0), x(1), 1));
  };
  const Eigen::Vector4d x0(xa.x(), xa.y(), xb.x(), xb.y());
  Eigen::Vector4d g;
  for (int k = 0; k < 4; ++k) {
    Eigen::Vector4d d = Eigen::Vector4d::Zero();
    d(k) = 1e-6;
    g(k) = (r(x0 + d) - r(x0 - d)) / 2e-6;
  }
  return std::abs(r(x0)) / g.norm();
}

// Matches that contain exactly one minimal problem, noise free, together with
// the normalized fabricated pair as the only anchor. Every sample then
// normalizes to the anchor problem itself.
template <class K>
std::pair<MatchSet<K>, std::vector<PsPair<K>>> exact_minimal_case(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MatchSet<K> m;
  const PsPair<K> pair = sample_pair<K>(SceneConfig{}, rng, &m.gt);
  for (int j = 0; j < K::kPoints; ++j) {
    std::array<Vector2d, K::kViews> row;
    for (int v = 0; v < K::kViews; ++v) row[v] = pair.problem.template segment<2>(coord_index<K>(j, v));
    m.points.push_back(row);
    m.gt_inlier.push_back(true);
  }
  return {m, {normalize_pair<K>(pair)}};
}

MlpModel always_trash(int n_anchors, int dim) {
  MlpModel m = make_mlp(Kind::FivePoint, dim, n_anchors, 1, 4, 1);
  m.layers.back().W.setZero();
  m.layers.back().b.setZero();
  m.layers.back().b(n_anchors) = 1.0;
  return m;
}

}  // namespace

TEST(Sampson, ExactInlierAndEpipolarLineInvariance) {
  std::mt19937_64 rng(1);
  std::vector<Pose> gt;
  for (int trial = 0; trial < 50; ++trial) {
    const auto pair = sample_pair<FivePoint>(SceneConfig{}, rng, &gt);
    const Pose& pose = gt[0];
    const Vector2d xa = pair.problem.segment<2>(coord_index<FivePoint>(2, 0));
    const Vector2d xb = pair.problem.segment<2>(coord_index<FivePoint>(2, 1));
    EXPECT_LT(sampson_distance(pose, xa, xb), 1e-10);
    // Slide xb along its epipolar line.
    const Vector3d l = skew(pose.t) * pose.R * Vector3d(xa.x(), xa.y(), 1);
    const Vector2d dir(-l.y(), l.x());
    EXPECT_LT(sampson_distance(pose, xa, xb + 0.1 * dir.normalized()), 1e-10);
  }
}

TEST(Sampson, MatchesGradientOracle) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0, 0.3);
  for (int trial = 0; trial < 200; ++trial) {
    Pose p;
    p.R = axis_angle(Vector3d(n(rng), n(rng), n(rng)), n(rng));
    p.t = Vector3d(n(rng), n(rng), n(rng));
    const Vector2d a(n(rng), n(rng)), b(n(rng), n(rng));
    const double d = sampson_distance(p, a, b);
    EXPECT_NEAR(d, sampson_oracle(p, a, b), 1e-7 * std::max(1.0, d));
  }
}

TYPED_TEST(RansacTest, DenormalizedPosesMatchGroundTruth) {
  using K = TypeParam;
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Pose> gt;
    const auto pair = sample_pair<K>(SceneConfig{}, rng, &gt);
    NormalizationRecord<K> rec;
    const auto np = normalize_pair<K>(pair, Strategy::A, &rec);
    const auto poses = denormalize_poses<K>(recover_pose(np), rec);
    ASSERT_EQ(poses.size(), gt.size());
    for (std::size_t k = 0; k < gt.size(); ++k) {
      const PoseError e = pose_error(poses[k], gt[k]);
      EXPECT_LT(e.rot_deg, 1e-6);
      EXPECT_LT(e.trans_deg, 1e-6);
    }
  }
}

TYPED_TEST(RansacTest, ExactDataSolvedOnFirstSample) {
  using K = TypeParam;
  auto [matches, anchors] = exact_minimal_case<K>(4);
  SolverResources<K> res;
  res.anchors = &anchors;
  RansacConfig cfg;
  cfg.n_samples = 3;
  RansacStats stats;
  const RansacBest best = run<K>(matches, Solver::FixedAnchorHc, res, cfg, &stats);
  EXPECT_EQ(best.sample, 0);
  EXPECT_EQ(stats.valid_candidates, 3);
  for (bool in : best.score.inliers) EXPECT_TRUE(in);
  const PoseError e = worst_pose_error(best.poses, matches.gt);
  EXPECT_LT(e.rot_deg, 1e-6);
  EXPECT_LT(e.trans_deg, 1e-6);
}

TEST(Ransac, NonMeaningfulSolutionsAreRejected) {
  std::mt19937_64 rng(5);
  auto pair = sample_pair<FivePoint>(SceneConfig{}, rng);
  EXPECT_TRUE(meaningful(pair, recover_pose(pair)));
  auto flipped = pair;
  flipped.solution.tail(5) *= -1.0;
  EXPECT_FALSE(meaningful(flipped, recover_pose(flipped)));
  auto one_negative = pair;
  one_negative.solution(2) = -0.5;
  EXPECT_FALSE(meaningful(one_negative, recover_pose(pair)));
}

TEST(Ransac, OutliersOnlyGiveNoModelOrTinySupport) {
  std::mt19937_64 rng(6);
  MatchSynthConfig mc;
  mc.outlier_fraction = 0.0;
  MatchSet<FivePoint> m = synth_matches<FivePoint>(mc, rng);
  // Replace every correspondence by unrelated random points.
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  for (auto& row : m.points)
    for (auto& x : row) x = Vector2d(u(rng), u(rng));
  std::vector<PsPair<FivePoint>> anchors;
  for (int i = 0; i < 3; ++i) anchors.push_back(normalize_pair<FivePoint>(sample_pair<FivePoint>(SceneConfig{}, rng)));
  SolverResources<FivePoint> res;
  res.anchors = &anchors;
  RansacConfig cfg;
  cfg.n_samples = 200;
  try {
    const RansacBest best = run<FivePoint>(m, Solver::FixedAnchorHc, res, cfg);
    EXPECT_LT(best.score.count, 0.15 * m.size());
  } catch (const NoModelError&) {
    SUCCEED();
  }
}

TEST(Ransac, SynthesizedMatchesAgreeWithGroundTruth) {
  std::mt19937_64 rng(7);
  MatchSynthConfig mc;
  const auto m = synth_matches<Scranton>(mc, rng);
  ASSERT_EQ(m.size(), 200u);
  int inliers = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m.gt_inlier[i]) continue;
    ++inliers;
    for (int k = 0, a = 0; a < 3; ++a)
      for (int b = a + 1; b < 3; ++b, ++k)
        EXPECT_LT(sampson_distance(m.gt[k], m.points[i][a], m.points[i][b]), 6.0 / mc.focal);
  }
  EXPECT_EQ(inliers, 100);
  const auto score = score_epipolar<Scranton>(m.gt, m, 3.0 / mc.focal);
  EXPECT_GE(score.count, 95.0);
}

TEST(Ransac, DeterministicAndProgressiveScoresNeverDrop) {
  std::mt19937_64 rng(8);
  MatchSynthConfig mc;
  const auto m = synth_matches<FivePoint>(mc, rng);
  std::vector<PsPair<FivePoint>> anchors;
  for (int i = 0; i < 2; ++i) anchors.push_back(normalize_pair<FivePoint>(sample_pair<FivePoint>(SceneConfig{}, rng)));
  SolverResources<FivePoint> res;
  res.anchors = &anchors;
  RansacConfig cfg;
  const std::vector<int> cps = {25, 50, 100, 200, 400};
  const auto a = run_progressive<FivePoint>(m, Solver::FixedAnchorHc, res, cfg, cps);
  const auto b = run_progressive<FivePoint>(m, Solver::FixedAnchorHc, res, cfg, cps);
  double prev = -1;
  for (std::size_t k = 0; k < cps.size(); ++k) {
    ASSERT_EQ(a[k].has_value(), b[k].has_value());
    if (!a[k]) continue;
    EXPECT_EQ(a[k]->sample, b[k]->sample);
    EXPECT_EQ(a[k]->score.inliers, b[k]->score.inliers);
    EXPECT_GE(a[k]->score.count, prev);
    prev = a[k]->score.count;
  }
}

TYPED_TEST(RansacTest, BenchmarkExtremes) {
  using K = TypeParam;
  std::vector<MatchSet<K>> data;
  std::vector<PsPair<K>> anchors;
  // Clean minimal data: each set gets its own exact anchor, so run them one by one.
  for (std::uint64_t s = 0; s < 5; ++s) {
    auto [m, a] = exact_minimal_case<K>(10 + s);
    SolverResources<K> res;
    res.anchors = &a;
    const auto rows = benchmark<K>({m}, {Solver::FixedAnchorHc}, res, RansacConfig{}, {1});
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_DOUBLE_EQ(rows[0].success_pct, 100.0);
    data.push_back(m);
    anchors.push_back(a.front());
  }
  // A classifier that always answers TRASH never produces a pose.
  const MlpModel trash = always_trash(int(anchors.size()), K::kProblemDim);
  SolverResources<K> res;
  res.anchors = &anchors;
  res.model = &trash;
  const auto rows = benchmark<K>(data, {Solver::MlpHc}, res, RansacConfig{}, {1, 10});
  for (const auto& r : rows) EXPECT_DOUBLE_EQ(r.success_pct, 0.0);
}

TEST(Ransac, RequiresModelAndAnchors) {
  auto [m, a] = exact_minimal_case<FivePoint>(20);
  SolverResources<FivePoint> res;
  EXPECT_THROW(run<FivePoint>(m, Solver::FixedAnchorHc, res, RansacConfig{}), NoModelError);
  res.anchors = &a;
  EXPECT_THROW(run<FivePoint>(m, Solver::MlpHc, res, RansacConfig{}), NoModelError);
}
