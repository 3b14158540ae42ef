#include <gtest/gtest.h>

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>

#include "hcpick/formulations.hpp"
#include "hcpick/normalizer.hpp"
#include "hcpick/scene.hpp"
#include "hcpick/tracker.hpp"

using namespace hcpick;
using Eigen::Matrix3d;
using Eigen::Vector3d;

namespace {

template <class K>
class NormalizerTest : public ::testing::Test {};
using Kinds = ::testing::Types<FivePoint, Scranton>;
TYPED_TEST_SUITE(NormalizerTest, Kinds);

template <class K>
Vector3d ray_of(const ProblemVec<K>& p, int point, int view) {
  const int c = coord_index<K>(point, view);
  return Vector3d(p(c), p(c + 1), 1.0).normalized();
}

// Applies a rotation to every ray of one camera and re-projects.
template <class K>
ProblemVec<K> rotate_view(const ProblemVec<K>& p, int view, const Matrix3d& R) {
  ProblemVec<K> out = p;
  for (int j = 0; j < K::kPoints; ++j) {
    const int c = coord_index<K>(j, view);
    const Vector3d w = R * Vector3d(p(c), p(c + 1), 1.0);
    out(c) = w.x() / w.z();
    out(c + 1) = w.y() / w.z();
  }
  return out;
}

template <class K>
ProblemVec<K> permute_points(const ProblemVec<K>& p, const std::array<int, K::kPoints>& perm) {
  ProblemVec<K> out;
  for (int v = 0; v < K::kViews; ++v)
    for (int j = 0; j < K::kPoints; ++j)
      out.template segment<2>(coord_index<K>(j, v)) = p.template segment<2>(coord_index<K>(perm[j], v));
  return out;
}

Matrix3d small_rotation(std::mt19937_64& rng, double max_rad) {
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> a(-max_rad, max_rad);
  return axis_angle(Vector3d(n(rng), n(rng), n(rng)), a(rng));
}

constexpr Strategy kAll[] = {Strategy::A, Strategy::B, Strategy::C, Strategy::D, Strategy::E};

}  // namespace

TYPED_TEST(NormalizerTest, MeanRayOnAxisAndReferenceOnPositiveX) {
  using K = TypeParam;
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const auto pair = sample_pair<K>(SceneConfig{}, rng);
    const auto n = normalize<K>(pair.problem);
    for (int v = 0; v < K::kViews; ++v) {
      Vector3d m = Vector3d::Zero();
      for (int j = 0; j < K::kPoints; ++j) m += ray_of<K>(n.problem, j, v);
      m.normalize();
      EXPECT_LT((m - Vector3d::UnitZ()).norm(), 1e-10);
      const int c = coord_index<K>(0, v);
      EXPECT_LT(std::abs(n.problem(c + 1)), 1e-12);
      EXPECT_GT(n.problem(c), 0.0);
    }
    for (int v = 0; v < K::kViews; ++v) {
      EXPECT_LT((n.record.rotation[v].transpose() * n.record.rotation[v] - Matrix3d::Identity()).norm(), 1e-12);
      EXPECT_NEAR(n.record.rotation[v].determinant(), 1.0, 1e-12);
    }
    auto cp = n.record.camera_perm;
    std::sort(cp.begin(), cp.end());
    for (int v = 0; v < K::kViews; ++v) EXPECT_EQ(cp[v], v);
    auto pp = n.record.point_perm;
    std::sort(pp.begin(), pp.end());
    for (int j = 0; j < K::kPoints; ++j) EXPECT_EQ(pp[j], j);
  }
}

TYPED_TEST(NormalizerTest, PointsAreCounterclockwiseInFirstView) {
  using K = TypeParam;
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = normalize<K>(sample_pair<K>(SceneConfig{}, rng).problem);
    double prev = -1;
    for (int j = 1; j < K::kPoints; ++j) {
      const int c = coord_index<K>(j, 0);
      double a = std::atan2(n.problem(c + 1), n.problem(c));
      if (a < 0) a += 2 * std::numbers::pi;
      EXPECT_GE(a, prev);
      prev = a;
    }
  }
}

TEST(Normalizer, ScrantonCamerasOrderedByReferenceAngle) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const auto n = normalize<Scranton>(sample_pair<Scranton>(SceneConfig{}, rng).problem);
    for (int v = 1; v < 3; ++v)
      EXPECT_GE(n.problem(coord_index<Scranton>(0, v - 1)), n.problem(coord_index<Scranton>(0, v)));
  }
}

TEST(Normalizer, FivePointReferenceCameraComesFirst) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pair = sample_pair<FivePoint>(SceneConfig{}, rng);
    const auto n = normalize<FivePoint>(pair.problem);
    // The reference ray is the widest of all rays measured from the means.
    const double ref = std::atan(n.problem(coord_index<FivePoint>(0, 0)));
    for (int v = 0; v < 2; ++v)
      for (int j = 0; j < 5; ++j) {
        const Vector3d r = ray_of<FivePoint>(n.problem, j, v);
        EXPECT_LE(std::atan2(r.head<2>().norm(), r.z()), ref + 1e-12);
      }
  }
}

TYPED_TEST(NormalizerTest, InvariantUnderRotationsAndPermutations) {
  using K = TypeParam;
  std::mt19937_64 rng(5);
  for (Strategy s : kAll) {
    for (int trial = 0; trial < 100; ++trial) {
      const auto pair = sample_pair<K>(SceneConfig{}, rng);
      const auto base = normalize<K>(pair.problem, s).problem;

      ProblemVec<K> g = pair.problem;
      for (int v = 0; v < K::kViews; ++v) g = rotate_view<K>(g, v, small_rotation(rng, 0.3));
      std::array<int, K::kPoints> perm;
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      g = permute_points<K>(g, perm);
      if constexpr (K::kViews == 2) {
        if (trial % 2) {
          ProblemVec<K> swapped;
          swapped << g.template segment<10>(10), g.template segment<10>(0);
          g = swapped;
        }
      }
      EXPECT_LT((normalize<K>(g, s).problem - base).cwiseAbs().maxCoeff(), 1e-9)
          << "strategy " << strategy_name(s) << " trial " << trial;
    }
  }
}

TYPED_TEST(NormalizerTest, Idempotent) {
  using K = TypeParam;
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto once = normalize<K>(sample_pair<K>(SceneConfig{}, rng).problem);
    const auto twice = normalize<K>(once.problem);
    EXPECT_LT((twice.problem - once.problem).cwiseAbs().maxCoeff(), 1e-10);
    for (int v = 0; v < K::kViews; ++v) {
      EXPECT_LT((twice.record.rotation[v] - Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_EQ(twice.record.camera_perm[v], v);
    }
    for (int j = 0; j < K::kPoints; ++j) EXPECT_EQ(twice.record.point_perm[j], j);
  }
}

TYPED_TEST(NormalizerTest, RoundTripThroughNormalizedFrame) {
  using K = TypeParam;
  std::mt19937_64 rng(7);
  for (Strategy s : kAll) {
    for (int trial = 0; trial < 100; ++trial) {
      const auto pair = sample_pair<K>(SceneConfig{}, rng);
      NormalizationRecord<K> rec;
      const auto np = normalize_pair<K>(pair, s, &rec);
      // The forward-mapped solution solves the normalized problem exactly.
      EXPECT_LT(evaluate<K>(np.problem, np.solution).cwiseAbs().maxCoeff(), 1e-8);
      const auto back = denormalize_solution<K>(np.solution, rec);
      EXPECT_LT((back - pair.solution).cwiseAbs().maxCoeff(), 1e-8);
      EXPECT_LT(evaluate<K>(pair.problem, back).cwiseAbs().maxCoeff(), 1e-8);
    }
  }
}

TYPED_TEST(NormalizerTest, NoneIsIdentity) {
  using K = TypeParam;
  std::mt19937_64 rng(8);
  const auto pair = sample_pair<K>(SceneConfig{}, rng);
  const auto n = normalize<K>(pair.problem, Strategy::None);
  EXPECT_TRUE((n.problem.array() == pair.problem.array()).all());
  EXPECT_TRUE((denormalize_solution<K>(pair.solution, n.record).array() == pair.solution.array()).all());
}

TEST(Normalizer, PermutedCameraRecordSwapsDepthBlocks) {
  NormalizationRecord<FivePoint> rec;
  rec.rotation = {Matrix3d::Identity(), Matrix3d::Identity()};
  rec.camera_perm = {1, 0};
  rec.point_perm = {0, 1, 2, 3, 4};
  for (auto& row : rec.depth_scale) row.fill(1.0);
  SolutionVec<FivePoint> s;
  // Normalized depths: view 0 = (1, 2, 3, 4, 5), view 1 = (2, 4, 6, 8, 10).
  s << 2, 3, 4, 5, 2, 4, 6, 8, 10;
  // Original view 0 is normalized view 1; the new gauge depth is 2.
  SolutionVec<FivePoint> expected;
  expected << 2, 3, 4, 5, 0.5, 1, 1.5, 2, 2.5;
  EXPECT_LT((denormalize_solution<FivePoint>(s, rec) - expected).cwiseAbs().maxCoeff(), 1e-15);

  s(4) = -2;
  EXPECT_THROW(denormalize_solution<FivePoint>(s, rec), GaugeError);
}

TEST(Normalizer, ZeroSpreadThrows) {
  ProblemVec<FivePoint> p;
  for (int i = 0; i < 10; ++i) p.segment<2>(2 * i) << 0.1, -0.2;
  EXPECT_THROW(normalize<FivePoint>(p), NormalizationError);
}

TEST(Normalizer, StrategyNamesRoundTrip) {
  for (Strategy s : {Strategy::None, Strategy::A, Strategy::B, Strategy::C, Strategy::D, Strategy::E})
    EXPECT_EQ(parse_strategy(strategy_name(s)), s);
  EXPECT_THROW(parse_strategy("F"), ParseError);
}

TYPED_TEST(NormalizerTest, CostIsSmallNextToTracking) {
  using K = TypeParam;
  std::mt19937_64 rng(9);
  std::vector<PsPair<K>> pairs;
  for (int i = 0; i < 200; ++i) pairs.push_back(sample_pair<K>(SceneConfig{}, rng));

  using clock = std::chrono::steady_clock;
  double sink = 0;
  const auto t0 = clock::now();
  for (int rep = 0; rep < 20; ++rep)
    for (const auto& p : pairs) sink += normalize<K>(p.problem).problem(0);
  const double norm_time = std::chrono::duration<double>(clock::now() - t0).count() / (20.0 * pairs.size());

  const auto t1 = clock::now();
  for (std::size_t i = 0; i + 1 < pairs.size(); ++i)
    sink += track_segment<K>(pairs[i], pairs[i + 1].problem).solution(0);
  const double track_time = std::chrono::duration<double>(clock::now() - t1).count() / (pairs.size() - 1);

  EXPECT_TRUE(std::isfinite(sink));
  EXPECT_LT(norm_time, 0.05 * track_time) << norm_time * 1e6 << " us vs " << track_time * 1e6 << " us";
}
