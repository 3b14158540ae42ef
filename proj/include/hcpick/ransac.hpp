#pragma once

// RANSAC around the pick-and-solve solver. Each sample draws a minimal subset
// of the matches, normalizes it, picks start anchors, tracks, maps the
// solution back and scores the recovered relative pose(s) with the Sampson
// distance.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hcpick/anchors.hpp"
#include "hcpick/error.hpp"
#include "hcpick/kinds.hpp"
#include "hcpick/normalizer.hpp"
#include "hcpick/scene.hpp"
#include "hcpick/selector.hpp"
#include "hcpick/tracker.hpp"

namespace hcpick {

/// Calibrated correspondences across all views of kind K. Poses, when known,
/// follow the order of recover_pose: (0,1) then (0,2), (1,2).
template <class K>
struct MatchSet {
  std::vector<std::array<Vector2d, K::kViews>> points;
  std::vector<Pose> gt;
  std::vector<bool> gt_inlier;  // synthetic data only

  std::size_t size() const { return points.size(); }
};

struct MatchSynthConfig {
  int n_matches = 200;
  double outlier_fraction = 0.5;
  double noise_px = 1.0;
  double focal = 1000.0;
  SceneConfig scene;
};

/// Matches of one random scene. Inliers are noisy projections of scene
/// points; outliers are independent uniform image points in every view.
template <class K>
MatchSet<K> synth_matches(const MatchSynthConfig& cfg, std::mt19937_64& rng) {
  const int n_out = static_cast<int>(std::lround(cfg.outlier_fraction * cfg.n_matches));
  const int n_in = cfg.n_matches - n_out;
  if (n_in < K::kPoints || cfg.focal <= 0 || cfg.noise_px < 0) throw GenerationError("synth_matches: bad config");
  SceneConfig sc = cfg.scene;
  sc.n_points = n_in;
  sc.n_cameras = K::kViews;
  const SceneModel scene = synth_scene(sc, rng);

  MatchSet<K> m;
  for (int a = 0; a < K::kViews; ++a)
    for (int b = a + 1; b < K::kViews; ++b) m.gt.push_back(relative_pose(scene.cameras[a], scene.cameras[b]));

  std::normal_distribution<double> noise(0.0, cfg.noise_px / cfg.focal);
  const double half = std::tan(sc.fov_deg * std::numbers::pi / 360.0) / std::sqrt(2.0);
  std::uniform_real_distribution<double> img(-half, half);
  std::vector<std::pair<std::array<Vector2d, K::kViews>, bool>> all;
  for (int p = 0; p < n_in; ++p) {
    std::array<Vector2d, K::kViews> row;
    for (int v = 0; v < K::kViews; ++v) {
      const Vector3d X = scene.cameras[v].to_camera(scene.points[p]);
      row[v] = Vector2d(X.x() / X.z() + noise(rng), X.y() / X.z() + noise(rng));
    }
    all.emplace_back(row, true);
  }
  for (int p = 0; p < n_out; ++p) {
    std::array<Vector2d, K::kViews> row;
    for (int v = 0; v < K::kViews; ++v) row[v] = Vector2d(img(rng), img(rng));
    all.emplace_back(row, false);
  }
  std::shuffle(all.begin(), all.end(), rng);
  for (auto& [row, inl] : all) {
    m.points.push_back(row);
    m.gt_inlier.push_back(inl);
  }
  return m;
}

inline Matrix3d skew(const Vector3d& t) {
  Matrix3d S;
  S << 0, -t.z(), t.y(), t.z(), 0, -t.x(), -t.y(), t.x(), 0;
  return S;
}

/// First-order geometric (Sampson) distance of x_a <-> x_b to the epipolar
/// constraint of E = [t]x R, in normalized image units.
inline double sampson_distance(const Pose& pose, const Vector2d& xa, const Vector2d& xb) {
  const Matrix3d E = skew(pose.t) * pose.R;
  const Vector3d a(xa.x(), xa.y(), 1.0), b(xb.x(), xb.y(), 1.0);
  const Vector3d Ea = E * a, Etb = E.transpose() * b;
  const double r = b.dot(Ea);
  const double den = Ea.head<2>().squaredNorm() + Etb.head<2>().squaredNorm();
  if (den <= 0) return std::numeric_limits<double>::infinity();
  return std::abs(r) / std::sqrt(den);
}

struct EpipolarScore {
  double count = 0;          // mean inlier count over the view pairs
  std::vector<bool> inliers; // inlier in every view pair
};

/// Scores a pose set against all matches. threshold is in normalized units.
template <class K>
EpipolarScore score_epipolar(const std::vector<Pose>& poses, const MatchSet<K>& matches, double threshold) {
  EpipolarScore s;
  s.inliers.assign(matches.size(), true);
  std::size_t total = 0, k = 0;
  for (int a = 0; a < K::kViews; ++a)
    for (int b = a + 1; b < K::kViews; ++b, ++k) {
      const Pose& pose = poses.at(k);
      for (std::size_t i = 0; i < matches.size(); ++i) {
        const bool in = sampson_distance(pose, matches.points[i][a], matches.points[i][b]) < threshold;
        total += in;
        if (!in) s.inliers[i] = false;
      }
    }
  s.count = double(total) / double(k);
  return s;
}

enum class Solver { MlpHc, FixedAnchorHc, NewtonBaseline };

inline std::string_view solver_name(Solver s) {
  switch (s) {
    case Solver::MlpHc: return "mlp_hc";
    case Solver::FixedAnchorHc: return "fixed_anchor_hc";
    case Solver::NewtonBaseline: return "newton_baseline";
  }
  return "?";
}

inline Solver parse_solver(std::string_view s) {
  if (s == "mlp_hc" || s == "mlp") return Solver::MlpHc;
  if (s == "fixed_anchor_hc" || s == "fixed") return Solver::FixedAnchorHc;
  if (s == "newton_baseline" || s == "newton") return Solver::NewtonBaseline;
  throw ParseError("unknown solver '" + std::string(s) + "'");
}

/// What a solver needs besides the data. The MLP is required by MlpHc and
/// NewtonBaseline (which replaces tracking by Newton iterations started at the
/// selected anchor's solution). FixedAnchorHc always starts at anchor 0.
template <class K>
struct SolverResources {
  const std::vector<PsPair<K>>* anchors = nullptr;
  const MlpModel* model = nullptr;
  TrackSettings track;
  int tracks_per_problem = 1;
  int newton_iters = 15;
};

struct RansacConfig {
  int n_samples = 800;
  double threshold_px = 3.0;
  double focal = 1000.0;
  std::uint64_t seed = 1;

  double threshold() const { return threshold_px / focal; }
};

struct RansacStats {
  int samples = 0;
  int skipped = 0;           // TRASH predictions
  int candidates = 0;        // endpoints returned by the solver
  int valid_candidates = 0;  // positive depths and proper rotations
  double total_time = 0;     // seconds
  double valid_rate() const { return samples ? double(valid_candidates) / samples : 0.0; }
  double mean_sample_time() const { return samples ? total_time / samples : 0.0; }
};

struct RansacBest {
  std::vector<Pose> poses;
  EpipolarScore score;
  int sample = -1;  // index of the sample that produced it
};

/// Poses of the normalized cameras expressed for the original cameras, in
/// recover_pose order.
template <class K>
std::vector<Pose> denormalize_poses(const std::vector<Pose>& normalized, const NormalizationRecord<K>& rec) {
  constexpr int V = K::kViews;
  std::array<int, V> inv;
  for (int n = 0; n < V; ++n) inv[rec.camera_perm[n]] = n;
  auto pair_index = [](int a, int b) {
    int k = 0;
    for (int i = 0; i < V; ++i)
      for (int j = i + 1; j < V; ++j, ++k)
        if (i == a && j == b) return k;
    return -1;
  };
  std::vector<Pose> out;
  for (int a = 0; a < V; ++a)
    for (int b = a + 1; b < V; ++b) {
      const int na = inv[a], nb = inv[b];
      Pose p = normalized.at(pair_index(std::min(na, nb), std::max(na, nb)));
      if (na > nb) {  // invert: X_na = R^T X_nb - R^T t
        p.t = -p.R.transpose() * p.t;
        p.R.transposeInPlace();
      }
      Pose q;
      q.R = rec.rotation[b].transpose() * p.R * rec.rotation[a];
      q.t = rec.rotation[b].transpose() * p.t;
      out.push_back(q);
    }
  return out;
}

/// Depths positive and every recovered rotation proper within 1e-6.
template <class K>
bool meaningful(const PsPair<K>& pair, const std::vector<Pose>& poses) {
  for (int v = 0; v < K::kViews; ++v)
    for (int j = 0; j < K::kPoints; ++j)
      if (!(depth_of<K, double>(pair.solution, j, v) > 0)) return false;
  for (const auto& p : poses)
    if (!(std::abs(p.R.determinant() - 1.0) <= 1e-6)) return false;
  return true;
}

/// Candidate endpoints for one normalized problem. Returns nullopt on TRASH.
template <class K>
std::optional<std::vector<SolutionVec<K>>> solve_normalized(const ProblemVec<K>& problem, Solver solver,
                                                            const SolverResources<K>& res) {
  if (!res.anchors || res.anchors->empty()) throw NoModelError("solver: no anchors loaded");
  std::vector<int> starts;
  if (solver == Solver::FixedAnchorHc) {
    starts = {0};
  } else {
    if (!res.model) throw NoModelError("solver: no classifier loaded");
    const Selection sel = select(*res.model, VectorXd(problem),
                                 std::min<int>(res.tracks_per_problem, res.model->n_anchors));
    if (sel.trash) return std::nullopt;
    starts = sel.anchors;
  }
  std::vector<SolutionVec<K>> out;
  for (int a : starts) {
    const PsPair<K>& anchor = res.anchors->at(a);
    const TrackOutcome<K> r = solver == Solver::NewtonBaseline
                                  ? newton_refine<K>(problem, anchor.solution, res.newton_iters, res.track)
                                  : track_segment<K>(anchor, problem, res.track);
    if (r.converged()) out.push_back(r.solution);
  }
  return out;
}

/// Runs samples 0..max(checkpoints)-1 and reports the best model seen after
/// each checkpoint. All checkpoints share one random stream.
template <class K>
std::vector<std::optional<RansacBest>> run_progressive(const MatchSet<K>& matches, Solver solver,
                                                       const SolverResources<K>& res, const RansacConfig& cfg,
                                                       const std::vector<int>& checkpoints,
                                                       RansacStats* stats_out = nullptr) {
  if (matches.size() < std::size_t(K::kPoints)) throw ShapeError("ransac: fewer matches than the sample size");
  if (cfg.n_samples < 1 || !(cfg.threshold() > 0)) throw ShapeError("ransac: bad config");
  const int total = checkpoints.empty() ? cfg.n_samples : *std::max_element(checkpoints.begin(), checkpoints.end());
  std::mt19937_64 rng(cfg.seed);
  RansacStats stats;
  std::optional<RansacBest> best;
  std::vector<std::optional<RansacBest>> out(checkpoints.size());
  std::vector<int> idx(matches.size());
  std::iota(idx.begin(), idx.end(), 0);

  using clock = std::chrono::steady_clock;
  for (int s = 0; s < total; ++s) {
    const auto t0 = clock::now();
    // Partial Fisher-Yates draw of a minimal sample.
    for (int k = 0; k < K::kPoints; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
      std::swap(idx[k], idx[pick(rng)]);
    }
    ProblemVec<K> problem;
    for (int v = 0; v < K::kViews; ++v)
      for (int j = 0; j < K::kPoints; ++j)
        problem.template segment<2>(coord_index<K>(j, v)) = matches.points[idx[j]][v];
    ++stats.samples;
    try {
      const Normalized<K> n = normalize<K>(problem);
      const auto sols = solve_normalized<K>(n.problem, solver, res);
      if (!sols) {
        ++stats.skipped;
      } else {
        for (const auto& sol : *sols) {
          ++stats.candidates;
          const PsPair<K> np{n.problem, sol};
          std::vector<Pose> poses;
          try {
            poses = recover_pose(np);
          } catch (const DegeneracyError&) {
            continue;
          }
          if (!meaningful(np, poses)) continue;
          ++stats.valid_candidates;
          std::vector<Pose> orig = denormalize_poses<K>(poses, n.record);
          EpipolarScore sc = score_epipolar<K>(orig, matches, cfg.threshold());
          if (!best || sc.count > best->score.count) best = RansacBest{std::move(orig), std::move(sc), s};
        }
      }
    } catch (const NormalizationError&) {
      // Degenerate sample, counts as drawn.
    }
    stats.total_time += std::chrono::duration<double>(clock::now() - t0).count();
    for (std::size_t c = 0; c < checkpoints.size(); ++c)
      if (checkpoints[c] == s + 1) out[c] = best;
  }
  if (stats_out) *stats_out = stats;
  if (checkpoints.empty()) out.push_back(best);
  return out;
}

/// Single RANSAC run over cfg.n_samples samples.
template <class K>
RansacBest run(const MatchSet<K>& matches, Solver solver, const SolverResources<K>& res, const RansacConfig& cfg,
               RansacStats* stats = nullptr) {
  auto r = run_progressive<K>(matches, solver, res, cfg, {cfg.n_samples}, stats);
  if (!r.front()) throw NoModelError("ransac: no valid candidate in any sample");
  return *r.front();
}

/// Largest rotation and translation-direction error over all view pairs.
inline PoseError worst_pose_error(const std::vector<Pose>& est, const std::vector<Pose>& gt) {
  PoseError w;
  for (std::size_t k = 0; k < gt.size(); ++k) {
    const PoseError e = pose_error(est.at(k), gt[k]);
    w.rot_deg = std::max(w.rot_deg, e.rot_deg);
    w.trans_deg = std::max(w.trans_deg, e.trans_deg);
  }
  return w;
}

inline bool pose_success(const std::vector<Pose>& est, const std::vector<Pose>& gt, double max_deg = 10.0) {
  try {
    const PoseError e = worst_pose_error(est, gt);
    return e.rot_deg < max_deg && e.trans_deg < max_deg;
  } catch (const UndefinedAngleError&) {
    return false;
  }
}

inline const std::vector<int>& default_checkpoints() {
  static const std::vector<int> c = {25, 50, 100, 200, 400, 800, 1600, 3200};
  return c;
}

struct BenchmarkRow {
  Solver solver;
  int n_samples;
  double success_pct;  // poses with both errors under 10 degrees
  double valid_rate;   // valid candidates per sample
  double mean_sample_time;
};

/// Success percentage per (solver, checkpoint). Trial t uses seed cfg.seed + t
/// for every solver, so curves share their sample streams.
template <class K>
std::vector<BenchmarkRow> benchmark(const std::vector<MatchSet<K>>& data, const std::vector<Solver>& solvers,
                                    const SolverResources<K>& res, const RansacConfig& cfg,
                                    const std::vector<int>& checkpoints = default_checkpoints(), int jobs = 1) {
  std::vector<BenchmarkRow> rows;
  for (Solver solver : solvers) {
    std::vector<std::vector<char>> hit(data.size(), std::vector<char>(checkpoints.size(), 0));
    std::vector<RansacStats> stats(data.size());
    parallel_for(data.size(), jobs, [&](std::size_t t) {
      if (data[t].gt.empty()) throw ShapeError("benchmark: match set without ground truth");
      RansacConfig c = cfg;
      c.seed = cfg.seed + t;
      const auto prog = run_progressive<K>(data[t], solver, res, c, checkpoints, &stats[t]);
      for (std::size_t k = 0; k < checkpoints.size(); ++k)
        hit[t][k] = prog[k] && pose_success(prog[k]->poses, data[t].gt);
    });
    double valid = 0, time = 0;
    for (const auto& s : stats) {
      valid += s.valid_rate();
      time += s.mean_sample_time();
    }
    for (std::size_t k = 0; k < checkpoints.size(); ++k) {
      int n = 0;
      for (const auto& h : hit) n += h[k];
      rows.push_back({solver, checkpoints[k], data.empty() ? 0.0 : 100.0 * n / double(data.size()),
                      data.empty() ? 0.0 : valid / double(data.size()), data.empty() ? 0.0 : time / double(data.size())});
    }
  }
  return rows;
}

}  // namespace hcpick
