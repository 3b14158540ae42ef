// hcpick command-line tool: fabricate p-s pairs, build anchor sets, train and
// evaluate the start-pair classifier, run RANSAC benchmarks and studies.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hcpick/anchors.hpp"
#include "hcpick/hash.hpp"
#include "hcpick/io.hpp"
#include "hcpick/normalizer.hpp"
#include "hcpick/parallel.hpp"
#include "hcpick/ransac.hpp"
#include "hcpick/scene.hpp"
#include "hcpick/selector.hpp"
#include "hcpick/tracker.hpp"

using namespace hcpick;

namespace {

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Common {
  std::string kind = "5pt";
  std::uint64_t seed = 1;
  int jobs = 0;
  std::string strategy = "A";
  bool timing = true;
};

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

/// Hash of the canonical command configuration, recorded in output headers.
std::string config_hash(const std::string& canonical_config) { return hex64(fnv1a(canonical_config)); }

std::string basename_of(const std::string& path) { return std::filesystem::path(path).filename().string(); }

/// Reads a PAIRS file and re-evaluates every pair on load.
template <class K>
std::vector<PsPair<K>> load_pairs(const std::string& path, HeaderFields* fields = nullptr) {
  auto pairs = read_file(path, [&](std::istream& in) { return read_pairs<K>(in, fields); });
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double r = evaluate<K>(pairs[i].problem, pairs[i].solution).cwiseAbs().maxCoeff();
    if (!(r < 1e-8))
      throw ParseError(path + ": pair " + std::to_string(i) + " is not a solution (residual " + fmt(r) + ")");
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// fabricate

struct FabricateArgs {
  int n = 1000;
  std::string out;
  std::string scene;
  SceneConfig synth;
};

template <class K>
std::vector<PsPair<K>> fabricate_from_scene(const SceneModel& scene, int n, std::mt19937_64& rng, Strategy strategy) {
  const int nc = int(scene.cameras.size()), np = int(scene.points.size());
  if (nc < K::kViews) throw FabricationError("scene has fewer cameras than the problem needs");
  std::vector<PsPair<K>> out;
  std::vector<int> cams(nc), pts;
  std::iota(cams.begin(), cams.end(), 0);
  long attempts = 0;
  while (int(out.size()) < n) {
    if (++attempts > 1000L * std::max(n, 1)) throw FabricationError("scene yields too few valid tuples");
    std::shuffle(cams.begin(), cams.end(), rng);
    std::vector<int> chosen(cams.begin(), cams.begin() + K::kViews);
    pts.clear();
    for (int p = 0; p < np; ++p)
      if (std::all_of(chosen.begin(), chosen.end(), [&](int c) { return scene.visible(p, c); })) pts.push_back(p);
    if (int(pts.size()) < K::kPoints) continue;
    std::shuffle(pts.begin(), pts.end(), rng);
    std::vector<int> subset(pts.begin(), pts.begin() + K::kPoints);
    try {
      out.push_back(normalize_pair<K>(fabricate_pair<K>(scene, chosen, subset), strategy));
    } catch (const FabricationError&) {
    } catch (const NormalizationError&) {
    } catch (const GaugeError&) {
    }
  }
  return out;
}

template <class K>
void cmd_fabricate(const Common& c, const FabricateArgs& a) {
  const Strategy strategy = parse_strategy(c.strategy);
  std::mt19937_64 rng(c.seed);
  std::vector<PsPair<K>> pairs;
  std::ostringstream canon;
  canon << "fabricate;kind=" << K::name << ";n=" << a.n << ";strategy=" << strategy_name(strategy) << ";seed=" << c.seed;
  if (!a.scene.empty()) {
    const SceneModel scene = read_file(a.scene, [](std::istream& in) { return read_scene(in); });
    canon << ";scene=" << basename_of(a.scene);
    pairs = fabricate_from_scene<K>(scene, a.n, rng, strategy);
  } else {
    canon << ";depth=" << a.synth.depth_min << "," << a.synth.depth_max << ";baseline=" << a.synth.baseline_min << ","
          << a.synth.baseline_max << ";fov=" << a.synth.fov_deg;
    while (int(pairs.size()) < a.n) {
      try {
        pairs.push_back(normalize_pair<K>(sample_pair<K>(a.synth, rng), strategy));
      } catch (const NormalizationError&) {
      } catch (const GaugeError&) {
      }
    }
  }
  write_file(a.out, [&](std::ostream& os) {
    write_pairs<K>(os, pairs,
                   {{"seed", std::to_string(c.seed)},
                    {"hash", config_hash(canon.str())},
                    {"strategy", std::string(strategy_name(strategy))}});
  });
  std::cout << "wrote " << pairs.size() << " " << K::name << " pairs to " << a.out << "\n";
}

// ---------------------------------------------------------------------------
// anchors

struct AnchorsArgs {
  std::string pairs;
  std::vector<double> fractions = {0.5, 0.75, 0.9, 1.0};
  std::string out_prefix = "anchors";
  int graph_size = 0;
};

template <class K>
void cmd_anchors(const Common& c, const AnchorsArgs& a) {
  HeaderFields in_fields;
  auto pairs = load_pairs<K>(a.pairs, &in_fields);
  if (a.graph_size > 0 && std::size_t(a.graph_size) < pairs.size()) pairs.resize(a.graph_size);
  if (pairs.empty()) throw ShapeError("anchors: no pairs to build a graph from");
  const TrackSettings settings;
  const auto t0 = Clock::now();
  const auto graph = build_graph<K>(pairs, settings, c.jobs);
  const double graph_time = seconds_since(t0);
  const auto order = greedy_order(graph);
  std::cout << "# graph nodes=" << graph.size() << " edges=" << graph.adjacency.count()
            << " density=" << fmt(double(graph.adjacency.count()) / double(graph.size() * graph.size()));
  if (c.timing) std::cout << " build_s=" << fmt(graph_time, 4);
  std::cout << "\nfraction\tanchors\tcoverage\tfile\n";
  for (double f : a.fractions) {
    if (!(f > 0 && f <= 1)) throw ShapeError("anchors: fractions must lie in (0, 1]");
    const auto set = anchors_from_order(graph, order, f, basename_of(a.pairs));
    const std::string path = a.out_prefix + "_" + std::to_string(int(std::lround(100 * f))) + ".anchors";
    HeaderFields fields{{"fraction", fmt(f, 17)}};
    if (auto it = in_fields.find("seed"); it != in_fields.end()) fields["seed"] = it->second;
    write_file(path, [&](std::ostream& os) { write_anchors(os, set, fields); });
    std::cout << f << "\t" << set.size() << "\t" << fmt(set.coverage) << "\t" << path << "\n";
  }
}

// ---------------------------------------------------------------------------
// shared helpers for train / eval / study

template <class K>
LabeledSet labeled(const std::vector<PsPair<K>>& anchors, const std::vector<PsPair<K>>& pairs, int jobs,
                   CoverageResult* cov_out = nullptr) {
  const CoverageResult cov = coverage<K>(anchors, pairs, TrackSettings{}, jobs);
  LabeledSet s;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    s.problems.push_back(pairs[i].problem);
    std::vector<int> lab;
    for (std::size_t a = 0; a < anchors.size(); ++a)
      if (cov.labels.get(i, a)) lab.push_back(int(a));
    s.labels.push_back(std::move(lab));
  }
  if (cov_out) *cov_out = cov;
  return s;
}

void split_validation(const LabeledSet& all, double val_fraction, LabeledSet& train, LabeledSet& val) {
  const std::size_t n_val = std::size_t(std::lround(val_fraction * all.problems.size()));
  for (std::size_t i = 0; i < all.problems.size(); ++i) {
    LabeledSet& dst = i >= all.problems.size() - n_val ? val : train;
    dst.problems.push_back(all.problems[i]);
    dst.labels.push_back(all.labels[i]);
  }
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string anchors, pairs, out;
  double val_fraction = 0.1;
  TrainConfig cfg;
};

template <class K>
void cmd_train(const Common& c, TrainArgs a) {
  a.cfg.seed = c.seed;
  const auto anchors = read_file(a.anchors, [](std::istream& in) { return read_anchors<K>(in); });
  const auto pairs = load_pairs<K>(a.pairs);
  const auto t0 = Clock::now();
  LabeledSet all = labeled<K>(anchors.anchors, pairs, c.jobs);
  const double label_time = seconds_since(t0);
  LabeledSet train_set, val_set;
  split_validation(all, a.val_fraction, train_set, val_set);
  TrainReport report;
  const auto t1 = Clock::now();
  const MlpModel model = train(train_set, int(anchors.size()), K::kind, a.cfg, val_set.problems.empty() ? nullptr : &val_set,
                               &report);
  const double train_time = seconds_since(t1);

  // Checkpoints are chosen by label hits; report the tracked success of the
  // chosen model on the held-out tail once.
  const std::size_t n_val = val_set.problems.size();
  int tracked_ok = 0;
  for (std::size_t i = pairs.size() - n_val; i < pairs.size(); ++i) {
    const Selection sel = select(model, VectorXd(pairs[i].problem));
    if (!sel.trash)
      tracked_ok += reaches(track_segment<K>(anchors.anchors[sel.anchors.front()], pairs[i].problem), pairs[i].solution);
  }

  std::ostringstream canon;
  canon << "train;kind=" << K::name << ";anchors=" << hex64(anchors.settings_hash) << "/" << anchors.size()
        << ";pairs=" << pairs.size() << ";lr=" << a.cfg.learning_rate << ";batch=" << a.cfg.batch_size
        << ";epochs=" << a.cfg.epochs << ";width=" << a.cfg.width << ";depth=" << a.cfg.depth << ";seed=" << c.seed
        << ";val=" << a.val_fraction;
  write_file(a.out, [&](std::ostream& os) {
    write_mlp(os, model,
              {{"seed", std::to_string(c.seed)},
               {"hash", config_hash(canon.str())},
               {"best_epoch", std::to_string(report.best_epoch)}});
  });
  std::cout << "epoch\ttrain_loss\tval_label_hit\n";
  for (std::size_t e = 0; e < report.train_loss.size(); ++e)
    std::cout << e << "\t" << fmt(report.train_loss[e]) << "\t" << fmt(report.validation[e]) << "\n";
  std::cout << "# best_epoch=" << report.best_epoch << " train_examples=" << train_set.problems.size()
            << " val_examples=" << n_val
            << " val_tracked_success=" << fmt(n_val ? double(tracked_ok) / double(n_val) : 0.0);
  if (c.timing) std::cout << " label_s=" << fmt(label_time, 4) << " train_s=" << fmt(train_time, 4);
  std::cout << "\nwrote " << a.out << "\n";
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string anchors, pairs, model, train_pairs;
  std::vector<std::string> methods = {"B1", "B2", "B3", "fixed", "mlp"};
  int tracks_per_problem = 1;
};

struct EvalRow {
  std::string method;
  double rho = 0;   // success rate in percent
  double mu_t = 0;  // mean time per problem in microseconds
};

template <class K>
EvalRow evaluate_method(const std::string& method, const std::vector<PsPair<K>>& anchors,
                        const std::vector<PsPair<K>>& pairs, const MlpModel* model, const MatrixXd* cov, int m) {
  std::vector<VectorXd> anchor_problems;
  for (const auto& a : anchors) anchor_problems.push_back(a.problem);
  const TrackSettings settings;
  int success = 0;
  double total = 0;
  for (const auto& p : pairs) {
    const auto t0 = Clock::now();
    std::vector<int> starts;
    if (method == "B1") {
      starts.resize(anchors.size());
      std::iota(starts.begin(), starts.end(), 0);
    } else if (method == "B2") {
      starts = {nearest_anchor(p.problem, anchor_problems, Metric::euclidean())};
    } else if (method == "B3") {
      starts = {nearest_anchor(p.problem, anchor_problems, Metric::mahalanobis(*cov))};
    } else if (method == "fixed") {
      starts = {0};
    } else if (method == "mlp") {
      if (!model) throw NoModelError("eval: method 'mlp' needs --model");
      const Selection sel = select(*model, VectorXd(p.problem), std::min<int>(m, model->n_anchors));
      if (sel.trash) {
        total += seconds_since(t0);
        continue;
      }
      starts = sel.anchors;
    } else {
      throw ParseError("eval: unknown method '" + method + "'");
    }
    double spent = seconds_since(t0);
    // The oracle knows which anchor works, so it is charged a single track:
    // the first successful one, or the first one when none succeeds.
    double oracle_track = -1;
    for (int a : starts) {
      const auto t1 = Clock::now();
      const bool ok = reaches(track_segment<K>(anchors[a], p.problem, settings), p.solution, settings);
      const double dt = seconds_since(t1);
      if (oracle_track < 0) oracle_track = dt;
      if (ok) oracle_track = dt;
      spent += dt;
      if (ok) {
        ++success;
        break;
      }
    }
    total += method == "B1" ? std::max(oracle_track, 0.0) : spent;
  }
  return {method, pairs.empty() ? 0.0 : 100.0 * success / double(pairs.size()),
          pairs.empty() ? 0.0 : 1e6 * total / double(pairs.size())};
}

template <class K>
void cmd_eval(const Common& c, const EvalArgs& a) {
  const auto anchors = read_file(a.anchors, [](std::istream& in) { return read_anchors<K>(in); });
  const auto pairs = load_pairs<K>(a.pairs);
  if (anchors.anchors.empty()) throw NoModelError("eval: empty anchor set");
  std::optional<MlpModel> model;
  if (!a.model.empty()) {
    model = read_file(a.model, [](std::istream& in) { return read_mlp(in); });
    if (model->kind != K::kind || model->n_anchors != int(anchors.size()) || model->input_dim() != K::kProblemDim)
      throw ShapeError("eval: model does not match the anchor set");
  }
  std::optional<MatrixXd> cov;
  if (std::find(a.methods.begin(), a.methods.end(), "B3") != a.methods.end()) {
    std::vector<VectorXd> source;
    if (!a.train_pairs.empty()) {
      for (const auto& p : load_pairs<K>(a.train_pairs))
        source.push_back(p.problem);
    } else {
      for (const auto& p : anchors.anchors) source.push_back(p.problem);
    }
    cov = estimate_covariance(source);
  }
  std::cout << "method\trho_pct\t" << (c.timing ? "mu_t_us\teps_t_us\t" : "") << "anchors\tpairs\n";
  for (const auto& method : a.methods) {
    if (method == "mlp" && !model) continue;
    const EvalRow r = evaluate_method<K>(method, anchors.anchors, pairs, model ? &*model : nullptr,
                                         cov ? &*cov : nullptr, a.tracks_per_problem);
    std::cout << r.method << "\t" << fmt(r.rho);
    if (c.timing) std::cout << "\t" << fmt(r.mu_t) << "\t" << (r.rho > 0 ? fmt(100.0 * r.mu_t / r.rho) : "inf");
    std::cout << "\t" << anchors.size() << "\t" << pairs.size() << "\n";
  }
}

// ---------------------------------------------------------------------------
// ransac

struct RansacArgs {
  std::string anchors, model, matches;
  std::vector<int> samples = default_checkpoints();
  std::vector<std::string> solvers = {"mlp_hc", "fixed_anchor_hc", "newton_baseline"};
  int trials = 100;
  MatchSynthConfig synth;
  double threshold_px = 3.0;
  int tracks_per_problem = 1;
};

template <class K>
void cmd_ransac(const Common& c, RansacArgs a) {
  const auto anchors = read_file(a.anchors, [](std::istream& in) { return read_anchors<K>(in); });
  std::optional<MlpModel> model;
  if (!a.model.empty()) model = read_file(a.model, [](std::istream& in) { return read_mlp(in); });
  SolverResources<K> res;
  res.anchors = &anchors.anchors;
  res.model = model ? &*model : nullptr;
  res.tracks_per_problem = a.tracks_per_problem;
  RansacConfig cfg;
  cfg.threshold_px = a.threshold_px;
  cfg.focal = a.synth.focal;
  cfg.seed = c.seed;
  std::vector<Solver> solvers;
  for (const auto& s : a.solvers) {
    const Solver solver = parse_solver(s);
    if (solver != Solver::FixedAnchorHc && !model) {
      std::cerr << "skipping " << s << ": no --model given\n";
      continue;
    }
    solvers.push_back(solver);
  }
  std::sort(a.samples.begin(), a.samples.end());

  if (!a.matches.empty()) {
    const auto matches = read_file(a.matches, [](std::istream& in) { return read_matches<K>(in); });
    for (Solver s : solvers) {
      cfg.n_samples = a.samples.back();
      RansacStats stats;
      const RansacBest best = run<K>(matches, s, res, cfg, &stats);
      std::cout << "solver=" << solver_name(s) << " samples=" << stats.samples << " inliers=" << fmt(best.score.count)
                << " best_sample=" << best.sample << " valid_rate=" << fmt(stats.valid_rate());
      if (!matches.gt.empty()) {
        const PoseError e = worst_pose_error(best.poses, matches.gt);
        std::cout << " rot_err_deg=" << fmt(e.rot_deg) << " trans_err_deg=" << fmt(e.trans_deg);
      }
      std::cout << "\n";
      for (std::size_t k = 0; k < best.poses.size(); ++k) {
        std::cout << "pose " << k << " ";
        std::ostringstream os;
        os << std::setprecision(17);
        for (int r = 0; r < 3; ++r)
          for (int q = 0; q < 3; ++q) os << best.poses[k].R(r, q) << ' ';
        os << best.poses[k].t.x() << ' ' << best.poses[k].t.y() << ' ' << best.poses[k].t.z();
        std::cout << os.str() << "\n";
      }
    }
    return;
  }

  std::mt19937_64 rng(c.seed);
  std::vector<MatchSet<K>> data;
  for (int t = 0; t < a.trials; ++t) data.push_back(synth_matches<K>(a.synth, rng));
  const auto rows = benchmark<K>(data, solvers, res, cfg, a.samples, c.jobs);
  std::cout << "# trials=" << a.trials << " outliers=" << a.synth.outlier_fraction << " noise_px=" << a.synth.noise_px
            << " focal=" << a.synth.focal << " threshold_px=" << a.threshold_px << "\n";
  std::cout << "solver\tn_samples\tsuccess_pct\tvalid_per_sample" << (c.timing ? "\tmean_sample_us" : "") << "\n";
  for (const auto& r : rows) {
    std::cout << solver_name(r.solver) << "\t" << r.n_samples << "\t" << fmt(r.success_pct) << "\t" << fmt(r.valid_rate);
    if (c.timing) std::cout << "\t" << fmt(1e6 * r.mean_sample_time);
    std::cout << "\n";
  }
}

// ---------------------------------------------------------------------------
// study

struct StudyArgs {
  std::string study = "normalization";
  int n = 2000;
  std::vector<std::string> variants;
  std::string anchors, model, pairs, train_pairs, test_pairs;
  int max_tracks = 5;
  std::vector<int> widths = {25, 50, 100, 200};
  TrainConfig cfg;
};

template <class K>
void study_normalization(const Common& c, const StudyArgs& a) {
  std::vector<std::string> variants = a.variants;
  if (variants.empty()) variants = {"none", "A", "B", "C", "D", "E"};
  std::cout << "strategy\tsuccess_pct" << (c.timing ? "\tnormalize_us\ttrack_us" : "") << "\n";
  for (const auto& v : variants) {
    const Strategy s = parse_strategy(v);
    std::mt19937_64 rng(c.seed);  // same raw pairs for every strategy
    int ok = 0, used = 0;
    double t_norm = 0, t_track = 0;
    while (used < a.n) {
      const auto ra = sample_pair<K>(SceneConfig{}, rng), rb = sample_pair<K>(SceneConfig{}, rng);
      PsPair<K> na, nb;
      try {
        const auto t0 = Clock::now();
        na = normalize_pair<K>(ra, s);
        nb = normalize_pair<K>(rb, s);
        t_norm += seconds_since(t0) / 2;
      } catch (const Error&) {
        continue;
      }
      ++used;
      const auto t1 = Clock::now();
      ok += reaches(track_segment<K>(na, nb.problem), nb.solution);
      t_track += seconds_since(t1);
    }
    std::cout << strategy_name(s) << "\t" << fmt(100.0 * ok / a.n);
    if (c.timing) std::cout << "\t" << fmt(1e6 * t_norm / a.n) << "\t" << fmt(1e6 * t_track / a.n);
    std::cout << "\n";
  }
}

/// Outcome categories of one homotopy run; they partition all runs.
enum class Outcome { Target, OtherValid, Negative, DetMinusOne, NonReal, Failed };

template <class K>
Outcome classify(const TrackOutcome<K>& out, const PsPair<K>& target) {
  if (out.status == TrackStatus::NonRealEndpoint) return Outcome::NonReal;
  if (!out.converged()) return Outcome::Failed;
  if (reaches(out, target.solution)) return Outcome::Target;
  const PsPair<K> end{target.problem, out.solution};
  for (int v = 0; v < K::kViews; ++v)
    for (int j = 0; j < K::kPoints; ++j)
      if (!(depth_of<K, double>(out.solution, j, v) > 0)) return Outcome::Negative;
  try {
    for (const auto& p : recover_pose(end))
      if (p.R.determinant() < 0) return Outcome::DetMinusOne;
  } catch (const DegeneracyError&) {
    return Outcome::Failed;
  }
  return Outcome::OtherValid;
}

template <class K>
void study_hc(const Common& c, const StudyArgs& a) {
  std::vector<std::string> variants = a.variants;
  if (variants.empty()) variants = {"c_arc_fab", "c_arc_fab_gamma1", "r_segment", "newton"};
  std::cout << "variant\ttarget_pct\tother_valid_pct\tnegative_pct\tdet_minus_one_pct\tnon_real_pct\tfailed_pct"
            << (c.timing ? "\tmean_us" : "") << "\n";
  for (const auto& v : variants) {
    std::mt19937_64 rng(c.seed);
    std::uniform_real_distribution<double> angle(0, 2 * std::numbers::pi);
    std::array<int, 6> counts{};
    double time = 0;
    for (int i = 0; i < a.n; ++i) {
      const auto s = normalize_pair<K>(sample_pair<K>(SceneConfig{}, rng));
      const auto t = normalize_pair<K>(sample_pair<K>(SceneConfig{}, rng));
      const double phase = angle(rng);
      const auto t0 = Clock::now();
      TrackOutcome<K> out;
      if (v == "r_segment") out = track_segment<K>(s, t.problem);
      else if (v == "c_arc_fab_gamma1") out = track_arc<K>(s, t.problem, Complex(1, 0));
      else if (v == "c_arc_fab") out = track_arc<K>(s, t.problem, std::polar(1.0, phase));
      else if (v == "newton") out = newton_refine<K>(t.problem, s.solution, 15);
      else throw ParseError("study hc: unknown variant '" + v + "'");
      time += seconds_since(t0);
      ++counts[int(classify<K>(out, t))];
    }
    std::cout << v;
    for (int k : counts) std::cout << "\t" << fmt(100.0 * k / a.n);
    if (c.timing) std::cout << "\t" << fmt(1e6 * time / a.n);
    std::cout << "\n";
  }
}

template <class K>
void study_tracks(const Common& c, const StudyArgs& a) {
  const auto anchors = read_file(a.anchors, [](std::istream& in) { return read_anchors<K>(in); });
  const auto model = read_file(a.model, [](std::istream& in) { return read_mlp(in); });
  const auto pairs = load_pairs<K>(a.pairs);
  std::cout << "m\tsuccess_pct" << (c.timing ? "\tmean_us" : "") << "\n";
  for (int m = 1; m <= std::min<int>(a.max_tracks, model.n_anchors); ++m) {
    const EvalRow r = evaluate_method<K>("mlp", anchors.anchors, pairs, &model, nullptr, m);
    std::cout << m << "\t" << fmt(r.rho);
    if (c.timing) std::cout << "\t" << fmt(r.mu_t);
    std::cout << "\n";
  }
}

template <class K>
void study_width(const Common& c, StudyArgs a) {
  const auto anchors = read_file(a.anchors, [](std::istream& in) { return read_anchors<K>(in); });
  const auto train_pairs = load_pairs<K>(a.train_pairs);
  const auto test_pairs = load_pairs<K>(a.test_pairs);
  const LabeledSet all = labeled<K>(anchors.anchors, train_pairs, c.jobs);
  const LabeledSet test = labeled<K>(anchors.anchors, test_pairs, c.jobs);
  LabeledSet tr, val;
  split_validation(all, 0.1, tr, val);
  std::cout << "width\tparameters\tval_label_hit\ttest_success_pct\n";
  for (int w : a.widths) {
    TrainConfig cfg = a.cfg;
    cfg.width = w;
    cfg.seed = c.seed;
    TrainReport rep;
    const MlpModel m = train(tr, int(anchors.size()), K::kind, cfg, &val, &rep);
    std::cout << w << "\t" << m.parameter_count() << "\t" << fmt(rep.validation[rep.best_epoch]) << "\t"
              << fmt(100.0 * label_hit_rate(m, test)) << "\n";
  }
}

template <class K>
void cmd_study(const Common& c, const StudyArgs& a) {
  if (a.study == "normalization") return study_normalization<K>(c, a);
  if (a.study == "hc") return study_hc<K>(c, a);
  if (a.study == "tracks") return study_tracks<K>(c, a);
  if (a.study == "width") return study_width<K>(c, a);
  throw ParseError("unknown study '" + a.study + "'");
}

template <class F>
void dispatch(const Common& c, F&& f) {
  visit_kind(parse_kind(c.kind), std::forward<F>(f));
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--kind", c.kind, "Problem kind: 5pt or scranton")->check(CLI::IsMember({"5pt", "scranton"}));
  sub->add_option("--seed", c.seed, "Random seed");
  sub->add_option("--jobs", c.jobs, "Worker threads, 0 for machine parallelism");
  sub->add_flag("!--no-timing", c.timing, "Omit timing columns so outputs are byte-reproducible");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Homotopy-continuation start-pair selection toolkit"};
  app.require_subcommand(1);
  Common common;

  FabricateArgs fab;
  auto* f = app.add_subcommand("fabricate", "Write a PAIRS file of fabricated, normalized p-s pairs");
  add_common(f, common);
  f->add_option("--strategy", common.strategy, "Normalization strategy: A..E or none");
  f->add_option("-n,--n", fab.n, "Number of pairs")->check(CLI::NonNegativeNumber);
  f->add_option("-o,--out", fab.out, "Output PAIRS file")->required();
  f->add_option("--scene", fab.scene, "SCENE file to sample from instead of synthetic scenes");
  f->add_option("--depth-min", fab.synth.depth_min);
  f->add_option("--depth-max", fab.synth.depth_max);
  f->add_option("--baseline-min", fab.synth.baseline_min);
  f->add_option("--baseline-max", fab.synth.baseline_max);
  f->add_option("--fov", fab.synth.fov_deg, "Full field of view in degrees");

  AnchorsArgs anc;
  auto* an = app.add_subcommand("anchors", "Build the reachability graph and write greedy anchor sets");
  add_common(an, common);
  an->add_option("--pairs", anc.pairs, "PAIRS file")->required();
  an->add_option("--fractions", anc.fractions, "Target coverage fractions")->delimiter(',');
  an->add_option("--out-prefix", anc.out_prefix, "Output files are <prefix>_<percent>.anchors");
  an->add_option("--graph-size", anc.graph_size, "Use only the first N pairs as graph nodes");

  TrainArgs tra;
  auto* tr = app.add_subcommand("train", "Label pairs by tracking from every anchor and train the classifier");
  add_common(tr, common);
  tr->add_option("--anchors", tra.anchors)->required();
  tr->add_option("--pairs", tra.pairs, "Training PAIRS file")->required();
  tr->add_option("-o,--out", tra.out, "Output MLP file")->required();
  tr->add_option("--val-fraction", tra.val_fraction, "Tail fraction held out for checkpoint selection");
  tr->add_option("--epochs", tra.cfg.epochs);
  tr->add_option("--lr", tra.cfg.learning_rate);
  tr->add_option("--batch", tra.cfg.batch_size);
  tr->add_option("--width", tra.cfg.width);
  tr->add_option("--depth", tra.cfg.depth);

  EvalArgs eva;
  auto* ev = app.add_subcommand("eval", "Success rate and timing of start-pair selection methods");
  add_common(ev, common);
  ev->add_option("--anchors", eva.anchors)->required();
  ev->add_option("--pairs", eva.pairs, "Test PAIRS file")->required();
  ev->add_option("--model", eva.model, "MLP file");
  ev->add_option("--train-pairs", eva.train_pairs, "PAIRS file for the Mahalanobis covariance");
  ev->add_option("--methods", eva.methods, "Any of B1,B2,B3,fixed,mlp")->delimiter(',');
  ev->add_option("--tracks-per-problem,-m", eva.tracks_per_problem)->check(CLI::PositiveNumber);

  RansacArgs ran;
  auto* ra = app.add_subcommand("ransac", "RANSAC benchmark on synthetic or given matches");
  add_common(ra, common);
  ra->add_option("--anchors", ran.anchors)->required();
  ra->add_option("--model", ran.model, "MLP file");
  ra->add_option("--matches", ran.matches, "MATCHES file; otherwise synthetic trials are generated");
  ra->add_option("--samples", ran.samples, "Sample-count checkpoints")->delimiter(',');
  ra->add_option("--solvers", ran.solvers, "Any of mlp_hc,fixed_anchor_hc,newton_baseline")->delimiter(',');
  ra->add_option("--trials", ran.trials)->check(CLI::PositiveNumber);
  ra->add_option("--matches-per-set", ran.synth.n_matches);
  ra->add_option("--outliers", ran.synth.outlier_fraction)->check(CLI::Range(0.0, 0.99));
  ra->add_option("--noise-px", ran.synth.noise_px);
  ra->add_option("--focal", ran.synth.focal);
  ra->add_option("--threshold-px", ran.threshold_px);
  ra->add_option("--tracks-per-problem,-m", ran.tracks_per_problem)->check(CLI::PositiveNumber);

  StudyArgs stu;
  auto* st = app.add_subcommand("study", "Engineering studies: normalization, hc, tracks, width");
  add_common(st, common);
  st->add_option("study", stu.study, "normalization | hc | tracks | width")->required();
  st->add_option("-n,--n", stu.n, "Number of random track pairs")->check(CLI::PositiveNumber);
  st->add_option("--variants", stu.variants, "Subset of rows to run")->delimiter(',');
  st->add_option("--anchors", stu.anchors);
  st->add_option("--model", stu.model);
  st->add_option("--pairs", stu.pairs, "Test PAIRS file for the tracks study");
  st->add_option("--train-pairs", stu.train_pairs);
  st->add_option("--test-pairs", stu.test_pairs);
  st->add_option("--max-tracks", stu.max_tracks);
  st->add_option("--widths", stu.widths)->delimiter(',');
  st->add_option("--epochs", stu.cfg.epochs);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*f) dispatch(common, [&](auto k) { cmd_fabricate<decltype(k)>(common, fab); });
    if (*an) dispatch(common, [&](auto k) { cmd_anchors<decltype(k)>(common, anc); });
    if (*tr) dispatch(common, [&](auto k) { cmd_train<decltype(k)>(common, tra); });
    if (*ev) dispatch(common, [&](auto k) { cmd_eval<decltype(k)>(common, eva); });
    if (*ra) dispatch(common, [&](auto k) { cmd_ransac<decltype(k)>(common, ran); });
    if (*st) dispatch(common, [&](auto k) { cmd_study<decltype(k)>(common, stu); });
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
