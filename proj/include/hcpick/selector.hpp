#pragma once

// Start-pair selection: an MLP classifier over normalized problems that
// scores every anchor plus a TRASH class, its SGD trainer, and the
// nearest-anchor baselines.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "hcpick/error.hpp"
#include "hcpick/kinds.hpp"

namespace hcpick {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Affine layer y = W x + b, followed by a per-channel PReLU when `slope` is
/// nonempty. The output layer has no activation.
struct Layer {
  MatrixXd W;
  VectorXd b;
  VectorXd slope;

  bool has_activation() const { return slope.size() > 0; }
};

struct MlpModel {
  Kind kind = Kind::FivePoint;
  int n_anchors = 0;
  std::vector<Layer> layers;
  double dropout = 0.5;  // training only, applied to the input of the last layer

  int input_dim() const { return layers.empty() ? 0 : int(layers.front().W.cols()); }
  int output_dim() const { return layers.empty() ? 0 : int(layers.back().W.rows()); }
  int trash() const { return n_anchors; }
  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.W.size() + l.b.size() + l.slope.size();
    return n;
  }
};

/// Fresh network: `depth` hidden layers of `width` PReLU units and an output of
/// n_anchors + 1 scores. Weights uniform in +-sqrt(6 / fan_in), zero biases,
/// slopes 0.25.
inline MlpModel make_mlp(Kind kind, int input_dim, int n_anchors, std::uint64_t seed, int width = 100,
                         int depth = 6) {
  if (input_dim < 1 || n_anchors < 0 || width < 1 || depth < 0) throw ShapeError("make_mlp: bad shape");
  MlpModel m;
  m.kind = kind;
  m.n_anchors = n_anchors;
  std::mt19937_64 rng(seed);
  int fan_in = input_dim;
  for (int l = 0; l <= depth; ++l) {
    const bool last = l == depth;
    const int out = last ? n_anchors + 1 : width;
    const double bound = std::sqrt(6.0 / fan_in);
    std::uniform_real_distribution<double> u(-bound, bound);
    Layer layer;
    layer.W.resize(out, fan_in);
    for (int i = 0; i < layer.W.size(); ++i) layer.W.data()[i] = u(rng);
    layer.b = VectorXd::Zero(out);
    if (!last) layer.slope = VectorXd::Constant(out, 0.25);
    m.layers.push_back(std::move(layer));
    fan_in = out;
  }
  return m;
}

namespace detail {

inline MatrixXd prelu(const MatrixXd& z, const VectorXd& slope) {
  MatrixXd a = z;
  for (Eigen::Index c = 0; c < a.cols(); ++c)
    for (Eigen::Index r = 0; r < a.rows(); ++r)
      if (a(r, c) < 0) a(r, c) *= slope(r);
  return a;
}

}  // namespace detail

/// Raw scores of a batch (one problem per column), dropout-free.
inline MatrixXd infer_batch(const MlpModel& m, const MatrixXd& x) {
  if (m.layers.empty() || x.rows() != m.input_dim()) throw ShapeError("infer: input width mismatch");
  MatrixXd a = x;
  for (const auto& l : m.layers) {
    MatrixXd z = l.W * a;
    z.colwise() += l.b;
    a = l.has_activation() ? detail::prelu(z, l.slope) : std::move(z);
  }
  return a;
}

inline VectorXd infer(const MlpModel& m, const VectorXd& problem) { return infer_batch(m, problem); }

struct Selection {
  bool trash = false;
  std::vector<int> anchors;  // best first
};

/// TRASH when its score beats every anchor score, otherwise the m best
/// anchors with ties going to the lower index.
inline Selection select_from_scores(const VectorXd& scores, int n_anchors, int m) {
  if (m < 1 || m > n_anchors) throw ShapeError("select: m out of range");
  Selection s;
  const double best_anchor = scores.head(n_anchors).maxCoeff();
  if (scores(n_anchors) > best_anchor) {
    s.trash = true;
    return s;
  }
  std::vector<int> idx(n_anchors);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) { return scores(a) > scores(b); });
  s.anchors.assign(idx.begin(), idx.begin() + m);
  return s;
}

inline Selection select(const MlpModel& model, const VectorXd& problem, int m = 1) {
  return select_from_scores(infer(model, problem), model.n_anchors, m);
}

// ---------------------------------------------------------------------------
// Training

struct TrainConfig {
  double learning_rate = 0.1;
  std::vector<int> decay_epochs = {50, 70};
  double decay_factor = 0.3;
  int batch_size = 64;
  int epochs = 80;
  std::uint64_t seed = 1;
  int width = 100;
  int depth = 6;
};

/// Summed gradients with the same layout as the model.
struct Gradient {
  std::vector<Layer> layers;
};

/// Mean softmax cross-entropy over the batch columns and its gradient.
/// keep_mask, when given, is the inverted-dropout multiplier (0 or 1/(1-p))
/// for the input of the last layer, one column per example.
inline double loss_and_gradient(const MlpModel& m, const MatrixXd& x, const std::vector<int>& labels,
                                const MatrixXd* keep_mask, Gradient* grad) {
  const Eigen::Index B = x.cols();
  const std::size_t L = m.layers.size();
  std::vector<MatrixXd> inputs(L), pre(L);
  MatrixXd a = x;
  for (std::size_t l = 0; l < L; ++l) {
    const Layer& layer = m.layers[l];
    if (l + 1 == L && keep_mask) a = a.cwiseProduct(*keep_mask);
    inputs[l] = a;
    pre[l] = layer.W * a;
    pre[l].colwise() += layer.b;
    a = layer.has_activation() ? detail::prelu(pre[l], layer.slope) : pre[l];
  }
  // Stable softmax.
  MatrixXd delta(a.rows(), B);
  double loss = 0;
  for (Eigen::Index c = 0; c < B; ++c) {
    const double mx = a.col(c).maxCoeff();
    VectorXd e = (a.col(c).array() - mx).exp();
    const double sum = e.sum();
    loss += std::log(sum) + mx - a(labels[c], c);
    delta.col(c) = e / sum;
    delta(labels[c], c) -= 1.0;
  }
  loss /= double(B);
  if (!grad) return loss;
  delta /= double(B);

  grad->layers.resize(L);
  for (std::size_t l = L; l-- > 0;) {
    const Layer& layer = m.layers[l];
    Layer& g = grad->layers[l];
    if (layer.has_activation()) {
      g.slope = VectorXd::Zero(layer.slope.size());
      for (Eigen::Index c = 0; c < B; ++c)
        for (Eigen::Index r = 0; r < delta.rows(); ++r)
          if (pre[l](r, c) < 0) {
            g.slope(r) += pre[l](r, c) * delta(r, c);
            delta(r, c) *= layer.slope(r);
          }
    }
    g.W = delta * inputs[l].transpose();
    g.b = delta.rowwise().sum();
    if (l > 0) {
      delta = layer.W.transpose() * delta;
      if (l + 1 == L && keep_mask) delta = delta.cwiseProduct(*keep_mask);
    }
  }
  return loss;
}

struct LabeledSet {
  std::vector<VectorXd> problems;
  std::vector<std::vector<int>> labels;  // anchors that solve the problem; empty means TRASH
};

/// Fraction of examples whose top-scoring class is an anchor that solves them.
inline double label_hit_rate(const MlpModel& m, const LabeledSet& data) {
  if (data.problems.empty()) return 0.0;
  MatrixXd x(m.input_dim(), data.problems.size());
  for (std::size_t i = 0; i < data.problems.size(); ++i) x.col(i) = data.problems[i];
  const MatrixXd scores = infer_batch(m, x);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.problems.size(); ++i) {
    Eigen::Index best;
    scores.col(i).maxCoeff(&best);
    const auto& lab = data.labels[i];
    if (best < m.n_anchors && std::find(lab.begin(), lab.end(), int(best)) != lab.end()) ++hits;
  }
  return double(hits) / double(data.problems.size());
}

struct TrainReport {
  std::vector<double> train_loss;  // per epoch
  std::vector<double> validation;  // label-hit rate per epoch
  int best_epoch = -1;
};

/// Plain minibatch SGD on softmax cross-entropy. Every problem contributes one
/// instance per solving anchor, or a single TRASH instance when no anchor
/// solves it. Returns the epoch with the best validation label-hit rate (the
/// last epoch when no validation data is given).
inline MlpModel train(const LabeledSet& data, int n_anchors, Kind kind, const TrainConfig& cfg,
                      const LabeledSet* validation = nullptr, TrainReport* report = nullptr) {
  if (data.problems.empty()) throw ShapeError("train: empty dataset");
  if (cfg.epochs < 1 || !(cfg.learning_rate > 0) || cfg.batch_size < 1) throw ShapeError("train: bad config");
  const int dim = int(data.problems.front().size());

  std::vector<std::pair<int, int>> instances;  // (problem, class)
  for (std::size_t i = 0; i < data.problems.size(); ++i) {
    if (data.problems[i].size() != dim) throw ShapeError("train: ragged inputs");
    if (data.labels[i].empty()) instances.emplace_back(int(i), n_anchors);
    for (int a : data.labels[i]) {
      if (a < 0 || a > n_anchors) throw ShapeError("train: label out of range");
      instances.emplace_back(int(i), a);
    }
  }

  MlpModel model = make_mlp(kind, dim, n_anchors, cfg.seed, cfg.width, cfg.depth);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  std::bernoulli_distribution keep(1.0 - model.dropout);
  const double keep_scale = 1.0 / (1.0 - model.dropout);

  MlpModel best = model;
  double best_score = -1;
  TrainReport local;
  double lr = cfg.learning_rate;
  Gradient g;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (std::find(cfg.decay_epochs.begin(), cfg.decay_epochs.end(), epoch) != cfg.decay_epochs.end())
      lr *= cfg.decay_factor;
    std::shuffle(instances.begin(), instances.end(), rng);
    double loss_sum = 0;
    for (std::size_t start = 0; start < instances.size(); start += cfg.batch_size) {
      const std::size_t B = std::min<std::size_t>(cfg.batch_size, instances.size() - start);
      MatrixXd x(dim, B);
      std::vector<int> y(B);
      for (std::size_t c = 0; c < B; ++c) {
        x.col(c) = data.problems[instances[start + c].first];
        y[c] = instances[start + c].second;
      }
      const Eigen::Index hidden = model.layers.back().W.cols();
      MatrixXd mask(hidden, B);
      for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? keep_scale : 0.0;
      const double loss = loss_and_gradient(model, x, y, model.dropout > 0 ? &mask : nullptr, &g);
      if (!std::isfinite(loss)) throw TrainingDivergenceError("train: non-finite loss at epoch " + std::to_string(epoch));
      loss_sum += loss * double(B);
      for (std::size_t l = 0; l < model.layers.size(); ++l) {
        model.layers[l].W -= lr * g.layers[l].W;
        model.layers[l].b -= lr * g.layers[l].b;
        if (model.layers[l].has_activation()) model.layers[l].slope -= lr * g.layers[l].slope;
      }
    }
    local.train_loss.push_back(loss_sum / double(instances.size()));
    const double score = validation ? label_hit_rate(model, *validation) : double(epoch);
    local.validation.push_back(validation ? score : std::numeric_limits<double>::quiet_NaN());
    if (score > best_score) {
      best_score = score;
      best = model;
      local.best_epoch = epoch;
    }
  }
  if (report) *report = std::move(local);
  return best;
}

// ---------------------------------------------------------------------------
// Nearest-anchor baselines

struct Metric {
  enum class Type { Euclidean, Mahalanobis } type = Type::Euclidean;
  MatrixXd covariance;  // Mahalanobis only

  static Metric euclidean() { return {}; }
  static Metric mahalanobis(MatrixXd cov) { return {Type::Mahalanobis, std::move(cov)}; }
};

/// Sample covariance of training problems plus a small ridge. Normalized
/// problems carry coordinates pinned to zero, so the raw estimate is singular.
inline MatrixXd estimate_covariance(const std::vector<VectorXd>& problems, double ridge = 1e-6) {
  if (problems.size() < 2) throw MetricError("estimate_covariance: need at least two problems");
  const Eigen::Index d = problems.front().size();
  VectorXd mean = VectorXd::Zero(d);
  for (const auto& p : problems) mean += p;
  mean /= double(problems.size());
  MatrixXd cov = MatrixXd::Zero(d, d);
  for (const auto& p : problems) cov += (p - mean) * (p - mean).transpose();
  cov /= double(problems.size() - 1);
  const double scale = std::max(cov.trace() / double(d), 1e-12);
  cov += ridge * scale * MatrixXd::Identity(d, d);
  return cov;
}

/// Index of the anchor problem closest to `problem`; ties go to the lower index.
inline int nearest_anchor(const VectorXd& problem, const std::vector<VectorXd>& anchors, const Metric& metric) {
  if (anchors.empty()) throw ShapeError("nearest_anchor: no anchors");
  std::optional<Eigen::LLT<MatrixXd>> llt;
  if (metric.type == Metric::Type::Mahalanobis) {
    const MatrixXd& c = metric.covariance;
    if (c.rows() != problem.size() || c.cols() != problem.size())
      throw MetricError("nearest_anchor: covariance shape mismatch");
    if (!c.isApprox(c.transpose(), 1e-12)) throw MetricError("nearest_anchor: covariance not symmetric");
    llt.emplace(c);
    if (llt->info() != Eigen::Success) throw MetricError("nearest_anchor: covariance not positive definite");
  }
  int best = -1;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < anchors.size(); ++a) {
    if (anchors[a].size() != problem.size()) throw ShapeError("nearest_anchor: width mismatch");
    const VectorXd diff = problem - anchors[a];
    const double d = llt ? diff.dot(llt->solve(diff)) : diff.squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = int(a);
    }
  }
  return best;
}

}  // namespace hcpick
