#pragma once

// Predictor-corrector path tracking for the parameter homotopy
// H(p(tau), s(tau)) = 0 and a plain Newton baseline.
//
// The predictor integrates dH/ds * ds/dtau = -dH/dp * dp/dtau with classic
// RK4; every stage costs one closed-form pattern solve. A bounded number of
// Newton steps then pulls the prediction back onto the path.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <string_view>
#include <vector>

#include "hcpick/formulations.hpp"
#include "hcpick/kinds.hpp"
#include "hcpick/pattern_solver.hpp"

namespace hcpick {

struct TrackSettings {
  double initial_dt = 0.05;
  double min_dt = 1e-7;
  double max_dt = 0.25;
  int max_steps = 10000;
  double corrector_tolerance = 1e-9;  // infinity norm of the residual
  int max_corrector_iters = 3;
  double step_growth = 2.0;
  int successes_before_growth = 4;
  double step_shrink = 0.5;
  double success_distance_sq = 1e-5;
  double divergence_norm = 1e8;
  double imaginary_tolerance = 1e-6;
  int polish_iters = 3;  // extra Newton steps at the target, kept only while they help
  double polish_floor = 1e-13;  // residual treated as exact; polishing below it only adds drift
};

enum class TrackStatus {
  Converged,
  StepSizeUnderflow,
  MaxStepsExceeded,
  SingularJacobian,
  DivergedNorm,
  NonRealEndpoint,
};

inline std::string_view status_name(TrackStatus s) {
  switch (s) {
    case TrackStatus::Converged: return "converged";
    case TrackStatus::StepSizeUnderflow: return "step_underflow";
    case TrackStatus::MaxStepsExceeded: return "max_steps";
    case TrackStatus::SingularJacobian: return "singular";
    case TrackStatus::DivergedNorm: return "diverged";
    case TrackStatus::NonRealEndpoint: return "non_real";
  }
  return "unknown";
}

template <class K>
struct TrackOutcome {
  TrackStatus status = TrackStatus::MaxStepsExceeded;
  SolutionVec<K> solution = SolutionVec<K>::Zero();  // meaningful only when converged
  int steps_taken = 0;
  std::chrono::nanoseconds wall_time{0};

  bool converged() const { return status == TrackStatus::Converged; }
};

/// p(tau) = p0 + tau (p1 - p0).
template <class K>
struct SegmentPath {
  using Scalar = double;
  ProblemVec<K> start, direction;

  SegmentPath(const ProblemVec<K>& p0, const ProblemVec<K>& p1) : start(p0), direction(p1 - p0) {}
  ProblemVec<K> problem(double tau) const { return start + tau * direction; }
  ProblemVec<K> velocity(double) const { return direction; }
};

/// p(tau) = p0 + t(tau) (p1 - p0) with t(tau) = gamma tau / (1 + (gamma - 1) tau).
template <class K>
struct ArcPath {
  using Scalar = Complex;
  ProblemVec<K, Complex> start, direction;
  Complex gamma;

  ArcPath(const ProblemVec<K>& p0, const ProblemVec<K>& p1, Complex g)
      : start(p0.template cast<Complex>()), direction((p1 - p0).template cast<Complex>()), gamma(g) {}
  Complex t_of(double tau) const { return gamma * tau / (1.0 + (gamma - 1.0) * tau); }
  Complex dt_of(double tau) const {
    const Complex den = 1.0 + (gamma - 1.0) * tau;
    return gamma / (den * den);
  }
  ProblemVec<K, Complex> problem(double tau) const { return start + t_of(tau) * direction; }
  ProblemVec<K, Complex> velocity(double tau) const { return dt_of(tau) * direction; }
};

namespace detail {

template <class K, class T>
bool all_finite(const SolutionVec<K, T>& v) {
  for (int i = 0; i < v.size(); ++i) {
    if (!std::isfinite(std::abs(v(i)))) return false;
  }
  return true;
}

/// ds/dtau at (tau, s).
template <class K, class Path>
SolutionVec<K, typename Path::Scalar> tangent(const Path& path, double tau,
                                              const SolutionVec<K, typename Path::Scalar>& s) {
  using T = typename Path::Scalar;
  const auto p = path.problem(tau);
  const auto dp = path.velocity(tau);
  JacobianMat<K, T> J;
  SolutionVec<K, T> ht;
  linearize<K, T>(p, &dp, s, static_cast<SolutionVec<K, T>*>(nullptr), &J, &ht);
  return solve_pattern<K, T>(J, -ht);
}

/// Newton iterations at fixed tau. Returns true once the residual is within tolerance.
template <class K, class T, class ProblemLike>
bool correct(const ProblemLike& p, SolutionVec<K, T>& s, int max_iters, double tol) {
  JacobianMat<K, T> J;
  SolutionVec<K, T> r;
  for (int it = 0;; ++it) {
    linearize<K, T, ProblemLike, ProblemLike>(p, nullptr, s, &r, &J, nullptr);
    if (!all_finite<K, T>(r)) return false;
    if (r.cwiseAbs().maxCoeff() <= tol) return true;
    if (it == max_iters) return false;
    s -= solve_pattern<K, T>(J, r);
  }
}

/// Newton at the endpoint beyond the corrector tolerance. A step is kept only
/// if it lowers the residual, so this never makes a converged point worse.
/// Nothing happens once the residual is at or below floor: there the Newton
/// step is rounding noise amplified by the conditioning of J.
template <class K, class T, class ProblemLike>
void polish(const ProblemLike& p, SolutionVec<K, T>& s, int iters, double floor) {
  JacobianMat<K, T> J;
  SolutionVec<K, T> r;
  linearize<K, T, ProblemLike, ProblemLike>(p, nullptr, s, &r, &J, nullptr);
  double rn = r.cwiseAbs().maxCoeff();
  for (int it = 0; it < iters && rn > floor; ++it) {
    SolutionVec<K, T> trial;
    try {
      trial = s - solve_pattern<K, T>(J, r);
    } catch (const SingularSystemError&) {
      return;
    }
    JacobianMat<K, T> Jt;
    SolutionVec<K, T> rt;
    linearize<K, T, ProblemLike, ProblemLike>(p, nullptr, trial, &rt, &Jt, nullptr);
    const double rtn = rt.cwiseAbs().maxCoeff();
    if (!(rtn < rn)) return;
    s = trial;
    r = rt;
    J = Jt;
    rn = rtn;
  }
}

}  // namespace detail

/// One classic RK4 step of the path ODE from tau to tau + dt.
template <class K, class Path>
SolutionVec<K, typename Path::Scalar> rk4_predict(const Path& path, double tau, double dt,
                                                  const SolutionVec<K, typename Path::Scalar>& s) {
  using T = typename Path::Scalar;
  const SolutionVec<K, T> k1 = detail::tangent<K>(path, tau, s);
  const SolutionVec<K, T> k2 = detail::tangent<K>(path, tau + dt / 2, SolutionVec<K, T>(s + (dt / 2) * k1));
  const SolutionVec<K, T> k3 = detail::tangent<K>(path, tau + dt / 2, SolutionVec<K, T>(s + (dt / 2) * k2));
  const SolutionVec<K, T> k4 = detail::tangent<K>(path, tau + dt, SolutionVec<K, T>(s + dt * k3));
  return s + (dt / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

/// Tracks start_solution along path from tau = 0 to tau = 1.
template <class K, class Path>
TrackStatus track_path(const Path& path, SolutionVec<K, typename Path::Scalar>& s, const TrackSettings& cfg,
                       int& steps) {
  using T = typename Path::Scalar;
  double tau = 0.0;
  double dt = std::min(cfg.initial_dt, cfg.max_dt);
  int streak = 0;
  steps = 0;
  while (tau < 1.0) {
    if (steps >= cfg.max_steps) return TrackStatus::MaxStepsExceeded;
    if (dt < cfg.min_dt) return TrackStatus::StepSizeUnderflow;
    ++steps;
    const double h = std::min(dt, 1.0 - tau);
    const bool last = h >= 1.0 - tau;

    // A singular Jacobian at the current, accepted point cannot be cured by a
    // smaller step; later stages only mean the step was too long.
    SolutionVec<K, T> k1;
    try {
      k1 = detail::tangent<K>(path, tau, s);
    } catch (const SingularSystemError&) {
      return TrackStatus::SingularJacobian;
    }
    SolutionVec<K, T> next;
    bool ok = true;
    try {
      const SolutionVec<K, T> k2 = detail::tangent<K>(path, tau + h / 2, SolutionVec<K, T>(s + (h / 2) * k1));
      const SolutionVec<K, T> k3 = detail::tangent<K>(path, tau + h / 2, SolutionVec<K, T>(s + (h / 2) * k2));
      const SolutionVec<K, T> k4 = detail::tangent<K>(path, tau + h, SolutionVec<K, T>(s + h * k3));
      next = s + (h / 6) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      const double t_next = last ? 1.0 : tau + h;
      ok = detail::all_finite<K, T>(next) &&
           detail::correct<K, T>(path.problem(t_next), next, cfg.max_corrector_iters, cfg.corrector_tolerance);
    } catch (const SingularSystemError&) {
      ok = false;
    }
    if (!ok) {
      dt *= cfg.step_shrink;
      streak = 0;
      continue;
    }
    s = next;
    tau = last ? 1.0 : tau + h;
    if (s.norm() > cfg.divergence_norm) return TrackStatus::DivergedNorm;
    if (++streak >= cfg.successes_before_growth) {
      dt = std::min(dt * cfg.step_growth, cfg.max_dt);
      streak = 0;
    }
  }
  detail::polish<K, T>(path.problem(1.0), s, cfg.polish_iters, cfg.polish_floor);
  return TrackStatus::Converged;
}

/// Real linear-segment homotopy from start.problem to target_problem.
template <class K>
TrackOutcome<K> track_segment(const PsPair<K>& start, const ProblemVec<K>& target_problem,
                              const TrackSettings& cfg = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  TrackOutcome<K> out;
  SolutionVec<K> s = start.solution;
  out.status = track_path<K>(SegmentPath<K>(start.problem, target_problem), s, cfg, out.steps_taken);
  if (out.converged()) out.solution = s;
  out.wall_time = std::chrono::steady_clock::now() - t0;
  return out;
}

/// Complex circular-arc homotopy (gamma trick). Real endpoints are returned
/// with their imaginary parts dropped.
template <class K>
TrackOutcome<K> track_arc(const PsPair<K>& start, const ProblemVec<K>& target_problem, Complex gamma,
                          const TrackSettings& cfg = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  TrackOutcome<K> out;
  SolutionVec<K, Complex> s = start.solution.template cast<Complex>();
  out.status = track_path<K>(ArcPath<K>(start.problem, target_problem, gamma), s, cfg, out.steps_taken);
  if (out.converged()) {
    if (s.imag().norm() > cfg.imaginary_tolerance) {
      out.status = TrackStatus::NonRealEndpoint;
    } else {
      out.solution = s.real();
    }
  }
  out.wall_time = std::chrono::steady_clock::now() - t0;
  return out;
}

/// Undamped Newton from an arbitrary initial guess. residual_log, if given,
/// receives the residual infinity norm before every step.
template <class K>
TrackOutcome<K> newton_refine(const ProblemVec<K>& problem, const SolutionVec<K>& initial, int max_steps,
                              const TrackSettings& cfg = {}, std::vector<double>* residual_log = nullptr) {
  const auto t0 = std::chrono::steady_clock::now();
  TrackOutcome<K> out;
  SolutionVec<K> s = initial;
  JacobianMat<K> J;
  SolutionVec<K> r;
  out.status = TrackStatus::MaxStepsExceeded;
  for (int k = 0;; ++k) {
    linearize<K, double, ProblemVec<K>, ProblemVec<K>>(problem, nullptr, s, &r, &J, nullptr);
    const double rn = r.cwiseAbs().maxCoeff();
    if (residual_log) residual_log->push_back(rn);
    if (!std::isfinite(rn) || s.norm() > cfg.divergence_norm) {
      out.status = TrackStatus::DivergedNorm;
      break;
    }
    if (rn <= cfg.corrector_tolerance) {
      out.status = TrackStatus::Converged;
      out.solution = s;
      break;
    }
    if (k == max_steps) break;
    try {
      s -= solve_pattern<K, double>(J, r);
    } catch (const SingularSystemError&) {
      out.status = TrackStatus::SingularJacobian;
      break;
    }
    out.steps_taken = k + 1;
  }
  out.wall_time = std::chrono::steady_clock::now() - t0;
  return out;
}

/// The success test used throughout: squared distance to a known solution.
template <class K>
bool reaches(const TrackOutcome<K>& out, const SolutionVec<K>& truth, const TrackSettings& cfg = {}) {
  return out.converged() && (out.solution - truth).squaredNorm() < cfg.success_distance_sq;
}

}  // namespace hcpick
