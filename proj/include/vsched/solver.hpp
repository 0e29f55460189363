// Copyright 2026 The vsched Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VSCHED_SOLVER_HPP_
#define VSCHED_SOLVER_HPP_

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <string>
#include <vector>

#include "vsched/penalty.hpp"
#include "vsched/problem.hpp"
#include "vsched/types.hpp"

namespace vsched {

struct SolverConfig {
  double rho = 100.0;        // consensus penalty weight
  int n_iter_max = 1000;
  int n_ref = 1;             // refinement steps per z-update
  double alpha_active = 0.7; // heavy-ball coefficient when stagnating
  int m_stag = 10;           // stagnation probe distance (iterations)
  double eps_delta_f = 1e-3; // stagnation threshold on |f_k - f_{k-m}|
  double eps_pri = 1e-5;     // primal residual tolerance (inf norm)
  double eps_f = 1e-5;       // penalty tolerance at termination
  double eps_polyak = 1e-12; // regularizer in the Polyak denominator
  double delta_tau = 0.1;    // penalty grid spacing (s)

  void validate() const {
    if (!(rho > 0.0) || n_iter_max < 1 || n_ref < 1 || m_stag < 1 ||
        !(alpha_active >= 0.0 && alpha_active < 1.0) || !(eps_delta_f > 0.0) ||
        !(eps_pri > 0.0) || !(eps_f > 0.0) || !(eps_polyak > 0.0) ||
        !(delta_tau > 0.0)) {
      throw Error(ErrorKind::kInvalidParameter, "invalid solver configuration");
    }
  }
};

enum class SolveStatus { kConverged, kMaxIterations, kInfeasibleInput };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kConverged: return "converged";
    case SolveStatus::kMaxIterations: return "max_iter";
    case SolveStatus::kInfeasibleInput: return "infeasible_input";
  }
  return "unknown";
}

struct SolverState {
  VecX t, x, z;          // primal iterates
  VecX u_boundary;       // scaled dual for E t = e (start, arrival per agent)
  VecX u_box;            // scaled dual for D t = x
  VecX u_consensus;      // scaled dual for t = z
  VecX momentum;         // heavy-ball buffer v
  std::deque<double> f_history;  // f(zhat) per iteration, pre-refinement
  int iteration = 0;
};

struct TraceRow {
  int iteration = 0;
  double penalty_hat = 0.0;   // f(zhat) before the correction step
  double penalty_z = 0.0;     // f(z) after the correction step
  double residual_inf = 0.0;  // ||[Et-e; Dt-x; t-z]||_inf
  double objective = 0.0;     // q^T t
};

struct SolveReport {
  TimingVector timings;
  SolveStatus status = SolveStatus::kMaxIterations;
  int iterations = 0;
  std::vector<TraceRow> trace;
  double objective = 0.0;
  double final_penalty = 0.0;
  double final_residual = 0.0;
  double wall_time_seconds = 0.0;
};

/// Floors non-increasing agent durations at 1e-3 of the v_max duration so
/// the surrogate model stays defined on transient solver iterates.
inline TimingVector floor_durations(const ProblemInstance& instance,
                                    const StackedOperators& ops,
                                    const VecX& stacked) {
  TimingVector out(stacked, ops.offsets());
  for (int i = 0; i < ops.num_agents(); ++i) {
    auto t = out.agent(i);
    const auto& block = ops.block(i);
    bool ok = true;
    for (int n = 0; n + 1 < t.size(); ++n) {
      if (t[n + 1] - t[n] < 1e-3 * block.box_lo[n]) {
        ok = false;
        break;
      }
    }
    if (ok) continue;
    for (int n = 0; n + 1 < t.size(); ++n) {
      const double dt = std::max(t[n + 1] - t[n], 1e-3 * block.box_lo[n]);
      t[n + 1] = t[n] + dt;
    }
  }
  return out;
}

/// Inexact-projection ADMM on the consensus form: prefactorized timing
/// update, box projection of the segment durations, Polyak-momentum
/// collision correction, and dual ascent.
class AdmmSolver {
 public:
  AdmmSolver(const ProblemInstance& instance, const SolverConfig& config)
      : instance_(instance), config_(config), ops_(instance) {
    config_.validate();
    // Longest physically meaningful horizon: slowest admissible traversal.
    double worst = 0.0, ts_min = instance.paths[0].start_time,
           ts_max = ts_min;
    for (int i = 0; i < ops_.num_agents(); ++i) {
      worst = std::max(worst, ops_.block(i).box_hi.sum());
      ts_min = std::min(ts_min, instance.paths[i].start_time);
      ts_max = std::max(ts_max, instance.paths[i].start_time);
    }
    max_grid_span_ = worst + (ts_max - ts_min) + 2.0 * config_.delta_tau;
  }

  const StackedOperators& operators() const { return ops_; }

  SolverState initial_state() const {
    SolverState s;
    s.t = min_time_timing(instance_).stacked();
    s.x = ops_.apply_difference(s.t);
    s.z = s.t;
    s.u_boundary = VecX::Zero(2 * ops_.num_agents());
    s.u_box = VecX::Zero(ops_.total_segments());
    s.u_consensus = VecX::Zero(ops_.total_size());
    s.momentum = VecX::Zero(ops_.total_size());
    return s;
  }

  /// t-update: per-agent tridiagonal solve of
  ///   (E^T E + D^T D + I) t = E^T(e-u_E) + D^T(x-u_x) + (z-u_z) - q/rho.
  VecX t_update(const SolverState& s) const {
    VecX rhs = s.z - s.u_consensus;
    rhs += ops_.apply_difference_transpose(s.x - s.u_box);
    VecX t(ops_.total_size());
    for (int i = 0; i < ops_.num_agents(); ++i) {
      const auto& block = ops_.block(i);
      const int o = ops_.offset(i);
      VecX r = rhs.segment(o, block.size);
      r[0] += block.start_value - s.u_boundary[2 * i];
      if (block.has_arrival) {
        r[block.size - 1] += block.arrival_value - s.u_boundary[2 * i + 1];
      }
      if (block.in_objective) r[block.size - 1] -= 1.0 / config_.rho;
      ops_.solve_normal(i, r, t.segment(o, block.size));
    }
    return t;
  }

  /// x-update: project the shifted durations onto the speed box.
  VecX x_update(const SolverState& s) const {
    VecX x = ops_.apply_difference(s.t) + s.u_box;
    return x.cwiseMax(ops_.stacked_box_lo()).cwiseMin(ops_.stacked_box_hi());
  }

  /// z-update: Polyak-type correction steps on the collision penalty from
  /// the proximal candidate zhat = t + u_z, with stagnation-triggered
  /// momentum. Mutates z, momentum, and the f history; returns f(zhat).
  double z_update(SolverState& s, const TemporalGrid& grid) const {
    const VecX zhat = s.t + s.u_consensus;
    PenaltyEval eval = evaluate_penalty(
        instance_, floor_durations(instance_, ops_, zhat), grid, true);
    const double f_hat = eval.value;

    // Momentum engages when the penalty is stuck but still substantive;
    // below eps_delta_f the |delta f| probe carries no signal and a held
    // momentum buffer only pumps the near-converged iterate.
    double alpha = 0.0;
    const int m = config_.m_stag;
    if (s.iteration >= m &&
        static_cast<int>(s.f_history.size()) >= m &&
        std::abs(f_hat - s.f_history[s.f_history.size() - m]) <
            config_.eps_delta_f &&
        f_hat >= config_.eps_delta_f) {
      alpha = config_.alpha_active;
    }
    s.f_history.push_back(f_hat);
    while (static_cast<int>(s.f_history.size()) >
           config_.m_stag + 1) {
      s.f_history.pop_front();
    }

    VecX z = zhat;
    double f_cur = f_hat;
    for (int r = 0; r < config_.n_ref; ++r) {
      if (r > 0) {
        eval = evaluate_penalty(instance_,
                                floor_durations(instance_, ops_, z), grid, true);
        f_cur = eval.value;
      }
      const double gnorm2 = eval.gradient.squaredNorm();
      double step = f_cur / (gnorm2 + config_.eps_polyak);
      // Motion cap: one grid span. Guards against near-flat gradients
      // (symmetric encounters) teleporting the iterate.
      const double gnorm = std::sqrt(gnorm2);
      if (step * gnorm > grid.span) step = grid.span / gnorm;
      s.momentum = alpha * s.momentum - step * eval.gradient;
      z = zhat + s.momentum;
    }
    s.z = z;
    return f_hat;
  }

  /// Scaled dual ascent on all three consensus constraints.
  void dual_update(SolverState& s) const {
    s.u_boundary += ops_.boundary_residual(s.t);
    s.u_box += ops_.apply_difference(s.t) - s.x;
    s.u_consensus += s.t - s.z;
  }

  double primal_residual_inf(const SolverState& s) const {
    double r = ops_.boundary_residual(s.t).lpNorm<Eigen::Infinity>();
    r = std::max(r, (ops_.apply_difference(s.t) - s.x).lpNorm<Eigen::Infinity>());
    r = std::max(r, (s.t - s.z).lpNorm<Eigen::Infinity>());
    return r;
  }

  bool check_termination(const SolverState& s, double penalty_z) const {
    return primal_residual_inf(s) <= config_.eps_pri &&
           penalty_z <= config_.eps_f;
  }

  TemporalGrid make_grid(const VecX& stacked) const {
    return build_grid(TimingVector(stacked, ops_.offsets()), config_.delta_tau,
                      max_grid_span_);
  }

  /// Rebuild when the iterate's horizon out-grows the grid or shrinks by
  /// more than 10% of the grid span.
  bool grid_needs_rebuild(const TemporalGrid& grid, const VecX& stacked) const {
    const auto horizon =
        mission_horizon(TimingVector(stacked, ops_.offsets()));
    const double end =
        std::min(horizon[1], horizon[0] + max_grid_span_);
    if (horizon[0] < grid.start - 0.5 * grid.delta_tau) return true;
    if (end > grid.end() + 0.5 * grid.delta_tau) return true;
    if (end < grid.end() - 0.1 * grid.span) return true;
    return false;
  }

  SolveReport solve() const {
    const auto t_begin = std::chrono::steady_clock::now();
    SolverState s = initial_state();
    TemporalGrid grid = make_grid(s.t);

    SolveReport report;
    report.trace.reserve(config_.n_iter_max);
    for (int k = 0; k < config_.n_iter_max; ++k) {
      s.iteration = k;
      s.t = t_update(s);
      s.x = x_update(s);
      const VecX zhat = s.t + s.u_consensus;
      if (grid_needs_rebuild(grid, zhat)) grid = make_grid(zhat);
      const double f_hat = z_update(s, grid);
      dual_update(s);

      const double f_z = penalty_value(
          instance_, floor_durations(instance_, ops_, s.z), grid);
      const double residual = primal_residual_inf(s);
      report.trace.push_back(
          {k, f_hat, f_z, residual, ops_.objective(s.t)});
      report.iterations = k + 1;
      if (residual <= config_.eps_pri && f_z <= config_.eps_f) {
        report.status = SolveStatus::kConverged;
        break;
      }
    }

    report.timings = project_timings(s.t);
    report.objective = ops_.objective(report.timings.stacked());
    if (!report.trace.empty()) {
      report.final_penalty = report.trace.back().penalty_z;
      report.final_residual = report.trace.back().residual_inf;
    }
    report.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_begin)
            .count();
    return report;
  }

  /// Exact box feasibility for the reported schedule: clamp the durations
  /// once and re-accumulate from each agent's start time.
  TimingVector project_timings(const VecX& stacked) const {
    VecX t = stacked;
    for (int i = 0; i < ops_.num_agents(); ++i) {
      const auto& block = ops_.block(i);
      const int o = ops_.offset(i);
      double at = block.start_value;
      t[o] = at;
      for (int n = 0; n + 1 < block.size; ++n) {
        const double dt = std::clamp(stacked[o + n + 1] - stacked[o + n],
                                     block.box_lo[n], block.box_hi[n]);
        at += dt;
        t[o + n + 1] = at;
      }
    }
    return TimingVector(t, ops_.offsets());
  }

 private:
  ProblemInstance instance_;
  SolverConfig config_;
  StackedOperators ops_;
  double max_grid_span_ = 0.0;
};

/// One-call interface: assemble, iterate, post-process. Structural
/// infeasibility is reported in the status rather than thrown.
inline SolveReport solve(const ProblemInstance& instance,
                         const SolverConfig& config = {}) {
  try {
    AdmmSolver solver(instance, config);
    return solver.solve();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kStructurallyInfeasible ||
        e.kind() == ErrorKind::kInfeasibleArrival) {
      SolveReport report;
      report.status = SolveStatus::kInfeasibleInput;
      report.timings = TimingVector();
      return report;
    }
    throw;
  }
}

}  // namespace vsched

#endif  // VSCHED_SOLVER_HPP_
