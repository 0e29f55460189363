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

#ifndef VSCHED_PENALTY_HPP_
#define VSCHED_PENALTY_HPP_

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "vsched/problem.hpp"
#include "vsched/trajectory.hpp"
#include "vsched/types.hpp"

namespace vsched {

/// Uniform sample grid spanning a mission horizon. The last sample may
/// overshoot the horizon end by at most one step.
struct TemporalGrid {
  double start = 0.0;
  double delta_tau = 0.1;
  int count = 1;
  double span = 0.1;  // tau_M - tau_1, floored at delta_tau when degenerate

  double sample(int m) const { return start + m * delta_tau; }
  double end() const { return sample(count - 1); }
};

/// Builds the penalty grid over the horizon of `timings`. `max_span` bounds
/// the grid extent so runaway solver iterates cannot demand an unbounded
/// number of samples.
inline TemporalGrid build_grid(
    const TimingVector& timings, double delta_tau,
    double max_span = std::numeric_limits<double>::infinity()) {
  if (!(delta_tau > 0.0)) {
    throw Error(ErrorKind::kInvalidParameter, "delta_tau must be positive");
  }
  const auto horizon = mission_horizon(timings);
  double extent = std::min(horizon[1] - horizon[0], max_span);
  extent = std::max(extent, 0.0);
  TemporalGrid grid;
  grid.start = horizon[0];
  grid.delta_tau = delta_tau;
  int steps = static_cast<int>(std::ceil(extent / delta_tau - 1e-12));
  steps = std::max(steps, 0);
  if (grid.start + steps * delta_tau < grid.start + extent - 1e-12) ++steps;
  grid.count = steps + 1;
  grid.span = steps > 0 ? steps * delta_tau : delta_tau;
  return grid;
}

/// Result of one penalty sweep. `gradient` is with respect to the stacked
/// timing vector and is empty unless requested. `pair_min_distance` holds
/// the minimum sampled surrogate distance per unordered pair, ordered
/// (0,1), (0,2), ..., (1,2), ...
struct PenaltyEval {
  double value = 0.0;
  VecX gradient;
  std::vector<double> pair_min_distance;
};

inline int pair_index(int num_agents, int i, int j) {
  // index of (i,j), i<j, in lexicographic pair order
  return i * num_agents - i * (i + 1) / 2 + (j - i - 1);
}

/// Evaluates the normalized collision penalty
///   f = dtau/(N_p T_s) sum_pairs sum_samples max(1 - dist/d_safe, 0)
/// over smooth surrogate positions, and optionally its exact gradient.
///
/// Conventions at the non-smooth points: a sample with dist == d_safe is
/// inactive, and a coincident sample (dist == 0) contributes value but a
/// zero gradient term. Summation order is fixed (samples outer, pairs
/// inner) so results are reproducible bit-for-bit.
inline PenaltyEval evaluate_penalty(const ProblemInstance& instance,
                                    const TimingVector& timings,
                                    const TemporalGrid& grid,
                                    bool want_gradient) {
  const int k = instance.num_agents();
  const int n_pairs = instance.num_pairs();
  PenaltyEval out;
  out.pair_min_distance.assign(n_pairs,
                               std::numeric_limits<double>::infinity());
  if (want_gradient) out.gradient = VecX::Zero(timings.total_size());
  if (n_pairs == 0) return out;

  std::vector<SmoothProfile> profiles;
  profiles.reserve(k);
  for (int i = 0; i < k; ++i) {
    profiles.emplace_back(instance.paths[i], timings.agent(i),
                          instance.smoothing);
  }

  const double scale = grid.delta_tau / (n_pairs * grid.span);
  const double grad_scale = scale / instance.d_safe;

  std::vector<Vec2> pos(k);
  std::vector<Eigen::Matrix2Xd> jac(k);
  std::vector<char> jac_ready(k);

  double value = 0.0;
  for (int m = 0; m < grid.count; ++m) {
    const double tau = grid.sample(m);
    for (int i = 0; i < k; ++i) pos[i] = profiles[i].position(tau);
    if (want_gradient) std::fill(jac_ready.begin(), jac_ready.end(), 0);
    int pair = 0;
    for (int i = 0; i < k; ++i) {
      for (int j = i + 1; j < k; ++j, ++pair) {
        const Vec2 diff = pos[i] - pos[j];
        const double dist = diff.norm();
        if (dist < out.pair_min_distance[pair]) {
          out.pair_min_distance[pair] = dist;
        }
        if (dist >= instance.d_safe) continue;
        value += scale * (1.0 - dist / instance.d_safe);
        if (!want_gradient || dist <= 0.0) continue;
        const Vec2 unit = diff / dist;
        if (!jac_ready[i]) {
          jac[i] = profiles[i].position_jacobian(tau);
          jac_ready[i] = 1;
        }
        if (!jac_ready[j]) {
          jac[j] = profiles[j].position_jacobian(tau);
          jac_ready[j] = 1;
        }
        out.gradient.segment(timings.offset(i), timings.agent_size(i)) -=
            grad_scale * (unit.transpose() * jac[i]).transpose();
        out.gradient.segment(timings.offset(j), timings.agent_size(j)) +=
            grad_scale * (unit.transpose() * jac[j]).transpose();
      }
    }
  }
  out.value = value;
  return out;
}

inline double penalty_value(const ProblemInstance& instance,
                            const TimingVector& timings,
                            const TemporalGrid& grid) {
  return evaluate_penalty(instance, timings, grid, false).value;
}

inline VecX penalty_gradient(const ProblemInstance& instance,
                             const TimingVector& timings,
                             const TemporalGrid& grid) {
  return evaluate_penalty(instance, timings, grid, true).gradient;
}

enum class PositionModel { kPiecewise, kSmooth };

struct DistanceQuery {
  double distance = std::numeric_limits<double>::infinity();
  int agent_i = -1;
  int agent_j = -1;
  double tau = 0.0;
};

/// Minimum pairwise distance over the grid under the chosen position model,
/// with the argmin pair and sample time.
inline DistanceQuery min_pairwise_distance(const ProblemInstance& instance,
                                           const TimingVector& timings,
                                           const TemporalGrid& grid,
                                           PositionModel model) {
  const int k = instance.num_agents();
  DistanceQuery best;
  if (k < 2) return best;

  std::vector<SmoothProfile> profiles;
  if (model == PositionModel::kSmooth) {
    profiles.reserve(k);
    for (int i = 0; i < k; ++i) {
      profiles.emplace_back(instance.paths[i], timings.agent(i),
                            instance.smoothing);
    }
  } else {
    for (int i = 0; i < k; ++i) require_increasing(timings.agent(i));
  }

  std::vector<Vec2> pos(k);
  for (int m = 0; m < grid.count; ++m) {
    const double tau = grid.sample(m);
    for (int i = 0; i < k; ++i) {
      pos[i] = model == PositionModel::kSmooth
                   ? profiles[i].position(tau)
                   : piecewise_position(instance.paths[i], timings.agent(i), tau);
    }
    for (int i = 0; i < k; ++i) {
      for (int j = i + 1; j < k; ++j) {
        const double dist = (pos[i] - pos[j]).norm();
        if (dist < best.distance) {
          best = {dist, i, j, tau};
        }
      }
    }
  }
  return best;
}

}  // namespace vsched

#endif  // VSCHED_PENALTY_HPP_
