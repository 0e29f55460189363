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

#ifndef VSCHED_PROBLEM_HPP_
#define VSCHED_PROBLEM_HPP_

#include <array>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "vsched/trajectory.hpp"
#include "vsched/types.hpp"

namespace vsched {

/// A complete velocity-scheduling instance: fixed routes, global speed
/// bounds, pairwise safety distance, and the surrogate smoothing.
struct ProblemInstance {
  std::vector<WaypointPath> paths;
  double v_min = 0.02;
  double v_max = 2.0;
  double d_safe = 1.0;
  SmoothingParams smoothing = smoothing_from_bandwidth(10.0);

  int num_agents() const { return static_cast<int>(paths.size()); }

  int num_pairs() const {
    const int k = num_agents();
    return k * (k - 1) / 2;
  }

  int total_waypoints() const {
    int n = 0;
    for (const auto& p : paths) n += p.size();
    return n;
  }

  void validate() const {
    if (paths.empty()) {
      throw Error(ErrorKind::kInvalidParameter, "instance has no agents");
    }
    if (!(v_min > 0.0) || !(v_max > v_min)) {
      throw Error(ErrorKind::kInvalidParameter,
                  "speed bounds must satisfy 0 < v_min < v_max");
    }
    if (!(d_safe > 0.0)) {
      throw Error(ErrorKind::kInvalidParameter, "d_safe must be positive");
    }
    for (const auto& p : paths) p.validate();
  }
};

/// Stacked operators of the consensus form, stored per agent so the timing
/// update decomposes into independent symmetric tridiagonal solves.
///
/// Per agent i:
///   D_i  forward difference ((N_i-1) x N_i, rows [-1 1])
///   E_i  unit selectors for the start time and, when present, the arrival
///   box  d/v_max <= x <= d/v_min on the segment durations
/// The normal matrix E^T E + D^T D + I is tridiagonal per agent; its LDL^T
/// factor is precomputed here and reused for every solve.
class StackedOperators {
 public:
  struct AgentBlock {
    int size = 0;                 // N_i
    double start_value = 0.0;     // e entry for the start row
    bool has_arrival = false;
    double arrival_value = 0.0;   // e entry for the arrival row, if any
    bool in_objective = false;    // q selects the terminal index
    VecX box_lo, box_hi;          // segment-duration bounds
    VecX factor_diag, factor_low; // LDL^T of E^T E + D^T D + I
  };

  explicit StackedOperators(const ProblemInstance& instance) {
    instance.validate();
    const int k = instance.num_agents();
    blocks_.resize(k);
    offsets_.assign(1, 0);
    seg_offsets_.assign(1, 0);
    for (int i = 0; i < k; ++i) {
      const WaypointPath& path = instance.paths[i];
      AgentBlock& b = blocks_[i];
      b.size = path.size();
      b.start_value = path.start_time;
      b.has_arrival = path.fixed_arrival.has_value();
      b.in_objective = !b.has_arrival;
      const int m = path.num_segments();
      b.box_lo.resize(m);
      b.box_hi.resize(m);
      double min_travel = 0.0;
      for (int n = 0; n < m; ++n) {
        const double d = path.segment_length(n);
        b.box_lo[n] = d / instance.v_max;
        b.box_hi[n] = d / instance.v_min;
        min_travel += b.box_lo[n];
      }
      if (b.has_arrival) {
        b.arrival_value = *path.fixed_arrival;
        const double span = b.arrival_value - b.start_value;
        if (span < min_travel - 1e-12) {
          throw Error(ErrorKind::kStructurallyInfeasible,
                      "agent " + std::to_string(path.id) +
                          " cannot reach its arrival time at v_max");
        }
        if (span > b.box_hi.sum() + 1e-12) {
          throw Error(ErrorKind::kStructurallyInfeasible,
                      "agent " + std::to_string(path.id) +
                          " cannot stall until its arrival time at v_min");
        }
      }
      factorize(b);
      offsets_.push_back(offsets_.back() + b.size);
      seg_offsets_.push_back(seg_offsets_.back() + m);
    }
  }

  int num_agents() const { return static_cast<int>(blocks_.size()); }
  int total_size() const { return offsets_.back(); }
  int total_segments() const { return seg_offsets_.back(); }
  const std::vector<int>& offsets() const { return offsets_; }
  const AgentBlock& block(int i) const { return blocks_[i]; }
  int offset(int i) const { return offsets_[i]; }
  int seg_offset(int i) const { return seg_offsets_[i]; }

  /// D t: stacked per-agent forward differences.
  VecX apply_difference(const VecX& t) const {
    VecX out(total_segments());
    for (int i = 0; i < num_agents(); ++i) {
      const int n = blocks_[i].size;
      const int o = offsets_[i], so = seg_offsets_[i];
      for (int s = 0; s + 1 < n; ++s) out[so + s] = t[o + s + 1] - t[o + s];
    }
    return out;
  }

  /// D^T y.
  VecX apply_difference_transpose(const VecX& y) const {
    VecX out = VecX::Zero(total_size());
    for (int i = 0; i < num_agents(); ++i) {
      const int n = blocks_[i].size;
      const int o = offsets_[i], so = seg_offsets_[i];
      for (int s = 0; s + 1 < n; ++s) {
        out[o + s] -= y[so + s];
        out[o + s + 1] += y[so + s];
      }
    }
    return out;
  }

  /// Residual E t - e as per-agent (start, arrival) entries; absent arrival
  /// rows are zero.
  VecX boundary_residual(const VecX& t) const {
    VecX r = VecX::Zero(2 * num_agents());
    for (int i = 0; i < num_agents(); ++i) {
      const AgentBlock& b = blocks_[i];
      r[2 * i] = t[offsets_[i]] - b.start_value;
      if (b.has_arrival) {
        r[2 * i + 1] = t[offsets_[i] + b.size - 1] - b.arrival_value;
      }
    }
    return r;
  }

  /// q^T t: summed terminal times of agents without a fixed arrival.
  double objective(const VecX& t) const {
    double sum = 0.0;
    for (int i = 0; i < num_agents(); ++i) {
      if (blocks_[i].in_objective) sum += t[offsets_[i] + blocks_[i].size - 1];
    }
    return sum;
  }

  VecX stacked_box_lo() const {
    VecX lo(total_segments());
    for (int i = 0; i < num_agents(); ++i) {
      lo.segment(seg_offsets_[i], blocks_[i].box_lo.size()) = blocks_[i].box_lo;
    }
    return lo;
  }

  VecX stacked_box_hi() const {
    VecX hi(total_segments());
    for (int i = 0; i < num_agents(); ++i) {
      hi.segment(seg_offsets_[i], blocks_[i].box_hi.size()) = blocks_[i].box_hi;
    }
    return hi;
  }

  /// Tridiagonal entries of E^T E + D^T D + I for one agent (diag, sub).
  std::pair<VecX, VecX> normal_matrix(int i) const {
    const AgentBlock& b = blocks_[i];
    VecX diag(b.size), sub(std::max(b.size - 1, 0));
    build_normal(b, diag, sub);
    return {diag, sub};
  }

  /// Solves (E^T E + D^T D + I) out = rhs for one agent using the cached
  /// LDL^T factor.
  void solve_normal(int i, const VecX& rhs, Eigen::Ref<VecX> out) const {
    const AgentBlock& b = blocks_[i];
    const int n = b.size;
    // forward substitution L y = rhs
    out[0] = rhs[0];
    for (int r = 1; r < n; ++r) out[r] = rhs[r] - b.factor_low[r - 1] * out[r - 1];
    // D^-1 then L^T back substitution
    for (int r = 0; r < n; ++r) out[r] /= b.factor_diag[r];
    for (int r = n - 2; r >= 0; --r) out[r] -= b.factor_low[r] * out[r + 1];
  }

 private:
  static void build_normal(const AgentBlock& b, VecX& diag, VecX& sub) {
    const int n = b.size;
    for (int r = 0; r < n; ++r) {
      double d = 1.0;                       // identity
      d += (r == 0 || r == n - 1) ? 1.0 : 2.0;  // D^T D path Laplacian
      if (n == 1) d = 2.0;                  // degenerate, unused in practice
      diag[r] = d;
    }
    diag[0] += 1.0;                         // start selector
    if (b.has_arrival) diag[n - 1] += 1.0;  // arrival selector
    sub.setConstant(-1.0);
  }

  static void factorize(AgentBlock& b) {
    const int n = b.size;
    VecX diag(n), sub(std::max(n - 1, 0));
    build_normal(b, diag, sub);
    b.factor_diag.resize(n);
    b.factor_low.resize(std::max(n - 1, 0));
    b.factor_diag[0] = diag[0];
    for (int r = 0; r + 1 < n; ++r) {
      b.factor_low[r] = sub[r] / b.factor_diag[r];
      b.factor_diag[r + 1] = diag[r + 1] - b.factor_low[r] * sub[r];
    }
  }

  std::vector<AgentBlock> blocks_;
  std::vector<int> offsets_;      // waypoint offsets, size K+1
  std::vector<int> seg_offsets_;  // segment offsets, size K+1
};

inline StackedOperators assemble(const ProblemInstance& instance) {
  return StackedOperators(instance);
}

/// Fastest admissible schedule: v_max on every segment, uniformly rescaled
/// when a fixed arrival requires slower travel.
inline TimingVector min_time_timing(const ProblemInstance& instance) {
  instance.validate();
  std::vector<VecX> per_agent;
  per_agent.reserve(instance.paths.size());
  for (const WaypointPath& path : instance.paths) {
    VecX t(path.size());
    t[0] = path.start_time;
    for (int n = 0; n + 1 < path.size(); ++n) {
      t[n + 1] = t[n] + path.segment_length(n) / instance.v_max;
    }
    if (path.fixed_arrival) {
      const double min_span = t[path.size() - 1] - t[0];
      const double span = *path.fixed_arrival - path.start_time;
      const double gamma = span / min_span;
      if (gamma < 1.0 - 1e-12 || gamma > instance.v_max / instance.v_min + 1e-12) {
        throw Error(ErrorKind::kInfeasibleArrival,
                    "agent " + std::to_string(path.id) +
                        ": fixed arrival is outside the speed box");
      }
      for (int n = 0; n < path.size(); ++n) {
        t[n] = path.start_time + gamma * (t[n] - path.start_time);
      }
    }
    per_agent.push_back(std::move(t));
  }
  return TimingVector(per_agent);
}

/// Mission horizon [earliest departure, latest arrival].
inline std::array<double, 2> mission_horizon(const TimingVector& timings) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (int i = 0; i < timings.num_agents(); ++i) {
    auto t = timings.agent(i);
    lo = std::min(lo, t[0]);
    hi = std::max(hi, t[t.size() - 1]);
  }
  return {lo, hi};
}

}  // namespace vsched

#endif  // VSCHED_PROBLEM_HPP_
