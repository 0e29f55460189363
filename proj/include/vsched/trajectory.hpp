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

#ifndef VSCHED_TRAJECTORY_HPP_
#define VSCHED_TRAJECTORY_HPP_

#include <cmath>
#include <vector>

#include "vsched/types.hpp"

namespace vsched {

/// Overflow-safe logistic function 1/(1+exp(-x)).
inline double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// Overflow-safe softplus log(1+exp(x)); exact linear tail for large x.
inline double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

/// Matches the sigmoid transition to a critically damped second-order
/// velocity loop of bandwidth `omega`: bias = 1.678/omega, beta = 1.47*omega.
inline SmoothingParams smoothing_from_bandwidth(double omega) {
  if (omega <= 0.0) {
    throw Error(ErrorKind::kInvalidParameter, "bandwidth must be positive");
  }
  SmoothingParams p;
  p.bandwidth = omega;
  p.bias = 1.678 / omega;
  p.beta = 1.47 * omega;
  return p;
}

/// Constant velocity on each segment: v_n = (p_{n+1}-p_n)/(t_{n+1}-t_n).
inline std::vector<Vec2> segment_velocities(
    const WaypointPath& path, const Eigen::Ref<const VecX>& times) {
  require_increasing(times);
  std::vector<Vec2> v(path.num_segments());
  for (int n = 0; n < path.num_segments(); ++n) {
    v[n] = (path.waypoints[n + 1] - path.waypoints[n]) / (times[n + 1] - times[n]);
  }
  return v;
}

/// Exact piecewise-linear position, held at the first/last waypoint outside
/// [t_1, t_N].
inline Vec2 piecewise_position(const WaypointPath& path,
                               const Eigen::Ref<const VecX>& times,
                               double tau) {
  require_increasing(times);
  const int n_wp = path.size();
  if (tau <= times[0]) return path.waypoints.front();
  if (tau >= times[n_wp - 1]) return path.waypoints.back();
  int n = static_cast<int>(
      std::upper_bound(times.data(), times.data() + n_wp, tau) - times.data());
  n = std::min(std::max(n - 1, 0), n_wp - 2);
  const double lambda = (tau - times[n]) / (times[n + 1] - times[n]);
  return path.waypoints[n] + lambda * (path.waypoints[n + 1] - path.waypoints[n]);
}

/// Piecewise-constant commanded velocity; zero before departure and after
/// arrival (the agent holds its waypoint).
inline Vec2 piecewise_velocity(const WaypointPath& path,
                               const Eigen::Ref<const VecX>& times,
                               double tau) {
  require_increasing(times);
  const int n_wp = path.size();
  if (tau < times[0] || tau >= times[n_wp - 1]) return Vec2::Zero();
  int n = static_cast<int>(
      std::upper_bound(times.data(), times.data() + n_wp, tau) - times.data());
  n = std::min(std::max(n - 1, 0), n_wp - 2);
  return (path.waypoints[n + 1] - path.waypoints[n]) / (times[n + 1] - times[n]);
}

/// Precomputed smooth surrogate profile of one agent for a fixed timing.
///
/// Velocity is a sum of sigmoid-gated segment velocities and position its
/// closed-form softplus integral:
///
///   v~(tau) = sum_n v_n (sigma(beta(tau-that_n)) - sigma(beta(tau-that_{n+1})))
///   p~(tau) = p_1 + sum_n v_n/beta (zeta(beta(tau-that_n)) - zeta(beta(tau-that_{n+1})))
///
/// with that_n = t_n + bias. Both sums telescope into one pass over the
/// waypoint-anchored sigmoid/softplus values, which is how this class
/// evaluates them.
class SmoothProfile {
 public:
  SmoothProfile(const WaypointPath& path, const Eigen::Ref<const VecX>& times,
                const SmoothingParams& params)
      : beta_(params.beta), first_(path.waypoints.front()) {
    require_increasing(times);
    const int n_wp = path.size();
    shifted_.resize(n_wp);
    for (int n = 0; n < n_wp; ++n) shifted_[n] = times[n] + params.bias;
    vel_ = segment_velocities(path, times);
    durations_.resize(n_wp - 1);
    for (int n = 0; n + 1 < n_wp; ++n) durations_[n] = times[n + 1] - times[n];
    // Telescoped weights: w_1 = v_1, w_k = v_k - v_{k-1}, w_N = -v_{N-1}.
    weights_.resize(n_wp);
    weights_[0] = vel_[0];
    for (int k = 1; k + 1 < n_wp; ++k) weights_[k] = vel_[k] - vel_[k - 1];
    weights_[n_wp - 1] = -vel_[n_wp - 2];
  }

  int num_waypoints() const { return static_cast<int>(shifted_.size()); }

  Vec2 position(double tau) const {
    Vec2 acc = Vec2::Zero();
    for (int k = 0; k < num_waypoints(); ++k) {
      acc += weights_[k] * softplus(beta_ * (tau - shifted_[k]));
    }
    return first_ + acc / beta_;
  }

  Vec2 velocity(double tau) const {
    Vec2 acc = Vec2::Zero();
    for (int k = 0; k < num_waypoints(); ++k) {
      acc += weights_[k] * logistic(beta_ * (tau - shifted_[k]));
    }
    return acc;
  }

  /// d p~(tau) / d t_k for all waypoint times, as a 2 x N matrix.
  ///
  /// Column k combines the dependence of the adjacent segment velocities on
  /// the duration and the shift of the softplus argument:
  ///   col_k = v_k (S_k/(beta dt_k) - sigma_k) + v_{k-1} (sigma_k - S_{k-1}/(beta dt_{k-1}))
  /// where S_n = zeta_n - zeta_{n+1} evaluated at tau.
  Eigen::Matrix2Xd position_jacobian(double tau) const {
    const int n_wp = num_waypoints();
    VecX zeta(n_wp), sigma(n_wp);
    for (int k = 0; k < n_wp; ++k) {
      const double arg = beta_ * (tau - shifted_[k]);
      zeta[k] = softplus(arg);
      sigma[k] = logistic(arg);
    }
    Eigen::Matrix2Xd jac(2, n_wp);
    for (int k = 0; k < n_wp; ++k) {
      Vec2 col = Vec2::Zero();
      if (k < n_wp - 1) {
        const double s_k = zeta[k] - zeta[k + 1];
        col += vel_[k] * (s_k / (beta_ * durations_[k]) - sigma[k]);
      }
      if (k > 0) {
        const double s_prev = zeta[k - 1] - zeta[k];
        col += vel_[k - 1] * (sigma[k] - s_prev / (beta_ * durations_[k - 1]));
      }
      jac.col(k) = col;
    }
    return jac;
  }

 private:
  double beta_;
  Vec2 first_;
  std::vector<double> shifted_;    // t_n + bias
  std::vector<Vec2> vel_;
  std::vector<double> durations_;
  std::vector<Vec2> weights_;      // telescoped velocity differences
};

inline Vec2 smooth_velocity(const WaypointPath& path,
                            const Eigen::Ref<const VecX>& times,
                            const SmoothingParams& params, double tau) {
  return SmoothProfile(path, times, params).velocity(tau);
}

inline Vec2 smooth_position(const WaypointPath& path,
                            const Eigen::Ref<const VecX>& times,
                            const SmoothingParams& params, double tau) {
  return SmoothProfile(path, times, params).position(tau);
}

inline Eigen::Matrix2Xd smooth_position_jacobian(
    const WaypointPath& path, const Eigen::Ref<const VecX>& times,
    const SmoothingParams& params, double tau) {
  return SmoothProfile(path, times, params).position_jacobian(tau);
}

}  // namespace vsched

#endif  // VSCHED_TRAJECTORY_HPP_
