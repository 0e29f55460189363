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

#ifndef VSCHED_TYPES_HPP_
#define VSCHED_TYPES_HPP_

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vsched {

using Vec2 = Eigen::Vector2d;
using VecX = Eigen::VectorXd;

enum class ErrorKind {
  kDegenerateDuration,
  kInvalidParameter,
  kStructurallyInfeasible,
  kInfeasibleArrival,
  kGenerationFailed,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

/// One agent's fixed spatial route: ordered waypoints plus the boundary
/// times that constrain its schedule. Passage times are *not* stored here;
/// they are the decision variables.
struct WaypointPath {
  std::vector<Vec2> waypoints;
  double start_time = 0.0;
  std::optional<double> fixed_arrival;  // present iff the agent has a deadline
  int id = 0;

  int size() const { return static_cast<int>(waypoints.size()); }
  int num_segments() const { return size() - 1; }

  double segment_length(int n) const {
    return (waypoints[n + 1] - waypoints[n]).norm();
  }

  double total_length() const {
    double sum = 0.0;
    for (int n = 0; n + 1 < size(); ++n) sum += segment_length(n);
    return sum;
  }

  void validate() const {
    if (size() < 2) {
      throw Error(ErrorKind::kInvalidParameter,
                  "path needs at least two waypoints (agent " +
                      std::to_string(id) + ")");
    }
    for (int n = 0; n + 1 < size(); ++n) {
      if (segment_length(n) <= 0.0) {
        throw Error(ErrorKind::kInvalidParameter,
                    "zero-length segment " + std::to_string(n) + " on agent " +
                        std::to_string(id));
      }
    }
  }
};

/// Sigmoid/softplus shaping of the surrogate trajectory model. `beta` is the
/// transition sharpness (1/s), `bias` the tracking-delay shift (s), and
/// `bandwidth` the velocity-loop bandwidth (rad/s) both were derived from.
struct SmoothingParams {
  double beta = 14.7;
  double bias = 0.1678;
  double bandwidth = 10.0;
};

/// Stacked waypoint passage times for all agents. Per-agent blocks live at
/// [offset(i), offset(i+1)) inside `stacked`.
class TimingVector {
 public:
  TimingVector() = default;

  explicit TimingVector(const std::vector<VecX>& per_agent) {
    offsets_.push_back(0);
    int total = 0;
    for (const auto& t : per_agent) total += static_cast<int>(t.size());
    stacked_.resize(total);
    int at = 0;
    for (const auto& t : per_agent) {
      stacked_.segment(at, t.size()) = t;
      at += static_cast<int>(t.size());
      offsets_.push_back(at);
    }
  }

  TimingVector(VecX stacked, std::vector<int> offsets)
      : stacked_(std::move(stacked)), offsets_(std::move(offsets)) {}

  int num_agents() const { return static_cast<int>(offsets_.size()) - 1; }
  int total_size() const { return static_cast<int>(stacked_.size()); }
  int offset(int i) const { return offsets_[i]; }
  int agent_size(int i) const { return offsets_[i + 1] - offsets_[i]; }

  const VecX& stacked() const { return stacked_; }
  VecX& stacked() { return stacked_; }
  const std::vector<int>& offsets() const { return offsets_; }

  Eigen::VectorBlock<const VecX> agent(int i) const {
    return stacked_.segment(offsets_[i], agent_size(i));
  }
  Eigen::VectorBlock<VecX> agent(int i) {
    return stacked_.segment(offsets_[i], agent_size(i));
  }

  /// True when every agent's times are strictly increasing.
  bool strictly_increasing() const {
    for (int i = 0; i < num_agents(); ++i) {
      auto t = agent(i);
      for (int n = 0; n + 1 < t.size(); ++n) {
        if (t[n + 1] <= t[n]) return false;
      }
    }
    return true;
  }

 private:
  VecX stacked_;
  std::vector<int> offsets_{0};
};

inline void require_increasing(const Eigen::Ref<const VecX>& times) {
  for (int n = 0; n + 1 < times.size(); ++n) {
    if (times[n + 1] <= times[n]) {
      throw Error(ErrorKind::kDegenerateDuration,
                  "waypoint times must be strictly increasing");
    }
  }
}

}  // namespace vsched

#endif  // VSCHED_TYPES_HPP_
