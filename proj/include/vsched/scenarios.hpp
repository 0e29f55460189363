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

#ifndef VSCHED_SCENARIOS_HPP_
#define VSCHED_SCENARIOS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <queue>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "vsched/problem.hpp"
#include "vsched/types.hpp"

namespace vsched {

/// Deterministic uniform source on top of std::mt19937_64. The standard
/// distributions are implementation-defined, so scenario generation maps
/// raw engine output itself; identical seeds give identical scenarios on
/// every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  /// Unbiased-enough integer draw in [0, n) via 128-bit multiply-shift.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

enum class ScenarioFamily {
  kRandomCrossingCo,
  kRandomCrossingCounter,
  kBottleneck,
  kGraph,
};

inline const char* to_string(ScenarioFamily f) {
  switch (f) {
    case ScenarioFamily::kRandomCrossingCo: return "random_crossing_co";
    case ScenarioFamily::kRandomCrossingCounter: return "random_crossing_counter";
    case ScenarioFamily::kBottleneck: return "bottleneck";
    case ScenarioFamily::kGraph: return "graph";
  }
  return "unknown";
}

inline ScenarioFamily family_from_string(const std::string& s) {
  if (s == "random_crossing_co") return ScenarioFamily::kRandomCrossingCo;
  if (s == "random_crossing_counter") return ScenarioFamily::kRandomCrossingCounter;
  if (s == "bottleneck") return ScenarioFamily::kBottleneck;
  if (s == "graph") return ScenarioFamily::kGraph;
  throw Error(ErrorKind::kInvalidParameter, "unknown scenario family: " + s);
}

struct ScenarioConfig {
  ScenarioFamily family = ScenarioFamily::kRandomCrossingCounter;
  int agents = 3;
  double phi = 0.01;                // occupancy density
  double workspace_half_width = 10.0;
  int waypoints_per_agent = 10;     // random-crossing families
  double d_node = 1.5;              // graph family
  std::uint64_t seed = 0;
  std::optional<double> d_safe_override;
  double v_min = 0.02;
  double v_max = 2.0;
  double omega = 10.0;

  double workspace_area() const {
    return 4.0 * workspace_half_width * workspace_half_width;
  }
};

/// d_safe from the occupancy density phi = K pi (d_safe/2)^2 / A.
inline double safety_distance_from_density(double phi, int agents, double area) {
  if (!(phi > 0.0) || agents < 1 || !(area > 0.0)) {
    throw Error(ErrorKind::kInvalidParameter,
                "density, agent count, and area must be positive");
  }
  return 2.0 * std::sqrt(area * phi / (agents * std::numbers::pi));
}

/// Node-to-opposite-edge distance of an equilateral triangle with side
/// d_node; the network is schedulable for d_safe below this.
inline double graph_feasibility_threshold(double d_node) {
  if (!(d_node > 0.0)) {
    throw Error(ErrorKind::kInvalidParameter, "d_node must be positive");
  }
  return d_node * std::sqrt(3.0) / 4.0;
}

namespace detail {

inline double resolved_d_safe(const ScenarioConfig& cfg) {
  if (cfg.d_safe_override) return *cfg.d_safe_override;
  return safety_distance_from_density(cfg.phi, cfg.agents, cfg.workspace_area());
}

inline bool pairwise_separated(const std::vector<Vec2>& pts, double min_dist) {
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = i + 1; j < pts.size(); ++j) {
      if ((pts[i] - pts[j]).norm() < min_dist) return false;
    }
  }
  return true;
}

inline double segment_segment_distance(const Vec2& a0, const Vec2& a1,
                                       const Vec2& b0, const Vec2& b1) {
  auto point_seg = [](const Vec2& p, const Vec2& q0, const Vec2& q1) {
    const Vec2 d = q1 - q0;
    const double len2 = d.squaredNorm();
    double lam = len2 > 0.0 ? (p - q0).dot(d) / len2 : 0.0;
    lam = std::clamp(lam, 0.0, 1.0);
    return (p - (q0 + lam * d)).norm();
  };
  auto orient = [](const Vec2& p, const Vec2& q, const Vec2& r) {
    return (q.x() - p.x()) * (r.y() - p.y()) - (q.y() - p.y()) * (r.x() - p.x());
  };
  const double o1 = orient(a0, a1, b0), o2 = orient(a0, a1, b1);
  const double o3 = orient(b0, b1, a0), o4 = orient(b0, b1, a1);
  if (((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0))) return 0.0;
  return std::min(std::min(point_seg(b0, a0, a1), point_seg(b1, a0, a1)),
                  std::min(point_seg(a0, b0, b1), point_seg(a1, b0, b1)));
}

inline ProblemInstance finish_instance(std::vector<WaypointPath> paths,
                                       const ScenarioConfig& cfg,
                                       double d_safe) {
  ProblemInstance inst;
  inst.paths = std::move(paths);
  inst.v_min = cfg.v_min;
  inst.v_max = cfg.v_max;
  inst.d_safe = d_safe;
  inst.smoothing = smoothing_from_bandwidth(cfg.omega);
  inst.validate();
  return inst;
}

}  // namespace detail

/// Random crossing scenarios. Starts are spread along one workspace edge
/// (co-directional) or alternate between opposite edges (counter); each
/// goal sits near the opposite edge at an independently drawn slot, and
/// the interior waypoints follow the start-goal chord with uniform +-0.5 m
/// perturbations, clamped to the workspace.
inline ProblemInstance gen_random_crossing(const ScenarioConfig& cfg) {
  if (cfg.family != ScenarioFamily::kRandomCrossingCo &&
      cfg.family != ScenarioFamily::kRandomCrossingCounter) {
    throw Error(ErrorKind::kInvalidParameter, "not a random-crossing family");
  }
  if (cfg.agents < 1 || cfg.waypoints_per_agent < 2) {
    throw Error(ErrorKind::kInvalidParameter, "bad agent or waypoint count");
  }
  const bool counter = cfg.family == ScenarioFamily::kRandomCrossingCounter;
  const double w = cfg.workspace_half_width;
  const double d_safe = detail::resolved_d_safe(cfg);
  const int k = cfg.agents;
  Rng rng(cfg.seed);

  const double span = 1.6 * w;
  const double spacing = span / k;

  for (int attempt = 0; attempt < 100; ++attempt) {
    // One global slot ladder, shifted a quarter spacing so that reflected
    // slots never coincide with direct ones.
    std::vector<double> slots(k);
    for (int i = 0; i < k; ++i) {
      slots[i] = -0.8 * w + spacing * (i + 0.5) + 0.25 * spacing;
    }
    std::vector<int> goal_slot(k);
    for (int i = 0; i < k; ++i) goal_slot[i] = i;
    rng.shuffle(goal_slot);

    std::vector<WaypointPath> paths(k);
    std::vector<Vec2> starts(k), goals(k);
    for (int i = 0; i < k; ++i) {
      const double side = (counter && i % 2 == 1) ? 1.0 : -1.0;
      const double sy = slots[i] + rng.uniform(-0.3, 0.3) * spacing;
      const Vec2 start(side * -w, sy);
      const double gy =
          -slots[goal_slot[i]] + rng.uniform(-0.3, 0.3) * spacing;
      Vec2 goal = Vec2(side * w, gy) +
                  Vec2(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
      goal = goal.cwiseMax(-w).cwiseMin(w);

      WaypointPath path;
      path.id = i;
      path.start_time = 0.0;
      path.waypoints.push_back(start);
      const int n = cfg.waypoints_per_agent;
      for (int j = 1; j < n; ++j) {
        const double lam = static_cast<double>(j) / (n - 1);
        Vec2 p = start + lam * (goal - start);
        p += Vec2(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5));
        p = p.cwiseMax(-w).cwiseMin(w);
        path.waypoints.push_back(p);
      }
      starts[i] = start;
      goals[i] = path.waypoints.back();
      paths[i] = std::move(path);
    }

    if (!detail::pairwise_separated(starts, 1.05 * d_safe)) continue;
    if (!detail::pairwise_separated(goals, 1.05 * d_safe)) continue;
    if (counter) {
      // Reject trivial instances where no pair of chords interacts.
      bool interacting = false;
      for (int i = 0; i < k && !interacting; ++i) {
        for (int j = i + 1; j < k && !interacting; ++j) {
          if (detail::segment_segment_distance(starts[i], goals[i], starts[j],
                                               goals[j]) < d_safe) {
            interacting = true;
          }
        }
      }
      if (!interacting) continue;
    }
    return detail::finish_instance(std::move(paths), cfg, d_safe);
  }
  throw Error(ErrorKind::kGenerationFailed,
              "random-crossing generation exhausted its retries");
}

/// Bottleneck scenario: every path is [start, (-3,0), (3,0), goal] with
/// starts fanned on a left arc and goals on a right arc.
inline ProblemInstance gen_bottleneck(const ScenarioConfig& cfg) {
  if (cfg.family != ScenarioFamily::kBottleneck) {
    throw Error(ErrorKind::kInvalidParameter, "not a bottleneck config");
  }
  const double d_safe = detail::resolved_d_safe(cfg);
  const int k = cfg.agents;
  const double radius = 0.85 * cfg.workspace_half_width;
  const double arc_span = 2.7;  // radians, centred on each side
  Rng rng(cfg.seed);

  const Vec2 corridor_in(-3.0, 0.0), corridor_out(3.0, 0.0);
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::vector<int> goal_slot(k);
    for (int i = 0; i < k; ++i) goal_slot[i] = i;
    rng.shuffle(goal_slot);

    std::vector<Vec2> starts(k), goals(k);
    const double slot = arc_span / k;
    for (int i = 0; i < k; ++i) {
      const double ts = std::numbers::pi + slot * (i + 0.5) - arc_span / 2 +
                        rng.uniform(-0.25, 0.25) * slot;
      const double tg = slot * (goal_slot[i] + 0.5) - arc_span / 2 +
                        rng.uniform(-0.25, 0.25) * slot;
      starts[i] = radius * Vec2(std::cos(ts), std::sin(ts));
      goals[i] = radius * Vec2(std::cos(tg), std::sin(tg));
    }
    if (!detail::pairwise_separated(starts, 1.05 * d_safe)) continue;
    if (!detail::pairwise_separated(goals, 1.05 * d_safe)) continue;

    std::vector<WaypointPath> paths(k);
    for (int i = 0; i < k; ++i) {
      paths[i].id = i;
      paths[i].start_time = 0.0;
      paths[i].waypoints = {starts[i], corridor_in, corridor_out, goals[i]};
    }
    return detail::finish_instance(std::move(paths), cfg, d_safe);
  }
  throw Error(ErrorKind::kGenerationFailed,
              "bottleneck generation exhausted its retries");
}

/// Directed road network on Delaunay edges.
struct NetworkGraph {
  std::vector<Vec2> nodes;
  std::vector<std::pair<int, int>> edges;  // directed (from, to)

  std::vector<double> edge_lengths() const {
    std::vector<double> len(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
      len[e] = (nodes[edges[e].second] - nodes[edges[e].first]).norm();
    }
    return len;
  }
};

namespace detail {

struct Triangle {
  int a, b, c;
};

inline bool circumcircle_contains(const Vec2& a, const Vec2& b, const Vec2& c,
                                  const Vec2& p) {
  // Sign-corrected incircle determinant; positive when p is inside the
  // circumcircle of (a, b, c) taken in any orientation.
  const double ax = a.x() - p.x(), ay = a.y() - p.y();
  const double bx = b.x() - p.x(), by = b.y() - p.y();
  const double cx = c.x() - p.x(), cy = c.y() - p.y();
  const double det =
      (ax * ax + ay * ay) * (bx * cy - cx * by) -
      (bx * bx + by * by) * (ax * cy - cx * ay) +
      (cx * cx + cy * cy) * (ax * by - bx * ay);
  const double orient = (b.x() - a.x()) * (c.y() - a.y()) -
                        (c.x() - a.x()) * (b.y() - a.y());
  return orient > 0.0 ? det > 0.0 : det < 0.0;
}

/// Bowyer-Watson incremental Delaunay triangulation. Inputs are spread at
/// least a disk radius apart, so double-precision predicates suffice.
inline std::vector<Triangle> delaunay(const std::vector<Vec2>& pts) {
  std::vector<Vec2> v = pts;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const Vec2& p : pts) {
    lo = std::min(lo, std::min(p.x(), p.y()));
    hi = std::max(hi, std::max(p.x(), p.y()));
  }
  const double mid = 0.5 * (lo + hi), half = std::max(hi - mid, 1.0);
  const int s0 = static_cast<int>(v.size());
  v.emplace_back(mid - 40.0 * half, mid - 20.0 * half);
  v.emplace_back(mid + 40.0 * half, mid - 20.0 * half);
  v.emplace_back(mid, mid + 40.0 * half);

  std::vector<Triangle> tris{{s0, s0 + 1, s0 + 2}};
  for (int p = 0; p < s0; ++p) {
    std::vector<Triangle> keep;
    std::vector<std::pair<int, int>> cavity;
    for (const Triangle& t : tris) {
      if (circumcircle_contains(v[t.a], v[t.b], v[t.c], v[p])) {
        cavity.push_back({t.a, t.b});
        cavity.push_back({t.b, t.c});
        cavity.push_back({t.c, t.a});
      } else {
        keep.push_back(t);
      }
    }
    // Boundary edges appear exactly once across the cavity.
    for (std::size_t i = 0; i < cavity.size(); ++i) {
      bool shared = false;
      for (std::size_t j = 0; j < cavity.size(); ++j) {
        if (i != j && cavity[i].first == cavity[j].second &&
            cavity[i].second == cavity[j].first) {
          shared = true;
          break;
        }
      }
      if (!shared) {
        keep.push_back({cavity[i].first, cavity[i].second, p});
      }
    }
    tris = std::move(keep);
  }
  std::vector<Triangle> out;
  for (const Triangle& t : tris) {
    if (t.a < s0 && t.b < s0 && t.c < s0) out.push_back(t);
  }
  return out;
}

inline double mean_nearest_neighbor(const std::vector<Vec2>& pts) {
  double sum = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (i != j) best = std::min(best, (pts[i] - pts[j]).norm());
    }
    sum += best;
  }
  return sum / static_cast<double>(pts.size());
}

inline std::vector<int> dijkstra(const NetworkGraph& g,
                                 const std::vector<double>& lengths, int start,
                                 int goal) {
  const int n = static_cast<int>(g.nodes.size());
  std::vector<std::vector<std::pair<int, double>>> adj(n);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    adj[g.edges[e].first].push_back({g.edges[e].second, lengths[e]});
  }
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<int> prev(n, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
  dist[start] = 0.0;
  pq.push({0.0, start});
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u]) continue;
    if (u == goal) break;
    for (auto [to, len] : adj[u]) {
      const double nd = d + len;
      if (nd < dist[to]) {
        dist[to] = nd;
        prev[to] = u;
        pq.push({nd, to});
      }
    }
  }
  if (!std::isfinite(dist[goal])) return {};
  std::vector<int> route;
  for (int at = goal; at != -1; at = prev[at]) route.push_back(at);
  std::reverse(route.begin(), route.end());
  return route;
}

}  // namespace detail

struct GraphScenario {
  NetworkGraph graph;
  ProblemInstance instance;
  std::vector<std::vector<int>> routes;  // node indices per agent
};

/// Graph network scenario: Poisson-disk nodes at mean spacing ~= d_node,
/// Delaunay edges with one random one-way orientation each, agent routes
/// from directed Dijkstra between opposite-side nodes.
inline GraphScenario gen_graph_network(const ScenarioConfig& cfg) {
  if (cfg.family != ScenarioFamily::kGraph) {
    throw Error(ErrorKind::kInvalidParameter, "not a graph config");
  }
  const double w = cfg.workspace_half_width;
  const double d_safe = detail::resolved_d_safe(cfg);
  Rng rng(cfg.seed);

  for (int attempt = 0; attempt < 20; ++attempt) {
    // Dart-throwing Poisson disk at 0.7 d_node.
    const double r_min = 0.7 * cfg.d_node;
    std::vector<Vec2> nodes;
    int misses = 0;
    while (misses < 2000) {
      const Vec2 cand(rng.uniform(-w, w), rng.uniform(-w, w));
      bool ok = true;
      for (const Vec2& q : nodes) {
        if ((cand - q).norm() < r_min) {
          ok = false;
          break;
        }
      }
      if (ok) {
        nodes.push_back(cand);
        misses = 0;
      } else {
        ++misses;
      }
    }
    // Thin the closest pairs until the mean nearest-neighbor spacing is in
    // the requested band around d_node.
    while (nodes.size() > 4 &&
           detail::mean_nearest_neighbor(nodes) < 0.9 * cfg.d_node) {
      std::size_t bi = 0, bj = 1;
      double best = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (std::size_t j = i + 1; j < nodes.size(); ++j) {
          const double d = (nodes[i] - nodes[j]).norm();
          if (d < best) {
            best = d;
            bi = i;
            bj = j;
          }
        }
      }
      (void)bi;
      nodes.erase(nodes.begin() + static_cast<std::ptrdiff_t>(bj));
    }
    const double mean_nn = detail::mean_nearest_neighbor(nodes);
    if (mean_nn < 0.9 * cfg.d_node || mean_nn > 1.1 * cfg.d_node) continue;

    const auto tris = detail::delaunay(nodes);
    std::vector<std::pair<int, int>> undirected;
    for (const auto& t : tris) {
      auto add = [&](int a, int b) {
        if (a > b) std::swap(a, b);
        undirected.push_back({a, b});
      };
      add(t.a, t.b);
      add(t.b, t.c);
      add(t.c, t.a);
    }
    std::sort(undirected.begin(), undirected.end());
    undirected.erase(std::unique(undirected.begin(), undirected.end()),
                     undirected.end());

    for (int orient_try = 0; orient_try < 40; ++orient_try) {
      NetworkGraph g;
      g.nodes = nodes;
      g.edges.reserve(undirected.size());
      for (auto [a, b] : undirected) {
        if (rng.uniform01() < 0.5) {
          g.edges.push_back({a, b});
        } else {
          g.edges.push_back({b, a});
        }
      }
      const auto lengths = g.edge_lengths();

      std::vector<std::vector<int>> routes;
      std::vector<Vec2> starts, goals;
      std::vector<int> taken_start, taken_goal;
      bool ok = true;
      for (int i = 0; i < cfg.agents && ok; ++i) {
        bool placed = false;
        for (int pick = 0; pick < 200 && !placed; ++pick) {
          const int s = static_cast<int>(rng.below(nodes.size()));
          const int t = static_cast<int>(rng.below(nodes.size()));
          if (s == t) continue;
          if (nodes[s].dot(nodes[t]) >= 0.0) continue;  // want opposite sides
          bool clash = false;
          for (int u : taken_start) {
            if ((nodes[u] - nodes[s]).norm() < 1.05 * d_safe) clash = true;
          }
          for (int u : taken_goal) {
            if ((nodes[u] - nodes[t]).norm() < 1.05 * d_safe) clash = true;
          }
          if (clash) continue;
          auto route = detail::dijkstra(g, lengths, s, t);
          if (route.size() < 2) continue;
          routes.push_back(std::move(route));
          taken_start.push_back(s);
          taken_goal.push_back(t);
          placed = true;
        }
        if (!placed) ok = false;
      }
      if (!ok) continue;

      std::vector<WaypointPath> paths(cfg.agents);
      for (int i = 0; i < cfg.agents; ++i) {
        paths[i].id = i;
        paths[i].start_time = 0.0;
        for (int nidx : routes[i]) paths[i].waypoints.push_back(nodes[nidx]);
      }
      GraphScenario out;
      out.graph = std::move(g);
      out.instance = detail::finish_instance(std::move(paths), cfg, d_safe);
      out.routes = std::move(routes);
      return out;
    }
  }
  throw Error(ErrorKind::kGenerationFailed,
              "graph generation exhausted its retries");
}

/// Dispatches on the configured family; the graph variant's network is
/// dropped here (use gen_graph_network to keep it).
inline ProblemInstance generate_scenario(const ScenarioConfig& cfg) {
  switch (cfg.family) {
    case ScenarioFamily::kRandomCrossingCo:
    case ScenarioFamily::kRandomCrossingCounter:
      return gen_random_crossing(cfg);
    case ScenarioFamily::kBottleneck:
      return gen_bottleneck(cfg);
    case ScenarioFamily::kGraph:
      return gen_graph_network(cfg).instance;
  }
  throw Error(ErrorKind::kInvalidParameter, "unknown family");
}

}  // namespace vsched

#endif  // VSCHED_SCENARIOS_HPP_
