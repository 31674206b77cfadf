#include "rig/simworld/road_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace rig::sim {

namespace {

// Transitions sharper than this are U-turns and are not drivable.
constexpr double kMaxTurn = 160.0 * std::numbers::pi / 180.0;
constexpr double kIndexMargin = 6.0;
constexpr double kConnectorStep = 1.0;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

const char* to_string(LightState s) {
  switch (s) {
    case LightState::none: return "none";
    case LightState::green: return "green";
    case LightState::yellow: return "yellow";
    case LightState::red: return "red";
  }
  return "none";
}

LightState TrafficLight::state_at(double t) const {
  const double p = period();
  double u = std::fmod(t - phase_offset, p);
  if (u < 0.0) u += p;
  if (u < green_s) return LightState::green;
  if (u < green_s + yellow_s) return LightState::yellow;
  return LightState::red;
}

std::vector<Vec2> Connector::sample(double ds) const {
  if (radius <= 0.0) return {start};
  const Vec2 r0 = start - center;
  const double phi0 = std::atan2(r0.y, r0.x);
  const int steps = std::max(1, static_cast<int>(std::ceil(radius * std::abs(turn_angle) / ds)));
  std::vector<Vec2> pts;
  pts.reserve(static_cast<std::size_t>(steps) + 1);
  pts.push_back(start);
  for (int k = 1; k < steps; ++k) {
    const double phi = phi0 + turn_angle * k / steps;
    pts.push_back(center + Vec2{std::cos(phi), std::sin(phi)} * radius);
  }
  pts.push_back(end);
  return pts;
}

RoadGraph::RoadGraph(RoadGraphSpec spec) : spec_(std::move(spec)) {
  const std::size_t n = spec_.nodes.size();
  out_.assign(n, {});
  in_.assign(n, {});
  for (std::size_t e = 0; e < spec_.edges.size(); ++e) {
    LaneEdge& edge = spec_.edges[e];
    if (edge.from < 0 || edge.to < 0 || static_cast<std::size_t>(edge.from) >= n ||
        static_cast<std::size_t>(edge.to) >= n || edge.from == edge.to)
      throw std::invalid_argument("RoadGraph: edge " + std::to_string(e) + " has invalid endpoints");
    edge.length = distance(spec_.nodes[static_cast<std::size_t>(edge.from)].position,
                           spec_.nodes[static_cast<std::size_t>(edge.to)].position);
    out_[static_cast<std::size_t>(edge.from)].push_back(static_cast<int>(e));
    in_[static_cast<std::size_t>(edge.to)].push_back(static_cast<int>(e));
  }

  std::vector<std::pair<int, int>> spawns;
  for (std::size_t i = 0; i < n; ++i)
    if (spec_.nodes[i].spawn_index >= 0) spawns.emplace_back(spec_.nodes[i].spawn_index, static_cast<int>(i));
  std::sort(spawns.begin(), spawns.end());
  for (std::size_t k = 0; k < spawns.size(); ++k) {
    if (spawns[k].first != static_cast<int>(k))
      throw std::invalid_argument("RoadGraph: spawn indices must be unique and contiguous from 0");
    if (out_[static_cast<std::size_t>(spawns[k].second)].empty())
      throw std::invalid_argument("RoadGraph: spawn node without an outgoing lane");
    spawn_nodes_.push_back(spawns[k].second);
  }

  build_connectors();
  build_lights();
  build_index();
}

void RoadGraph::build_connectors() {
  connectors_by_in_.assign(spec_.edges.size(), {});
  for (std::size_t node = 0; node < spec_.nodes.size(); ++node) {
    for (int ein : in_[node]) {
      for (int eout : out_[node]) {
        const LaneEdge& a = spec_.edges[static_cast<std::size_t>(ein)];
        const LaneEdge& b = spec_.edges[static_cast<std::size_t>(eout)];
        const Vec2 d_in = edge_direction(ein);
        const Vec2 d_out = edge_direction(eout);
        const double theta = std::atan2(cross(d_in, d_out), dot(d_in, d_out));
        if (std::abs(theta) > kMaxTurn) continue;
        Connector c;
        c.in_edge = ein;
        c.out_edge = eout;
        c.turn_angle = theta;
        const Vec2 p = spec_.nodes[node].position;
        if (std::abs(theta) < 1e-9) {
          c.start = c.end = c.center = p;
        } else {
          const double tan_half = std::tan(std::abs(theta) / 2.0);
          c.radius = std::min(spec_.fillet_radius, 0.45 * std::min(a.length, b.length) / tan_half);
          c.trim = c.radius * tan_half;
          c.start = p - d_in * c.trim;
          c.end = p + d_out * c.trim;
          c.center = c.start + perp(d_in) * (theta > 0.0 ? c.radius : -c.radius);
        }
        connectors_by_in_[static_cast<std::size_t>(ein)].push_back(static_cast<int>(connectors_.size()));
        connectors_.push_back(c);
      }
    }
  }
}

void RoadGraph::build_lights() {
  const std::size_t n_edges = spec_.edges.size();
  light_of_edge_.assign(n_edges, -1);
  stop_offset_.assign(n_edges, 0.0);
  for (const Connector& c : connectors_) {
    double& off = stop_offset_[static_cast<std::size_t>(c.in_edge)];
    off = std::max(off, c.trim + 0.5);
  }
  for (std::size_t e = 0; e < n_edges; ++e)
    stop_offset_[e] = std::min(stop_offset_[e], 0.8 * spec_.edges[e].length);
  yield_of_edge_.assign(n_edges, -1);
  std::vector<int> priority_at(spec_.nodes.size(), -1);
  for (int e : spec_.priority_edges) {
    if (e < 0 || static_cast<std::size_t>(e) >= n_edges)
      throw std::invalid_argument("RoadGraph: priority edge " + std::to_string(e) + " out of range");
    priority_at[static_cast<std::size_t>(spec_.edges[static_cast<std::size_t>(e)].to)] = e;
  }
  for (std::size_t e = 0; e < n_edges; ++e) {
    const int p = priority_at[static_cast<std::size_t>(spec_.edges[e].to)];
    if (p >= 0 && p != static_cast<int>(e)) yield_of_edge_[e] = p;
  }
  if (!spec_.lights) return;

  const LightTiming& tm = spec_.timing;
  const double slot = tm.green_s + tm.yellow_s + tm.all_red_s;
  for (std::size_t node = 0; node < spec_.nodes.size(); ++node) {
    const auto& incoming = in_[node];
    if (incoming.size() < 2 || priority_at[node] >= 0) continue;
    const double base = node < spec_.junction_offsets.size() ? spec_.junction_offsets[node] : 0.0;
    const double period = slot * static_cast<double>(incoming.size());
    for (std::size_t i = 0; i < incoming.size(); ++i) {
      const int e = incoming[i];
      TrafficLight light;
      light.controlled_edge = e;
      light.green_s = tm.green_s;
      light.yellow_s = tm.yellow_s;
      light.red_s = period - tm.green_s - tm.yellow_s;
      light.phase_offset = base + slot * static_cast<double>(i);
      light.position = spec_.nodes[node].position - edge_direction(e) * stop_offset_[static_cast<std::size_t>(e)];
      light_of_edge_[static_cast<std::size_t>(e)] = static_cast<int>(lights_.size());
      lights_.push_back(light);
    }
  }
}

void RoadGraph::build_index() {
  for (std::size_t e = 0; e < spec_.edges.size(); ++e) {
    const LaneEdge& edge = spec_.edges[e];
    const Vec2 a = spec_.nodes[static_cast<std::size_t>(edge.from)].position;
    const Vec2 b = spec_.nodes[static_cast<std::size_t>(edge.to)].position;
    const Vec2 d = b - a;
    pieces_.push_back({a, b, edge.lane_width / 2.0, std::atan2(d.y, d.x), static_cast<int>(e)});
  }
  for (const Connector& c : connectors_) {
    if (c.radius <= 0.0) continue;
    const double hw = spec_.edges[static_cast<std::size_t>(c.in_edge)].lane_width / 2.0;
    const std::vector<Vec2> pts = c.sample(kConnectorStep);
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const Vec2 d = pts[i + 1] - pts[i];
      pieces_.push_back({pts[i], pts[i + 1], hw, std::atan2(d.y, d.x), -1});
    }
  }
  if (pieces_.empty()) return;

  double min_x = std::numeric_limits<double>::infinity(), min_y = min_x;
  double max_x = -min_x, max_y = -min_x;
  for (const LanePiece& p : pieces_) {
    min_x = std::min({min_x, p.a.x, p.b.x});
    min_y = std::min({min_y, p.a.y, p.b.y});
    max_x = std::max({max_x, p.a.x, p.b.x});
    max_y = std::max({max_y, p.a.y, p.b.y});
  }
  grid_origin_ = {min_x - kIndexMargin, min_y - kIndexMargin};
  grid_cols_ = static_cast<int>(std::ceil((max_x - min_x + 2 * kIndexMargin) / cell_size_)) + 1;
  grid_rows_ = static_cast<int>(std::ceil((max_y - min_y + 2 * kIndexMargin) / cell_size_)) + 1;
  grid_.assign(static_cast<std::size_t>(grid_cols_ * grid_rows_), {});
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    const LanePiece& p = pieces_[i];
    const int c0 = static_cast<int>(std::floor((std::min(p.a.x, p.b.x) - kIndexMargin - grid_origin_.x) / cell_size_));
    const int c1 = static_cast<int>(std::floor((std::max(p.a.x, p.b.x) + kIndexMargin - grid_origin_.x) / cell_size_));
    const int r0 = static_cast<int>(std::floor((std::min(p.a.y, p.b.y) - kIndexMargin - grid_origin_.y) / cell_size_));
    const int r1 = static_cast<int>(std::floor((std::max(p.a.y, p.b.y) + kIndexMargin - grid_origin_.y) / cell_size_));
    for (int r = std::max(r0, 0); r <= std::min(r1, grid_rows_ - 1); ++r)
      for (int c = std::max(c0, 0); c <= std::min(c1, grid_cols_ - 1); ++c)
        grid_[static_cast<std::size_t>(r * grid_cols_ + c)].push_back(static_cast<int>(i));
  }
}

std::span<const int> RoadGraph::pieces_near(Vec2 p) const {
  if (grid_.empty()) return {};
  const int c = static_cast<int>(std::floor((p.x - grid_origin_.x) / cell_size_));
  const int r = static_cast<int>(std::floor((p.y - grid_origin_.y) / cell_size_));
  if (c < 0 || r < 0 || c >= grid_cols_ || r >= grid_rows_) return {};
  return grid_[static_cast<std::size_t>(r * grid_cols_ + c)];
}

int RoadGraph::spawn_node(int spawn_index) const {
  if (spawn_index < 0 || spawn_index >= num_spawn_points())
    throw std::out_of_range("spawn index " + std::to_string(spawn_index) + " out of range [0, " +
                            std::to_string(num_spawn_points()) + ")");
  return spawn_nodes_[static_cast<std::size_t>(spawn_index)];
}

Pose RoadGraph::spawn_pose(int spawn_index) const {
  const int node = spawn_node(spawn_index);
  const Vec2 d = edge_direction(out_[static_cast<std::size_t>(node)].front());
  return {spec_.nodes[static_cast<std::size_t>(node)].position, std::atan2(d.y, d.x)};
}

Vec2 RoadGraph::edge_direction(int edge) const {
  const LaneEdge& e = spec_.edges[static_cast<std::size_t>(edge)];
  return unit(spec_.nodes[static_cast<std::size_t>(e.to)].position -
              spec_.nodes[static_cast<std::size_t>(e.from)].position);
}

const Connector* RoadGraph::connector(int in_edge, int out_edge) const {
  for (int i : connectors_by_in_[static_cast<std::size_t>(in_edge)])
    if (connectors_[static_cast<std::size_t>(i)].out_edge == out_edge) return &connectors_[static_cast<std::size_t>(i)];
  return nullptr;
}

std::optional<int> RoadGraph::light_for_edge(int edge) const {
  const int l = light_of_edge_[static_cast<std::size_t>(edge)];
  if (l < 0) return std::nullopt;
  return l;
}

double RoadGraph::stop_offset(int edge) const { return stop_offset_[static_cast<std::size_t>(edge)]; }

std::vector<int> RoadGraph::shortest_route(int from_node, int to_node) const {
  const std::size_t n_edges = spec_.edges.size();
  std::vector<double> dist(n_edges, std::numeric_limits<double>::infinity());
  std::vector<int> prev(n_edges, -1);
  using Item = std::pair<double, int>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  for (int e : out_edges(from_node)) {
    dist[static_cast<std::size_t>(e)] = spec_.edges[static_cast<std::size_t>(e)].length;
    queue.emplace(dist[static_cast<std::size_t>(e)], e);
  }
  int goal = -1;
  while (!queue.empty()) {
    const auto [d, e] = queue.top();
    queue.pop();
    if (d > dist[static_cast<std::size_t>(e)]) continue;
    const int head = spec_.edges[static_cast<std::size_t>(e)].to;
    if (head == to_node) {
      goal = e;
      break;
    }
    for (int f : out_edges(head)) {
      if (connector(e, f) == nullptr) continue;
      const double nd = d + spec_.edges[static_cast<std::size_t>(f)].length;
      if (nd < dist[static_cast<std::size_t>(f)]) {
        dist[static_cast<std::size_t>(f)] = nd;
        prev[static_cast<std::size_t>(f)] = e;
        queue.emplace(nd, f);
      }
    }
  }
  if (goal < 0)
    throw std::runtime_error("no route from node " + std::to_string(from_node) + " to node " +
                             std::to_string(to_node));
  std::vector<int> route;
  for (int e = goal; e >= 0; e = prev[static_cast<std::size_t>(e)]) route.push_back(e);
  std::reverse(route.begin(), route.end());
  return route;
}

bool RoadGraph::strongly_connected() const {
  const std::size_t n_edges = spec_.edges.size();
  if (n_edges == 0) return false;
  std::vector<std::vector<int>> fwd(n_edges), bwd(n_edges);
  for (const Connector& c : connectors_) {
    fwd[static_cast<std::size_t>(c.in_edge)].push_back(c.out_edge);
    bwd[static_cast<std::size_t>(c.out_edge)].push_back(c.in_edge);
  }
  auto reaches_all = [&](const std::vector<std::vector<int>>& adj) {
    std::vector<char> seen(n_edges, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    std::size_t count = 1;
    while (!stack.empty()) {
      const int e = stack.back();
      stack.pop_back();
      for (int f : adj[static_cast<std::size_t>(e)]) {
        if (!seen[static_cast<std::size_t>(f)]) {
          seen[static_cast<std::size_t>(f)] = 1;
          ++count;
          stack.push_back(f);
        }
      }
    }
    return count == n_edges;
  };
  return reaches_all(fwd) && reaches_all(bwd);
}

double RoadGraph::road_clearance(Vec2 p) const {
  double best = std::numeric_limits<double>::infinity();
  for (int i : pieces_near(p)) {
    const LanePiece& piece = pieces_[static_cast<std::size_t>(i)];
    best = std::min(best, project_on_segment(p, piece.a, piece.b).distance - piece.half_width);
  }
  return best;
}

LaneQuery RoadGraph::lane_at(const Pose& pose) const {
  LaneQuery out;
  out.offset = std::numeric_limits<double>::infinity();
  for (int i : pieces_near(pose.position)) {
    const LanePiece& piece = pieces_[static_cast<std::size_t>(i)];
    if (std::abs(normalize_angle(piece.heading - pose.heading)) >= std::numbers::pi / 2.0) continue;
    const SegmentProjection sp = project_on_segment(pose.position, piece.a, piece.b);
    if (sp.distance < out.offset) {
      out.found = true;
      out.offset = sp.distance;
      out.half_width = piece.half_width;
      out.edge = piece.edge;
      out.s_on_edge = piece.edge >= 0 ? sp.t * spec_.edges[static_cast<std::size_t>(piece.edge)].length : 0.0;
    }
  }
  return out;
}

std::string RoadGraph::serialize() const {
  std::ostringstream os;
  os << "rig-town v1\n";
  os << "town " << spec_.town_id << "\n";
  os << "nodes " << spec_.nodes.size() << "\n";
  for (std::size_t i = 0; i < spec_.nodes.size(); ++i) {
    const RoadNode& nd = spec_.nodes[i];
    os << "node " << i << ' ' << fmt_double(nd.position.x) << ' ' << fmt_double(nd.position.y) << ' '
       << nd.spawn_index << "\n";
  }
  os << "edges " << spec_.edges.size() << "\n";
  for (std::size_t i = 0; i < spec_.edges.size(); ++i) {
    const LaneEdge& e = spec_.edges[i];
    os << "edge " << i << ' ' << e.from << ' ' << e.to << ' ' << fmt_double(e.lane_width) << "\n";
  }
  os << "priority " << spec_.priority_edges.size() << "\n";
  for (int e : spec_.priority_edges) os << "priority_edge " << e << "\n";
  os << "lights " << lights_.size() << "\n";
  for (std::size_t i = 0; i < lights_.size(); ++i) {
    const TrafficLight& l = lights_[i];
    os << "light " << i << ' ' << l.controlled_edge << ' ' << fmt_double(l.position.x) << ' '
       << fmt_double(l.position.y) << ' ' << fmt_double(l.green_s) << ' ' << fmt_double(l.yellow_s) << ' '
       << fmt_double(l.red_s) << ' ' << fmt_double(l.phase_offset) << "\n";
  }
  os << "end\n";
  return os.str();
}

RoadGraph RoadGraph::transformed(const RigidTransform& tf) const {
  RoadGraphSpec spec = spec_;
  for (RoadNode& nd : spec.nodes) nd.position = tf.apply(nd.position);
  return RoadGraph(std::move(spec));
}

}  // namespace rig::sim
