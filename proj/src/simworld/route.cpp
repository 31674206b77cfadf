#include "rig/simworld/route.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rig::sim {

namespace {

class PointSink {
 public:
  void add(Vec2 p) {
    if (!pts_.empty()) {
      const double d = distance(pts_.back(), p);
      if (d < 1e-6) return;
      length_ += d;
    }
    pts_.push_back(p);
  }
  // Straight run from a toward b; b itself is not added.
  void add_line(Vec2 a, Vec2 b, double spacing) {
    const double len = distance(a, b);
    const int n = std::max(1, static_cast<int>(std::ceil(len / spacing)));
    for (int k = 0; k < n; ++k) add(a + (b - a) * (static_cast<double>(k) / n));
  }
  /// Station `p` would get if it were added next.
  double station_of(Vec2 p) const { return pts_.empty() ? 0.0 : length_ + distance(pts_.back(), p); }
  std::vector<Vec2> take() { return std::move(pts_); }

 private:
  std::vector<Vec2> pts_;
  double length_ = 0.0;
};

std::vector<double> speed_profile(const Path& path, const RouteOptions& opts) {
  const auto pts = path.points();
  const std::size_t n = pts.size();
  const bool closed = path.closed();
  std::vector<double> v(n, opts.cruise_speed);
  auto seg = [&](std::size_t i) { return pts[(i + 1) % n] - pts[i]; };
  for (std::size_t i = 0; i < n; ++i) {
    if (!closed && (i == 0 || i + 1 == n)) continue;
    const Vec2 a = seg((i + n - 1) % n);
    const Vec2 b = seg(i);
    const double dh = std::abs(std::atan2(cross(a, b), dot(a, b)));
    const double ds = 0.5 * (norm(a) + norm(b));
    if (ds <= 0.0 || dh < 1e-9) continue;
    const double kappa = dh / ds;
    v[i] = std::min(v[i], std::sqrt(opts.lateral_accel / kappa));
  }
  // Backward pass so upcoming curves are entered at a reachable speed.
  const int passes = closed ? 2 : 1;
  for (int pass = 0; pass < passes; ++pass) {
    for (std::size_t k = n; k-- > 0;) {
      if (!closed && k + 1 == n) continue;
      const std::size_t next = (k + 1) % n;
      const double d = distance(pts[k], pts[next]);
      v[k] = std::min(v[k], std::sqrt(v[next] * v[next] + 2.0 * opts.comfort_decel * d));
    }
  }
  return v;
}

}  // namespace

double Route::speed_limit_at(double s) const {
  const double ws = path.wrap(s);
  const auto st = path.stations();
  auto it = std::upper_bound(st.begin(), st.end(), ws);
  const std::size_t i = it == st.begin() ? 0 : static_cast<std::size_t>(it - st.begin()) - 1;
  const std::size_t j = i + 1 < speed_limit.size() ? i + 1 : (closed() ? 0 : i);
  return std::min(speed_limit[i], speed_limit[j]);
}

Route Route::transformed(const RigidTransform& tf) const {
  Route r = *this;
  r.path = path.transformed(tf);
  for (StopMarker& m : r.stops) m.merge = tf.apply(m.merge);
  return r;
}

Route make_route(const RoadGraph& graph, std::vector<int> edges, bool closed, const RouteOptions& opts) {
  if (edges.empty()) throw std::invalid_argument("make_route: empty edge list");
  const std::size_t n = edges.size();
  std::vector<const Connector*> joins(n, nullptr);  // joins[i]: edge i -> edge i+1
  for (std::size_t i = 0; i < n; ++i) {
    if (i + 1 == n && !closed) break;
    const int a = edges[i];
    const int b = edges[(i + 1) % n];
    joins[i] = graph.connector(a, b);
    if (joins[i] == nullptr)
      throw std::invalid_argument("make_route: no connector from edge " + std::to_string(a) + " to " +
                                  std::to_string(b));
  }

  Route route;
  PointSink sink;
  for (std::size_t i = 0; i < n; ++i) {
    const int e = edges[i];
    const LaneEdge& edge = graph.edges()[static_cast<std::size_t>(e)];
    const Vec2 a = graph.nodes()[static_cast<std::size_t>(edge.from)].position;
    const Vec2 b = graph.nodes()[static_cast<std::size_t>(edge.to)].position;
    const Vec2 d = graph.edge_direction(e);
    const Connector* before = (i > 0) ? joins[i - 1] : (closed ? joins[n - 1] : nullptr);
    const Connector* after = joins[i];
    const double trim_start = before ? before->trim : 0.0;
    const double trim_end = after ? after->trim : 0.0;
    const Vec2 p0 = a + d * trim_start;
    const Vec2 p1 = b - d * trim_end;

    if (auto light = graph.light_for_edge(e); light && after != nullptr) {
      const double s0 = sink.station_of(p0);
      route.stops.push_back({s0 + (edge.length - graph.stop_offset(e) - trim_start), *light, -1, b});
    } else if (const int p = graph.yield_to(e); p >= 0 && after != nullptr) {
      const double s0 = sink.station_of(p0);
      route.stops.push_back({s0 + (edge.length - graph.stop_offset(e) - trim_start), -1, p, b});
    }
    sink.add_line(p0, p1, opts.spacing);
    if (after != nullptr) {
      const std::vector<Vec2> arc = after->sample(opts.spacing);
      // The arc end is the start of the next straight run.
      for (std::size_t k = 0; k + 1 < arc.size(); ++k) sink.add(arc[k]);
      if (arc.size() == 1) sink.add(arc[0]);
    } else {
      sink.add(p1);
    }
  }
  route.edges = std::move(edges);
  route.path = Path(sink.take(), closed);
  route.speed_limit = speed_profile(route.path, opts);
  std::sort(route.stops.begin(), route.stops.end(), [](const StopMarker& x, const StopMarker& y) { return x.s < y.s; });
  return route;
}

Route plan_route(const RoadGraph& graph, int from_spawn, int to_spawn, const RouteOptions& opts) {
  if (from_spawn == to_spawn) throw std::invalid_argument("plan_route: origin equals destination");
  return make_route(graph, graph.shortest_route(graph.spawn_node(from_spawn), graph.spawn_node(to_spawn)), false,
                    opts);
}

}  // namespace rig::sim
