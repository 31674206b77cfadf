#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>
#include <string>

#include "rig/simworld/route.hpp"
#include "rig/simworld/town.hpp"

using namespace rig;
using namespace rig::sim;

TEST_CASE("every town has contiguous spawn indices, enough of them, and is strongly connected") {
  for (int id : {1, 2, 3}) {
    CAPTURE(id);
    const RoadGraph g = load_town(id);
    CHECK(g.num_spawn_points() >= 128);
    std::set<int> seen;
    for (const RoadNode& n : g.nodes())
      if (n.spawn_index >= 0) CHECK(seen.insert(n.spawn_index).second);
    CHECK(static_cast<int>(seen.size()) == g.num_spawn_points());
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == g.num_spawn_points() - 1);
    CHECK(g.strongly_connected());
    for (const TrafficLight& l : g.lights()) {
      CHECK(l.green_s > 0);
      CHECK(l.yellow_s > 0);
      CHECK(l.red_s > 0);
    }
  }
}

TEST_CASE("town loading is deterministic and rejects unknown ids") {
  CHECK(load_town(1).serialize() == load_town(1).serialize());
  CHECK(load_town(3).serialize() == load_town(3).serialize());
  try {
    (void)load_town(9);
    FAIL("expected an error");
  } catch (const std::invalid_argument& e) {
    const std::string msg = e.what();
    CHECK(msg.find("1, 2, 3") != std::string::npos);
  }
}

TEST_CASE("town 3 drive from 90 to 77 is routable and takes a sharp turn") {
  const RoadGraph& g = *shared_town(3);
  const Route r = plan_route(g, 90, 77);
  CHECK(r.path.length() > 0.0);
  double sharpest = 0.0;
  for (std::size_t k = 0; k + 1 < r.edges.size(); ++k)
    if (const Connector* c = g.connector(r.edges[k], r.edges[k + 1]))
      sharpest = std::max(sharpest, std::abs(c->turn_angle));
  CHECK(sharpest > std::numbers::pi / 2);
}

TEST_CASE("town 3 has turns sharper than a right angle") {
  const RoadGraph& g = *shared_town(3);
  int acute = 0;
  for (const Connector& c : g.connectors())
    if (std::abs(c.turn_angle) > 0.6 * std::numbers::pi) ++acute;
  CHECK(acute >= 7);
}

TEST_CASE("lights cycle through green, yellow and red as a function of time") {
  const TrafficLight l{{0, 0}, 0, 10.0, 3.0, 17.0, 4.0};
  CHECK(l.state_at(4.0) == LightState::green);
  CHECK(l.state_at(13.9) == LightState::green);
  CHECK(l.state_at(14.5) == LightState::yellow);
  CHECK(l.state_at(20.0) == LightState::red);
  CHECK(l.state_at(34.0) == LightState::green);
  CHECK(l.state_at(2.0) == LightState::red);
}

TEST_CASE("spawn lookups are bounds checked") {
  const RoadGraph& g = *shared_town(1);
  CHECK_THROWS_AS((void)g.spawn_node(-1), std::out_of_range);
  CHECK_THROWS_AS((void)g.spawn_node(g.num_spawn_points()), std::out_of_range);
}

TEST_CASE("rails are closed loops starting beside their spawn point") {
  const RoadGraph& g = *shared_town(2);
  const auto rails = town_rails(2);
  REQUIRE(static_cast<int>(rails->size()) == g.num_spawn_points());
  for (int i = 0; i < g.num_spawn_points(); i += 17) {
    const Route& r = (*rails)[static_cast<std::size_t>(i)];
    CHECK(r.closed());
    CHECK(distance(r.path.point_at(0.0), g.spawn_pose(i).position) < 0.5);
  }
}

TEST_CASE("route speed limits respect curvature and stay positive") {
  const Route r = plan_route(*shared_town(1), 0, 40);
  for (double s = 0.0; s < r.path.length(); s += 0.5) {
    CHECK(r.speed_limit_at(s) > 0.0);
    CHECK(r.speed_limit_at(s) <= 8.0 + 1e-12);
  }
}
