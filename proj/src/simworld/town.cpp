#include "rig/simworld/town.hpp"

#include <array>
#include <cmath>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>

namespace rig::sim {

namespace {

constexpr double kLaneWidth = 4.0;

class Builder {
 public:
  explicit Builder(int town_id) { spec_.town_id = town_id; }

  int junction(Vec2 p) {
    spec_.nodes.push_back({p, -1});
    return static_cast<int>(spec_.nodes.size()) - 1;
  }
  int spawn(Vec2 p) {
    spec_.nodes.push_back({p, next_spawn_++});
    return static_cast<int>(spec_.nodes.size()) - 1;
  }
  int edge(int a, int b) {
    spec_.edges.push_back({a, b, kLaneWidth, 0.0});
    return static_cast<int>(spec_.edges.size()) - 1;
  }
  void priority(int e) { spec_.priority_edges.push_back(e); }
  /// One-way road a -> b split into `pieces` edges with spawn points between.
  void road(int a, int b, int pieces) {
    const Vec2 pa = spec_.nodes[static_cast<std::size_t>(a)].position;
    const Vec2 pb = spec_.nodes[static_cast<std::size_t>(b)].position;
    int prev = a;
    for (int k = 1; k < pieces; ++k) {
      const int mid = spawn(pa + (pb - pa) * (static_cast<double>(k) / pieces));
      edge(prev, mid);
      prev = mid;
    }
    edge(prev, b);
  }
  RoadGraphSpec finish(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 60.0);
    spec_.junction_offsets.resize(spec_.nodes.size());
    for (double& off : spec_.junction_offsets) off = u(rng);
    return std::move(spec_);
  }

 private:
  RoadGraphSpec spec_;
  int next_spawn_ = 0;
};

// Manhattan grid of one-way streets. Row j runs +x when j is even, column i
// runs -y when i is even; with an even size the perimeter forms a loop and
// the whole grid is strongly connected.
struct Grid {
  int size = 10;
  std::vector<int> ids;
  int at(int i, int j) const { return ids[static_cast<std::size_t>(j * size + i)]; }
};

Grid build_grid(Builder& b, int size, double spacing, double jitter, std::mt19937_64& rng) {
  Grid g;
  g.size = size;
  std::uniform_real_distribution<double> u(-jitter, jitter);
  for (int j = 0; j < size; ++j)
    for (int i = 0; i < size; ++i) {
      Vec2 p{i * spacing, j * spacing};
      if (jitter > 0.0) p += Vec2{u(rng), u(rng)};
      g.ids.push_back(b.junction(p));
    }
  for (int j = 0; j < size; ++j)
    for (int i = 0; i + 1 < size; ++i) {
      if (j % 2 == 0) b.road(g.at(i, j), g.at(i + 1, j), 2);
      else b.road(g.at(i + 1, j), g.at(i, j), 2);
    }
  for (int i = 0; i < size; ++i)
    for (int j = 0; j + 1 < size; ++j) {
      if (i % 2 == 0) b.road(g.at(i, j + 1), g.at(i, j), 2);
      else b.road(g.at(i, j), g.at(i, j + 1), 2);
    }
  return g;
}

RoadGraph make_town1() {
  Builder b(1);
  std::mt19937_64 rng(1001);
  build_grid(b, 10, 40.0, 0.0, rng);
  return RoadGraph(b.finish(11));
}

RoadGraph make_town2() {
  Builder b(2);
  constexpr int kRingNodes = 128;
  constexpr int kRoundNodes = 16;
  constexpr int kSpokes = 8;
  constexpr double kRing = 150.0;
  constexpr double kRound = 30.0;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  auto polar = [](double r, double a) { return Vec2{r * std::cos(a), r * std::sin(a)}; };

  // Ring: nodes adjacent to a spoke junction are dropped so the junction
  // edges are long enough for a full-radius fillet.
  std::vector<int> ring;
  std::vector<int> ring_at(kRingNodes, -1);
  for (int k = 0; k < kRingNodes; ++k) {
    const int phase = k % (kRingNodes / kSpokes);
    if (phase == kRingNodes / kSpokes - 1 || phase == 2) continue;
    const Vec2 p = polar(kRing, two_pi * k / kRingNodes);
    const int id = (phase == 0 || phase == 1) ? b.junction(p) : b.spawn(p);
    ring_at[static_cast<std::size_t>(k)] = id;
    ring.push_back(id);
  }
  for (std::size_t k = 0; k < ring.size(); ++k) b.edge(ring[k], ring[(k + 1) % ring.size()]);

  std::vector<int> round;
  for (int m = 0; m < kRoundNodes; ++m) round.push_back(b.junction(polar(kRound, two_pi * m / kRoundNodes)));
  std::vector<int> round_edges;
  for (std::size_t m = 0; m < round.size(); ++m) round_edges.push_back(b.edge(round[m], round[(m + 1) % round.size()]));

  for (int p = 0; p < kSpokes; ++p) {
    const int ring_out = ring_at[static_cast<std::size_t>(p * (kRingNodes / kSpokes))];
    const int ring_in = ring_at[static_cast<std::size_t>(p * (kRingNodes / kSpokes) + 1)];
    b.road(ring_out, round[static_cast<std::size_t>(2 * p)], 4);
    b.road(round[static_cast<std::size_t>(2 * p + 1)], ring_in, 4);
  }
  // Circulating traffic has right of way at every roundabout entry.
  for (int p = 0; p < kSpokes; ++p) b.priority(round_edges[static_cast<std::size_t>((2 * p + kRoundNodes - 1) % kRoundNodes)]);
  return RoadGraph(b.finish(22));
}

RoadGraph make_town3() {
  Builder b(3);
  std::mt19937_64 rng(3003);
  constexpr int kSize = 10;
  const Grid g = build_grid(b, kSize, 50.0, 6.0, rng);

  // Diagonal one-way streets through selected blocks, oriented so that the
  // far junction offers a turn sharper than 90 degrees.
  std::vector<char> used(static_cast<std::size_t>(kSize * kSize), 0);
  std::uniform_int_distribution<int> pick(0, kSize - 2);
  int placed = 0;
  for (int attempt = 0; attempt < 400 && placed < 14; ++attempt) {
    const int i = pick(rng);
    const int j = pick(rng);
    const std::array<int, 4> corners{g.at(i, j), g.at(i + 1, j), g.at(i, j + 1), g.at(i + 1, j + 1)};
    bool clash = false;
    for (int di = -1; di <= 2 && !clash; ++di)
      for (int dj = -1; dj <= 2 && !clash; ++dj) {
        const int ii = i + di, jj = j + dj;
        if (ii >= 0 && jj >= 0 && ii < kSize && jj < kSize && used[static_cast<std::size_t>(jj * kSize + ii)])
          clash = true;
      }
    if (clash) continue;
    // Row j+1 runs -x when odd: a diagonal ending at (i+1, j+1) heading +x+y
    // then meets a 135 degree turn; otherwise run the other diagonal.
    if ((j + 1) % 2 == 1) b.road(corners[0], corners[3], 2);
    else b.road(corners[1], corners[2], 2);
    for (int c : {0, 1})
      for (int d : {0, 1}) used[static_cast<std::size_t>((j + d) * kSize + (i + c))] = 1;
    ++placed;
  }
  return RoadGraph(b.finish(33));
}

}  // namespace

RoadGraph load_town(int town_id) {
  switch (town_id) {
    case 1: return make_town1();
    case 2: return make_town2();
    case 3: return make_town3();
    default:
      throw std::invalid_argument("unknown town id " + std::to_string(town_id) + " (valid ids: 1, 2, 3)");
  }
}

std::pair<int, int> canonical_straight_route(int town_id) {
  switch (town_id) {
    case 1: return {0, 3};  // along the first row
    case 2: return {0, 8};  // along the outer ring inside one sector
    case 3: return {0, 3};
    default:
      throw std::invalid_argument("unknown town id " + std::to_string(town_id) + " (valid ids: 1, 2, 3)");
  }
}

std::shared_ptr<const RoadGraph> shared_town(int town_id) {
  static std::mutex mu;
  static std::array<std::shared_ptr<const RoadGraph>, 3> cache;
  if (town_id < 1 || town_id > 3) return std::make_shared<const RoadGraph>(load_town(town_id));
  std::lock_guard lock(mu);
  auto& slot = cache[static_cast<std::size_t>(town_id - 1)];
  if (!slot) slot = std::make_shared<const RoadGraph>(load_town(town_id));
  return slot;
}

std::vector<Route> build_rails(const RoadGraph& town) {
  std::vector<Route> rails;
  const int n = town.num_spawn_points();
  rails.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    int j = (i * 61 + 17) % n;
    if (j == i) j = (i + 1) % n;
    const int a = town.spawn_node(i);
    const int c = town.spawn_node(j);
    std::vector<int> edges = town.shortest_route(a, c);
    const std::vector<int> back = town.shortest_route(c, a);
    edges.insert(edges.end(), back.begin(), back.end());
    rails.push_back(make_route(town, std::move(edges), true));
  }
  return rails;
}

std::shared_ptr<const std::vector<Route>> town_rails(int town_id) {
  static std::mutex mu;
  static std::array<std::shared_ptr<const std::vector<Route>>, 3> cache;
  const auto town = shared_town(town_id);
  std::lock_guard lock(mu);
  auto& slot = cache[static_cast<std::size_t>(town_id - 1)];
  if (!slot) slot = std::make_shared<const std::vector<Route>>(build_rails(*town));
  return slot;
}

}  // namespace rig::sim
