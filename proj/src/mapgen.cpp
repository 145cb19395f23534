#include "lle/mapgen.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include "lle/error.hpp"

namespace lle {

namespace {

constexpr int kMaxSearchAgents = 16;

// Exhaustive search over joint states (positions, arrived flags, gem flags).
// Replicates World::step exactly for live states; equivalence is asserted by
// the dynamics property suite. Dead-end (death) branches are pruned since no
// plan continues past them.
class JointSearch {
 public:
  JointSearch(const MapSpec& map, uint64_t cap) : map_(map), cap_(cap) {
    n_ = map.n_agents();
    g_ = static_cast<int>(map.gem_positions().size());
    width_ = map.width();
    cells_ = map.width() * map.height();
    if (n_ > kMaxSearchAgents)
      throw StateSpaceTooLarge("joint search supports at most " +
                               std::to_string(kMaxSearchAgents) + " agents");
    bits_pos_ = std::bit_width(static_cast<unsigned>(cells_ - 1));
    if (g_ > 31 || n_ * bits_pos_ + n_ + g_ > 63)
      throw StateSpaceTooLarge("joint state does not fit the 64-bit search encoding");

    enterable_.resize(cells_);
    gem_at_.assign(cells_, -1);
    exit_at_.assign(cells_, 0);
    for (int r = 0; r < map.height(); ++r) {
      for (int c = 0; c < width_; ++c) {
        Position p{r, c};
        enterable_[cell(p)] = map.is_enterable(p);
        gem_at_[cell(p)] = map.gem_index(p);
        exit_at_[cell(p)] = map.is_exit(p);
      }
    }
    for (const auto& src : map.laser_sources()) {
      Ray ray;
      ray.color = src.color;
      Position p = neighbor(src.pos, src.direction);
      while (map.in_bounds(p) && map.at(p).kind != TileKind::Wall &&
             map.at(p).kind != TileKind::LaserSource) {
        ray.cells.push_back(cell(p));
        p = neighbor(p, src.direction);
      }
      rays_.push_back(std::move(ray));
    }
    cover_.assign(cells_, 0);

    full_arrived_ = (n_ == 32) ? ~0u : ((1u << n_) - 1);
    // Joint branching reaches 5^n successors per state, so a visited-state
    // cap alone can leave the search grinding on edge generation long before
    // it trips. Bound total successor generations per phase as well.
    work_cap_ = (cap_ > std::numeric_limits<uint64_t>::max() / 32) ? std::numeric_limits<uint64_t>::max()
                                                                   : cap_ * 32;
  }

  bool solvable() { return bfs(false) >= 0; }

  int coordination_depth() {
    int depth = bfs(true);
    if (depth < 0) throw ValidationError("map is not solvable; no plan to analyze");
    if (rays_.empty()) return 0;
    // Min-cost over all shortest plans: relax layer by layer along edges of
    // the BFS DAG; a state costs 1 when some beam is absorbed by a
    // same-color agent while a different-color agent stands on its
    // agent-free span.
    std::unordered_map<uint64_t, int> mincost;
    mincost[pack(start_)] = 0;
    work_ = 0;
    State s;
    for (int d = 0; d + 1 <= depth; ++d) {
      for (uint64_t key : layers_[d]) {
        auto it = mincost.find(key);
        if (it == mincost.end()) continue;
        int base = it->second;
        unpack(key, s);
        expand(s, [&](const State& next, bool, bool coord) {
          uint64_t nk = pack(next);
          auto dit = dist_.find(nk);
          if (dit == dist_.end() || dit->second != d + 1) return;
          int cost = base + (coord ? 1 : 0);
          auto [mit, fresh] = mincost.try_emplace(nk, cost);
          if (!fresh && cost < mit->second) mit->second = cost;
        });
      }
    }
    int best = -1;
    for (uint64_t goal : goals_) {
      auto it = mincost.find(goal);
      if (it != mincost.end() && (best < 0 || it->second < best)) best = it->second;
    }
    return best;
  }

 private:
  struct State {
    std::array<int16_t, kMaxSearchAgents> pos;
    uint32_t arrived = 0;
    uint32_t gems = 0;
  };
  struct Ray {
    int color = 0;
    std::vector<int> cells;
  };

  int cell(Position p) const { return p.row * width_ + p.col; }

  uint64_t pack(const State& s) const {
    uint64_t v = 0;
    for (int i = 0; i < n_; ++i) v = (v << bits_pos_) | static_cast<uint16_t>(s.pos[i]);
    v = (v << n_) | s.arrived;
    v = (v << g_) | s.gems;
    return v;
  }

  void unpack(uint64_t v, State& s) const {
    s.gems = static_cast<uint32_t>(v & ((g_ == 0) ? 0 : ((1ull << g_) - 1)));
    v >>= g_;
    s.arrived = static_cast<uint32_t>(v & ((1ull << n_) - 1));
    v >>= n_;
    for (int i = n_ - 1; i >= 0; --i) {
      s.pos[i] = static_cast<int16_t>(v & ((1ull << bits_pos_) - 1));
      v >>= bits_pos_;
    }
  }

  int agent_at(const State& s, int c) const {
    for (int i = 0; i < n_; ++i)
      if (s.pos[i] == c) return i;
    return -1;
  }

  // Applies one joint action to s. Returns false when an agent dies. done
  // and coord report episode completion and the blocking-step indicator.
  bool step_state(const State& s, const std::array<uint8_t, kMaxSearchAgents>& actions,
                  State& out, bool& done, bool& coord) const {
    std::array<int16_t, kMaxSearchAgents> target;
    for (int i = 0; i < n_; ++i) {
      Action a = static_cast<Action>(actions[i]);
      if (a == Action::Stay) {
        target[i] = s.pos[i];
      } else {
        int r = s.pos[i] / width_, c = s.pos[i] % width_;
        Position t = target_of({r, c}, a);
        target[i] = static_cast<int16_t>(cell(t));
      }
    }
    std::array<bool, kMaxSearchAgents> demoted{};
    for (int i = 0; i < n_; ++i) {
      if (static_cast<Action>(actions[i]) == Action::Stay) continue;
      for (int j = i + 1; j < n_; ++j) {
        if (static_cast<Action>(actions[j]) == Action::Stay) continue;
        if (target[i] == target[j]) demoted[i] = demoted[j] = true;
      }
    }
    out = s;
    for (int i = 0; i < n_; ++i) out.pos[i] = demoted[i] ? s.pos[i] : target[i];

    for (int c : dirty_) cover_[c] = 0;
    dirty_.clear();
    bool any_blocked_with_crosser = false;
    for (const Ray& ray : rays_) {
      bool blocked = false;
      for (int c : ray.cells) {
        cover_[c] |= 1u << ray.color;
        dirty_.push_back(c);
        int a = agent_at(out, c);
        if (a >= 0 && a == ray.color) {
          blocked = true;
          break;
        }
      }
      if (blocked) {
        for (int c : ray.cells) {
          int a = agent_at(out, c);
          if (a >= 0 && a != ray.color) {
            any_blocked_with_crosser = true;
            break;
          }
        }
      }
    }
    for (int i = 0; i < n_; ++i) {
      if (out.arrived >> i & 1) continue;
      if (cover_[out.pos[i]] & ~(1u << i)) return false;
    }
    coord = any_blocked_with_crosser;

    for (int i = 0; i < n_; ++i) {
      if (out.arrived >> i & 1) continue;
      int gi = gem_at_[out.pos[i]];
      if (gi >= 0 && (out.gems >> gi & 1)) out.gems &= ~(1u << gi);
      if (exit_at_[out.pos[i]]) out.arrived |= 1u << i;
    }
    done = out.arrived == full_arrived_;
    return true;
  }

  template <typename Visit>
  void expand(const State& s, Visit&& visit) const {
    std::array<std::array<uint8_t, kNumActions>, kMaxSearchAgents> avail;
    std::array<int, kMaxSearchAgents> n_avail;
    for (int i = 0; i < n_; ++i) {
      int k = 0;
      if (!(s.arrived >> i & 1)) {
        int r = s.pos[i] / width_, c = s.pos[i] % width_;
        for (Action a : {Action::North, Action::East, Action::South, Action::West}) {
          Position t = target_of({r, c}, a);
          if (!map_.in_bounds(t)) continue;
          int tc = cell(t);
          if (!enterable_[tc]) continue;
          if (agent_at(s, tc) >= 0) continue;
          avail[i][k++] = static_cast<uint8_t>(a);
        }
      }
      avail[i][k++] = static_cast<uint8_t>(Action::Stay);
      n_avail[i] = k;
    }
    std::array<int, kMaxSearchAgents> idx{};
    std::array<uint8_t, kMaxSearchAgents> actions;
    State next;
    while (true) {
      bool all_stay = true;
      for (int i = 0; i < n_; ++i) {
        actions[i] = avail[i][idx[i]];
        if (static_cast<Action>(actions[i]) != Action::Stay) all_stay = false;
      }
      if (!all_stay) {
        if (++work_ > work_cap_)
          throw StateSpaceTooLarge("joint search exceeded the expansion work bound of " +
                                   std::to_string(work_cap_));
        bool done = false, coord = false;
        if (step_state(s, actions, next, done, coord)) visit(next, done, coord);
      }
      int i = 0;
      while (i < n_ && ++idx[i] == n_avail[i]) idx[i++] = 0;
      if (i == n_) break;
    }
  }

  // BFS from the start state. Returns the depth of the first layer holding a
  // goal (all agents arrived), or -1 if unreachable. With collect_layers the
  // whole layer structure up to that depth is retained for the cost DP.
  int bfs(bool collect_layers) {
    start_ = State{};
    const auto& starts = map_.start_positions();
    for (int i = 0; i < n_; ++i) start_.pos[i] = static_cast<int16_t>(cell(starts[i]));
    start_.gems = (g_ == 32) ? ~0u : ((1u << g_) - 1);
    if (g_ == 0) start_.gems = 0;

    dist_.clear();
    layers_.clear();
    goals_.clear();
    work_ = 0;
    dist_[pack(start_)] = 0;
    layers_.push_back({pack(start_)});
    State s;
    for (int d = 0; !layers_[d].empty(); ++d) {
      bool found_goal = false;
      layers_.push_back({});
      for (uint64_t key : layers_[d]) {
        unpack(key, s);
        expand(s, [&](const State& next, bool done, bool) {
          uint64_t nk = pack(next);
          auto [it, fresh] = dist_.try_emplace(nk, d + 1);
          if (!fresh) return;
          if (dist_.size() > cap_)
            throw StateSpaceTooLarge("joint search exceeded the state cap of " +
                                     std::to_string(cap_));
          if (done) {
            goals_.push_back(nk);
            found_goal = true;
          } else {
            layers_[d + 1].push_back(nk);
          }
        });
        if (found_goal && !collect_layers) return d + 1;
      }
      if (found_goal) return d + 1;
    }
    return -1;
  }

  const MapSpec& map_;
  uint64_t cap_;
  uint64_t work_cap_ = 0;
  mutable uint64_t work_ = 0;
  int n_, g_, cells_, width_, bits_pos_;
  uint32_t full_arrived_;
  std::vector<uint8_t> enterable_;
  std::vector<int> gem_at_;
  std::vector<uint8_t> exit_at_;
  std::vector<Ray> rays_;
  mutable std::vector<uint32_t> cover_;
  mutable std::vector<int> dirty_;
  State start_;
  std::unordered_map<uint64_t, int> dist_;
  std::vector<std::vector<uint64_t>> layers_;
  std::vector<uint64_t> goals_;
};

}  // namespace

bool solvable(const MapSpec& map, uint64_t state_cap) {
  return JointSearch(map, state_cap).solvable();
}

int coordination_depth(const MapSpec& map, uint64_t state_cap) {
  return JointSearch(map, state_cap).coordination_depth();
}

MapSpec generate(const GenParams& p) {
  if (p.width < 1 || p.height < 1) throw ValidationError("grid dimensions must be positive");
  if (p.n_agents < 1) throw ValidationError("need at least one agent");
  if (p.n_gems < 0 || p.n_lasers < 0) throw ValidationError("counts must be nonnegative");
  if (p.wall_density < 0.0 || p.wall_density > 1.0)
    throw ValidationError("wall_density must be in [0, 1]");
  if (p.min_coordination_steps < 0) throw ValidationError("min_coordination_steps must be >= 0");
  if (p.max_attempts < 1) throw ValidationError("max_attempts must be >= 1");
  const int cells = p.width * p.height;
  const int needed = 2 * p.n_agents + p.n_gems + p.n_lasers;
  if (needed > cells)
    throw ValidationError("grid too small: " + std::to_string(needed) + " placements on " +
                          std::to_string(cells) + " cells");

  Rng rng = Rng(p.seed).stream("mapgen");
  for (int attempt = 0; attempt < p.max_attempts; ++attempt) {
    std::vector<std::vector<Tile>> tiles(p.height, std::vector<Tile>(p.width));
    std::vector<Position> free;
    for (int r = 0; r < p.height; ++r) {
      for (int c = 0; c < p.width; ++c) {
        if (rng.uniform01() < p.wall_density) {
          tiles[r][c].kind = TileKind::Wall;
        } else {
          free.push_back({r, c});
        }
      }
    }
    if (static_cast<int>(free.size()) < needed) continue;
    for (int i = static_cast<int>(free.size()) - 1; i > 0; --i)
      std::swap(free[i], free[rng.uniform_int(i + 1)]);

    size_t k = 0;
    for (int a = 0; a < p.n_agents; ++a) {
      Position pos = free[k++];
      tiles[pos.row][pos.col] = Tile{TileKind::Start, a};
    }
    for (int e = 0; e < p.n_agents; ++e) {
      Position pos = free[k++];
      tiles[pos.row][pos.col].kind = TileKind::Exit;
    }
    for (int g = 0; g < p.n_gems; ++g) {
      Position pos = free[k++];
      tiles[pos.row][pos.col].kind = TileKind::Gem;
    }
    for (int l = 0; l < p.n_lasers; ++l) {
      Position pos = free[k++];
      Tile t{TileKind::LaserSource};
      t.laser_color = rng.uniform_int(p.n_agents);
      t.laser_direction = static_cast<Direction>(rng.uniform_int(4));
      tiles[pos.row][pos.col] = t;
    }

    MapSpec map = MapSpec::from_grid(std::move(tiles));
    if (!solvable(map, p.state_cap)) continue;
    if (p.min_coordination_steps > 0 &&
        coordination_depth(map, p.state_cap) < p.min_coordination_steps)
      continue;
    return map;
  }
  throw GenerationExhausted("no solvable map after " + std::to_string(p.max_attempts) +
                            " attempts; relax the parameters");
}

}  // namespace lle
