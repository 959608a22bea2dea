#include "mazerl/env.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "mazerl/rng.hpp"

namespace mazerl {

using nlohmann::json;

Maze::Maze(int n, std::vector<Cell> traps, Cell start, Cell goal)
    : n_(n), traps_(std::move(traps)), start_(start), goal_(goal) {
  std::sort(traps_.begin(), traps_.end());
  traps_.erase(std::unique(traps_.begin(), traps_.end()), traps_.end());
  trap_mask_.assign(static_cast<std::size_t>(n_) * n_, 0);
  for (const Cell& t : traps_) trap_mask_[t.row * n_ + t.col] = 1;
}

bool Maze::is_corner(Cell c) const {
  return (c.row == 0 || c.row == n_ - 1) && (c.col == 0 || c.col == n_ - 1);
}

namespace {

// BFS distances to `from` over non-trap cells; -1 where unreachable.
std::vector<int> bfs_distances(const Maze& maze, Cell from) {
  const int n = maze.side();
  std::vector<int> dist(static_cast<std::size_t>(n) * n, -1);
  std::deque<Cell> queue;
  dist[from.row * n + from.col] = 0;
  queue.push_back(from);
  while (!queue.empty()) {
    Cell cur = queue.front();
    queue.pop_front();
    for (Action a : kAllActions) {
      Cell nxt{cur.row + row_delta(a), cur.col + col_delta(a)};
      if (!maze.in_bounds(nxt) || maze.is_trap(nxt)) continue;
      int& d = dist[nxt.row * n + nxt.col];
      if (d < 0) {
        d = dist[cur.row * n + cur.col] + 1;
        queue.push_back(nxt);
      }
    }
  }
  return dist;
}

}  // namespace

bool Maze::solvable() const {
  const std::vector<int> dist = bfs_distances(*this, start_);
  return dist[goal_.row * n_ + goal_.col] >= 0;
}

Maze generate_maze(std::uint64_t seed, int n, int k) {
  if (n < 3) throw std::invalid_argument("maze side must be at least 3");
  if (k < 0 || k >= n * n - 2) {
    throw std::invalid_argument(
        "trap count must leave room for start and goal");
  }
  Rng rng = derive_rng(seed, stream::kMaze);
  const std::array<Cell, 4> corners = {Cell{0, 0}, Cell{0, n - 1},
                                       Cell{n - 1, 0}, Cell{n - 1, n - 1}};
  for (int attempt = 0; attempt < 1000; ++attempt) {
    const Cell goal = corners[rng.uniform_int(4)];
    std::vector<Cell> pool;
    pool.reserve(static_cast<std::size_t>(n) * n - 1);
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        if (Cell{r, c} != goal) pool.push_back(Cell{r, c});
      }
    }
    const std::uint32_t start_idx =
        rng.uniform_int(static_cast<std::uint32_t>(pool.size()));
    const Cell start = pool[start_idx];
    pool.erase(pool.begin() + start_idx);

    // Partial Fisher-Yates: first k entries become the traps.
    std::vector<Cell> traps;
    traps.reserve(k);
    for (int i = 0; i < k; ++i) {
      const std::uint32_t j =
          i + rng.uniform_int(static_cast<std::uint32_t>(pool.size() - i));
      std::swap(pool[i], pool[j]);
      traps.push_back(pool[i]);
    }

    Maze maze(n, std::move(traps), start, goal);
    if (maze.solvable()) return maze;
  }
  throw std::runtime_error(
      "no solvable maze found in 1000 attempts; traps too dense");
}

std::vector<Action> build_instruction(const Trajectory& gold, bool reverse) {
  const std::size_t len = gold.size();
  std::vector<Action> tokens(len);
  for (std::size_t i = 0; i < len; ++i) {
    tokens[i] = reverse ? gold.actions[len - 1 - i] : gold.actions[i];
  }
  return tokens;
}

std::pair<std::vector<Action>, Trajectory> synthesize_instruction(
    const Maze& maze, bool reverse) {
  const int n = maze.side();
  const std::vector<int> dist = bfs_distances(maze, maze.goal());
  if (dist[maze.start().row * n + maze.start().col] < 0) {
    throw std::invalid_argument("maze is not solvable");
  }
  Trajectory gold;
  Cell cur = maze.start();
  while (cur != maze.goal()) {
    const int d = dist[cur.row * n + cur.col];
    for (Action a : kAllActions) {
      Cell nxt{cur.row + row_delta(a), cur.col + col_delta(a)};
      if (!maze.in_bounds(nxt) || maze.is_trap(nxt)) continue;
      if (dist[nxt.row * n + nxt.col] == d - 1) {
        gold.actions.push_back(a);
        cur = nxt;
        break;
      }
    }
  }
  return {build_instruction(gold, reverse), std::move(gold)};
}

ExecutionResult execute(const Maze& maze, const Trajectory& traj,
                        int max_steps) {
  Cell cur = maze.start();
  ExecutionResult res;
  for (Action a : traj.actions) {
    if (res.steps_used >= max_steps) break;
    ++res.steps_used;
    Cell nxt{cur.row + row_delta(a), cur.col + col_delta(a)};
    if (maze.in_bounds(nxt)) cur = nxt;  // off-grid moves bump the wall
    if (maze.is_trap(cur)) {
      res.trapped = true;
      break;
    }
    if (cur == maze.goal()) {
      res.reached_goal = true;
      break;
    }
  }
  res.final_cell = cur;
  return res;
}

int underspecified_reward(const Context& ctx, const Trajectory& a) {
  return execute(ctx.maze, a, ctx.max_steps).reached_goal ? 1 : 0;
}

int oracle_reward(const Context& ctx, const Trajectory& a) {
  return a.actions == ctx.gold.actions ? 1 : 0;
}

std::vector<Trajectory> spurious_candidates(const Context& ctx, int n_spurious,
                                            std::uint64_t seed,
                                            int sample_budget) {
  std::vector<Trajectory> out;
  if (n_spurious <= 0) return out;
  Rng rng = derive_rng(seed, stream::kSpurious);
  std::set<std::vector<Action>> seen;
  for (int i = 0; i < sample_budget &&
                  out.size() < static_cast<std::size_t>(n_spurious);
       ++i) {
    const int len = 1 + static_cast<int>(rng.uniform_int(
                            static_cast<std::uint32_t>(ctx.max_steps)));
    Trajectory traj;
    traj.actions.reserve(len);
    for (int t = 0; t < len; ++t) {
      traj.actions.push_back(action_from_index(rng.uniform_int(kNumActions)));
    }
    if (traj.actions == ctx.gold.actions) continue;
    if (!execute(ctx.maze, traj, ctx.max_steps).reached_goal) continue;
    if (seen.insert(traj.actions).second) out.push_back(std::move(traj));
  }
  return out;
}

Context make_context(std::string id, Maze maze, bool reverse) {
  Context ctx;
  ctx.id = std::move(id);
  auto [instruction, gold] = synthesize_instruction(maze, reverse);
  ctx.maze = std::move(maze);
  ctx.instruction = std::move(instruction);
  ctx.gold = std::move(gold);
  ctx.max_steps = static_cast<int>(ctx.gold.size()) + 2;
  ctx.reversed = reverse;
  return ctx;
}

Dataset generate_dataset(std::uint64_t seed, int n, int k, int n_train_val,
                         int n_test, bool reverse, ExecMode mode) {
  if (n_train_val <= 0 || n_test <= 0) {
    throw std::invalid_argument("split sizes must be positive");
  }
  const int n_train = n_train_val * 4 / 5;
  const int total = n_train_val + n_test;
  std::vector<Context> contexts = map_indexed<Context>(
      static_cast<std::size_t>(total), mode, [&](std::size_t i) {
        const Maze maze = generate_maze(
            mix_seed({seed, stream::kDataset, static_cast<std::uint64_t>(i)}),
            n, k);
        char id[32];
        if (static_cast<int>(i) < n_train) {
          std::snprintf(id, sizeof(id), "train-%04zu", i);
        } else if (static_cast<int>(i) < n_train_val) {
          std::snprintf(id, sizeof(id), "val-%04zu", i - n_train);
        } else {
          std::snprintf(id, sizeof(id), "test-%04zu", i - n_train_val);
        }
        return make_context(id, maze, reverse);
      });

  Dataset ds;
  ds.seed = seed;
  ds.gen = GenParams{n, k, n_train_val, n_test, reverse};
  for (int i = 0; i < total; ++i) {
    if (i < n_train) {
      ds.train.push_back(std::move(contexts[i]));
    } else if (i < n_train_val) {
      ds.val.push_back(std::move(contexts[i]));
    } else {
      ds.test.push_back(std::move(contexts[i]));
    }
  }
  return ds;
}

namespace {

json cell_to_json(Cell c) { return json::array({c.row, c.col}); }

Cell cell_from_json(const json& j) { return Cell{j.at(0), j.at(1)}; }

json context_to_json(const Context& ctx, const std::string& split) {
  json j;
  j["id"] = ctx.id;
  j["split"] = split;
  j["n"] = ctx.maze.side();
  json traps = json::array();
  for (const Cell& t : ctx.maze.traps()) traps.push_back(cell_to_json(t));
  j["traps"] = std::move(traps);
  j["start"] = cell_to_json(ctx.maze.start());
  j["goal"] = cell_to_json(ctx.maze.goal());
  json instr = json::array();
  for (Action a : ctx.instruction) instr.push_back(std::string(name(a)));
  j["instruction"] = std::move(instr);
  json gold = json::array();
  for (Action a : ctx.gold.actions) gold.push_back(index(a));
  j["gold"] = std::move(gold);
  j["max_steps"] = ctx.max_steps;
  j["reversed"] = ctx.reversed;
  return j;
}

Context context_from_json(const json& j) {
  Context ctx;
  ctx.id = j.at("id");
  std::vector<Cell> traps;
  for (const json& t : j.at("traps")) traps.push_back(cell_from_json(t));
  ctx.maze = Maze(j.at("n"), std::move(traps), cell_from_json(j.at("start")),
                  cell_from_json(j.at("goal")));
  for (const json& tok : j.at("instruction")) {
    auto a = parse_action(tok.get<std::string>());
    if (!a) throw std::runtime_error("unknown instruction token");
    ctx.instruction.push_back(*a);
  }
  for (const json& g : j.at("gold")) {
    ctx.gold.actions.push_back(action_from_index(g.get<int>()));
  }
  ctx.max_steps = j.at("max_steps");
  ctx.reversed = j.at("reversed");
  return ctx;
}

}  // namespace

std::string context_to_jsonl(const Context& ctx, const std::string& split) {
  return context_to_json(ctx, split).dump();
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  json header;
  header["format"] = "mazerl.dataset/1";
  header["seed"] = ds.seed;
  header["n"] = ds.gen.n;
  header["k"] = ds.gen.k;
  header["n_train_val"] = ds.gen.n_train_val;
  header["n_test"] = ds.gen.n_test;
  header["reverse"] = ds.gen.reverse;
  out << header.dump() << "\n";
  for (const Context& ctx : ds.train) out << context_to_jsonl(ctx, "train") << "\n";
  for (const Context& ctx : ds.val) out << context_to_jsonl(ctx, "val") << "\n";
  for (const Context& ctx : ds.test) out << context_to_jsonl(ctx, "test") << "\n";
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  Dataset ds;
  std::string line;
  bool saw_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    if (!saw_header && j.contains("format")) {
      saw_header = true;
      ds.seed = j.at("seed");
      ds.gen.n = j.at("n");
      ds.gen.k = j.at("k");
      ds.gen.n_train_val = j.at("n_train_val");
      ds.gen.n_test = j.at("n_test");
      ds.gen.reverse = j.at("reverse");
      continue;
    }
    const std::string split = j.at("split");
    Context ctx = context_from_json(j);
    if (split == "train") {
      ds.train.push_back(std::move(ctx));
    } else if (split == "val") {
      ds.val.push_back(std::move(ctx));
    } else if (split == "test") {
      ds.test.push_back(std::move(ctx));
    } else {
      throw std::runtime_error("unknown split tag: " + split);
    }
  }
  return ds;
}

}  // namespace mazerl
