#pragma once

#include <string>
#include <vector>

#include "ctxfer/core.hpp"

namespace ctxfer {

// Gridworld with absorbing goal.  Actions: 0=left, 1=up, 2=right, 3=down.
// The grid is partitioned into rooms_x * rooms_y equal rectangular rooms;
// per-room source tasks keep only their own room's walls.
struct MazeSpec {
  int width = 0, height = 0;
  std::vector<uint8_t> wall;  // row-major, 1 = wall
  int start = 0, goal = 0;
  int rooms_x = 2, rooms_y = 1;
  int max_episode_steps = 300;
  std::string name;

  static constexpr int num_actions = 4;
  int num_states() const { return width * height; }
  int cell(int r, int c) const { return r * width + c; }
  int row_of(int idx) const { return idx / width; }
  int col_of(int idx) const { return idx % width; }
  bool is_wall(int idx) const { return wall[size_t(idx)] != 0; }
  int num_rooms() const { return rooms_x * rooms_y; }
  int room_of(int idx) const {
    const int rr = row_of(idx) / (height / rooms_y);
    const int rc = col_of(idx) / (width / rooms_x);
    return rr * rooms_x + rc;
  }
};

struct MazeStep {
  int next = 0;
  double reward = 0.0;
  bool at_goal = false;
};

// One step of the deterministic maze: bumping a wall (or the border) keeps the
// agent in place at -0.02; a legal move costs -0.01; entering the goal pays
// +1.0 and terminates.
MazeStep maze_step(const MazeSpec& spec, int cell, int action);

// Parse a '#'/'.'/'S'/'G' text grid (rows separated by newlines); validates
// rectangular shape, exactly one S and one G, and that G is reachable from S.
MazeSpec parse_maze(const std::string& text, int rooms_x, int rooms_y, std::string name);
MazeSpec load_maze_file(const std::string& path, int rooms_x, int rooms_y, std::string name);

// bundled benchmark layouts
const std::string& maze30_layout();  // 30x30, four rooms (2x2)
const std::string& maze10_layout();  // 10x10, two rooms (2x1)
MazeSpec make_maze30();
MazeSpec make_maze10();

// Per-room source mazes: source i keeps the border plus the target walls that
// lie inside room i; every other room is empty.  Start/goal are shared.
std::vector<MazeSpec> make_source_mazes(const MazeSpec& target);

// Mixture/net input for a discrete cell: row one-hot ++ column one-hot.
std::vector<double> maze_encode(const MazeSpec& spec, int cell);

State maze_state(const MazeSpec& spec, int cell);

}  // namespace ctxfer
