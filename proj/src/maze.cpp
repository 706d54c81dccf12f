#include "ctxfer/maze.hpp"

#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace ctxfer {

MazeStep maze_step(const MazeSpec& spec, int cell, int action) {
  if (action < 0 || action >= MazeSpec::num_actions)
    throw std::invalid_argument("bad-action: maze actions are 0..3");
  if (cell < 0 || cell >= spec.num_states() || spec.is_wall(cell))
    throw std::invalid_argument("maze_step: invalid source cell");
  static constexpr int dr[4] = {0, -1, 0, 1};
  static constexpr int dc[4] = {-1, 0, 1, 0};
  const int r = spec.row_of(cell) + dr[action];
  const int c = spec.col_of(cell) + dc[action];
  MazeStep out;
  if (r < 0 || r >= spec.height || c < 0 || c >= spec.width || spec.is_wall(spec.cell(r, c))) {
    out.next = cell;  // bump: stay put
    out.reward = -0.02;
  } else {
    out.next = spec.cell(r, c);
    out.reward = -0.01;
    if (out.next == spec.goal) {
      out.reward = 1.0;
      out.at_goal = true;
    }
  }
  return out;
}

static void check_reachable(const MazeSpec& m) {
  std::vector<uint8_t> seen(size_t(m.num_states()), 0);
  std::deque<int> q{m.start};
  seen[size_t(m.start)] = 1;
  while (!q.empty()) {
    const int cur = q.front();
    q.pop_front();
    if (cur == m.goal) return;
    for (int a = 0; a < 4; ++a) {
      const int nx = maze_step(m, cur, a).next;
      if (!seen[size_t(nx)]) {
        seen[size_t(nx)] = 1;
        q.push_back(nx);
      }
    }
  }
  throw std::runtime_error("parse_maze: goal not reachable from start");
}

MazeSpec parse_maze(const std::string& text, int rooms_x, int rooms_y, std::string name) {
  MazeSpec m;
  m.rooms_x = rooms_x;
  m.rooms_y = rooms_y;
  m.name = std::move(name);
  std::vector<std::string> rows;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) rows.push_back(line);
  if (rows.empty()) throw std::runtime_error("parse_maze: empty layout");
  m.height = int(rows.size());
  m.width = int(rows[0].size());
  if (rooms_x <= 0 || rooms_y <= 0 || m.width % rooms_x != 0 || m.height % rooms_y != 0)
    throw std::runtime_error("parse_maze: room grid must evenly divide the layout");
  m.wall.assign(size_t(m.num_states()), 0);
  int n_start = 0, n_goal = 0;
  for (int r = 0; r < m.height; ++r) {
    if (int(rows[size_t(r)].size()) != m.width)
      throw std::runtime_error("parse_maze: ragged layout rows");
    for (int c = 0; c < m.width; ++c) {
      switch (rows[size_t(r)][size_t(c)]) {
        case '#': m.wall[size_t(m.cell(r, c))] = 1; break;
        case '.': break;
        case 'S': m.start = m.cell(r, c); ++n_start; break;
        case 'G': m.goal = m.cell(r, c); ++n_goal; break;
        default: throw std::runtime_error("parse_maze: unknown cell character");
      }
    }
  }
  if (n_start != 1 || n_goal != 1)
    throw std::runtime_error("parse_maze: need exactly one S and one G");
  check_reachable(m);
  return m;
}

MazeSpec load_maze_file(const std::string& path, int rooms_x, int rooms_y, std::string name) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_maze_file: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_maze(ss.str(), rooms_x, rooms_y, std::move(name));
}

const std::string& maze30_layout() {
  static const std::string k =
      "##############################\n"
      "#S..#.........##.............#\n"
      "#...#.........##.............#\n"
      "#...#.........##.............#\n"
      "#...#.........###########....#\n"
      "#...#....#....##.............#\n"
      "#...#....#....##.............#\n"
      "#...#....#...................#\n"
      "#...#....#....##.............#\n"
      "#...#....#....##....##########\n"
      "#........#....##.............#\n"
      "#........#....##.............#\n"
      "#........#....##.............#\n"
      "#........#....##.............#\n"
      "#######.##############.#######\n"
      "#######.##############.#######\n"
      "#..........#..##.............#\n"
      "#..........#..##.............#\n"
      "#..........#..##..####.......#\n"
      "#..........#..##.............#\n"
      "#...#######...##.............#\n"
      "#.............##........####.#\n"
      "#............................#\n"
      "#.....#.......##.............#\n"
      "#.....#.......##.###.........#\n"
      "#.....#.......##.......#.....#\n"
      "#.....#.......##.......#.....#\n"
      "#.....#.......##.......#.....#\n"
      "#.....#.......##.......#....G#\n"
      "##############################\n";
  return k;
}

const std::string& maze10_layout() {
  static const std::string k =
      "##########\n"
      "#S..##G..#\n"
      "###.##...#\n"
      "#...####.#\n"
      "#.####...#\n"
      "#...##.###\n"
      "###.##...#\n"
      "#...####.#\n"
      "#........#\n"
      "##########\n";
  return k;
}

MazeSpec make_maze30() { return parse_maze(maze30_layout(), 2, 2, "maze"); }

MazeSpec make_maze10() { return parse_maze(maze10_layout(), 2, 1, "maze10"); }

std::vector<MazeSpec> make_source_mazes(const MazeSpec& target) {
  std::vector<MazeSpec> out;
  for (int i = 0; i < target.num_rooms(); ++i) {
    MazeSpec s = target;
    s.name = target.name + "-room" + std::to_string(i);
    for (int idx = 0; idx < target.num_states(); ++idx) {
      const int r = target.row_of(idx), c = target.col_of(idx);
      const bool border = r == 0 || r == target.height - 1 || c == 0 || c == target.width - 1;
      s.wall[size_t(idx)] = uint8_t(border || (target.is_wall(idx) && target.room_of(idx) == i));
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<double> maze_encode(const MazeSpec& spec, int cell) {
  std::vector<double> v(size_t(spec.height + spec.width), 0.0);
  v[size_t(spec.row_of(cell))] = 1.0;
  v[size_t(spec.height + spec.col_of(cell))] = 1.0;
  return v;
}

State maze_state(const MazeSpec& spec, int cell) {
  (void)spec;
  State s;
  s.index = cell;
  return s;
}

}  // namespace ctxfer
