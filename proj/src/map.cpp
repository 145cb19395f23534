#include "lle/map.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "lle/error.hpp"

namespace lle {

namespace {

// Beam colors are tracked in a 32-bit mask.
constexpr int kMaxColors = 32;

std::vector<std::vector<std::string>> tokenize(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  size_t start = 0;
  while (start <= text.size()) {
    size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    std::vector<std::string> tokens;
    size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
      size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
      if (j > i) tokens.emplace_back(line.substr(i, j - i));
      i = j;
    }
    if (!tokens.empty()) rows.push_back(std::move(tokens));
    if (end == text.size()) break;
    start = end + 1;
  }
  return rows;
}

Tile parse_token(const std::string& tok, int row, int col) {
  if (tok == ".") return Tile{TileKind::Floor};
  if (tok == "@") return Tile{TileKind::Wall};
  if (tok == "G") return Tile{TileKind::Gem};
  if (tok == "X") return Tile{TileKind::Exit};
  if (tok[0] == 'S') {
    int id = 0;
    auto [p, ec] = std::from_chars(tok.data() + 1, tok.data() + tok.size(), id);
    if (ec != std::errc{} || p != tok.data() + tok.size() || id < 0)
      throw ParseError("invalid start token '" + tok + "'", row, col);
    Tile t{TileKind::Start};
    t.agent_id = id;
    return t;
  }
  if (tok[0] == 'L') {
    if (tok.size() < 3) throw ParseError("invalid laser token '" + tok + "'", row, col);
    int color = 0;
    auto [p, ec] = std::from_chars(tok.data() + 1, tok.data() + tok.size() - 1, color);
    if (ec != std::errc{} || p != tok.data() + tok.size() - 1 || color < 0)
      throw ParseError("invalid laser color in '" + tok + "'", row, col);
    auto dir = direction_from_char(tok.back());
    if (!dir) throw ParseError("invalid direction in '" + tok + "'", row, col);
    Tile t{TileKind::LaserSource};
    t.laser_color = color;
    t.laser_direction = *dir;
    return t;
  }
  throw ParseError("unknown token '" + tok + "'", row, col);
}

std::string tile_token(const Tile& t) {
  switch (t.kind) {
    case TileKind::Floor: return ".";
    case TileKind::Wall: return "@";
    case TileKind::Gem: return "G";
    case TileKind::Exit: return "X";
    case TileKind::Start: return "S" + std::to_string(t.agent_id);
    case TileKind::LaserSource:
      return "L" + std::to_string(t.laser_color) + std::string(1, direction_char(t.laser_direction));
  }
  return "?";
}

}  // namespace

MapSpec MapSpec::from_grid(std::vector<std::vector<Tile>> tiles) {
  MapSpec m;
  m.height_ = static_cast<int>(tiles.size());
  if (m.height_ == 0) throw ValidationError("map has no rows");
  m.width_ = static_cast<int>(tiles[0].size());
  if (m.width_ == 0) throw ValidationError("map has no columns");
  for (const auto& row : tiles)
    if (static_cast<int>(row.size()) != m.width_)
      throw ValidationError("ragged rows: all rows must have the same width");
  m.tiles_ = std::move(tiles);
  m.gem_index_.assign(static_cast<size_t>(m.width_) * m.height_, -1);

  int max_agent_id = -1;
  std::vector<Position> starts_by_id;
  for (int r = 0; r < m.height_; ++r) {
    for (int c = 0; c < m.width_; ++c) {
      const Tile& t = m.tiles_[r][c];
      Position p{r, c};
      switch (t.kind) {
        case TileKind::Start: {
          if (t.agent_id >= static_cast<int>(starts_by_id.size()))
            starts_by_id.resize(t.agent_id + 1, Position{-1, -1});
          if (starts_by_id[t.agent_id].row != -1)
            throw ValidationError("duplicate start tile S" + std::to_string(t.agent_id));
          starts_by_id[t.agent_id] = p;
          max_agent_id = std::max(max_agent_id, t.agent_id);
          break;
        }
        case TileKind::Exit: m.exits_.push_back(p); break;
        case TileKind::Gem:
          m.gem_index_[r * m.width_ + c] = static_cast<int>(m.gems_.size());
          m.gems_.push_back(p);
          break;
        case TileKind::LaserSource:
          m.sources_.push_back({p, t.laser_color, t.laser_direction});
          break;
        default: break;
      }
    }
  }

  if (max_agent_id < 0) throw ValidationError("map has no start tiles");
  for (int id = 0; id <= max_agent_id; ++id)
    if (id >= static_cast<int>(starts_by_id.size()) || starts_by_id[id].row == -1)
      throw ValidationError("missing start tile S" + std::to_string(id));
  m.starts_ = std::move(starts_by_id);

  if (static_cast<int>(m.exits_.size()) < m.n_agents())
    throw ValidationError("map has " + std::to_string(m.exits_.size()) + " exits for " +
                          std::to_string(m.n_agents()) + " agents");

  for (const auto& src : m.sources_) {
    if (src.color >= kMaxColors)
      throw ValidationError("laser color " + std::to_string(src.color) + " not supported");
    if (src.color >= m.n_agents()) m.unmatched_color_ = true;
  }
  if (m.n_agents() > kMaxColors)
    throw ValidationError("more than " + std::to_string(kMaxColors) + " agents not supported");

  return m;
}

MapSpec parse_map(std::string_view text) {
  auto rows = tokenize(text);
  if (rows.empty()) throw ParseError("empty map text", 0, 0);
  const int width = static_cast<int>(rows[0].size());
  std::vector<std::vector<Tile>> tiles;
  tiles.reserve(rows.size());
  for (int r = 0; r < static_cast<int>(rows.size()); ++r) {
    if (static_cast<int>(rows[r].size()) != width)
      throw ParseError("ragged row: expected " + std::to_string(width) + " tokens, got " +
                           std::to_string(rows[r].size()),
                       r, static_cast<int>(rows[r].size()));
    std::vector<Tile> row;
    row.reserve(width);
    for (int c = 0; c < width; ++c) row.push_back(parse_token(rows[r][c], r, c));
    tiles.push_back(std::move(row));
  }
  return MapSpec::from_grid(std::move(tiles));
}

std::string serialize_map(const MapSpec& map) {
  std::string out;
  for (int r = 0; r < map.height(); ++r) {
    for (int c = 0; c < map.width(); ++c) {
      if (c > 0) out += ' ';
      out += tile_token(map.at({r, c}));
    }
    out += '\n';
  }
  return out;
}

}  // namespace lle
