#pragma once

#include <cstdint>
#include <vector>

#include "lle/world.hpp"

namespace lle {

struct EncodingShape {
  int channels = 0;
  int height = 0;
  int width = 0;

  int size() const { return channels * height * width; }

  friend bool operator==(const EncodingShape&, const EncodingShape&) = default;
};

// Channel layout for n agents: [0, n) one layer per agent (1 at its tile),
// [n, 2n) one layer per laser color (1 on covered tiles, -1 at the source),
// then walls+laser sources, remaining gems, exits. Laser colors >= n have no
// layer. Values are always in {-1, 0, 1} and -1 appears only at source cells.
EncodingShape encoding_shape(const MapSpec& map);

// Dense (channels, height, width) grid in row-major order, stored as int8.
class StateEncoding {
 public:
  StateEncoding() = default;
  explicit StateEncoding(EncodingShape shape)
      : shape_(shape), values_(static_cast<size_t>(shape.size()), 0) {}

  const EncodingShape& shape() const { return shape_; }
  int size() const { return shape_.size(); }

  int8_t at(int c, int r, int col) const {
    return values_[(static_cast<size_t>(c) * shape_.height + r) * shape_.width + col];
  }
  int8_t& at(int c, int r, int col) {
    return values_[(static_cast<size_t>(c) * shape_.height + r) * shape_.width + col];
  }

  const int8_t* data() const { return values_.data(); }
  int8_t* data() { return values_.data(); }

  friend bool operator==(const StateEncoding&, const StateEncoding&) = default;

 private:
  EncodingShape shape_;
  std::vector<int8_t> values_;
};

// Snapshot of the world as the network input described above. Dead agents
// leave their layer empty; arrived agents remain visible on their exit tile.
StateEncoding encode_state(const World& world);

}  // namespace lle
