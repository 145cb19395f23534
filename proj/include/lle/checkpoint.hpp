#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "lle/qlearn.hpp"
#include "lle/replay.hpp"
#include "lle/rnd.hpp"

namespace lle {

// Everything needed to rebuild a learner besides the parameter payload.
struct CheckpointMeta {
  std::string map_text;
  Algo algo = Algo::VDN;
  QNetSpec net;
  TrainConfig train;
  std::optional<PERConfig> per;
  int nstep = 1;
  std::optional<RNDConfig> rnd;
  uint64_t global_step = 0;
  uint64_t episodes = 0;
  uint64_t seed = 0;
};

// Binary container: 8-byte magic "LLECKPT1", little-endian u64 length of a
// JSON metadata block, the block itself, then the tensors named by the
// block's manifest as raw little-endian f64 arrays, in manifest order.
// Layout is stable within a container version.
void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     Learner& learner, RND* rnd);

struct LoadedCheckpoint {
  CheckpointMeta meta;
  std::unique_ptr<Learner> learner;
  std::unique_ptr<RND> rnd;  // null when the run had no novelty shaping
};

LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace lle
