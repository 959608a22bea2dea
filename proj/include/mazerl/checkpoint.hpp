#pragma once

#include <filesystem>
#include <optional>

#include "mazerl/features.hpp"
#include "mazerl/objectives.hpp"
#include "mazerl/policy.hpp"

namespace mazerl {

// Versioned training snapshot. Reward parameters serialize as one named
// field per weight (w_<word>_<action>, tie_para, tie_cross).
struct Checkpoint {
  int version = 1;
  PolicyParams theta;
  AuxRewardParams phi;
  AdamState adam;
  int epoch = 0;
  std::uint64_t seed = 0;
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mazerl
