#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "mazerl/env.hpp"
#include "mazerl/features.hpp"

namespace mazerl {

struct BufferEntry {
  Trajectory traj;
  double reward = 0.0;      // reward under the buffer's channel
  FeatureVector features;   // cached count-comparison features
};

// Per-context sets of successful trajectories. Every context of the split is
// registered up front so that empty buffers still count, and iteration order
// is the registration order (deterministic reductions depend on it).
class ExperienceBuffer {
 public:
  static constexpr int kMaxPerContext = 10;

  ExperienceBuffer() = default;
  explicit ExperienceBuffer(std::span<const Context> contexts,
                            int max_per_context = kMaxPerContext);

  // Deduplicates on the action sequence and respects the per-context cap
  // (no eviction). Returns true if the trajectory was added.
  bool insert(const Context& ctx, const Trajectory& traj, double reward);

  bool contains(const std::string& id, const Trajectory& traj) const;

  const std::vector<BufferEntry>& entries(const std::string& id) const;

  const std::vector<std::string>& ids() const { return ids_; }
  std::size_t num_contexts() const { return ids_.size(); }
  std::size_t size(const std::string& id) const { return entries(id).size(); }
  std::size_t total_size() const;

  void save_jsonl(const std::filesystem::path& path) const;
  // Rebuilds rewards and cached features from the owning contexts.
  static ExperienceBuffer load_jsonl(const std::filesystem::path& path,
                                     std::span<const Context> contexts);

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<BufferEntry>> store_;
  int max_per_context_ = kMaxPerContext;
};

}  // namespace mazerl
