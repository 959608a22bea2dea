#include "mazerl/buffer.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace mazerl {

using nlohmann::json;

ExperienceBuffer::ExperienceBuffer(std::span<const Context> contexts,
                                   int max_per_context)
    : max_per_context_(max_per_context) {
  ids_.reserve(contexts.size());
  store_.resize(contexts.size());
  for (std::size_t i = 0; i < contexts.size(); ++i) {
    ids_.push_back(contexts[i].id);
    index_[contexts[i].id] = i;
  }
}

bool ExperienceBuffer::insert(const Context& ctx, const Trajectory& traj,
                              double reward) {
  auto it = index_.find(ctx.id);
  if (it == index_.end()) {
    index_[ctx.id] = store_.size();
    ids_.push_back(ctx.id);
    store_.emplace_back();
    it = index_.find(ctx.id);
  }
  auto& entries = store_[it->second];
  if (entries.size() >= static_cast<std::size_t>(max_per_context_)) {
    return false;
  }
  for (const BufferEntry& e : entries) {
    if (e.traj == traj) return false;
  }
  entries.push_back(
      BufferEntry{traj, reward, extract_features(ctx.instruction, traj)});
  return true;
}

bool ExperienceBuffer::contains(const std::string& id,
                                const Trajectory& traj) const {
  auto it = index_.find(id);
  if (it == index_.end()) return false;
  for (const BufferEntry& e : store_[it->second]) {
    if (e.traj == traj) return true;
  }
  return false;
}

const std::vector<BufferEntry>& ExperienceBuffer::entries(
    const std::string& id) const {
  static const std::vector<BufferEntry> kEmpty;
  auto it = index_.find(id);
  return it == index_.end() ? kEmpty : store_[it->second];
}

std::size_t ExperienceBuffer::total_size() const {
  std::size_t n = 0;
  for (const auto& entries : store_) n += entries.size();
  return n;
}

void ExperienceBuffer::save_jsonl(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    json j;
    j["id"] = ids_[i];
    json trajs = json::array();
    for (const BufferEntry& e : store_[i]) {
      json actions = json::array();
      for (Action a : e.traj.actions) actions.push_back(index(a));
      trajs.push_back(std::move(actions));
    }
    j["trajectories"] = std::move(trajs);
    out << j.dump() << "\n";
  }
}

ExperienceBuffer ExperienceBuffer::load_jsonl(
    const std::filesystem::path& path, std::span<const Context> contexts) {
  std::unordered_map<std::string, const Context*> by_id;
  for (const Context& ctx : contexts) by_id[ctx.id] = &ctx;

  // The snapshot lists every registered context, including empty ones, so
  // the file defines the buffer's context universe.
  ExperienceBuffer buf;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const std::string id = j.at("id");
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw std::runtime_error("buffer references unknown context " + id);
    }
    buf.index_[id] = buf.store_.size();
    buf.ids_.push_back(id);
    buf.store_.emplace_back();
    for (const json& actions : j.at("trajectories")) {
      Trajectory traj;
      for (const json& a : actions) {
        traj.actions.push_back(action_from_index(a.get<int>()));
      }
      const double r = underspecified_reward(*it->second, traj);
      buf.insert(*it->second, traj, r);
    }
  }
  return buf;
}

}  // namespace mazerl
