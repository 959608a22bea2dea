#include "mazerl/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace mazerl {

using nlohmann::json;

namespace {

std::string weight_key(int word, int action) {
  std::string key = "w_";
  key += name(action_from_index(word));
  key += "_";
  key += name(action_from_index(action));
  for (char& c : key) c = static_cast<char>(std::tolower(c));
  return key;
}

json phi_to_json(const AuxRewardParams& phi) {
  json j;
  for (int w = 0; w < 4; ++w) {
    for (int a = 0; a < 4; ++a) {
      j[weight_key(w, a)] = phi.w_single[single_index(w, a)];
    }
  }
  j["tie_para"] = phi.tie_para;
  j["tie_cross"] = phi.tie_cross;
  return j;
}

AuxRewardParams phi_from_json(const json& j, RewardMode mode) {
  AuxRewardParams phi;
  for (int w = 0; w < 4; ++w) {
    for (int a = 0; a < 4; ++a) {
      phi.w_single[single_index(w, a)] = j.at(weight_key(w, a));
    }
  }
  phi.tie_para = j.at("tie_para");
  phi.tie_cross = j.at("tie_cross");
  phi.mode = mode;
  return phi;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt,
                     const std::filesystem::path& path) {
  json j;
  j["version"] = ckpt.version;
  j["theta"] = std::vector<double>(ckpt.theta.w.begin(), ckpt.theta.w.end());
  j["phi"] = phi_to_json(ckpt.phi);
  j["reward_mode"] =
      ckpt.phi.mode == RewardMode::Softmax ? "softmax" : "linear";
  j["adam_m"] = ckpt.adam.m;
  j["adam_v"] = ckpt.adam.v;
  j["adam_t"] = ckpt.adam.t;
  j["epoch"] = ckpt.epoch;
  j["seed"] = ckpt.seed;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out << j.dump(2) << "\n";
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  json j;
  in >> j;
  Checkpoint ckpt;
  ckpt.version = j.at("version");
  if (ckpt.version != 1) throw std::runtime_error("unknown checkpoint version");
  const auto theta = j.at("theta").get<std::vector<double>>();
  if (theta.size() != kPolicyDim) {
    throw std::runtime_error("checkpoint has wrong policy dimension");
  }
  std::copy(theta.begin(), theta.end(), ckpt.theta.w.begin());
  const RewardMode mode = j.at("reward_mode") == "softmax"
                              ? RewardMode::Softmax
                              : RewardMode::Linear;
  ckpt.phi = phi_from_json(j.at("phi"), mode);
  ckpt.adam.m = j.at("adam_m").get<std::vector<double>>();
  ckpt.adam.v = j.at("adam_v").get<std::vector<double>>();
  ckpt.adam.t = j.at("adam_t");
  ckpt.epoch = j.at("epoch");
  ckpt.seed = j.at("seed");
  return ckpt;
}

}  // namespace mazerl
