#pragma once

#include <string>
#include <utility>
#include <vector>

#include "nco/adam.hpp"
#include "nco/policy.hpp"
#include "nco/tensor.hpp"
#include "nlohmann/json.hpp"

namespace nco {

inline constexpr int kCheckpointVersion = 1;
inline constexpr char kCheckpointMagic[9] = "NCOCKPT1";

// Versioned checkpoint: a JSON header (policy/train config snapshot, phase,
// step, rng and optimizer scalars) followed by length-prefixed named tensors,
// 32-bit little-endian. save -> load -> save is byte-identical.
struct Checkpoint {
  nlohmann::json header;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;

  std::string phase() const { return header.value("phase", "main"); }
  std::int64_t step() const { return header.value("step", std::int64_t(0)); }
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Header <-> typed config helpers.
nlohmann::json policy_config_to_json(const PolicyConfig& cfg);
PolicyConfig policy_config_from_json(const nlohmann::json& j);

// Assemble a checkpoint from live training state. Parameter tensors are
// stored under "p.", Adam moments under "m." / "v.".
Checkpoint make_checkpoint(const Policy<float>& policy, const AdamState<float>& adam,
                           nlohmann::json header);

// Restore parameters and optimizer moments in place. Throws ContractError on
// name/shape mismatches (an incompatible policy config is never migrated).
void restore_into(const Checkpoint& ckpt, Policy<float>& policy, AdamState<float>& adam);

}  // namespace nco
