#include "nco/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "nco/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

namespace nco {

namespace {

template <class I>
void write_pod(std::ostream& out, I v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <class I>
I read_pod(std::istream& in) {
  I v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw ParseError("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("checkpoint: cannot open '" + path + "' for writing");
  out.write(kCheckpointMagic, 8);
  write_pod<std::uint32_t>(out, kCheckpointVersion);
  const std::string header = ckpt.header.dump();
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(header.size()));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    write_pod<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(t.shape.size()));
    for (int d : t.shape) write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    write_pod<std::uint64_t>(out, static_cast<std::uint64_t>(t.data.size() * sizeof(float)));
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  }
  if (!out) throw ParseError("checkpoint: write to '" + path + "' failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("checkpoint: cannot open '" + path + "'");
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw ParseError("checkpoint: bad magic in '" + path + "'");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kCheckpointVersion) {
    throw ParseError("checkpoint: format version " + std::to_string(version) +
                     " unsupported (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const auto header_len = read_pod<std::uint32_t>(in);
  std::string header(header_len, '\0');
  in.read(header.data(), header_len);
  if (!in) throw ParseError("checkpoint: truncated header");

  Checkpoint ckpt;
  try {
    ckpt.header = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: bad header json: ") + e.what());
  }

  const auto ntensors = read_pod<std::uint32_t>(in);
  ckpt.tensors.reserve(ntensors);
  for (std::uint32_t i = 0; i < ntensors; ++i) {
    const auto name_len = read_pod<std::uint16_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto ndim = read_pod<std::uint8_t>(in);
    std::vector<int> shape(ndim);
    for (auto& d : shape) d = static_cast<int>(read_pod<std::uint32_t>(in));
    const auto nbytes = read_pod<std::uint64_t>(in);
    Tensor<float> t(shape);
    if (nbytes != t.data.size() * sizeof(float)) {
      throw ParseError("checkpoint: tensor '" + name + "' byte length mismatch");
    }
    in.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(nbytes));
    if (!in) throw ParseError("checkpoint: truncated tensor '" + name + "'");
    ckpt.tensors.emplace_back(std::move(name), std::move(t));
  }
  return ckpt;
}

nlohmann::json policy_config_to_json(const PolicyConfig& cfg) {
  return nlohmann::json{{"embed_dim", cfg.embed_dim},
                        {"num_heads", cfg.num_heads},
                        {"num_encoder_layers", cfg.num_encoder_layers},
                        {"ff_dim", cfg.ff_dim},
                        {"logit_clip", cfg.logit_clip}};
}

PolicyConfig policy_config_from_json(const nlohmann::json& j) {
  PolicyConfig cfg;
  cfg.embed_dim = j.at("embed_dim").get<int>();
  cfg.num_heads = j.at("num_heads").get<int>();
  cfg.num_encoder_layers = j.at("num_encoder_layers").get<int>();
  cfg.ff_dim = j.at("ff_dim").get<int>();
  cfg.logit_clip = j.at("logit_clip").get<double>();
  cfg.validate();
  return cfg;
}

Checkpoint make_checkpoint(const Policy<float>& policy, const AdamState<float>& adam,
                           nlohmann::json header) {
  Checkpoint ckpt;
  ckpt.header = std::move(header);
  ckpt.header["format_version"] = kCheckpointVersion;
  ckpt.header["policy"] = policy_config_to_json(policy.config());
  ckpt.header["adam_step_count"] = adam.step_count;
  const ParamSet<float>& ps = policy.params();
  for (int i = 0; i < ps.size(); ++i) ckpt.tensors.emplace_back("p." + ps.name(i), ps.tensor(i));
  for (int i = 0; i < ps.size(); ++i)
    ckpt.tensors.emplace_back("m." + ps.name(i), adam.first_moment[i]);
  for (int i = 0; i < ps.size(); ++i)
    ckpt.tensors.emplace_back("v." + ps.name(i), adam.second_moment[i]);
  return ckpt;
}

void restore_into(const Checkpoint& ckpt, Policy<float>& policy, AdamState<float>& adam) {
  const PolicyConfig stored = policy_config_from_json(ckpt.header.at("policy"));
  if (!(stored == policy.config())) {
    throw ContractError("checkpoint: stored policy config is incompatible with the target "
                        "policy (no silent migration)");
  }
  ParamSet<float>& ps = policy.params();
  if (adam.first_moment.empty()) adam = AdamState<float>::for_params(ps);
  adam.step_count = ckpt.header.value("adam_step_count", std::int64_t(0));

  int restored = 0;
  for (const auto& [name, t] : ckpt.tensors) {
    if (name.size() < 3 || name[1] != '.') {
      throw ParseError("checkpoint: malformed tensor name '" + name + "'");
    }
    const int idx = ps.index_of(name.substr(2));
    if (idx < 0) throw ContractError("checkpoint: unknown tensor '" + name + "'");
    Tensor<float>* dst = nullptr;
    switch (name[0]) {
      case 'p': dst = &ps.tensor(idx); break;
      case 'm': dst = &adam.first_moment[idx]; break;
      case 'v': dst = &adam.second_moment[idx]; break;
      default: throw ParseError("checkpoint: unknown tensor prefix in '" + name + "'");
    }
    if (dst->shape != t.shape) {
      throw ContractError("checkpoint: tensor '" + name + "' shape " +
                          Tensor<float>::shape_str(t.shape) + " does not match " +
                          dst->shape_str());
    }
    dst->data = t.data;
    ++restored;
  }
  if (restored != 3 * ps.size()) {
    throw ContractError("checkpoint: restored " + std::to_string(restored) + " tensors, expected " +
                        std::to_string(3 * ps.size()));
  }
}

}  // namespace nco
