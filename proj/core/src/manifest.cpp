#include "nco/manifest.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

#include "nco/errors.hpp"
#include "nlohmann/json.hpp"

namespace nco {

std::uint64_t fnv1a64(const void* data, std::size_t len) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

std::uint64_t fnv1a64_str(const std::string& s) { return fnv1a64(s.data(), s.size()); }

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("manifest: cannot hash missing file '" + path + "'");
  std::uint64_t h = 0xCBF29CE484222325ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    const auto got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001B3ull;
    }
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string iso8601_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunManifest::RunManifest(std::string out_dir, std::string command)
    : out_dir_(std::move(out_dir)), command_(std::move(command)), started_(iso8601_utc_now()) {}

void RunManifest::set_seed(const std::string& name, std::uint64_t value) {
  seeds_.emplace_back(name, value);
}

void RunManifest::set_effective_config(const std::string& text) { config_text_ = text; }

void RunManifest::add_file(const std::string& path) { files_.push_back(path); }

void RunManifest::write() const {
  nlohmann::json j;
  j["command"] = command_;
  j["code_version"] = kToolkitVersion;
  j["started_utc"] = started_;
  j["finished_utc"] = iso8601_utc_now();
  j["config_hash"] = "fnv1a64:" + hex64(fnv1a64_str(config_text_));
  j["effective_config"] = config_text_;
  nlohmann::json seeds = nlohmann::json::object();
  for (const auto& [k, v] : seeds_) seeds[k] = v;
  j["seeds"] = std::move(seeds);
  nlohmann::json files = nlohmann::json::array();
  for (const auto& rel : files_) {
    const std::string full = out_dir_ + "/" + rel;
    std::ifstream in(full, std::ios::binary | std::ios::ate);
    if (!in) throw ParseError("manifest: emitted file missing: '" + full + "'");
    const auto bytes = static_cast<std::uint64_t>(in.tellg());
    files.push_back({{"path", rel},
                     {"bytes", bytes},
                     {"fnv1a64", hex64(fnv1a64_file(full))}});
  }
  j["files"] = std::move(files);

  std::ofstream out(out_dir_ + "/manifest.json");
  if (!out) throw ParseError("manifest: cannot write to '" + out_dir_ + "'");
  out << j.dump(2) << "\n";
}

}  // namespace nco
