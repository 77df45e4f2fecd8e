#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nco {

inline constexpr const char* kToolkitVersion = "1.0.0";

std::uint64_t fnv1a64(const void* data, std::size_t len);
std::uint64_t fnv1a64_str(const std::string& s);
std::uint64_t fnv1a64_file(const std::string& path);
std::string hex64(std::uint64_t v);

// Inventory of one run: seeds, effective config (defaults resolved), and a
// content hash for every emitted file. Written last so the hashes cover the
// final bytes.
class RunManifest {
 public:
  RunManifest(std::string out_dir, std::string command);

  void set_seed(const std::string& name, std::uint64_t value);
  void set_effective_config(const std::string& text);
  void add_file(const std::string& path);  // relative to out_dir
  void write() const;

 private:
  std::string out_dir_;
  std::string command_;
  std::string started_;
  std::string config_text_;
  std::vector<std::pair<std::string, std::uint64_t>> seeds_;
  std::vector<std::string> files_;
};

std::string iso8601_utc_now();

}  // namespace nco
