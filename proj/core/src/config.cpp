#include "nco/config.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <sstream>

#include "nco/errors.hpp"

namespace nco {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

constexpr std::array kKnownKeys = {
    "problem.kind",
    "problem.size",
    "policy.embed_dim",
    "policy.num_heads",
    "policy.num_encoder_layers",
    "policy.ff_dim",
    "policy.logit_clip",
    "train.alpha",
    "train.use_leader_reward",
    "train.batch_size",
    "train.num_starts",
    "train.steps_main",
    "train.steps_final",
    "train.lr_main",
    "train.lr_final",
    "train.lr_schedule",
    "train.seed",
    "train.report_interval",
    "train.checkpoint_interval",
    "train.threads",
    "train.deterministic",
    "train.probe_instances",
    "train.probe_seed",
    "eval.strategy",
    "eval.k",
    "eval.sgbs_beta",
    "eval.sgbs_gamma",
    "eval.eas_iters_per_sgbs",
    "eval.eas_alpha",
    "eval.eas_lr",
    "eval.time_budget",
    "eval.held_out_count",
    "eval.held_out_seed",
    "eval.num_starts",
};

}  // namespace

void Config::check_known(const std::string& section, const std::string& key, int lineno) {
  const std::string full = section + "." + key;
  if (std::find(kKnownKeys.begin(), kKnownKeys.end(), full) == kKnownKeys.end()) {
    throw ParseError("config line " + std::to_string(lineno) + ": unknown key '" + full + "'");
  }
}

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') {
        throw ParseError("config line " + std::to_string(lineno) + ": malformed section '" + t +
                         "'");
      }
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ParseError("config line " + std::to_string(lineno) + ": expected key = value, got '" +
                       t + "'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    if (!value.empty() && value.front() == '=') {
      throw ParseError("config line " + std::to_string(lineno) + ": malformed value '" + value +
                       "' for key '" + key + "'");
    }
    if (section.empty()) {
      throw ParseError("config line " + std::to_string(lineno) + ": key '" + key +
                       "' outside any [section]");
    }
    check_known(section, key, lineno);
    cfg.values_[section + "." + key] = value;
  }
  return cfg;
}

Config Config::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("config: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

bool Config::has(const std::string& section, const std::string& key) const {
  return values_.count(section + "." + key) > 0;
}

std::string Config::get_str(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
  auto it = values_.find(section + "." + key);
  return it == values_.end() ? fallback : it->second;
}

std::string Config::require_str(const std::string& section, const std::string& key) const {
  auto it = values_.find(section + "." + key);
  if (it == values_.end()) {
    throw ParseError("config: missing required key '" + section + "." + key + "'");
  }
  return it->second;
}

int Config::get_int(const std::string& section, const std::string& key, int fallback) const {
  auto it = values_.find(section + "." + key);
  if (it == values_.end()) return fallback;
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw ParseError("config: key '" + section + "." + key + "' expects an integer, got '" +
                     it->second + "'");
  }
}

double Config::get_double(const std::string& section, const std::string& key,
                          double fallback) const {
  auto it = values_.find(section + "." + key);
  if (it == values_.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (const std::exception&) {
    throw ParseError("config: key '" + section + "." + key + "' expects a number, got '" +
                     it->second + "'");
  }
}

bool Config::get_bool(const std::string& section, const std::string& key, bool fallback) const {
  auto it = values_.find(section + "." + key);
  if (it == values_.end()) return fallback;
  if (it->second == "true" || it->second == "1") return true;
  if (it->second == "false" || it->second == "0") return false;
  throw ParseError("config: key '" + section + "." + key + "' expects true/false, got '" +
                   it->second + "'");
}

std::vector<std::pair<int, double>> Config::get_schedule(const std::string& section,
                                                         const std::string& key) const {
  std::vector<std::pair<int, double>> out;
  auto it = values_.find(section + "." + key);
  if (it == values_.end()) return out;
  std::istringstream ss(it->second);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw ParseError("config: schedule entry '" + item + "' expects step:multiplier");
    }
    try {
      out.emplace_back(std::stoi(trim(item.substr(0, colon))),
                       std::stod(trim(item.substr(colon + 1))));
    } catch (const std::exception&) {
      throw ParseError("config: malformed schedule entry '" + item + "'");
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

void Config::set(const std::string& section, const std::string& key, const std::string& value) {
  check_known(section, key, 0);
  values_[section + "." + key] = value;
}

std::string Config::to_text() const {
  // values_ is an ordered map keyed by "section.key"; emit section headers
  // whenever the prefix changes.
  std::ostringstream out;
  std::string current;
  for (const auto& [full, value] : values_) {
    const auto dot = full.find('.');
    const std::string section = full.substr(0, dot);
    const std::string key = full.substr(dot + 1);
    if (section != current) {
      if (!current.empty()) out << "\n";
      out << "[" << section << "]\n";
      current = section;
    }
    out << key << " = " << value << "\n";
  }
  return out.str();
}

}  // namespace nco
