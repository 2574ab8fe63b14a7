#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "conslab/experiment.hpp"

namespace conslab {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const std::string payload = trim(line);
    if (payload.empty()) continue;
    const auto eq = payload.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": expected key = value");
    const std::string key = trim(payload.substr(0, eq));
    const std::string value = trim(payload.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(line_no) +
                        ": empty key");
    cfg.set(key, value);
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in)
    throw ConfigError("config file not readable: " + file.string());
  return parse(in);
}

void ExperimentConfig::serialize(std::ostream& out) const {
  for (const auto& [key, value] : entries_) out << key << " = " << value << '\n';
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  for (auto& entry : entries_) {
    if (entry.first == key) {
      entry.second = value;
      if (key == "experiment") experiment_ = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
  if (key == "experiment") experiment_ = value;
}

bool ExperimentConfig::has(const std::string& key) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.first == key; });
}

std::string ExperimentConfig::get_string(const std::string& key,
                                         const std::string& fallback) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  return fallback;
}

int ExperimentConfig::get_int(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  const std::string raw = get_string(key, "");
  try {
    std::size_t used = 0;
    const int value = std::stoi(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return value;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not an integer: " + raw);
  }
}

double ExperimentConfig::get_double(const std::string& key,
                                    double fallback) const {
  if (!has(key)) return fallback;
  const std::string raw = get_string(key, "");
  try {
    std::size_t used = 0;
    const double value = std::stod(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return value;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: " + raw);
  }
}

bool ExperimentConfig::get_flag(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string raw = get_string(key, "");
  if (raw == "on" || raw == "true" || raw == "1") return true;
  if (raw == "off" || raw == "false" || raw == "0") return false;
  throw ConfigError("config key '" + key + "': expected on/off: " + raw);
}

std::uint64_t ExperimentConfig::get_seed(const std::string& key,
                                         std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  const std::string raw = get_string(key, "");
  try {
    std::size_t used = 0;
    const unsigned long long value = std::stoull(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return value;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a seed: " + raw);
  }
}

std::vector<int> ExperimentConfig::get_int_list(
    const std::string& key, std::vector<int> fallback) const {
  if (!has(key)) return fallback;
  const std::string raw = get_string(key, "");
  std::vector<int> values;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      values.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': bad list item: " + item);
    }
  }
  if (values.empty())
    throw ConfigError("config key '" + key + "': empty list");
  return values;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t x = base + 0x9E3779B97F4A7C15ULL * (salt + 1);
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

}  // namespace conslab
