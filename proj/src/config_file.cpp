#include "churngrid/config_file.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace churngrid::cfg {
namespace {

std::string trim(const std::string& s) {
  size_t begin = s.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  size_t end = s.find_last_not_of(" \t");
  return s.substr(begin, end - begin + 1);
}

}  // namespace

void ConfigFile::set(const std::string& key, const std::string& value) {
  for (size_t i = 0; i < items_.size(); ++i) {
    if (items_[i].first == key) {
      items_[i].second = value;
      return;
    }
  }
  items_.emplace_back(key, value);
  read_.push_back(false);
}

bool ConfigFile::has(const std::string& key) const {
  for (size_t i = 0; i < items_.size(); ++i) {
    if (items_[i].first == key) {
      read_[i] = true;
      return true;
    }
  }
  return false;
}

const std::string& ConfigFile::get(const std::string& key) const {
  for (size_t i = 0; i < items_.size(); ++i) {
    if (items_[i].first == key) {
      read_[i] = true;
      return items_[i].second;
    }
  }
  throw std::runtime_error("config: missing key '" + key + "'");
}

std::vector<std::string> ConfigFile::unread_keys() const {
  std::vector<std::string> keys;
  for (size_t i = 0; i < items_.size(); ++i) {
    if (!read_[i]) keys.push_back(items_[i].first);
  }
  return keys;
}

ConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path.string());
  ConfigFile config;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string trimmed = trim(line);
    if (trimmed.empty()) continue;
    const size_t eq = trimmed.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config: expected 'key = value' at line " + std::to_string(line_no) +
                               " of " + path.string());
    }
    const std::string key = trim(trimmed.substr(0, eq));
    const std::string value = trim(trimmed.substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error("config: empty key at line " + std::to_string(line_no) + " of " +
                               path.string());
    }
    if (config.has(key)) {
      throw std::runtime_error("config: duplicate key '" + key + "' at line " +
                               std::to_string(line_no) + " of " + path.string());
    }
    config.set(key, value);
  }
  return config;
}

void write_config(const ConfigFile& config, const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("config: cannot open " + tmp.string());
    for (const auto& [key, value] : config.items()) {
      out << key << " = " << value << "\n";
    }
    if (!out) throw std::runtime_error("config: write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

int64_t to_i64(const std::string& key, const std::string& value) {
  int64_t result = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), result);
  if (ec != std::errc{} || p != value.data() + value.size()) {
    throw std::runtime_error("config: key '" + key + "' is not an integer: '" + value + "'");
  }
  return result;
}

uint64_t to_u64(const std::string& key, const std::string& value) {
  uint64_t result = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), result);
  if (ec != std::errc{} || p != value.data() + value.size()) {
    throw std::runtime_error("config: key '" + key + "' is not an unsigned integer: '" + value +
                             "'");
  }
  return result;
}

double to_double(const std::string& key, const std::string& value) {
  double result = 0.0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), result);
  if (ec != std::errc{} || p != value.data() + value.size()) {
    throw std::runtime_error("config: key '" + key + "' is not a number: '" + value + "'");
  }
  return result;
}

std::vector<double> to_double_list(const std::string& key, const std::string& value) {
  std::vector<double> result;
  size_t pos = 0;
  while (pos <= value.size()) {
    size_t comma = value.find(',', pos);
    if (comma == std::string::npos) comma = value.size();
    std::string field = value.substr(pos, comma - pos);
    // Allow spaces after commas in hand-edited files.
    const size_t b = field.find_first_not_of(" \t");
    if (b == std::string::npos) {
      throw std::runtime_error("config: key '" + key + "' has an empty list element");
    }
    const size_t e = field.find_last_not_of(" \t");
    field = field.substr(b, e - b + 1);
    result.push_back(to_double(key, field));
    pos = comma + 1;
    if (comma == value.size()) break;
  }
  return result;
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string format_double_list(const std::vector<double>& values) {
  std::string out;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i > 0) out += ",";
    out += format_double(values[i]);
  }
  return out;
}

}  // namespace churngrid::cfg
