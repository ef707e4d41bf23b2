#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace churngrid::cfg {

// Flat key-value config text: one `key = value` per line, `#` starts a
// comment, blank lines ignored. Keys are unique; order is preserved on write.
class ConfigFile {
 public:
  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  // Required lookup; throws std::runtime_error when the key is missing.
  const std::string& get(const std::string& key) const;

  const std::vector<std::pair<std::string, std::string>>& items() const { return items_; }
  // Keys that were never read through get/has since load; used to reject
  // misspelled config entries.
  std::vector<std::string> unread_keys() const;

 private:
  std::vector<std::pair<std::string, std::string>> items_;
  mutable std::vector<bool> read_;
};

ConfigFile load_config(const std::filesystem::path& path);
void write_config(const ConfigFile& config, const std::filesystem::path& path);

// Strict scalar parsers; throw std::runtime_error naming the offending key.
int64_t to_i64(const std::string& key, const std::string& value);
uint64_t to_u64(const std::string& key, const std::string& value);
double to_double(const std::string& key, const std::string& value);
std::vector<double> to_double_list(const std::string& key, const std::string& value);

std::string format_double(double value);
std::string format_double_list(const std::vector<double>& values);

}  // namespace churngrid::cfg
