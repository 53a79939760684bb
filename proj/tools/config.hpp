#pragma once

// Minimal TOML subset for scenario files:
//
//   # comment
//   [section]
//   key = 1.5            number
//   key = "text"         string
//   key = true           boolean
//   key = [1, 2.5, -3]   flat array of numbers
//
// Keys are addressed as "section.key". Anything else is a parse error.

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace boxctrl::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Number {
  double value = 0.0;
  bool integral = false;
};

using Value = std::variant<Number, std::string, bool, std::vector<Number>>;

class Config {
 public:
  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  /// Throws ConfigError naming the first key outside `allowed`.
  void reject_unknown(const std::set<std::string>& allowed) const;

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const Value* find(const std::string& key) const;

  double number(const std::string& key, double fallback) const;
  std::int64_t integer(const std::string& key, std::int64_t fallback) const;
  std::string string(const std::string& key, const std::string& fallback) const;
  bool boolean(const std::string& key, bool fallback) const;
  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) const;
  std::vector<std::int64_t> integers(const std::string& key,
                                     std::vector<std::int64_t> fallback) const;

  /// FNV-1a 64 of the source text.
  std::uint64_t hash() const noexcept { return hash_; }

 private:
  std::map<std::string, Value> values_;
  std::uint64_t hash_ = 0;
};

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ULL);

}  // namespace boxctrl::cli
