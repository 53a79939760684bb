#include "config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace boxctrl::cli {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw ConfigError("line " + std::to_string(line) + ": " + what);
}

// Drops a trailing comment that is not inside a string.
std::string_view strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

bool valid_name(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
  }
  return true;
}

Number parse_number(std::string_view s, int line) {
  std::string text(s);
  std::erase(text, '_');
  if (text.empty()) fail(line, "empty value");
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (*begin == '+') ++begin;
  Number n;
  const auto [ptr, ec] = std::from_chars(begin, end, n.value);
  if (ec != std::errc() || ptr != end || !std::isfinite(n.value)) {
    fail(line, "not a number: '" + std::string(s) + "'");
  }
  n.integral = text.find_first_of(".eEnN") == std::string::npos;
  return n;
}

Value parse_value(std::string_view s, int line) {
  if (s.empty()) fail(line, "missing value");
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"') fail(line, "unterminated string");
    const std::string_view body = s.substr(1, s.size() - 2);
    if (body.find('"') != std::string_view::npos || body.find('\\') != std::string_view::npos) {
      fail(line, "escapes and embedded quotes are not supported");
    }
    return std::string(body);
  }
  if (s == "true") return true;
  if (s == "false") return false;
  if (s.front() == '[') {
    if (s.back() != ']') fail(line, "unterminated array");
    std::vector<Number> items;
    std::string_view body = trim(s.substr(1, s.size() - 2));
    while (!body.empty()) {
      const std::size_t comma = body.find(',');
      const std::string_view item = trim(body.substr(0, comma));
      if (item.empty()) {
        if (comma == std::string_view::npos) break;  // trailing comma
        fail(line, "empty array element");
      }
      items.push_back(parse_number(item, line));
      if (comma == std::string_view::npos) break;
      body = trim(body.substr(comma + 1));
    }
    return items;
  }
  return parse_number(s, line);
}

const char* type_name(const Value& v) {
  switch (v.index()) {
    case 0: return "number";
    case 1: return "string";
    case 2: return "boolean";
    default: return "array";
  }
}

template <typename T>
const T& expect(const Value& v, const std::string& key, const char* wanted) {
  const T* p = std::get_if<T>(&v);
  if (p == nullptr) {
    throw ConfigError("key '" + key + "' must be a " + wanted + ", got " + type_name(v));
  }
  return *p;
}

std::int64_t as_integer(const Number& n, const std::string& key) {
  if (!n.integral || std::abs(n.value) > 9.0e15) {
    throw ConfigError("key '" + key + "' must be an integer");
  }
  return static_cast<std::int64_t>(n.value);
}

}  // namespace

std::uint64_t fnv1a(std::string_view data, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Config Config::parse(std::string_view text) {
  Config cfg;
  cfg.hash_ = fnv1a(text);
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view raw =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    const std::string_view line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "malformed section header");
      const std::string_view name = trim(line.substr(1, line.size() - 2));
      if (!valid_name(name)) fail(line_no, "invalid section name");
      section = std::string(name);
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected 'key = value'");
    const std::string_view key = trim(line.substr(0, eq));
    if (!valid_name(key)) fail(line_no, "invalid key '" + std::string(key) + "'");
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    if (cfg.values_.count(full) != 0) fail(line_no, "duplicate key '" + full + "'");
    cfg.values_.emplace(full, parse_value(trim(line.substr(eq + 1)), line_no));
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void Config::reject_unknown(const std::set<std::string>& allowed) const {
  for (const auto& [key, value] : values_) {
    if (allowed.count(key) == 0) throw ConfigError("unknown key '" + key + "'");
  }
}

const Value* Config::find(const std::string& key) const {
  const auto it = values_.find(key);
  return it == values_.end() ? nullptr : &it->second;
}

double Config::number(const std::string& key, double fallback) const {
  const Value* v = find(key);
  return v == nullptr ? fallback : expect<Number>(*v, key, "number").value;
}

std::int64_t Config::integer(const std::string& key, std::int64_t fallback) const {
  const Value* v = find(key);
  return v == nullptr ? fallback : as_integer(expect<Number>(*v, key, "number"), key);
}

std::string Config::string(const std::string& key, const std::string& fallback) const {
  const Value* v = find(key);
  return v == nullptr ? fallback : expect<std::string>(*v, key, "string");
}

bool Config::boolean(const std::string& key, bool fallback) const {
  const Value* v = find(key);
  return v == nullptr ? fallback : expect<bool>(*v, key, "boolean");
}

std::vector<double> Config::numbers(const std::string& key, std::vector<double> fallback) const {
  const Value* v = find(key);
  if (v == nullptr) return fallback;
  std::vector<double> out;
  for (const Number& n : expect<std::vector<Number>>(*v, key, "array")) out.push_back(n.value);
  return out;
}

std::vector<std::int64_t> Config::integers(const std::string& key,
                                           std::vector<std::int64_t> fallback) const {
  const Value* v = find(key);
  if (v == nullptr) return fallback;
  std::vector<std::int64_t> out;
  for (const Number& n : expect<std::vector<Number>>(*v, key, "array")) {
    out.push_back(as_integer(n, key));
  }
  return out;
}

}  // namespace boxctrl::cli
