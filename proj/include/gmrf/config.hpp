#ifndef GMRF_CONFIG_HPP_
#define GMRF_CONFIG_HPP_

#include <charconv>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <set>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "gmrf/error.hpp"

namespace gmrf {

struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
};

/// Flat `key = value` text. '#' starts a comment; blank lines are ignored.
/// Typed getters mark keys as used so that leftovers can be rejected.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text) {
    KeyValueConfig cfg;
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
    int line_no = 0;
    while (!text.empty()) {
      const std::size_t nl = text.find('\n');
      std::string_view line = text.substr(0, nl);
      text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
      ++line_no;
      if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
      line = trim(line);
      if (line.empty()) continue;
      const std::size_t eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw FormatError("config.syntax", "line " + std::to_string(line_no) + ": expected key = value");
      }
      const std::string key(trim(line.substr(0, eq)));
      const std::string value(trim(line.substr(eq + 1)));
      if (key.empty() || key.find_first_not_of("abcdefghijklmnopqrstuvwxyz0123456789_-") != std::string::npos) {
        throw FormatError("config.syntax", "line " + std::to_string(line_no) + ": invalid key '" + key + "'");
      }
      if (cfg.find(key)) {
        throw FormatError("config.duplicate_key", "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
      }
      cfg.entries_.push_back({key, value, line_no});
    }
    return cfg;
  }

  static KeyValueConfig load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("io.open", "cannot open config " + path);
    const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return parse(text);
  }

  const std::vector<ConfigEntry>& entries() const { return entries_; }
  bool has(std::string_view key) const { return find(key) != nullptr; }

  std::string get_string(std::string_view key, std::string fallback) {
    const ConfigEntry* e = use(key);
    return e ? e->value : fallback;
  }

  long long get_int(std::string_view key, long long fallback) {
    const ConfigEntry* e = use(key);
    return e ? to_int(*e, e->value) : fallback;
  }

  std::uint64_t get_u64(std::string_view key, std::uint64_t fallback) {
    const ConfigEntry* e = use(key);
    if (!e) return fallback;
    std::uint64_t v = 0;
    const auto r = std::from_chars(e->value.data(), e->value.data() + e->value.size(), v);
    if (r.ec != std::errc{} || r.ptr != e->value.data() + e->value.size()) bad_value(*e, "an unsigned integer");
    return v;
  }

  double get_double(std::string_view key, double fallback) {
    const ConfigEntry* e = use(key);
    return e ? to_double(*e, e->value) : fallback;
  }

  bool get_bool(std::string_view key, bool fallback) {
    const ConfigEntry* e = use(key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "1") return true;
    if (e->value == "false" || e->value == "0") return false;
    bad_value(*e, "true/false");
  }

  std::vector<int> get_int_list(std::string_view key, std::vector<int> fallback) {
    const ConfigEntry* e = use(key);
    if (!e) return fallback;
    std::vector<int> out;
    for (std::string_view item : split(e->value)) out.push_back(static_cast<int>(to_int(*e, item)));
    return out;
  }

  std::vector<double> get_double_list(std::string_view key, std::vector<double> fallback) {
    const ConfigEntry* e = use(key);
    if (!e) return fallback;
    std::vector<double> out;
    for (std::string_view item : split(e->value)) out.push_back(to_double(*e, item));
    return out;
  }

  /// Throws for the first key no getter asked for.
  void reject_unused() const {
    for (const ConfigEntry& e : entries_) {
      if (!used_.contains(e.key)) {
        throw FormatError("config.unknown_key", "line " + std::to_string(e.line) + ": unknown key '" + e.key + "'");
      }
    }
  }

 private:
  static std::string_view trim(std::string_view s) {
    const std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  }

  static std::vector<std::string_view> split(std::string_view s) {
    std::vector<std::string_view> out;
    while (true) {
      const std::size_t comma = s.find(',');
      out.push_back(trim(s.substr(0, comma)));
      if (comma == std::string_view::npos) break;
      s = s.substr(comma + 1);
    }
    return out;
  }

  [[noreturn]] static void bad_value(const ConfigEntry& e, const char* expected) {
    throw FormatError("config.value", "line " + std::to_string(e.line) + ": '" + e.key + "' expects " + expected +
                                          ", got '" + e.value + "'");
  }

  static long long to_int(const ConfigEntry& e, std::string_view s) {
    long long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size()) bad_value(e, "an integer");
    return v;
  }

  static double to_double(const ConfigEntry& e, std::string_view s) {
    double v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size()) bad_value(e, "a number");
    return v;
  }

  const ConfigEntry* find(std::string_view key) const {
    for (const ConfigEntry& e : entries_)
      if (e.key == key) return &e;
    return nullptr;
  }

  const ConfigEntry* use(std::string_view key) {
    used_.insert(std::string(key));
    return find(key);
  }

  std::vector<ConfigEntry> entries_;
  std::set<std::string> used_;
};

}  // namespace gmrf

#endif  // GMRF_CONFIG_HPP_
