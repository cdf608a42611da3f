#pragma once

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "soblab/dataset.hpp"
#include "soblab/error.hpp"

namespace soblab {

/// Sectioned key-value text:
///
///   # comment
///   [section]
///   key = value
///
/// Every value remembers its line so diagnostics can point at it. A key may repeat only
/// where the caller asks for all occurrences (get_all).
class Config {
 public:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };

  static Config parse(std::istream& in, const std::string& source = "config") {
    Config cfg;
    cfg.source_ = source;
    std::string raw;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      std::string_view line = trim(raw);
      if (const auto hash = line.find('#'); hash != std::string_view::npos) line = trim(line.substr(0, hash));
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']' || line.size() < 3) cfg.fail(line_no, "malformed section header");
        section = std::string(trim(line.substr(1, line.size() - 2)));
        cfg.sections_.insert(section);
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) cfg.fail(line_no, "expected 'key = value'");
      if (section.empty()) cfg.fail(line_no, "key outside of any [section]");
      const std::string key(trim(line.substr(0, eq)));
      if (key.empty()) cfg.fail(line_no, "empty key");
      cfg.entries_[{section, key}].push_back({std::string(trim(line.substr(eq + 1))), line_no});
    }
    return cfg;
  }

  static Config load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::ConfigInvalid, "cannot open config file '" + path + "'");
    return parse(in, path);
  }

  [[nodiscard]] bool has_section(const std::string& section) const { return sections_.count(section) > 0; }

  [[nodiscard]] bool has(const std::string& section, const std::string& key) const {
    return entries_.count({section, key}) > 0;
  }

  /// The single entry for a key; repeated keys are an error here.
  const Entry* find(const std::string& section, const std::string& key) const {
    auto it = entries_.find({section, key});
    if (it == entries_.end()) return nullptr;
    used_.insert({section, key});
    if (it->second.size() > 1) fail(it->second[1].line, "[" + section + "] " + key + ": key given more than once");
    return &it->second.front();
  }

  [[nodiscard]] std::vector<Entry> get_all(const std::string& section, const std::string& key) const {
    auto it = entries_.find({section, key});
    if (it == entries_.end()) return {};
    used_.insert({section, key});
    return it->second;
  }

  [[nodiscard]] std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const {
    const Entry* e = find(section, key);
    return e ? e->value : fallback;
  }

  [[nodiscard]] std::string require_string(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) fail(0, "[" + section + "] " + key + ": required field missing");
    return e->value;
  }

  [[nodiscard]] double get_double(const std::string& section, const std::string& key, double fallback) const {
    const Entry* e = find(section, key);
    return e ? to_double(*e, section, key) : fallback;
  }

  [[nodiscard]] double require_double(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) fail(0, "[" + section + "] " + key + ": required field missing");
    return to_double(*e, section, key);
  }

  [[nodiscard]] long long get_int(const std::string& section, const std::string& key, long long fallback) const {
    const Entry* e = find(section, key);
    return e ? to_int(*e, section, key) : fallback;
  }

  [[nodiscard]] long long require_int(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) fail(0, "[" + section + "] " + key + ": required field missing");
    return to_int(*e, section, key);
  }

  [[nodiscard]] std::uint64_t get_u64(const std::string& section, const std::string& key, std::uint64_t fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    std::uint64_t v = 0;
    const std::string_view s = e->value;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      fail(e->line, "[" + section + "] " + key + ": not an unsigned 64-bit integer: '" + e->value + "'");
    }
    return v;
  }

  [[nodiscard]] bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    if (e->value == "true" || e->value == "1" || e->value == "yes") return true;
    if (e->value == "false" || e->value == "0" || e->value == "no") return false;
    fail(e->line, "[" + section + "] " + key + ": expected true or false");
  }

  [[nodiscard]] std::vector<double> get_list(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) return {};
    return to_list(*e, section, key);
  }

  [[nodiscard]] std::vector<double> to_list(const Entry& e, const std::string& section, const std::string& key) const {
    std::vector<double> out;
    for (auto tok : split(e.value, ',')) {
      out.push_back(to_double(Entry{std::string(tok), e.line}, section, key));
    }
    return out;
  }

  /// Keys present in the file that nobody asked for.
  void reject_unknown() const {
    for (const auto& [k, v] : entries_) {
      if (used_.count(k) == 0) fail(v.front().line, "[" + k.first + "] " + k.second + ": unknown field");
    }
  }

  void reject_unknown(const std::string& section) const {
    for (const auto& [k, v] : entries_) {
      if (k.first == section && used_.count(k) == 0) fail(v.front().line, "[" + k.first + "] " + k.second + ": unknown field");
    }
  }

  [[noreturn]] void fail(std::size_t line, const std::string& message) const {
    throw Error(ErrorKind::ConfigInvalid, source_ + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + message);
  }

  [[nodiscard]] std::size_t line_of(const std::string& section, const std::string& key) const {
    auto it = entries_.find({section, key});
    return it == entries_.end() ? 0 : it->second.front().line;
  }

 private:
  double to_double(const Entry& e, const std::string& section, const std::string& key) const {
    double v = 0.0;
    const std::string_view s = e.value;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      fail(e.line, "[" + section + "] " + key + ": not a number: '" + e.value + "'");
    }
    return v;
  }

  long long to_int(const Entry& e, const std::string& section, const std::string& key) const {
    long long v = 0;
    const std::string_view s = e.value;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      fail(e.line, "[" + section + "] " + key + ": not an integer: '" + e.value + "'");
    }
    return v;
  }

  std::string source_;
  std::set<std::string> sections_;
  std::map<std::pair<std::string, std::string>, std::vector<Entry>> entries_;
  mutable std::set<std::pair<std::string, std::string>> used_;
};

}  // namespace soblab
