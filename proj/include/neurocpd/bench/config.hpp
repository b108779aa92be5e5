#pragma once

// Experiment configuration files.
//
// Grammar (one item per line, '#' starts a comment):
//
//   key = value
//   [section]
//   key = value            # stored as "section.key"
//
// Keys are case-sensitive. Values run to the end of the line with
// surrounding whitespace removed. Sections named "variant.<name>" hold
// per-variant overrides used by `compare`.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "neurocpd/error.hpp"

namespace neurocpd::bench {

class ConfigError : public Error {
 public:
  using Error::Error;
};

class Config {
 public:
  Config() = default;

  static Config parse(std::string_view text, const std::string& source = "<string>");
  static Config load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  /// "section.key=value" as given to --set.
  void apply_override(std::string_view assignment);
  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  void erase(const std::string& key) { values_.erase(key); }

  std::optional<std::string> get(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  std::uint64_t get_uint(const std::string& key, std::uint64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  /// Names of the [variant.<name>] sections, sorted.
  std::vector<std::string> variants() const;
  /// Base keys (all non-variant keys) with variant `name`'s keys laid over them.
  Config variant(const std::string& name) const;

  const std::map<std::string, std::string>& entries() const noexcept { return values_; }

  /// Serializes back into the grammar above (sections grouped, keys sorted).
  std::string to_text() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Parses "a..b" (inclusive) or a comma list "a,b,c".
std::vector<std::uint64_t> parse_seeds(std::string_view text);

}  // namespace neurocpd::bench
