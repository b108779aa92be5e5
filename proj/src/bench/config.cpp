#include "neurocpd/bench/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace neurocpd::bench {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.' || c == '-')) return false;
  return true;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size())
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "' as a number");
  return v;
}

constexpr std::string_view kVariantPrefix = "variant.";

}  // namespace

Config Config::parse(std::string_view text, const std::string& source) {
  Config cfg;
  std::string section;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto where = source + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = std::string(trim(line.substr(1, line.size() - 2)));
      if (!valid_key(section)) throw ConfigError(where + ": bad section name '" + section + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    if (!valid_key(key)) throw ConfigError(where + ": bad key '" + key + "'");
    cfg.values_[section.empty() ? key : section + "." + key] = std::string(trim(line.substr(eq + 1)));
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void Config::set(const std::string& key, const std::string& value) {
  if (!valid_key(key)) throw ConfigError("bad config key '" + key + "'");
  values_[key] = value;
}

void Config::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  set(std::string(trim(assignment.substr(0, eq))), std::string(trim(assignment.substr(eq + 1))));
}

std::optional<std::string> Config::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double Config::get_double(const std::string& key, double fallback) const {
  const auto v = get(key);
  return v ? parse_number<double>(key, *v) : fallback;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  const auto v = get(key);
  return v ? parse_number<std::int64_t>(key, *v) : fallback;
}

std::uint64_t Config::get_uint(const std::string& key, std::uint64_t fallback) const {
  const auto v = get(key);
  return v ? parse_number<std::uint64_t>(key, *v) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "1" || *v == "yes" || *v == "on") return true;
  if (*v == "false" || *v == "0" || *v == "no" || *v == "off") return false;
  throw ConfigError("config key '" + key + "': expected a boolean, got '" + *v + "'");
}

std::vector<std::string> Config::variants() const {
  std::set<std::string> names;
  for (const auto& [k, v] : values_) {
    if (k.rfind(kVariantPrefix, 0) != 0) continue;
    const auto rest = std::string_view(k).substr(kVariantPrefix.size());
    const auto dot = rest.find('.');
    if (dot == std::string_view::npos || dot == 0)
      throw ConfigError("variant key '" + k + "' must look like variant.<name>.<key>");
    names.insert(std::string(rest.substr(0, dot)));
  }
  return {names.begin(), names.end()};
}

Config Config::variant(const std::string& name) const {
  Config out;
  const std::string prefix = std::string(kVariantPrefix) + name + ".";
  for (const auto& [k, v] : values_)
    if (k.rfind(kVariantPrefix, 0) != 0) out.values_[k] = v;
  bool found = false;
  for (const auto& [k, v] : values_)
    if (k.rfind(prefix, 0) == 0) {
      out.values_[k.substr(prefix.size())] = v;
      found = true;
    }
  if (!found) throw ConfigError("no section [variant." + name + "]");
  return out;
}

std::string Config::to_text() const {
  std::ostringstream os;
  std::string current = "\x01";
  for (const auto& [k, v] : values_) {
    const auto dot = k.rfind('.');
    const std::string section = dot == std::string::npos ? "" : k.substr(0, dot);
    const std::string key = dot == std::string::npos ? k : k.substr(dot + 1);
    if (section != current) {
      if (!section.empty()) os << "\n[" << section << "]\n";
      current = section;
    }
    os << key << " = " << v << '\n';
  }
  return os.str();
}

std::vector<std::uint64_t> parse_seeds(std::string_view text) {
  text = trim(text);
  const auto parse_one = [&](std::string_view s) {
    s = trim(s);
    std::uint64_t v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw ConfigError("bad seed list '" + std::string(text) + "'");
    return v;
  };
  std::vector<std::uint64_t> seeds;
  if (const auto dots = text.find(".."); dots != std::string_view::npos) {
    const auto a = parse_one(text.substr(0, dots));
    const auto b = parse_one(text.substr(dots + 2));
    if (b < a) throw ConfigError("bad seed range '" + std::string(text) + "'");
    for (auto s = a; s <= b; ++s) seeds.push_back(s);
    return seeds;
  }
  while (!text.empty()) {
    const auto comma = text.find(',');
    seeds.push_back(parse_one(text.substr(0, comma)));
    text = comma == std::string_view::npos ? std::string_view() : text.substr(comma + 1);
  }
  if (seeds.empty()) throw ConfigError("empty seed list");
  return seeds;
}

}  // namespace neurocpd::bench
