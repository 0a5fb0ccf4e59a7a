#include "mcflab/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace mcflab {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double to_real(const std::string& key, const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) throw ConfigError(key, "expected a number, got an empty value");
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || errno == ERANGE) throw ConfigError(key, "expected a number, got '" + t + "'");
  if (!std::isfinite(v)) throw ConfigError(key, "value must be finite, got '" + t + "'");
  return v;
}

int to_integer(const std::string& key, const std::string& s) {
  const std::string t = trim(s);
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(t.c_str(), &end, 10);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE || v < -(1L << 30) || v > (1L << 30)) {
    throw ConfigError(key, "expected an integer, got '" + t + "'");
  }
  return static_cast<int>(v);
}

}  // namespace

ConfigError::ConfigError(const std::string& field, const std::string& message)
    : std::runtime_error(field.empty() ? message : field + ": " + message), field_(field) {}

Config Config::from_string(const std::string& text, const std::string& origin) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("", origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  Config c;
  c.origin_ = origin;
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      throw ConfigError(section, "key outside any section");
    }
    for (const auto& [key, value] : body) c.values_[section + "." + key] = trim(value.data());
  }
  return c;
}

Config Config::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return from_string(text.str(), path.string());
}

bool Config::has(const std::string& key) const { return values_.contains(key); }

std::string Config::raw(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(key, "required field missing");
  read_.insert(key);
  return it->second;
}

void Config::record(const std::string& key, nlohmann::json value) const {
  const auto dot = key.find('.');
  echo_[key.substr(0, dot)][key.substr(dot + 1)] = std::move(value);
}

std::string Config::text(const std::string& key) const {
  auto v = raw(key);
  require(!v.empty(), key, "must not be empty");
  record(key, v);
  return v;
}

std::string Config::text(const std::string& key, const std::string& fallback) const {
  return has(key) ? text(key) : (record(key, fallback), fallback);
}

double Config::real(const std::string& key) const {
  const double v = to_real(key, raw(key));
  record(key, v);
  return v;
}

double Config::real(const std::string& key, double fallback) const {
  return has(key) ? real(key) : (record(key, fallback), fallback);
}

int Config::integer(const std::string& key) const {
  const int v = to_integer(key, raw(key));
  record(key, v);
  return v;
}

int Config::integer(const std::string& key, int fallback) const {
  return has(key) ? integer(key) : (record(key, fallback), fallback);
}

bool Config::flag(const std::string& key, bool fallback) const {
  if (!has(key)) {
    record(key, fallback);
    return fallback;
  }
  std::string v = raw(key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char ch) { return std::tolower(ch); });
  bool out = false;
  if (v == "true" || v == "yes" || v == "on" || v == "1") {
    out = true;
  } else if (!(v == "false" || v == "no" || v == "off" || v == "0")) {
    throw ConfigError(key, "expected true or false, got '" + v + "'");
  }
  record(key, out);
  return out;
}

std::vector<double> Config::reals(const std::string& key) const {
  const auto items = split(raw(key), ',');
  require(!items.empty(), key, "expected a comma-separated list of numbers");
  std::vector<double> out;
  for (const auto& s : items) out.push_back(to_real(key, s));
  record(key, out);
  return out;
}

std::vector<double> Config::reals(const std::string& key, const std::vector<double>& fallback) const {
  return has(key) ? reals(key) : (record(key, fallback), fallback);
}

std::vector<int> Config::integers(const std::string& key) const {
  const auto items = split(raw(key), ',');
  require(!items.empty(), key, "expected a comma-separated list of integers");
  std::vector<int> out;
  for (const auto& s : items) out.push_back(to_integer(key, s));
  record(key, out);
  return out;
}

std::vector<int> Config::integers(const std::string& key, const std::vector<int>& fallback) const {
  return has(key) ? integers(key) : (record(key, fallback), fallback);
}

std::vector<std::string> Config::texts(const std::string& key) const {
  auto items = split(raw(key), ';');
  require(!items.empty(), key, "expected a semicolon-separated list");
  for (const auto& s : items) require(!s.empty(), key, "empty list entry");
  record(key, items);
  return items;
}

std::vector<std::string> Config::texts(const std::string& key, const std::vector<std::string>& fallback) const {
  return has(key) ? texts(key) : (record(key, fallback), fallback);
}

std::string Config::choice(const std::string& key, const std::string& fallback,
                           const std::vector<std::string>& choices) const {
  const std::string v = text(key, fallback);
  if (std::find(choices.begin(), choices.end(), v) == choices.end()) {
    std::string list;
    for (const auto& c : choices) list += (list.empty() ? "" : ", ") + c;
    throw ConfigError(key, "unknown value '" + v + "' (expected one of: " + list + ")");
  }
  return v;
}

Expr Config::expr(const std::string& key, int n) const {
  const std::string s = text(key);
  try {
    return Expr::parse(s, n);
  } catch (const ParseError& e) {
    throw ConfigError(key, std::string("cannot parse expression: ") + e.what());
  }
}

Expr Config::expr(const std::string& key, const std::string& fallback, int n) const {
  if (has(key)) return expr(key, n);
  record(key, fallback);
  return Expr::parse(fallback, n);
}

AmbientField Config::field(const std::string& key, int n) const {
  if (!has(key)) {
    record(key, "0");
    return AmbientField::zero(n);
  }
  auto parts = texts(key);
  require(static_cast<int>(parts.size()) == n, key,
          "expected " + std::to_string(n) + " semicolon-separated components, got " + std::to_string(parts.size()));
  try {
    return AmbientField::parse(parts, n);
  } catch (const ParseError& e) {
    throw ConfigError(key, std::string("cannot parse component: ") + e.what());
  }
}

AmbientField Config::field(const std::string& key, const std::string& fallback, int n) const {
  if (has(key)) return field(key, n);
  record(key, fallback);
  return AmbientField::parse(split(fallback, ';'), n);
}

void Config::require(bool ok, const std::string& key, const std::string& message) {
  if (!ok) throw ConfigError(key, message);
}

void Config::reject_unread() const {
  for (const auto& [key, value] : values_) {
    if (!read_.contains(key)) throw ConfigError(key, "unknown field for this experiment");
  }
}

nlohmann::json Config::echo() const { return echo_; }

}  // namespace mcflab
