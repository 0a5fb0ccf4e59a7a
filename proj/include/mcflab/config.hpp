#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcflab/expr.hpp"
#include "mcflab/grid.hpp"

namespace mcflab {

/// Invalid or missing configuration. `field()` is "section.key", or empty
/// when the problem is not tied to one field.
class ConfigError : public std::runtime_error {
public:
  ConfigError(const std::string& field, const std::string& message);
  [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
  std::string field_;
};

/// INI experiment configuration with typed, recorded lookups.
///
/// Every getter takes "section.key". Values read (including defaults) are
/// recorded for the report's input echo, and `reject_unread()` flags keys that
/// no getter asked for.
class Config {
public:
  static Config from_file(const std::filesystem::path& path);
  static Config from_string(const std::string& text, const std::string& origin = "<string>");

  [[nodiscard]] bool has(const std::string& key) const;
  [[nodiscard]] const std::string& origin() const noexcept { return origin_; }

  std::string text(const std::string& key) const;
  std::string text(const std::string& key, const std::string& fallback) const;
  double real(const std::string& key) const;
  double real(const std::string& key, double fallback) const;
  int integer(const std::string& key) const;
  int integer(const std::string& key, int fallback) const;
  bool flag(const std::string& key, bool fallback) const;
  /// Comma-separated numbers.
  std::vector<double> reals(const std::string& key) const;
  std::vector<double> reals(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<int> integers(const std::string& key) const;
  std::vector<int> integers(const std::string& key, const std::vector<int>& fallback) const;
  /// Semicolon-separated strings (expressions may contain commas).
  std::vector<std::string> texts(const std::string& key) const;
  std::vector<std::string> texts(const std::string& key, const std::vector<std::string>& fallback) const;
  /// One of `choices`.
  std::string choice(const std::string& key, const std::string& fallback,
                     const std::vector<std::string>& choices) const;

  /// Parsed expression in dimension n; parse errors name the field.
  Expr expr(const std::string& key, int n) const;
  Expr expr(const std::string& key, const std::string& fallback, int n) const;
  /// n semicolon-separated components; zero field when absent.
  AmbientField field(const std::string& key, int n) const;
  AmbientField field(const std::string& key, const std::string& fallback, int n) const;

  /// Throws ConfigError naming `key` unless `ok`.
  static void require(bool ok, const std::string& key, const std::string& message);

  /// Throws on the first key that was present but never read.
  void reject_unread() const;
  /// Values read so far, grouped by section.
  [[nodiscard]] nlohmann::json echo() const;

private:
  std::string raw(const std::string& key) const;
  void record(const std::string& key, nlohmann::json value) const;
  std::map<std::string, std::string> values_;  // "section.key" -> text
  std::string origin_;
  mutable std::set<std::string> read_;
  mutable nlohmann::json echo_ = nlohmann::json::object();
};

}  // namespace mcflab
