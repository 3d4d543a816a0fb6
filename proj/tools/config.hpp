#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace kppcli {

/// Bad command line or configuration; maps to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KeySpec {
  std::string_view key;
  std::string_view default_value;  // empty: no default
  std::string_view help;
};

/// Every accepted key with its global default.
const std::vector<KeySpec>& schema();

/// Flat key=value configuration with strict key checking.
///
/// Layers, lowest first: schema defaults, per-command defaults, config file,
/// --set overrides. Keys outside the schema are rejected at every layer.
class Config {
 public:
  explicit Config(std::string command);

  const std::string& command() const { return command_; }

  /// Parses "key = value" lines; '#' starts a comment.
  void load_file(const std::string& file);
  /// "key=value".
  void apply_override(std::string_view assignment);
  void set(const std::string& key, std::string value);

  bool has(const std::string& key) const;
  const std::string& str(const std::string& key) const;
  double num(const std::string& key) const;
  long long integer(const std::string& key) const;
  std::vector<double> list(const std::string& key) const;
  /// Two-element list "lo,hi" with hi > lo.
  std::pair<double, double> range(const std::string& key) const;

  /// Every key with a value, sorted, one "key=value" per line.
  std::string render() const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::string command_;
  std::map<std::string, std::string> values_;
};

/// Locale-independent rendering with 12 significant digits.
std::string fmt(double v);
/// Strict decimal parse of a whole string.
double parse_number(std::string_view text, std::string_view what);

}  // namespace kppcli
