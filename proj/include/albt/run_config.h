#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace albt {

enum class ValueType { kString, kInt, kDouble, kBool };

struct KeySpec {
  std::string name;
  ValueType type = ValueType::kString;
  // nullopt: no default, reading it before it is set is a ConfigError.
  std::optional<std::string> default_value;
  std::string help;
};

// Every key the CLI understands.
const std::vector<KeySpec>& run_config_schema();

// Settings merged from a `key = value` file and overrides. Keys are checked
// against the schema and values against their type when they are set.
class RunConfig {
 public:
  RunConfig();

  // `key = value` lines; '#' starts a comment at line start or after
  // whitespace. ConfigError names the line on any problem.
  void merge_text(std::string_view text);
  void merge_file(const std::filesystem::path& path);
  // "key=value".
  void apply_override(std::string_view assignment);
  void set(std::string_view key, std::string value);

  bool has(std::string_view key) const;
  std::string get_string(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  double get_double(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::optional<std::int64_t> get_optional_int(std::string_view key) const;
  std::optional<double> get_optional_double(std::string_view key) const;

  // All keys that have a value, defaults included.
  const std::map<std::string, std::string>& resolved() const { return values_; }

 private:
  const KeySpec& spec(std::string_view key) const;
  const std::string& raw(std::string_view key) const;

  std::map<std::string, std::string> values_;
};

}  // namespace albt
