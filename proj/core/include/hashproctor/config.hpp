#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace hashproctor {

/// TOML file flattened to dotted keys ("section.key"). Values are strings,
/// booleans, integers, floats and flat integer arrays.
class KeyValueFile {
 public:
  using Value = std::variant<std::string, bool, long long, double, std::vector<long long>>;

  static KeyValueFile parse(std::string_view text);
  static KeyValueFile load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return values_.contains(key); }
  std::vector<std::string> keys() const;

  std::optional<std::string> string(const std::string& key) const;
  std::optional<long long> integer(const std::string& key) const;
  /// Integers are accepted where a float is expected.
  std::optional<double> number(const std::string& key) const;
  std::optional<bool> boolean(const std::string& key) const;
  std::optional<std::vector<long long>> int_array(const std::string& key) const;

  void set(const std::string& key, Value value) { values_[key] = std::move(value); }
  std::string dump() const;

 private:
  std::map<std::string, Value> values_;
};

}  // namespace hashproctor
