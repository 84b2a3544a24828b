#include "hashproctor/config.hpp"

#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "hashproctor/error.hpp"
#include "hashproctor/png_io.hpp"

namespace hashproctor {
namespace {

[[noreturn]] void fail(const std::string& key, const std::string& msg) {
  throw Error(ErrorKind::Config, "'" + key + "': " + msg);
}

KeyValueFile::Value to_value(const toml::node& node, const std::string& key) {
  if (const auto* s = node.as_string()) return s->get();
  if (const auto* b = node.as_boolean()) return b->get();
  if (const auto* i = node.as_integer()) return static_cast<long long>(i->get());
  if (const auto* f = node.as_floating_point()) return f->get();
  if (const auto* a = node.as_array()) {
    std::vector<long long> out;
    for (const auto& item : *a) {
      const auto* i = item.as_integer();
      if (!i) fail(key, "only integer arrays are supported");
      out.push_back(i->get());
    }
    return out;
  }
  fail(key, "unsupported value type");
}

void flatten(const toml::table& table, const std::string& prefix, std::map<std::string, KeyValueFile::Value>& out) {
  for (const auto& [k, node] : table) {
    const std::string key = prefix + std::string(k.str());
    if (const auto* sub = node.as_table()) {
      flatten(*sub, key + ".", out);
    } else {
      out[key] = to_value(node, key);
    }
  }
}

}  // namespace

KeyValueFile KeyValueFile::parse(std::string_view text) {
  toml::table table;
  try {
    table = toml::parse(text);
  } catch (const toml::parse_error& e) {
    const auto& where = e.source().begin;
    throw Error(ErrorKind::Config,
                "line " + std::to_string(where.line) + ": " + std::string(e.description()));
  }
  KeyValueFile out;
  flatten(table, "", out.values_);
  return out;
}

KeyValueFile KeyValueFile::load(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return parse(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::vector<std::string> KeyValueFile::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

namespace {

template <typename T>
std::optional<T> get_as(const std::map<std::string, KeyValueFile::Value>& values, const std::string& key,
                        const char* type) {
  auto it = values.find(key);
  if (it == values.end()) return std::nullopt;
  if (const T* v = std::get_if<T>(&it->second)) return *v;
  throw Error(ErrorKind::Config, "'" + key + "' must be " + type);
}

}  // namespace

std::optional<std::string> KeyValueFile::string(const std::string& key) const {
  return get_as<std::string>(values_, key, "a string");
}

std::optional<long long> KeyValueFile::integer(const std::string& key) const {
  return get_as<long long>(values_, key, "an integer");
}

std::optional<double> KeyValueFile::number(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  if (const auto* i = std::get_if<long long>(&it->second)) return static_cast<double>(*i);
  return get_as<double>(values_, key, "a number");
}

std::optional<bool> KeyValueFile::boolean(const std::string& key) const {
  return get_as<bool>(values_, key, "a boolean");
}

std::optional<std::vector<long long>> KeyValueFile::int_array(const std::string& key) const {
  return get_as<std::vector<long long>>(values_, key, "an integer array");
}

std::string KeyValueFile::dump() const {
  toml::table root;
  for (const auto& [key, value] : values_) {
    toml::table* table = &root;
    std::string_view rest = key;
    for (auto dot = rest.find('.'); dot != std::string_view::npos; dot = rest.find('.')) {
      auto [it, inserted] = table->insert(rest.substr(0, dot), toml::table{});
      table = it->second.as_table();
      if (!table) fail(key, "key is both a value and a section");
      rest.remove_prefix(dot + 1);
    }
    std::visit(
        [&](const auto& v) {
          using T = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<T, std::vector<long long>>) {
            toml::array a;
            for (long long i : v) a.push_back(static_cast<std::int64_t>(i));
            table->insert_or_assign(rest, std::move(a));
          } else if constexpr (std::is_same_v<T, long long>) {
            table->insert_or_assign(rest, static_cast<std::int64_t>(v));
          } else {
            table->insert_or_assign(rest, v);
          }
        },
        value);
  }
  std::ostringstream os;
  os << root << '\n';
  return os.str();
}

}  // namespace hashproctor
