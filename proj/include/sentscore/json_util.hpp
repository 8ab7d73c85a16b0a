#pragma once

// Strict reading of JSON configuration objects: unknown keys and wrong types
// become ConfigError naming the offending path.

#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "sentscore/error.hpp"

namespace sentscore {

inline void require_object(const nlohmann::json& j, std::string_view context) {
  if (!j.is_object()) throw ConfigError(std::string(context) + ": expected a JSON object");
}

inline void reject_unknown_keys(const nlohmann::json& j,
                                std::initializer_list<std::string_view> allowed,
                                std::string_view context) {
  require_object(j, context);
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (auto a : allowed) known = known || a == key;
    if (!known) throw ConfigError(std::string(context) + ": unknown key '" + key + "'");
  }
}

// Leaves `out` untouched when the key is absent.
template <typename T>
void read_optional(const nlohmann::json& j, const char* key, T& out, std::string_view context) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->template get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string(context) + "." + key + ": wrong type (" + it->dump() + ")");
  }
}

}  // namespace sentscore
