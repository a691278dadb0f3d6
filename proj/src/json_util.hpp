#pragma once

// Path-tracking accessors for validating JSON documents.

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "kanele/error.hpp"

namespace kanele::detail {

using nlohmann::json;

inline std::string child(const std::string& path, const std::string& key) {
  return path + "/" + key;
}
inline std::string child(const std::string& path, std::size_t index) {
  return path + "/" + std::to_string(index);
}

inline const json& member(const json& obj, const std::string& path, const char* key) {
  if (!obj.is_object()) throw SchemaError(path.empty() ? "/" : path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(child(path, key), "missing required field");
  return *it;
}

inline const json& array_member(const json& obj, const std::string& path, const char* key) {
  const json& v = member(obj, path, key);
  if (!v.is_array()) throw SchemaError(child(path, key), "expected an array");
  return v;
}

inline double as_double(const json& v, const std::string& path) {
  if (!v.is_number()) throw SchemaError(path, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw SchemaError(path, "expected a finite number");
  return d;
}

inline std::int64_t as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw SchemaError(path, "expected an integer");
  if (v.is_number_unsigned() &&
      v.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    throw SchemaError(path, "integer out of range");
  }
  return v.get<std::int64_t>();
}

inline int as_int_in(const json& v, const std::string& path, std::int64_t lo, std::int64_t hi) {
  const std::int64_t x = as_int(v, path);
  if (x < lo || x > hi) {
    throw SchemaError(path, "value " + std::to_string(x) + " outside [" + std::to_string(lo) +
                                ", " + std::to_string(hi) + "]");
  }
  return static_cast<int>(x);
}

inline double double_member(const json& obj, const std::string& path, const char* key) {
  return as_double(member(obj, path, key), child(path, key));
}

inline int int_member(const json& obj, const std::string& path, const char* key,
                      std::int64_t lo, std::int64_t hi) {
  return as_int_in(member(obj, path, key), child(path, key), lo, hi);
}

inline std::vector<double> double_array(const json& obj, const std::string& path,
                                        const char* key) {
  const json& arr = array_member(obj, path, key);
  std::vector<double> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(as_double(arr[i], child(child(path, key), i)));
  }
  return out;
}

inline std::vector<int> int_array(const json& obj, const std::string& path, const char* key,
                                  std::int64_t lo, std::int64_t hi) {
  const json& arr = array_member(obj, path, key);
  std::vector<int> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    out.push_back(as_int_in(arr[i], child(child(path, key), i), lo, hi));
  }
  return out;
}

inline void expect_version(const json& doc, const char* version) {
  const json& v = member(doc, "", "version");
  if (!v.is_string() || v.get<std::string>() != version) {
    throw SchemaError("/version", std::string("expected \"") + version + "\"");
  }
}

}  // namespace kanele::detail
