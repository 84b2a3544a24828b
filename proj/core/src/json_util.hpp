#pragma once

// Private helpers shared by the JSON readers and writers.

#include <json.hpp>

#include <cmath>
#include <optional>
#include <string>

#include "hashproctor/error.hpp"
#include "hashproctor/geometry.hpp"

namespace hashproctor::detail {

using nlohmann::json;

inline int json_int(const json& v, const char* what) {
  if (v.is_number_integer()) return v.get<int>();
  if (v.is_number_float()) return static_cast<int>(std::lround(v.get<double>()));
  throw Error(ErrorKind::Parse, std::string(what) + " must be a number");
}

inline BoundingBox json_box(const json& v) {
  if (!v.is_array() || v.size() != 4) throw Error(ErrorKind::Parse, "box must be [x,y,w,h]");
  BoundingBox b{json_int(v[0], "box x"), json_int(v[1], "box y"), json_int(v[2], "box w"), json_int(v[3], "box h")};
  if (b.w < 1 || b.h < 1) throw Error(ErrorKind::Parse, "box width and height must be at least 1");
  return b;
}

inline json box_json(const BoundingBox& b) { return json::array({b.x, b.y, b.w, b.h}); }

/// Accepts [x,y] or [x,y,z]; depth is dropped.
inline LandmarkSet json_landmarks(const json& v) {
  if (!v.is_array()) throw Error(ErrorKind::Parse, "landmarks must be an array of points");
  LandmarkSet out;
  out.reserve(v.size());
  for (const auto& p : v) {
    if (!p.is_array() || p.size() < 2 || p.size() > 3 || !p[0].is_number() || !p[1].is_number()) {
      throw Error(ErrorKind::Parse, "landmark must be [x,y] or [x,y,z]");
    }
    out.push_back({p[0].get<double>(), p[1].get<double>()});
  }
  return out;
}

inline json point_json(const Point& p) {
  // Integral coordinates are written as integers to keep files compact.
  auto coord = [](double v) -> json {
    if (v == std::floor(v) && std::abs(v) < 1e15) return static_cast<long long>(v);
    return v;
  };
  return json::array({coord(p.x), coord(p.y)});
}

inline json landmarks_json(const LandmarkSet& pts) {
  json arr = json::array();
  for (const auto& p : pts) arr.push_back(point_json(p));
  return arr;
}

}  // namespace hashproctor::detail
