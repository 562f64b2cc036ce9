#pragma once

// Run configuration: a flat JSON object validated against the selected method.
//
//   {"method": "cdtrl", "mode": "complete", "d1": 4, "d2": 4, "ridge": 1e-6}
//
// Unknown keys, and keys that do not apply to the method, are rejected.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>
#include <string>

#include "json.hpp"
#include "planarcda/error.hpp"
#include "planarcda/models.hpp"

namespace planarcda {

struct RunConfig {
  MethodSpec spec;
  std::uint64_t seed = 0;  // recorded for reproducibility; fits themselves are deterministic
};

namespace detail {

inline std::set<std::string> allowed_keys(Method m) {
  std::set<std::string> keys{"method", "seed", "ridge"};
  const bool two_d = m == Method::twodcca || m == Method::l2dcca || m == Method::cdtrl;
  if (two_d) keys.insert({"d1", "d2", "conv_tol", "max_iter"});
  if (m == Method::cdtrl) keys.insert({"mode", "range_left", "range_right", "null_left", "null_right", "null_tol"});
  if (m == Method::l2dcca) keys.insert("sigma");
  if (m == Method::cca || single_view(m)) keys.insert("width");
  if (single_view(m)) keys.insert("view");
  if (m == Method::pca || m == Method::twodpca) keys.erase("ridge");
  return keys;
}

template <typename T>
T config_value(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ProtocolError(std::string("config: '") + key + "' has the wrong type");
  }
}

inline int positive_int(const nlohmann::json& j, const char* key) {
  const int v = config_value<int>(j, key);
  if (v < 1) throw ProtocolError(std::string("config: '") + key + "' must be >= 1");
  return v;
}

inline double positive_real(const nlohmann::json& j, const char* key) {
  const double v = config_value<double>(j, key);
  if (!(v > 0.0) || !std::isfinite(v)) throw ProtocolError(std::string("config: '") + key + "' must be > 0");
  return v;
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
  if (!j.is_object()) throw ProtocolError("config: expected a JSON object");
  if (!j.contains("method")) throw ProtocolError("config: 'method' is required");
  RunConfig out;
  MethodSpec& s = out.spec;
  s.method = parse_method(detail::config_value<std::string>(j, "method"));

  const auto allowed = detail::allowed_keys(s.method);
  for (const auto& item : j.items()) {
    if (!allowed.count(item.key())) {
      throw ProtocolError("config: key '" + item.key() + "' does not apply to method '" + method_key(s.method) + "'");
    }
  }

  if (j.contains("seed")) out.seed = detail::config_value<std::uint64_t>(j, "seed");
  if (j.contains("d1")) s.solver.d1 = detail::positive_int(j, "d1");
  if (j.contains("d2")) s.solver.d2 = detail::positive_int(j, "d2");
  if (j.contains("max_iter")) s.solver.max_iter = s.cdtrl.max_iter = detail::positive_int(j, "max_iter");
  if (j.contains("conv_tol")) s.solver.conv_tol = s.cdtrl.conv_tol = detail::positive_real(j, "conv_tol");
  if (j.contains("mode")) s.cdtrl.mode = parse_mode(detail::config_value<std::string>(j, "mode"));
  if (j.contains("range_left")) s.cdtrl.range_left = detail::positive_int(j, "range_left");
  if (j.contains("range_right")) s.cdtrl.range_right = detail::positive_int(j, "range_right");
  if (j.contains("null_left")) s.cdtrl.null_left = detail::positive_int(j, "null_left");
  if (j.contains("null_right")) s.cdtrl.null_right = detail::positive_int(j, "null_right");
  if (j.contains("null_tol")) s.cdtrl.null_tol = detail::positive_real(j, "null_tol");
  if (j.contains("sigma")) s.sigma = detail::positive_real(j, "sigma");
  if (j.contains("width")) s.width = detail::positive_int(j, "width");
  if (j.contains("ridge")) {
    const double r = detail::config_value<double>(j, "ridge");
    if (!(r >= 0.0) || !std::isfinite(r)) throw ProtocolError("config: 'ridge' must be >= 0");
    // For CDTRL the ridge applies to the discriminant step; the 2DCCA stage keeps its default.
    if (s.method == Method::cdtrl) {
      s.cdtrl.ridge = r;
    } else if (s.method == Method::twodcca || s.method == Method::l2dcca) {
      s.solver.ridge = r;
    } else {
      s.ridge = r;
    }
  }
  if (j.contains("view")) {
    const auto v = detail::config_value<std::string>(j, "view");
    if (v != "x" && v != "y") throw ProtocolError("config: 'view' must be \"x\" or \"y\"");
    s.view = v == "x" ? View::x : View::y;
  }
  return out;
}

inline RunConfig parse_run_config_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("config: ") + e.what());
  }
  return parse_run_config(j);
}

}  // namespace planarcda
