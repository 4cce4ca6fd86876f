/*
 * Copyright 2026 The plfm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <json.hpp>

#include <map>
#include <set>
#include <string>

#include "plfm/errors.hpp"
#include "plfm/kernels.hpp"

namespace plfm {

using json = nlohmann::json;

inline json kernel_to_json(const KernelSpec& k) {
  auto pack = [](const char* variant, std::map<std::string, double> params) {
    return json{{"variant", variant}, {"params", params}};
  };
  return std::visit(
      detail::overloaded{
          [&](const Matern& m) { return pack("Matern", {{"nu", m.nu}, {"sigma", m.sigma}, {"l", m.l}}); },
          [&](const PeriodicMatern& m) {
            return pack("PeriodicMatern",
                        {{"nu", m.nu}, {"sigma", m.sigma}, {"l", m.l}, {"period", m.period}});
          },
          [&](const PeriodicSE& m) { return pack("PeriodicSE", {{"l", m.l}, {"period", m.period}}); },
          [&](const SquaredExponential& m) { return pack("SE", {{"sigma", m.sigma}, {"l", m.l}}); },
          [&](const Constant& m) { return pack("Constant", {{"c", m.c}}); },
          [&](const Cqm& m) { return pack("CQM", {{"sigma", m.sigma}, {"l", m.l}}); },
          [&](const Sqm& m) {
            return pack("SQM", {{"sigma", m.sigma}, {"l", m.l}, {"period", m.period}, {"epoch", m.epoch}});
          },
          [&](const Wqm& m) {
            return pack("WQM", {{"xi0", m.xi0}, {"xi", m.xi}, {"period", m.period}, {"epoch", m.epoch}});
          },
          [&](const NonStatPeriodic& m) {
            return pack("NonStatPeriodic", {{"sigma", m.sigma},
                                            {"l", m.l},
                                            {"period", m.period},
                                            {"alpha", m.alpha},
                                            {"nu", m.nu}});
          },
          [&](const Product& p) {
            return json{{"variant", "Product"},
                        {"left", kernel_to_json(*p.left)},
                        {"right", kernel_to_json(*p.right)}};
          },
          [&](const Callable&) -> json {
            throw InvalidParameter("callable kernels cannot be serialized");
          },
      },
      k.v);
}

namespace detail {

struct ParamReader {
  const json& params;
  std::set<std::string> seen;

  double get(const std::string& name, double fallback, bool required) {
    seen.insert(name);
    if (!params.contains(name)) {
      if (required) throw ConfigError("kernel parameter '" + name + "' missing");
      return fallback;
    }
    const json& v = params.at(name);
    if (!v.is_number()) throw ConfigError("kernel parameter '" + name + "' must be a number");
    return v.get<double>();
  }

  void finish(const std::string& variant) const {
    for (auto it = params.begin(); it != params.end(); ++it)
      if (!seen.count(it.key()))
        throw ConfigError("unknown parameter '" + it.key() + "' for kernel " + variant);
  }
};

}  // namespace detail

inline KernelSpec kernel_from_json(const json& j) {
  if (!j.is_object() || !j.contains("variant") || !j.at("variant").is_string())
    throw ConfigError("kernel must be an object with a string 'variant'");
  std::string variant = j.at("variant").get<std::string>();
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    bool ok = key == "variant" || (variant == "Product" ? (key == "left" || key == "right") : key == "params");
    if (!ok) throw ConfigError("unknown key '" + key + "' in kernel " + variant);
  }
  if (variant == "Product") {
    if (!j.contains("left") || !j.contains("right")) throw ConfigError("Product needs left and right");
    KernelSpec k = product(kernel_from_json(j.at("left")), kernel_from_json(j.at("right")));
    validate(k);
    return k;
  }
  static const json empty = json::object();
  const json& params = j.contains("params") ? j.at("params") : empty;
  if (!params.is_object()) throw ConfigError("kernel params must be an object");
  detail::ParamReader r{params, {}};
  KernelSpec k;
  if (variant == "Matern") {
    k = Matern{r.get("nu", 0.5, false), r.get("sigma", 1, false), r.get("l", 1, true)};
  } else if (variant == "PeriodicMatern") {
    k = PeriodicMatern{r.get("nu", 0.5, false), r.get("sigma", 1, false), r.get("l", 1, true),
                       r.get("period", 1, true)};
  } else if (variant == "PeriodicSE") {
    k = PeriodicSE{r.get("l", 1, true), r.get("period", 1, true)};
  } else if (variant == "SE") {
    k = SquaredExponential{r.get("sigma", 1, false), r.get("l", 1, true)};
  } else if (variant == "Constant") {
    k = Constant{r.get("c", 1, true)};
  } else if (variant == "CQM") {
    k = Cqm{r.get("sigma", 1, false), r.get("l", 1, true)};
  } else if (variant == "SQM") {
    k = Sqm{r.get("sigma", 1, false), r.get("l", 1, true), r.get("period", 1, true), r.get("epoch", 0, false)};
  } else if (variant == "WQM") {
    k = Wqm{r.get("xi0", 1, true), r.get("xi", 1, true), r.get("period", 1, true), r.get("epoch", 0, false)};
  } else if (variant == "NonStatPeriodic") {
    k = NonStatPeriodic{r.get("sigma", 1, false), r.get("l", 1, true), r.get("period", 1, true),
                        r.get("alpha", 0, false), r.get("nu", 1.5, false)};
  } else {
    throw ConfigError("unknown kernel variant '" + variant + "'");
  }
  r.finish(variant);
  validate(k);
  return k;
}

}  // namespace plfm
