#pragma once

// JSON form of a ProductMeasure:
//   {"blocks": [{"n": 4, "p": 1.5, "potential": {"lambda": 1, "gamma": 1}, "repeat": 8}],
//    "eps_cutoff": 0.1, "index_sets": [[...], ...], "isotropic": true}
// "repeat", "index_sets" and "isotropic" are optional. Without index_sets the
// J_k are contiguous in block order.

#include <string>
#include <vector>

#include <json.hpp>

#include "sudakov/errors.hpp"
#include "sudakov/measure.hpp"

namespace sudakov {

using Json = nlohmann::json;

namespace detail {
inline const Json& require(const Json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ConfigError(path + "." + key + ": missing required field");
  }
  return obj.at(key);
}

inline double number(const Json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path + ": expected a number");
  return v.get<double>();
}
}  // namespace detail

inline ProductMeasure measure_from_json(const Json& j, const std::string& path = "measure") {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  const double eps = j.contains("eps_cutoff")
                         ? detail::number(j.at("eps_cutoff"), path + ".eps_cutoff")
                         : kDefaultEpsCutoff;
  const auto& blocks_json = detail::require(j, "blocks", path);
  if (!blocks_json.is_array() || blocks_json.empty()) {
    throw ConfigError(path + ".blocks: expected a non-empty array");
  }
  std::vector<BlockSpec> blocks;
  for (std::size_t k = 0; k < blocks_json.size(); ++k) {
    const std::string bp = path + ".blocks[" + std::to_string(k) + "]";
    const auto& b = blocks_json[k];
    const auto& n_json = detail::require(b, "n", bp);
    if (!n_json.is_number_integer() || n_json.get<long long>() < 1) {
      throw ConfigError(bp + ".n: expected a positive integer");
    }
    const double p = detail::number(detail::require(b, "p", bp), bp + ".p");
    Potential pot;
    if (b.contains("potential")) {
      const auto& pj = b.at("potential");
      if (pj.contains("family") && pj.at("family") != "power") {
        throw ConfigError(bp + ".potential.family: only \"power\" is supported");
      }
      if (pj.contains("lambda")) pot.lambda = detail::number(pj.at("lambda"), bp + ".potential.lambda");
      if (pj.contains("gamma")) pot.gamma = detail::number(pj.at("gamma"), bp + ".potential.gamma");
    }
    long long repeat = 1;
    if (b.contains("repeat")) {
      if (!b.at("repeat").is_number_integer() || b.at("repeat").get<long long>() < 1) {
        throw ConfigError(bp + ".repeat: expected a positive integer");
      }
      repeat = b.at("repeat").get<long long>();
    }
    BlockSpec spec;
    try {
      spec = make_block(n_json.get<std::size_t>(), p, pot, eps);
    } catch (const Error& e) {
      throw ConfigError(bp + ": " + e.what());
    }
    for (long long r = 0; r < repeat; ++r) blocks.push_back(spec);
  }
  const bool iso = !j.contains("isotropic") || j.at("isotropic").get<bool>();
  if (iso) {
    for (auto& b : blocks) b = isotropic_scale(b);
  }
  if (j.contains("index_sets")) {
    std::vector<std::vector<std::size_t>> sets;
    try {
      sets = j.at("index_sets").get<std::vector<std::vector<std::size_t>>>();
    } catch (const Json::exception&) {
      throw ConfigError(path + ".index_sets: expected an array of integer arrays");
    }
    return ProductMeasure(std::move(blocks), std::move(sets), eps);
  }
  return ProductMeasure(std::move(blocks), eps);
}

inline Json measure_to_json(const ProductMeasure& m) {
  Json blocks = Json::array();
  bool iso = true;
  for (const auto& b : m.blocks()) {
    blocks.push_back({{"n", b.n},
                      {"p", b.p},
                      {"potential", {{"family", "power"}, {"lambda", b.potential.lambda},
                                     {"gamma", b.potential.gamma}}}});
    if (b.scale == 1.0 && isotropic_scale(b).scale != 1.0) iso = false;
  }
  Json j = {{"blocks", blocks}, {"eps_cutoff", m.eps_cutoff()}, {"isotropic", iso}};
  if (!m.contiguous()) j["index_sets"] = m.index_sets();
  return j;
}

}  // namespace sudakov
