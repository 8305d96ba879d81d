#pragma once

#include <nlohmann/json.hpp>

#include "detfuse/fusion.hpp"
#include "detfuse/fuzzy.hpp"
#include "detfuse/geometry.hpp"

namespace detfuse {

using json = nlohmann::json;

inline json to_json(const AABB& b) {
    return json::array({b.x.lo, b.y.lo, b.x.hi, b.y.hi});
}

inline AABB aabb_from_json(const json& j) {
    if (!j.is_array() || j.size() != 4) {
        throw std::invalid_argument("bbox must be [x_lo, y_lo, x_hi, y_hi]");
    }
    return AABB{j[0].get<double>(), j[1].get<double>(), j[2].get<double>(),
                j[3].get<double>()};
}

inline json to_json(const Detection& d) {
    return json{{"bbox", to_json(d.box)}, {"label", d.label}, {"score", d.score}};
}

inline Detection detection_from_json(const json& j) {
    Detection d;
    d.box = aabb_from_json(j.at("bbox"));
    d.label = j.at("label").get<std::string>();
    d.score = j.value("score", 1.0);
    return d;
}

inline json to_json(const FusionResult& r) {
    json j;
    j["method"] = to_string(r.method);
    j["label"] = r.label;
    j["repaired"] = r.repaired;
    if (r.box) j["bbox"] = to_json(*r.box);
    else j["bbox"] = nullptr;
    if (r.fallback) j["fallback"] = *r.fallback;
    return j;
}

/// Lattice dump: subset bitmask (as decimal string key) -> measure value.
inline json to_json(const FuzzyMeasure& g) {
    json values = json::object();
    for (const auto& [mask, v] : g.values) values[std::to_string(mask)] = v;
    return json{{"n", g.n}, {"values", values}};
}

inline json to_json(const ChainMeasure& g) {
    return json{{"n", g.n}, {"perm", g.perm}, {"chain_values", g.chain_values}};
}

}  // namespace detfuse
