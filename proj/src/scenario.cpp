// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/scenario.hpp"

#include <fstream>

namespace splatdyn {
namespace {

Vec3d vec3(const nlohmann::json& a, const std::string& where)
{
    if (!a.is_array() || a.size() != 3) throw ArgumentError(where + " must be an array of 3 numbers");
    return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

} // namespace

const char* to_string(ActionType t)
{
    switch (t) {
    case ActionType::Spring: return "spring";
    case ActionType::Impulse: return "impulse";
    case ActionType::SpawnProjectile: return "spawn_projectile";
    case ActionType::Drag: return "drag";
    case ActionType::Release: return "release";
    }
    return "?";
}

Vec3d Action::path_at(double t) const
{
    if (path.empty()) return Vec3d::Zero();
    if (t <= path.front().first) return path.front().second;
    for (std::size_t i = 1; i < path.size(); ++i) {
        if (t <= path[i].first) {
            const double span = path[i].first - path[i - 1].first;
            const double f = span > 0 ? (t - path[i - 1].first) / span : 1.0;
            return (1 - f) * path[i - 1].second + f * path[i].second;
        }
    }
    return path.back().second;
}

Scenario parse_scenario(const nlohmann::json& j)
{
    Scenario s;
    double last = -std::numeric_limits<double>::infinity();
    std::size_t index = 0;
    for (const auto& a : j.at("actions")) {
        const std::string where = "actions[" + std::to_string(index++) + "]";
        Action act;
        const std::string type = a.at("type").get<std::string>();
        act.start = a.value("start", 0.0);
        if (act.start < last) throw ArgumentError(where + ": start times must be non-decreasing");
        last = act.start;
        if (a.contains("end")) act.end = a["end"].get<double>();
        if (act.end < act.start) throw ArgumentError(where + ": end precedes start");
        if (type == "spring") {
            act.type = ActionType::Spring;
            act.object = a.at("object").get<std::uint32_t>();
            act.point = vec3(a.at("grab"), where + ".grab");
            act.anchor = vec3(a.at("anchor"), where + ".anchor");
            act.stiffness = a.at("stiffness").get<double>();
            act.damping = a.value("damping", 0.0);
            act.radius = a.value("radius", 0.0);
            if (act.stiffness < 0) throw ArgumentError(where + ": stiffness must be non-negative");
        } else if (type == "impulse") {
            act.type = ActionType::Impulse;
            act.object = a.at("object").get<std::uint32_t>();
            act.vector = vec3(a.at("vector"), where + ".vector");
        } else if (type == "spawn_projectile") {
            act.type = ActionType::SpawnProjectile;
            act.radius = a.at("radius").get<double>();
            act.mass = a.at("mass").get<double>();
            act.origin = vec3(a.at("origin"), where + ".origin");
            act.velocity = vec3(a.at("velocity"), where + ".velocity");
            if (!(act.radius > 0 && act.mass > 0)) throw ArgumentError(where + ": radius and mass must be positive");
        } else if (type == "drag") {
            act.type = ActionType::Drag;
            act.object = a.at("object").get<std::uint32_t>();
            act.point = vec3(a.at("pick"), where + ".pick");
            for (const auto& k : a.at("path")) {
                if (!k.is_array() || k.size() != 4) throw ArgumentError(where + ".path entries are [t, x, y, z]");
                act.path.emplace_back(k[0].get<double>(), Vec3d(k[1].get<double>(), k[2].get<double>(), k[3].get<double>()));
            }
            if (act.path.empty()) throw ArgumentError(where + ": drag needs a path");
        } else if (type == "release") {
            act.type = ActionType::Release;
        } else {
            throw ArgumentError(where + ": unknown action type '" + type + "'");
        }
        s.actions.push_back(std::move(act));
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream f(path);
    if (!f) throw ArgumentError("cannot open scenario " + path.string());
    return parse_scenario(nlohmann::json::parse(f));
}

} // namespace splatdyn
