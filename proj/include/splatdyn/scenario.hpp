// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/types.hpp"

#include <filesystem>
#include <limits>
#include <nlohmann/json.hpp>

namespace splatdyn {

enum class ActionType { Spring, Impulse, SpawnProjectile, Drag, Release };

const char* to_string(ActionType t);

/// One timed action. Spring and drag act over [start, end); the others fire once at start.
struct Action {
    ActionType type = ActionType::Release;
    double start = 0;
    double end = std::numeric_limits<double>::infinity();
    std::uint32_t object = 0;
    Vec3d point = Vec3d::Zero();  ///< spring grab point or drag pick point, matched against rest positions
    Vec3d anchor = Vec3d::Zero(); ///< spring world anchor
    double stiffness = 0, damping = 0;
    double radius = 0;            ///< spring grab radius or projectile radius
    Vec3d vector = Vec3d::Zero(); ///< impulse, N s
    double mass = 0;
    Vec3d origin = Vec3d::Zero(), velocity = Vec3d::Zero();
    /// Drag keyframes (time, target); linear in between, clamped outside.
    std::vector<std::pair<double, Vec3d>> path;

    Vec3d path_at(double t) const;
};

struct Scenario {
    std::vector<Action> actions;
};

/// {"actions": [{"type": "spring"|"impulse"|"spawn_projectile"|"drag"|"release", "start": s, ...}]}.
/// Throws ArgumentError on unknown types or decreasing start times.
Scenario parse_scenario(const nlohmann::json& j);
Scenario load_scenario(const std::filesystem::path& path);

} // namespace splatdyn
