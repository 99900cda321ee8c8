// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/analysis.hpp"
#include "splatdyn/binding.hpp"
#include "splatdyn/filling.hpp"
#include "splatdyn/segmentation.hpp"
#include "splatdyn/solver.hpp"

#include <filesystem>
#include <optional>

namespace splatdyn {

struct BundleObject {
    std::uint32_t id = 0;
    MaterialSpec material;
    SplatScene scene; ///< kernels driven by the binding (granules for granular objects)
    std::uint32_t particle_offset = 0;
    std::uint32_t particle_count = 0;
    BindingTable binding;
    double spacing = 0;
    double correction = 1;
    std::optional<FillReport> fill;
};

struct SceneBundle {
    std::string name;
    SplatScene environment;
    std::vector<BundleObject> objects;
    World world;
    nlohmann::json report;

    const BundleObject* find(std::uint32_t id) const;
};

/// A stage of build_bundle failed; stage() names it.
class BuildError : public std::runtime_error {
public:
    BuildError(std::string stage, const std::string& message)
        : std::runtime_error(stage + ": " + message), stage_(std::move(stage))
    {
    }
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

struct BundleInputs {
    std::string name;
    SplatScene scene;
    IdentityClassifier classifier;
    std::vector<CameraView> views;
};

/// Segments each configured object, fills granular ones, generates particles, applies
/// materials, binds kernels and fits the environment collision proxies.
/// `client` answers material queries for objects without an inline "material";
/// `work_dir` receives analysis images when the client needs them.
SceneBundle build_bundle(const BundleInputs& inputs, const nlohmann::json& config, AnalysisClient* client,
                         const std::filesystem::path& work_dir = {});

/// Loads the inputs and material client named by a bundle config file (paths relative to it).
SceneBundle build_bundle(const std::filesystem::path& config_path);

SolverConfig parse_solver_config(const nlohmann::json& j);

/// Moves an object (kernels, particles, rest state and binding rest pose) along the plane
/// normal until no particle sphere penetrates the plane. Returns the distance moved.
/// Resting contact then starts without a spurious impulse.
double place_on_plane(World& world, BundleObject& obj, const SupportPlane& plane);

} // namespace splatdyn
