// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/bundle.hpp"
#include "splatdyn/scenario.hpp"

#include <filesystem>

namespace splatdyn {

struct FrameMetrics {
    std::uint64_t frame = 0;
    double step_ms = 0;
    double skin_ms = 0;
    double total_ms = 0;
    double fps = 0; ///< 1000 / total_ms
};

/// Drives a bundle frame by frame: scripted actions, live interaction, stepping and skinning.
/// Not thread-safe; one owner steps it.
class Simulation {
public:
    explicit Simulation(SceneBundle bundle);

    /// Validates object references against the bundle and schedules the actions.
    void set_scenario(Scenario scenario);

    /// Applies actions due at the current time, steps one frame and skins every object.
    FrameMetrics advance();

    std::uint64_t frame() const { return world().frame(); }
    double time() const { return double(frame()) * bundle_.world.config.dt; }

    const SceneBundle& bundle() const { return bundle_; }
    const World& world() const { return bundle_.world; }
    World& world() { return bundle_.world; }

    /// Per-object transform buffers of the last skinning pass (rest pose before the first).
    const std::vector<std::vector<float>>& transforms() const { return transforms_; }
    /// All objects' transform buffers concatenated in bundle order.
    std::vector<float> merged_transforms() const;
    /// Environment plus skinned objects plus one kernel per projectile.
    SplatScene frame_scene() const;

    /// Picks the particle nearest to the ray origin among those within `radius` of the ray
    /// and holds it with a position target. Returns the particle, or nullopt on a miss.
    std::optional<std::uint32_t> grab(const Vec3d& origin, const Vec3d& direction, double radius);
    void drag(const Vec3d& target);
    void release();
    std::uint32_t spawn_projectile(double radius, double mass, const Vec3d& origin, const Vec3d& velocity);

    /// Rigid clusters produced by fracture so far (each event adds fragments - 1).
    std::size_t fragments_created() const;

    /// Skins every object from the current particle state.
    void skin();

private:
    struct ActionState {
        bool started = false;
        bool finished = false;
        std::vector<std::uint32_t> particles;
    };

    void apply_actions(double t);
    std::uint32_t nearest_particle(std::uint32_t object, const Vec3d& point) const;

    SceneBundle bundle_;
    Scenario scenario_;
    std::vector<ActionState> state_;
    std::optional<Target> grab_;
    std::vector<std::vector<float>> transforms_;
    double skin_ms_ = 0;
};

struct HeadlessOptions {
    double duration = 1.0;
    std::filesystem::path out_dir;
    bool write_ply = true;
    bool write_transforms = false;
    int ply_every = 1;
};

struct RunSummary {
    std::uint64_t frames = 0;
    std::vector<FrameMetrics> metrics;
    std::size_t fracture_events = 0;
    std::size_t fragments_created = 0;
};

/// Steps the simulation for `duration` seconds, writing frame_%05d.ply, optional
/// transforms_%05d.bin and metrics.csv into out_dir. A SimulationFault propagates after the
/// frames completed so far are on disk.
RunSummary run_headless(Simulation& sim, const HeadlessOptions& options);

void write_metrics_csv(const std::vector<FrameMetrics>& metrics, const std::filesystem::path& path);

} // namespace splatdyn
