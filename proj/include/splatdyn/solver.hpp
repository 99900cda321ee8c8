// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/collision.hpp"
#include "splatdyn/constraints.hpp"

#include <optional>

namespace splatdyn {

struct SolverConfig {
    double dt = 0.02;
    int substeps = 4;
    int iterations = 8;
    Vec3d gravity{0, -9.8, 0};
    /// Position damping applied toward grab targets each iteration.
    double target_gain = 0.8;
    int fracture_seeds = 6;
    std::size_t min_fragment = 4;
    /// Runs independent loops on the OpenMP pool. Results are identical either way because
    /// every parallel loop writes disjoint data and reductions stay ordered.
    bool deterministic = true;

    void validate() const;
};

/// Damped spring k (anchor - x) - c v acting on the center of mass of `particles`. Integrated
/// implicitly per substep and applied as one common velocity change, so it is stable for any
/// stiffness, damping and grabbed mass.
struct Spring {
    std::vector<std::uint32_t> particles;
    Vec3d anchor = Vec3d::Zero();
    double stiffness = 0;
    double damping = 0;
};

/// Position target for a grabbed particle.
struct Target {
    std::uint32_t particle = 0;
    Vec3d position = Vec3d::Zero();
};

struct FractureEvent {
    std::uint64_t frame = 0;
    std::size_t cluster = 0;      ///< index of the split cluster (reused by the first fragment)
    double force = 0;             ///< peak force that triggered the split, N
    double threshold = 0;
    std::vector<IndexSet> fragments;
    double mass_before = 0, mass_after = 0;
};

struct StepMetrics {
    std::uint64_t frame = 0;
    double step_ms = 0;
    double predict_ms = 0, project_ms = 0, fracture_ms = 0, rotation_ms = 0;
    std::size_t contact_pairs = 0;
    std::size_t degenerate_clusters = 0;
};

class SimulationFault : public std::runtime_error {
public:
    SimulationFault(const std::string& what, std::uint64_t frame) : std::runtime_error(what), frame_(frame) {}
    /// Index of the frame being stepped when the fault was detected.
    std::uint64_t frame() const { return frame_; }

private:
    std::uint64_t frame_;
};

/// Complete physics state owned by one stepping thread.
class World {
public:
    ParticleSet particles;
    ConstraintSet constraints;
    std::optional<SupportPlane> plane;
    std::optional<DistanceField> field;
    SolverConfig config;
    std::vector<Spring> springs;
    std::vector<Target> targets;

    /// Advances one frame of config.dt. Throws SimulationFault on non-finite positions.
    StepMetrics step();

    std::uint64_t frame() const { return frame_; }
    std::uint32_t next_body() const;
    /// Fracture events of the most recent step.
    const std::vector<FractureEvent>& fractures() const { return fractures_; }
    /// Every fracture event since construction.
    const std::vector<FractureEvent>& fracture_history() const { return history_; }

    /// Adds `impulse` (N s) spread over the particles of `object` as a velocity change.
    void apply_impulse(std::uint32_t object, const Vec3d& impulse);

    /// Recomputes per-particle rotations from the current configuration.
    void update_rotations();

private:
    void ensure_coloring();
    void ensure_cluster_coloring();

    std::uint64_t frame_ = 0;
    std::vector<std::vector<std::uint32_t>> colors_;
    std::size_t colored_count_ = std::size_t(-1);
    std::vector<std::vector<std::uint32_t>> cluster_colors_;
    std::size_t cluster_colored_count_ = std::size_t(-1);
    std::size_t cluster_colored_events_ = 0;
    std::vector<FractureEvent> fractures_;
    std::vector<FractureEvent> history_;
};

/// Stiffness per iteration so that n iterations compound to k: 1 - (1 - k)^(1/n).
double iteration_stiffness(double k, int iterations);

/// Greedy coloring: constraints of one color share no particle. Colors hold constraint indices.
std::vector<std::vector<std::uint32_t>> color_constraints(const std::vector<DistanceConstraint>& constraints,
                                                          std::size_t particle_count);

/// Greedy coloring of shape-matching clusters by shared members.
std::vector<std::vector<std::uint32_t>> color_clusters(const std::vector<ShapeCluster>& clusters,
                                                       std::size_t particle_count);

/// Moves both ends toward the rest length in proportion to inverse mass, scaled by `stiffness`.
void project_distance_constraint(ParticleSet& particles, const DistanceConstraint& c, double stiffness);

} // namespace splatdyn
