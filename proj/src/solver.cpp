// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/solver.hpp"

#include "splatdyn/contacts.hpp"
#include "splatdyn/fracture.hpp"
#include "splatdyn/polar.hpp"
#include "splatdyn/shape_matching.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

namespace splatdyn {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0)
{
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

} // namespace

void SolverConfig::validate() const
{
    if (!(dt > 0)) throw ArgumentError("dt must be positive");
    if (substeps < 1) throw ArgumentError("substeps must be at least 1");
    if (iterations < 1) throw ArgumentError("iterations must be at least 1");
    if (!(target_gain > 0 && target_gain <= 1)) throw ArgumentError("target gain must lie in (0,1]");
    if (fracture_seeds < 2) throw ArgumentError("fracture needs at least 2 seeds");
}

double iteration_stiffness(double k, int iterations)
{
    k = std::clamp(k, 0.0, 1.0);
    if (k >= 1) return 1;
    return 1 - std::pow(1 - k, 1.0 / double(std::max(iterations, 1)));
}

std::vector<std::vector<std::uint32_t>> color_constraints(const std::vector<DistanceConstraint>& constraints,
                                                          std::size_t particle_count)
{
    std::vector<std::vector<std::uint32_t>> colors;
    // used[c] holds per-particle marks of color c.
    std::vector<std::vector<char>> used;
    for (std::uint32_t ci = 0; ci < constraints.size(); ++ci) {
        const auto& c = constraints[ci];
        std::size_t color = 0;
        while (color < colors.size() && (used[color][c.i] || used[color][c.j])) ++color;
        if (color == colors.size()) {
            colors.emplace_back();
            used.emplace_back(particle_count, 0);
        }
        colors[color].push_back(ci);
        used[color][c.i] = used[color][c.j] = 1;
    }
    return colors;
}

std::vector<std::vector<std::uint32_t>> color_clusters(const std::vector<ShapeCluster>& clusters,
                                                       std::size_t particle_count)
{
    std::vector<std::vector<std::uint32_t>> colors;
    std::vector<std::vector<char>> used;
    for (std::uint32_t ci = 0; ci < clusters.size(); ++ci) {
        const auto& members = clusters[ci].members;
        std::size_t color = 0;
        auto clash = [&](std::size_t c) {
            return std::any_of(members.begin(), members.end(), [&](auto m) { return used[c][m] != 0; });
        };
        while (color < colors.size() && clash(color)) ++color;
        if (color == colors.size()) {
            colors.emplace_back();
            used.emplace_back(particle_count, 0);
        }
        colors[color].push_back(ci);
        for (auto m : members) used[color][m] = 1;
    }
    return colors;
}

void project_distance_constraint(ParticleSet& p, const DistanceConstraint& c, double stiffness)
{
    const double wi = p.inv_mass[c.i], wj = p.inv_mass[c.j];
    const double w = wi + wj;
    if (w <= 0) return;
    const Vec3d d = p.position[c.i] - p.position[c.j];
    const double len = d.norm();
    if (len < 1e-12) return;
    const Vec3d corr = stiffness * (len - c.rest_length) / (len * w) * d;
    p.position[c.i] -= wi * corr;
    p.position[c.j] += wj * corr;
}

std::uint32_t World::next_body() const
{
    std::uint32_t b = 0;
    for (auto x : particles.body) b = std::max(b, x + 1);
    return b;
}

void World::ensure_coloring()
{
    if (colored_count_ == constraints.distance.size()) return;
    colors_ = color_constraints(constraints.distance, particles.size());
    colored_count_ = constraints.distance.size();
}

void World::ensure_cluster_coloring()
{
    if (cluster_colored_count_ == constraints.clusters.size() && cluster_colored_events_ == history_.size()) return;
    cluster_colors_ = color_clusters(constraints.clusters, particles.size());
    cluster_colored_count_ = constraints.clusters.size();
    cluster_colored_events_ = history_.size();
}

void World::apply_impulse(std::uint32_t object, const Vec3d& impulse)
{
    double total = 0;
    for (std::size_t i = 0; i < particles.size(); ++i)
        if (particles.object[i] == object) total += particles.mass(i);
    if (total <= 0) throw ArgumentError("impulse target object " + std::to_string(object) + " has no mobile particles");
    const Vec3d dv = impulse / total;
    for (std::size_t i = 0; i < particles.size(); ++i)
        if (particles.object[i] == object && particles.inv_mass[i] > 0) particles.velocity[i] += dv;
}

void World::update_rotations()
{
    const std::size_t n = particles.size();
    std::vector<int> owner(n, -1);
    for (std::size_t c = 0; c < constraints.clusters.size(); ++c)
        if (constraints.clusters[c].rigid)
            for (auto m : constraints.clusters[c].members) owner[m] = int(c);

    const bool parallel = !config.deterministic;
#pragma omp parallel for schedule(static) if (parallel)
    for (std::ptrdiff_t si = 0; si < std::ptrdiff_t(n); ++si) {
        const auto i = std::size_t(si);
        switch (particles.phase[i]) {
        case Phase::Rigid:
            if (owner[i] >= 0) particles.rotation[i] = constraints.clusters[std::size_t(owner[i])].rotation;
            break;
        case Phase::Deformable: {
            if (i >= constraints.adjacency.size()) break;
            Mat3d a = Mat3d::Zero();
            for (auto j : constraints.adjacency[i])
                a.noalias() += (particles.position[j] - particles.position[i]) *
                               (particles.rest[j] - particles.rest[i]).transpose();
            if (is_rank_deficient(a)) break;
            Quatd q = particles.rotation[i];
            extract_rotation(a, q);
            particles.rotation[i] = q;
            break;
        }
        case Phase::Granular:
        case Phase::Projectile: particles.rotation[i] = Quatd::Identity(); break;
        }
    }
}

StepMetrics World::step()
{
    config.validate();
    const auto t_start = Clock::now();
    StepMetrics metrics;
    metrics.frame = frame_;
    fractures_.clear();

    const std::size_t n = particles.size();
    const double dts = config.dt / config.substeps;
    const int iters = config.iterations;
    const bool parallel = !config.deterministic;
    ensure_coloring();
    if (parallel) ensure_cluster_coloring();

    std::vector<Vec3d> external(n, Vec3d::Zero());
    std::vector<double> stress(n, 0.0);
    for (auto& c : constraints.clusters) c.peak_force = 0;
    const double rmax = n ? *std::max_element(particles.radius.begin(), particles.radius.end()) : 0.0;
    std::vector<double> distance_k(constraints.distance.size()), cluster_k(constraints.clusters.size());
    for (std::size_t c = 0; c < distance_k.size(); ++c)
        distance_k[c] = iteration_stiffness(constraints.distance[c].stiffness, iters);
    for (std::size_t c = 0; c < cluster_k.size(); ++c)
        cluster_k[c] = iteration_stiffness(constraints.clusters[c].stiffness, iters);

    for (int sub = 0; sub < config.substeps; ++sub) {
        auto t0 = Clock::now();
        for (const auto& s : springs) {
            double mass = 0;
            Vec3d x = Vec3d::Zero(), v = Vec3d::Zero();
            for (auto i : s.particles) {
                const double m = particles.mass(i);
                mass += m;
                x += m * particles.position[i];
                v += m * particles.velocity[i];
            }
            if (mass <= 0) continue;
            x /= mass;
            v /= mass;
            // Backward Euler on the center of mass: M (v' - v) = dts (k (a - x - dts v') - c v').
            const Vec3d v_new = (mass * v + dts * s.stiffness * (s.anchor - x)) /
                                (mass + dts * s.damping + dts * dts * s.stiffness);
            const Vec3d dv = v_new - v;
            for (auto i : s.particles)
                if (particles.inv_mass[i] > 0) particles.velocity[i] += dv;
        }
        double vmax = 0;
        for (std::size_t i = 0; i < n; ++i) {
            particles.previous[i] = particles.position[i];
            if (particles.inv_mass[i] == 0) {
                particles.velocity[i].setZero();
                continue;
            }
            particles.velocity[i] += dts * config.gravity;
            particles.position[i] += dts * particles.velocity[i];
            vmax = std::max(vmax, particles.velocity[i].norm());
        }
        metrics.predict_ms += ms_since(t0);

        t0 = Clock::now();
        const auto pairs = find_contact_pairs(particles, std::max(2 * vmax * dts, 0.25 * rmax));
        metrics.contact_pairs = std::max(metrics.contact_pairs, pairs.size());
        std::fill(external.begin(), external.end(), Vec3d::Zero());

        for (int it = 0; it < iters; ++it) {
            for (const auto& color : colors_) {
#pragma omp parallel for schedule(static) if (parallel && color.size() > 4096)
                for (std::ptrdiff_t k = 0; k < std::ptrdiff_t(color.size()); ++k) {
                    const auto ci = color[std::size_t(k)];
                    project_distance_constraint(particles, constraints.distance[ci], distance_k[ci]);
                }
            }
            const bool last = it == iters - 1;
            const double rate_gate = last && sub == config.substeps - 1 ? 1.0 : 0.0;
            if (parallel) {
                // Clusters of one color share no particle, so each color is one parallel sweep.
                std::size_t degenerate = 0;
                for (const auto& color : cluster_colors_) {
#pragma omp parallel for schedule(static) reduction(+ : degenerate)
                    for (std::ptrdiff_t k = 0; k < std::ptrdiff_t(color.size()); ++k) {
                        const auto ci = color[std::size_t(k)];
                        auto& c = constraints.clusters[ci];
                        if (project_shape_matching(c, particles, cluster_k[ci], rate_gate * c.plastic_rate).degenerate)
                            ++degenerate;
                    }
                }
                if (last) metrics.degenerate_clusters += degenerate;
            } else {
                for (std::size_t ci = 0; ci < constraints.clusters.size(); ++ci) {
                    auto& c = constraints.clusters[ci];
                    const auto r = project_shape_matching(c, particles, cluster_k[ci], rate_gate * c.plastic_rate);
                    if (last && r.degenerate) ++metrics.degenerate_clusters;
                }
            }
            project_contacts(particles, pairs, &external);
            for (const auto& t : targets) {
                if (t.particle >= n || particles.inv_mass[t.particle] == 0) continue;
                particles.position[t.particle] += config.target_gain * (t.position - particles.position[t.particle]);
            }
            if (plane) collide_plane(particles, *plane, &external);
            if (field) collide_sdf(particles, *field, &external);
        }
        if (plane) collide_plane(particles, *plane, &external);
        if (field) collide_sdf(particles, *field, &external);

        for (std::size_t i = 0; i < n; ++i) {
            particles.velocity[i] = (particles.position[i] - particles.previous[i]) / dts;
            stress[i] += external[i].norm();
        }
        for (auto& c : constraints.clusters) {
            if (!c.fragile) continue;
            Vec3d impulse = Vec3d::Zero();
            for (auto m : c.members) impulse += particles.mass(m) * external[m] / dts;
            c.peak_force = std::max(c.peak_force, impulse.norm() / dts);
        }
        metrics.project_ms += ms_since(t0);
    }

    auto t0 = Clock::now();
    const std::size_t cluster_count = constraints.clusters.size();
    for (std::size_t ci = 0; ci < cluster_count; ++ci) {
        auto& c = constraints.clusters[ci];
        if (!c.fragile || !c.rigid || c.peak_force <= c.force_threshold) continue;
        const auto fragments = grow_fragments(c.members, constraints.adjacency, stress, particles.position,
                                              {config.fracture_seeds, config.min_fragment});
        if (fragments.size() < 2) continue;
        FractureEvent ev;
        ev.frame = frame_;
        ev.cluster = ci;
        ev.force = c.peak_force;
        ev.threshold = c.force_threshold;
        for (auto m : c.members) ev.mass_before += particles.mass(m);
        for (const auto& f : fragments)
            for (auto m : f) ev.mass_after += particles.mass(m);
        ev.fragments = fragments;
        split_cluster(constraints, particles, ci, fragments, next_body());
        fractures_.push_back(ev);
        history_.push_back(std::move(ev));
    }
    metrics.fracture_ms = ms_since(t0);

    t0 = Clock::now();
    update_rotations();
    metrics.rotation_ms = ms_since(t0);

    for (std::size_t i = 0; i < n; ++i) {
        if (!particles.position[i].allFinite() || !particles.velocity[i].allFinite()) {
            throw SimulationFault("non-finite state at particle " + std::to_string(i) + " in frame " +
                                      std::to_string(frame_),
                                  frame_);
        }
    }
    ++frame_;
    metrics.step_ms = ms_since(t_start);
    return metrics;
}

} // namespace splatdyn
