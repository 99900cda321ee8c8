// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/simulation.hpp"

#include "splatdyn/ply.hpp"
#include "splatdyn/synth.hpp"

#include <chrono>
#include <cstdio>
#include <fstream>

namespace splatdyn {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); }

} // namespace

Simulation::Simulation(SceneBundle bundle) : bundle_(std::move(bundle))
{
    bundle_.world.config.validate();
    skin();
}

void Simulation::set_scenario(Scenario scenario)
{
    for (std::size_t i = 0; i < scenario.actions.size(); ++i) {
        const auto& a = scenario.actions[i];
        const bool needs_object = a.type == ActionType::Spring || a.type == ActionType::Impulse || a.type == ActionType::Drag;
        if (needs_object && !bundle_.find(a.object))
            throw ArgumentError("scenario action " + std::to_string(i) + " references unknown object " +
                                std::to_string(a.object));
    }
    scenario_ = std::move(scenario);
    state_.assign(scenario_.actions.size(), {});
}

std::uint32_t Simulation::nearest_particle(std::uint32_t object, const Vec3d& point) const
{
    const BundleObject* o = bundle_.find(object);
    const auto& p = world().particles;
    std::uint32_t best = o->particle_offset;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::uint32_t i = o->particle_offset; i < o->particle_offset + o->particle_count; ++i) {
        const double d = (p.rest[i] - point).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    return best;
}

void Simulation::apply_actions(double t)
{
    World& w = world();
    w.springs.clear();
    w.targets.clear();
    for (std::size_t i = 0; i < scenario_.actions.size(); ++i) {
        const Action& a = scenario_.actions[i];
        ActionState& s = state_[i];
        if (s.finished || t < a.start) continue;
        const bool first = !s.started;
        s.started = true;
        switch (a.type) {
        case ActionType::Impulse:
            w.apply_impulse(a.object, a.vector);
            s.finished = true;
            break;
        case ActionType::SpawnProjectile:
            spawn_projectile(a.radius, a.mass, a.origin, a.velocity);
            s.finished = true;
            break;
        case ActionType::Release:
            for (std::size_t j = 0; j < i; ++j)
                if (scenario_.actions[j].type == ActionType::Spring || scenario_.actions[j].type == ActionType::Drag)
                    state_[j].finished = true;
            release();
            s.finished = true;
            break;
        case ActionType::Spring: {
            if (t >= a.end) {
                s.finished = true;
                break;
            }
            if (first) {
                const BundleObject* o = bundle_.find(a.object);
                for (std::uint32_t p = o->particle_offset; p < o->particle_offset + o->particle_count; ++p)
                    if ((w.particles.rest[p] - a.point).norm() <= a.radius) s.particles.push_back(p);
                if (s.particles.empty()) s.particles.push_back(nearest_particle(a.object, a.point));
            }
            w.springs.push_back({s.particles, a.anchor, a.stiffness, a.damping});
            break;
        }
        case ActionType::Drag: {
            if (t >= a.end) {
                s.finished = true;
                break;
            }
            if (first) s.particles = {nearest_particle(a.object, a.point)};
            w.targets.push_back({s.particles.front(), a.path_at(t)});
            break;
        }
        }
    }
    if (grab_) w.targets.push_back(*grab_);
}

FrameMetrics Simulation::advance()
{
    const auto t0 = Clock::now();
    apply_actions(time());
    const StepMetrics sm = world().step();
    skin();
    FrameMetrics m;
    m.frame = sm.frame;
    m.step_ms = sm.step_ms;
    m.skin_ms = skin_ms_;
    m.total_ms = ms_since(t0);
    m.fps = m.total_ms > 0 ? 1000.0 / m.total_ms : 0.0;
    return m;
}

void Simulation::skin()
{
    const auto t0 = Clock::now();
    const ParticleDeltas d = particle_deltas(world().particles);
    transforms_.resize(bundle_.objects.size());
    const bool parallel = !world().config.deterministic;
    for (std::size_t i = 0; i < bundle_.objects.size(); ++i) skin_all(bundle_.objects[i].binding, d, transforms_[i], parallel);
    skin_ms_ = ms_since(t0);
}

std::vector<float> Simulation::merged_transforms() const
{
    std::vector<float> out;
    for (const auto& t : transforms_) out.insert(out.end(), t.begin(), t.end());
    return out;
}

SplatScene Simulation::frame_scene() const
{
    SplatScene out = bundle_.environment;
    for (std::size_t i = 0; i < bundle_.objects.size(); ++i) {
        SplatScene moved = apply_transforms(bundle_.objects[i].scene, transforms_[i]);
        for (auto& k : moved.kernels()) out.push_back(std::move(k));
    }
    const auto& p = world().particles;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p.phase[i] != Phase::Projectile) continue;
        auto k = synth::make_kernel(p.position[i].cast<float>(), Vec3f::Constant(float(p.radius[i] * 0.5)),
                                    Vec3f(0.5f, 0.5f, 0.5f), 0, 1.0f);
        if (out.has_features()) k.feature = Eigen::VectorXf::Zero(out.feature_dim());
        out.push_back(std::move(k));
    }
    return out;
}

std::optional<std::uint32_t> Simulation::grab(const Vec3d& origin, const Vec3d& direction, double radius)
{
    if (direction.norm() < 1e-12) throw ArgumentError("grab ray direction must be nonzero");
    const Vec3d dir = direction.normalized();
    const auto& p = world().particles;
    std::optional<std::uint32_t> best;
    double best_t = std::numeric_limits<double>::infinity();
    for (std::uint32_t i = 0; i < p.size(); ++i) {
        if (p.inv_mass[i] == 0 || p.phase[i] == Phase::Projectile) continue;
        const Vec3d r = p.position[i] - origin;
        const double t = r.dot(dir);
        if (t < 0) continue;
        if ((r - t * dir).norm() > radius) continue;
        if (t < best_t) {
            best_t = t;
            best = i;
        }
    }
    if (best) grab_ = Target{*best, p.position[*best]};
    return best;
}

void Simulation::drag(const Vec3d& target)
{
    if (grab_) grab_->position = target;
}

void Simulation::release() { grab_.reset(); }

std::uint32_t Simulation::spawn_projectile(double radius, double mass, const Vec3d& origin, const Vec3d& velocity)
{
    if (!(radius > 0 && mass > 0)) throw ArgumentError("projectile radius and mass must be positive");
    World& w = world();
    const auto i = w.particles.add(origin, 1.0 / mass, radius, Phase::Projectile, kNoObject, w.next_body(), 0.5);
    w.particles.velocity[i] = velocity;
    return i;
}

std::size_t Simulation::fragments_created() const
{
    std::size_t n = 0;
    for (const auto& e : world().fracture_history()) n += e.fragments.size() - 1;
    return n;
}

void write_metrics_csv(const std::vector<FrameMetrics>& metrics, const std::filesystem::path& path)
{
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << "frame,step_ms,skin_ms,total_ms,fps\n";
    char line[160];
    for (const auto& m : metrics) {
        std::snprintf(line, sizeof line, "%llu,%.6f,%.6f,%.6f,%.6f\n", static_cast<unsigned long long>(m.frame),
                      m.step_ms, m.skin_ms, m.total_ms, m.fps);
        f << line;
    }
}

RunSummary run_headless(Simulation& sim, const HeadlessOptions& o)
{
    if (!(o.duration > 0)) throw ArgumentError("duration must be positive");
    if (o.ply_every < 1) throw ArgumentError("ply_every must be at least 1");
    if (!o.out_dir.empty()) std::filesystem::create_directories(o.out_dir);
    RunSummary summary;
    const auto frames = std::uint64_t(std::llround(o.duration / sim.world().config.dt));
    char name[64];
    auto flush = [&] {
        if (!o.out_dir.empty()) write_metrics_csv(summary.metrics, o.out_dir / "metrics.csv");
    };
    try {
        for (std::uint64_t f = 0; f < frames; ++f) {
            summary.metrics.push_back(sim.advance());
            ++summary.frames;
            if (o.out_dir.empty()) continue;
            if (o.write_ply && f % std::uint64_t(o.ply_every) == 0) {
                std::snprintf(name, sizeof name, "frame_%05llu.ply", static_cast<unsigned long long>(f));
                save_ply(sim.frame_scene(), o.out_dir / name);
            }
            if (o.write_transforms) {
                std::snprintf(name, sizeof name, "transforms_%05llu.bin", static_cast<unsigned long long>(f));
                write_transform_buffer(o.out_dir / name, sim.merged_transforms());
            }
        }
    } catch (...) {
        flush();
        throw;
    }
    flush();
    summary.fracture_events = sim.world().fracture_history().size();
    summary.fragments_created = sim.fragments_created();
    return summary;
}

} // namespace splatdyn
