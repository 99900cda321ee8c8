// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/bench.hpp"

#include "splatdyn/generate.hpp"
#include "splatdyn/material.hpp"

#include <chrono>
#include <random>

#include <fmt/format.h>
#ifdef _OPENMP
#include <omp.h>
#endif

namespace splatdyn {
namespace {

/// nx * ny * nx closest to n with ny in [nx, 2 nx].
Vec3i lattice_dims(std::size_t n)
{
    Vec3i best(1, 1, 1);
    long best_err = long(n);
    for (int nx = 1; nx * nx <= int(n); ++nx)
        for (int ny = nx; ny <= 2 * nx; ++ny) {
            const long err = std::labs(long(nx) * nx * ny - long(n));
            if (err < best_err) {
                best_err = err;
                best = Vec3i(nx, ny, nx);
            }
        }
    return best;
}

} // namespace

BenchResult run_bench(const BenchOptions& options)
{
    if (options.kernels == 0 || options.particles == 0) throw ArgumentError("bench needs kernels and particles");
    if (options.frames < 1 || options.warmup < 0) throw ArgumentError("bench needs at least one timed frame");
    options.solver.validate();

    const double h = 0.02;
    const Vec3i dims = lattice_dims(options.particles);
    const Vec3f extent = ((dims - Vec3i::Ones()).cast<double>() * h).cast<float>();

    // Kernels jittered around lattice nodes, plus the corners, so voxelization yields exactly
    // one occupied cell per node.
    std::mt19937 rng(options.seed);
    std::uniform_int_distribution<int> pick[3] = {std::uniform_int_distribution<int>(0, dims.x() - 1),
                                                  std::uniform_int_distribution<int>(0, dims.y() - 1),
                                                  std::uniform_int_distribution<int>(0, dims.z() - 1)};
    std::uniform_real_distribution<float> jitter(-0.45f * float(h), 0.45f * float(h));
    SplatScene scene;
    scene.reserve(options.kernels + 8);
    GaussianKernel k;
    k.scale = Vec3f::Constant(0.004f);
    for (int c = 0; c < 8; ++c) {
        k.position = Vec3f(c & 1 ? extent.x() : 0.f, c & 2 ? extent.y() : 0.f, c & 4 ? extent.z() : 0.f);
        scene.push_back(k);
    }
    while (scene.size() < options.kernels) {
        for (int a = 0; a < 3; ++a)
            k.position[a] = std::clamp(float(pick[a](rng) * h) + jitter(rng), 0.f, extent[a]);
        scene.push_back(k);
    }

    auto obj = generate_particles(scene, Phase::Deformable, h);
    const double lift = 0.05;
    for (auto& x : obj.particles.position) x.y() += lift;
    for (auto& x : obj.particles.rest) x.y() += lift;
    for (auto& kk : scene.kernels()) kk.position.y() += float(lift);

    MaterialSpec spec;
    spec.category = MaterialCategory::Deformation;
    spec.mass_kg = 1.0;
    spec.deformation_resistance = 0.5;
    spec.plasticity = 0.2;
    apply_material(spec, obj.particles, obj.constraints);

    World world;
    world.particles = std::move(obj.particles);
    world.constraints = std::move(obj.constraints);
    world.plane = SupportPlane{};
    world.config = options.solver;
    world.config.deterministic = options.deterministic;

    const BindingTable table = build_binding(scene, world.particles.rest, options.m);
    std::vector<float> buffer;

    BenchResult r;
    r.kernels = scene.size();
    r.particles = world.particles.size();
    r.m = table.m;
    r.frames = options.frames;
#ifdef _OPENMP
    r.threads = options.deterministic ? 1 : omp_get_max_threads();
#endif
    using clock = std::chrono::steady_clock;
    auto ms = [](clock::duration d) { return std::chrono::duration<double, std::milli>(d).count(); };
    for (int f = 0; f < options.warmup + options.frames; ++f) {
        const auto t0 = clock::now();
        world.step();
        const auto t1 = clock::now();
        skin_all(table, particle_deltas(world.particles), buffer, !options.deterministic);
        const auto t2 = clock::now();
        if (f < options.warmup) continue;
        r.step_ms += ms(t1 - t0);
        r.skin_ms += ms(t2 - t1);
        r.max_total_ms = std::max(r.max_total_ms, ms(t2 - t0));
    }
    r.step_ms /= options.frames;
    r.skin_ms /= options.frames;
    r.total_ms = r.step_ms + r.skin_ms;
    r.fps = r.total_ms > 0 ? 1000.0 / r.total_ms : 0.0;
    return r;
}

std::string format_bench_table(const BenchResult& r)
{
    std::string s;
    s += fmt::format("{:>9} {:>9} {:>3} {:>7} {:>7} {:>10} {:>10} {:>10} {:>8}\n", "kernels", "particles", "m",
                     "threads", "frames", "step_ms", "skin_ms", "total_ms", "fps");
    s += fmt::format("{:>9} {:>9} {:>3} {:>7} {:>7} {:>10.3f} {:>10.3f} {:>10.3f} {:>8.1f}\n", r.kernels, r.particles, r.m,
                     r.threads, r.frames, r.step_ms, r.skin_ms, r.total_ms, r.fps);
    return s;
}

} // namespace splatdyn
