// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/binding.hpp"
#include "splatdyn/solver.hpp"

namespace splatdyn {

struct BenchOptions {
    std::size_t kernels = 200000;
    std::size_t particles = 1500; ///< rounded to the nearest nx * ny * nx lattice
    int m = 4;
    int frames = 60;
    int warmup = 5;
    bool deterministic = false;
    std::uint32_t seed = 7;
    SolverConfig solver{};
};

struct BenchResult {
    std::size_t kernels = 0;
    std::size_t particles = 0;
    int m = 0;
    int frames = 0;
    int threads = 1;
    double step_ms = 0; ///< means over the timed frames
    double skin_ms = 0;
    double total_ms = 0;
    double fps = 0;
    double max_total_ms = 0;
};

/// Times full frames (solver step + skin_all) on a deformable lattice block resting on a
/// plane, with `kernels` random kernels bound to its particles.
BenchResult run_bench(const BenchOptions& options);

std::string format_bench_table(const BenchResult& result);

} // namespace splatdyn
