// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/gaussian.hpp"
#include "splatdyn/particles.hpp"

#include <filesystem>
#include <span>

namespace splatdyn {

/// Per-kernel skinning data in structure-of-arrays form with a fixed stride m.
/// Slots of one kernel are ordered by descending weight.
struct BindingTable {
    std::size_t m = 0;
    std::vector<std::uint32_t> particle; ///< kernels * m
    std::vector<float> weight;           ///< kernels * m, each row sums to 1
    std::vector<Vec3f> offset;           ///< kernels * m, X_d = T_r - x0 of the bound particle
    std::vector<Vec3f> rest_position;    ///< T_r
    std::vector<Quatf> rest_rotation;    ///< R_r

    std::size_t size() const { return rest_position.size(); }
    void validate(std::size_t particle_count) const;
};

/// Particle count per kernel used for a phase: 4 for deformable bodies, 1 otherwise.
int binding_count(Phase phase);

/// Binds every kernel to its m nearest particle rest positions (ties to the lowest index)
/// with inverse-distance weights; a coincident particle takes the full weight. Indices are
/// shifted by `index_offset`. m is reduced, with a warning, when fewer particles exist.
BindingTable build_binding(const SplatScene& object, std::span<const Vec3d> particle_rest, int m,
                           std::uint32_t index_offset = 0);

/// Per-particle translation x - x0 and rotation since rest.
struct ParticleDeltas {
    std::vector<Vec3f> translation;
    std::vector<Quatf> rotation;

    std::size_t size() const { return translation.size(); }
};

ParticleDeltas particle_deltas(const ParticleSet& particles);

struct KernelTransform {
    Vec3f position;
    Quatf rotation;
    bool fallback = false; ///< blended rotation vanished; the largest-weight rotation was used
};

/// T = T_r + sum w dT + sum w (dR X_d - X_d), R = normalize(sum w s dR) R_r with each dR
/// sign-aligned (s) to the largest-weight one.
KernelTransform skin_kernel(const BindingTable& table, std::size_t kernel, const ParticleDeltas& deltas);

/// Floats per kernel in a transform buffer: tx ty tz qw qx qy qz.
constexpr std::size_t kTransformStride = 7;

/// Skins every kernel into `buffer` (resized to size() * 7). Returns the fallback count.
std::size_t skin_all(const BindingTable& table, const ParticleDeltas& deltas, std::vector<float>& buffer,
                     bool parallel = true);

/// Copy of `scene` with positions and rotations replaced from a transform buffer.
SplatScene apply_transforms(const SplatScene& scene, std::span<const float> buffer);

/// Little-endian float32 transform buffer files.
void write_transform_buffer(const std::filesystem::path& path, std::span<const float> buffer);
std::vector<float> read_transform_buffer(const std::filesystem::path& path);

/// Binary form: u32 kernels, u32 m, u32 particle[kernels*m], f32 weight[kernels*m],
/// f32 offset[kernels*m*3], then f32 rest pose [kernels*7] in transform-buffer order.
std::vector<std::uint8_t> serialize_binding(const BindingTable& table);
BindingTable deserialize_binding(std::span<const std::uint8_t> bytes);

} // namespace splatdyn
