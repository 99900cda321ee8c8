// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/camera.hpp"
#include "splatdyn/gaussian.hpp"

namespace splatdyn {

struct RenderOptions {
    /// Splat footprint cutoff in standard deviations.
    double cutoff_sigma = 3.0;
    /// Kernels closer than this to the image plane are culled.
    double near_plane = 0.01;
};

/// CPU reference rasterizer. Each kernel is projected to a 2D Gaussian with the local
/// affine approximation of the perspective map, kernels are sorted by view depth and
/// composited front to back with alpha_i = opacity_i * G'_i(pixel center). Only the DC
/// color band is evaluated. Output color is premultiplied; alpha = 1 - transmittance.
/// Intended for oracles and frame export, not real-time use.
RgbaImage render_reference(const SplatScene& scene, const Camera& camera, const RenderOptions& options = {});

} // namespace splatdyn
