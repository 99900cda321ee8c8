// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/camera.hpp"
#include "splatdyn/gaussian.hpp"
#include "splatdyn/segmentation.hpp"

#include <filesystem>
#include <nlohmann/json.hpp>

namespace splatdyn::synth {

/// A generated scene with everything the segmentation pipeline consumes. Kernel object_id
/// holds the ground-truth label.
struct SynthScene {
    std::string name;
    SplatScene scene;
    IdentityClassifier classifier;
    std::vector<CameraView> views;
    std::vector<std::uint32_t> object_ids;
};

GaussianKernel make_kernel(const Vec3f& position, const Vec3f& scale, const Vec3f& rgb, std::uint32_t label,
                           float opacity = 0.9f);

/// Features one-hot(label) * gain plus Gaussian noise, and the identity classifier W = I,
/// b = 0 that reads them back. `classes` counts the background label 0.
void assign_identity_features(SplatScene& scene, IdentityClassifier& classifier, int classes, std::uint32_t seed,
                              float gain = 6.0f, float noise = 0.3f);

/// Cameras on a ring of `count` poses around `target`, looking at it from `height` above.
std::vector<Camera> ring_cameras(int count, const Vec3d& target, double radius, double height, double focal,
                                 int width, int height_px);

/// Paints a label mask per camera: each kernel becomes a depth-tested disc of its label,
/// at least one pixel in radius, so every unoccluded center lands on its own label.
std::vector<CameraView> paint_label_views(const SplatScene& scene, const std::vector<Camera>& cameras);

/// Three separated isotropic Gaussian blobs (labels 1..3) with 12 ring views.
SynthScene make_blob_scene(std::uint32_t seed, std::size_t kernels_per_blob = 600);

/// Open-top square cup, `cells` wide and `rows` tall on a lattice of spacing h, with walls and
/// floor one cell thick and a powder surface layer at row rows/2. Every kernel gets `label`.
SplatScene make_powder_cup(double h, int cells, int rows, std::uint32_t label = 1);

/// Desk-scale scene with six labelled objects: three soft objects, a rigid tool, a fragile
/// rigid mug and a bowl of powder, over a desk plane and one static block.
SynthScene make_labdesk(std::uint32_t seed);

/// Writes scene.ply, classifier.bin, cameras.json with masks, bundle.json and scenario files
/// (rest.json, interact.json) into `dir`.
void write_labdesk(const SynthScene& s, const std::filesystem::path& dir,
                   const std::filesystem::path& fixture_dir);

} // namespace splatdyn::synth
