// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/camera.hpp"
#include "splatdyn/gaussian.hpp"

#include <filesystem>
#include <span>
#include <utility>

namespace splatdyn {

/// Linear identity classifier over per-kernel features: softmax(W^T f + b).
/// `weights` is F x K, K counting the background class.
struct IdentityClassifier {
    Eigen::MatrixXf weights;
    Eigen::VectorXf bias;

    int feature_dim() const { return static_cast<int>(weights.rows()); }
    int num_classes() const { return static_cast<int>(weights.cols()); }

    Eigen::VectorXf probabilities(const Eigen::VectorXf& feature) const;
    void validate(int scene_feature_dim) const;
};

/// Sidecar layout: uint32 F, uint32 K, F*K float32 weights (row-major, row = feature),
/// K float32 bias. All little-endian.
IdentityClassifier load_classifier(const std::filesystem::path& path);
void save_classifier(const IdentityClassifier& classifier, const std::filesystem::path& path);

/// Kernels whose softmax score for `object_id` exceeds `sigma1`.
IndexSet feature_stage(const SplatScene& scene, const IdentityClassifier& classifier, std::uint32_t object_id,
                       double sigma1);

struct MaskStageResult {
    IndexSet selected;
    /// Vote proportion per kernel, indexed like the scene.
    std::vector<double> proportion;
};

/// Projects every kernel center into each view; a vote counts when the center lands on a
/// mask pixel labeled `object_id`. Behind-camera and out-of-frame projections vote 0 but
/// still count toward n. Selects kernels with proportion > sigma2.
MaskStageResult mask_stage(const SplatScene& scene, std::span<const CameraView> views, std::uint32_t object_id,
                           double sigma2);

struct SegmentationResult {
    std::uint32_t object_id = 0;
    IndexSet feature_set;
    IndexSet mask_set;
    IndexSet final_set;
    std::vector<double> proportion;
    /// Set when either stage selected nothing.
    bool empty_stage = false;
};

SegmentationResult segment_object(const SplatScene& scene, const IdentityClassifier& classifier,
                                  std::span<const CameraView> views, std::uint32_t object_id, double sigma1,
                                  double sigma2);

struct ObjectAssignment {
    /// Label per kernel, 0 when no object claimed it.
    std::vector<std::uint32_t> label;
    /// Kernels that passed several objects with equal top softmax score.
    IndexSet ties;
};

/// Runs segment_object for each id and resolves kernels claimed by several objects in favor
/// of the highest softmax score (lower id wins ties, which are reported).
ObjectAssignment assign_objects(const SplatScene& scene, const IdentityClassifier& classifier,
                                std::span<const CameraView> views, std::span<const std::uint32_t> object_ids,
                                double sigma1, std::span<const double> sigma2);

/// Splits the scene into (selected kernels, remainder), preserving attributes and order.
std::pair<SplatScene, SplatScene> remove_object(const SplatScene& scene, const IndexSet& final_set);

IndexSet set_intersection(const IndexSet& a, const IndexSet& b);

} // namespace splatdyn
