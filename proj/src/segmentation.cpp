// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace splatdyn {

Eigen::VectorXf IdentityClassifier::probabilities(const Eigen::VectorXf& feature) const
{
    Eigen::VectorXf logits = weights.transpose() * feature + bias;
    logits.array() -= logits.maxCoeff();
    Eigen::VectorXf e = logits.array().exp();
    return e / e.sum();
}

void IdentityClassifier::validate(int scene_feature_dim) const
{
    if (num_classes() < 1) throw ArgumentError("classifier needs at least one class");
    if (bias.size() != weights.cols()) throw ArgumentError("classifier bias size does not match class count");
    if (feature_dim() != scene_feature_dim) {
        throw ArgumentError("classifier feature dimension " + std::to_string(feature_dim()) +
                            " does not match scene feature_dim " + std::to_string(scene_feature_dim));
    }
}

IdentityClassifier load_classifier(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open classifier '" + path.string() + "'");
    std::uint32_t dims[2];
    in.read(reinterpret_cast<char*>(dims), sizeof(dims));
    if (!in || dims[0] == 0 || dims[1] == 0 || dims[0] > (1u << 16) || dims[1] > (1u << 16))
        throw std::runtime_error("malformed classifier header in '" + path.string() + "'");
    IdentityClassifier c;
    std::vector<float> w(std::size_t(dims[0]) * dims[1]);
    c.bias.resize(dims[1]);
    in.read(reinterpret_cast<char*>(w.data()), std::streamsize(w.size() * 4));
    in.read(reinterpret_cast<char*>(c.bias.data()), std::streamsize(dims[1] * 4));
    if (!in) throw std::runtime_error("truncated classifier file '" + path.string() + "'");
    c.weights = Eigen::Map<Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(w.data(), dims[0],
                                                                                                   dims[1]);
    return c;
}

void save_classifier(const IdentityClassifier& classifier, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write classifier '" + path.string() + "'");
    const std::uint32_t dims[2] = {std::uint32_t(classifier.weights.rows()), std::uint32_t(classifier.weights.cols())};
    out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w = classifier.weights;
    out.write(reinterpret_cast<const char*>(w.data()), std::streamsize(w.size() * 4));
    out.write(reinterpret_cast<const char*>(classifier.bias.data()), std::streamsize(classifier.bias.size() * 4));
}

IndexSet feature_stage(const SplatScene& scene, const IdentityClassifier& classifier, std::uint32_t object_id,
                       double sigma1)
{
    if (!(sigma1 > 0.0 && sigma1 < 1.0)) throw ArgumentError("sigma1 must lie in (0,1)");
    if (!scene.has_features()) throw StateError("scene carries no identity features");
    classifier.validate(scene.feature_dim());
    if (object_id >= std::uint32_t(classifier.num_classes()))
        throw ArgumentError("object id " + std::to_string(object_id) + " exceeds classifier class count");

    std::vector<char> keep(scene.size(), 0);
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < std::int64_t(scene.size()); ++i) {
        keep[i] = classifier.probabilities(scene[i].feature)[object_id] > sigma1;
    }
    IndexSet out;
    for (std::uint32_t i = 0; i < keep.size(); ++i)
        if (keep[i]) out.push_back(i);
    return out;
}

MaskStageResult mask_stage(const SplatScene& scene, std::span<const CameraView> views, std::uint32_t object_id,
                           double sigma2)
{
    if (!(sigma2 > 0.0 && sigma2 < 1.0)) throw ArgumentError("sigma2 must lie in (0,1)");
    if (views.empty()) throw ArgumentError("mask stage needs at least one view");
    for (const auto& v : views) v.validate();

    MaskStageResult result;
    result.proportion.assign(scene.size(), 0.0);
    const auto n = static_cast<double>(views.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < std::int64_t(scene.size()); ++i) {
        const Vec3d p = scene[i].position.cast<double>();
        int votes = 0;
        for (const auto& view : views) {
            const auto proj = project_point(view.camera, p);
            if (!proj) continue;
            const double fu = std::floor(proj->u), fv = std::floor(proj->v);
            if (fu < 0.0 || fv < 0.0 || fu >= view.mask.width || fv >= view.mask.height) continue;
            if (view.mask.at(int(fu), int(fv)) == object_id) ++votes;
        }
        result.proportion[i] = votes / n;
    }
    for (std::uint32_t i = 0; i < scene.size(); ++i)
        if (result.proportion[i] > sigma2) result.selected.push_back(i);
    return result;
}

IndexSet set_intersection(const IndexSet& a, const IndexSet& b)
{
    IndexSet out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

SegmentationResult segment_object(const SplatScene& scene, const IdentityClassifier& classifier,
                                  std::span<const CameraView> views, std::uint32_t object_id, double sigma1,
                                  double sigma2)
{
    SegmentationResult r;
    r.object_id = object_id;
    r.feature_set = feature_stage(scene, classifier, object_id, sigma1);
    auto mask = mask_stage(scene, views, object_id, sigma2);
    r.mask_set = std::move(mask.selected);
    r.proportion = std::move(mask.proportion);
    r.final_set = set_intersection(r.feature_set, r.mask_set);
    r.empty_stage = r.feature_set.empty() || r.mask_set.empty();
    return r;
}

ObjectAssignment assign_objects(const SplatScene& scene, const IdentityClassifier& classifier,
                                std::span<const CameraView> views, std::span<const std::uint32_t> object_ids,
                                double sigma1, std::span<const double> sigma2)
{
    if (sigma2.size() != object_ids.size()) throw ArgumentError("one sigma2 per object id is required");
    ObjectAssignment out;
    out.label.assign(scene.size(), 0);
    std::vector<float> best(scene.size(), -1.0f);
    for (std::size_t o = 0; o < object_ids.size(); ++o) {
        const auto id = object_ids[o];
        const auto seg = segment_object(scene, classifier, views, id, sigma1, sigma2[o]);
        for (auto k : seg.final_set) {
            const float score = classifier.probabilities(scene[k].feature)[id];
            if (score > best[k]) {
                best[k] = score;
                out.label[k] = id;
            } else if (score == best[k]) {
                out.ties.push_back(k);
            }
        }
    }
    std::sort(out.ties.begin(), out.ties.end());
    out.ties.erase(std::unique(out.ties.begin(), out.ties.end()), out.ties.end());
    return out;
}

std::pair<SplatScene, SplatScene> remove_object(const SplatScene& scene, const IndexSet& final_set)
{
    std::vector<char> selected(scene.size(), 0);
    for (auto i : final_set) {
        if (i >= scene.size()) throw ArgumentError("kernel index " + std::to_string(i) + " out of range");
        selected[i] = 1;
    }
    SplatScene object(scene.feature_dim()), remainder(scene.feature_dim());
    for (std::size_t i = 0; i < scene.size(); ++i) (selected[i] ? object : remainder).push_back(scene[i]);
    return {std::move(object), std::move(remainder)};
}

} // namespace splatdyn
