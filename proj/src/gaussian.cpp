// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/gaussian.hpp"

#include <string>

namespace splatdyn {

void SplatScene::push_back(GaussianKernel k)
{
    if (k.feature.size() != feature_dim_) {
        throw ArgumentError("kernel feature size " + std::to_string(k.feature.size()) +
                            " does not match scene feature_dim " + std::to_string(feature_dim_));
    }
    kernels_.push_back(std::move(k));
}

Aabb SplatScene::bounds() const
{
    Aabb box;
    for (const auto& k : kernels_) box.extend(k.position);
    return box;
}

void SplatScene::validate() const
{
    for (std::size_t i = 0; i < kernels_.size(); ++i) {
        const auto& k = kernels_[i];
        const auto where = " (kernel " + std::to_string(i) + ")";
        if (!k.position.allFinite()) throw ArgumentError("non-finite position" + where);
        if (!(k.scale.array() > 0.0f).all() || !k.scale.allFinite())
            throw ArgumentError("scale must be strictly positive" + where);
        if (!(k.opacity >= 0.0f && k.opacity <= 1.0f)) throw ArgumentError("opacity outside [0,1]" + where);
        if (std::abs(k.rotation.norm() - 1.0f) > 1e-4f) throw ArgumentError("rotation is not unit" + where);
        if (k.feature.size() != feature_dim_) throw ArgumentError("feature size mismatch" + where);
    }
}

std::size_t clamp_anisotropy(SplatScene& scene, double max_ratio)
{
    if (!(max_ratio >= 1.0)) throw ArgumentError("anisotropy ratio must be >= 1");
    std::size_t modified = 0;
    for (auto& k : scene.kernels()) {
        const float smax = k.scale.maxCoeff();
        const auto floor_value = static_cast<float>(smax / max_ratio);
        if (k.scale.minCoeff() < floor_value) {
            k.scale = k.scale.cwiseMax(floor_value);
            ++modified;
        }
    }
    return modified;
}

} // namespace splatdyn
