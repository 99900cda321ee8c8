// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/types.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

namespace splatdyn {

constexpr int kShRestCount = 45;

/// One splat primitive. All fields are stored in their activated form:
/// linear scale, opacity in [0,1], unit rotation.
struct GaussianKernel {
    Vec3f position = Vec3f::Zero();
    Vec3f scale = Vec3f::Ones();
    Quatf rotation = Quatf::Identity();
    float opacity = 1.0f;
    std::array<float, 3> sh_dc{};
    std::array<float, kShRestCount> sh_rest{};
    std::uint32_t object_id = 0;
    Eigen::VectorXf feature; // empty when the scene carries no identity features
};

struct Aabb {
    Vec3f min = Vec3f::Constant(std::numeric_limits<float>::max());
    Vec3f max = Vec3f::Constant(std::numeric_limits<float>::lowest());

    bool empty() const { return (min.array() > max.array()).any(); }
    void extend(const Vec3f& p)
    {
        min = min.cwiseMin(p);
        max = max.cwiseMax(p);
    }
};

class SplatScene {
public:
    SplatScene() = default;
    explicit SplatScene(int feature_dim) : feature_dim_(feature_dim) {}

    int feature_dim() const { return feature_dim_; }
    bool has_features() const { return feature_dim_ > 0; }

    std::size_t size() const { return kernels_.size(); }
    bool empty() const { return kernels_.empty(); }

    const std::vector<GaussianKernel>& kernels() const { return kernels_; }
    std::vector<GaussianKernel>& kernels() { return kernels_; }
    const GaussianKernel& operator[](std::size_t i) const { return kernels_[i]; }
    GaussianKernel& operator[](std::size_t i) { return kernels_[i]; }

    /// Appends a kernel; throws ArgumentError when its feature size disagrees with the scene.
    void push_back(GaussianKernel k);
    void reserve(std::size_t n) { kernels_.reserve(n); }

    Aabb bounds() const;

    /// Throws ArgumentError when any kernel breaks the in-memory invariants.
    void validate() const;

private:
    int feature_dim_ = 0;
    std::vector<GaussianKernel> kernels_;
};

/// Sigma = R diag(s)^2 R^T.
template <typename Scalar>
Mat3<Scalar> covariance(const Vec3<Scalar>& scale, const Quat<Scalar>& rotation)
{
    const Mat3<Scalar> r = rotation.normalized().toRotationMatrix();
    return r * scale.array().square().matrix().asDiagonal() * r.transpose();
}

inline Mat3f covariance(const GaussianKernel& k) { return covariance<float>(k.scale, k.rotation); }

/// Unnormalized Gaussian falloff exp(-0.5 d^T Sigma^-1 d), evaluated in the kernel frame.
template <typename Scalar>
Scalar evaluate_density(const Vec3<Scalar>& center, const Vec3<Scalar>& scale, const Quat<Scalar>& rotation,
                        const Vec3<Scalar>& x)
{
    const Vec3<Scalar> local = rotate<Scalar>(rotation.normalized().conjugate(), x - center);
    const Scalar mahalanobis = local.cwiseQuotient(scale).squaredNorm();
    return std::exp(Scalar(-0.5) * mahalanobis);
}

inline double evaluate_density(const GaussianKernel& k, const Vec3d& x)
{
    return evaluate_density<double>(k.position.cast<double>(), k.scale.cast<double>(), k.rotation.cast<double>(),
                                    x);
}

template <typename Scalar>
Scalar anisotropy_ratio(const Vec3<Scalar>& scale)
{
    return scale.maxCoeff() / scale.minCoeff();
}

inline float anisotropy_ratio(const GaussianKernel& k) { return anisotropy_ratio<float>(k.scale); }

/// Raises the short axes so that max(s)/min(s) <= max_ratio; the long axis is kept.
/// Returns the number of kernels modified. Throws ArgumentError when max_ratio < 1.
std::size_t clamp_anisotropy(SplatScene& scene, double max_ratio = 4.0);

/// View-independent color from the DC spherical-harmonic band.
inline Vec3f dc_color(const GaussianKernel& k)
{
    constexpr float c0 = 0.28209479177387814f;
    Vec3f c(c0 * k.sh_dc[0] + 0.5f, c0 * k.sh_dc[1] + 0.5f, c0 * k.sh_dc[2] + 0.5f);
    return c.cwiseMax(0.0f);
}

/// Inverse of dc_color for building synthetic kernels.
inline std::array<float, 3> dc_from_color(const Vec3f& rgb)
{
    constexpr float c0 = 0.28209479177387814f;
    return {(rgb.x() - 0.5f) / c0, (rgb.y() - 0.5f) / c0, (rgb.z() - 0.5f) / c0};
}

} // namespace splatdyn
