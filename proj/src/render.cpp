// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/render.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace splatdyn {
namespace {

struct Splat {
    double depth;
    std::uint32_t index;
    Eigen::Vector2d mean;
    Eigen::Matrix2d conic;
    Eigen::Vector3f color;
    float opacity;
    int x0, x1, y0, y1;
};

} // namespace

RgbaImage render_reference(const SplatScene& scene, const Camera& camera, const RenderOptions& options)
{
    if (camera.width <= 0 || camera.height <= 0) throw ArgumentError("render target has zero area");
    camera.validate();
    RgbaImage image(camera.width, camera.height, Eigen::Vector4f::Zero());

    std::vector<Splat> splats;
    splats.reserve(scene.size());
    for (std::uint32_t i = 0; i < scene.size(); ++i) {
        const auto& k = scene[i];
        const Vec3d pc = camera.to_camera(k.position.cast<double>());
        if (pc.z() <= options.near_plane) continue;
        const Mat3d sigma_c = camera.rotation * covariance<double>(k.scale.cast<double>(), k.rotation.cast<double>()) *
                              camera.rotation.transpose();
        Eigen::Matrix<double, 2, 3> jac;
        const double iz = 1.0 / pc.z();
        jac << camera.fx * iz, 0.0, -camera.fx * pc.x() * iz * iz, 0.0, camera.fy * iz, -camera.fy * pc.y() * iz * iz;
        const Eigen::Matrix2d cov2 = jac * sigma_c * jac.transpose();
        const double det = cov2.determinant();
        if (!(det > 0.0)) continue;

        Splat s;
        s.depth = pc.z();
        s.index = i;
        s.mean = Eigen::Vector2d(camera.fx * pc.x() * iz + camera.cx, camera.fy * pc.y() * iz + camera.cy);
        s.conic = cov2.inverse();
        s.color = dc_color(k);
        s.opacity = k.opacity;
        const double rx = options.cutoff_sigma * std::sqrt(cov2(0, 0));
        const double ry = options.cutoff_sigma * std::sqrt(cov2(1, 1));
        s.x0 = std::max(0, static_cast<int>(std::floor(s.mean.x() - rx)));
        s.x1 = std::min(camera.width - 1, static_cast<int>(std::ceil(s.mean.x() + rx)));
        s.y0 = std::max(0, static_cast<int>(std::floor(s.mean.y() - ry)));
        s.y1 = std::min(camera.height - 1, static_cast<int>(std::ceil(s.mean.y() + ry)));
        if (s.x0 > s.x1 || s.y0 > s.y1) continue;
        splats.push_back(s);
    }
    std::sort(splats.begin(), splats.end(), [](const Splat& a, const Splat& b) {
        return a.depth != b.depth ? a.depth < b.depth : a.index < b.index;
    });

    std::vector<float> transmittance(image.pixels.size(), 1.0f);
    const double cutoff2 = options.cutoff_sigma * options.cutoff_sigma;
    for (const auto& s : splats) {
        for (int y = s.y0; y <= s.y1; ++y) {
            for (int x = s.x0; x <= s.x1; ++x) {
                const Eigen::Vector2d d = Eigen::Vector2d(x + 0.5, y + 0.5) - s.mean;
                const double m2 = d.dot(s.conic * d);
                if (m2 > cutoff2) continue;
                const auto alpha = static_cast<float>(s.opacity * std::exp(-0.5 * m2));
                const std::size_t p = std::size_t(y) * camera.width + x;
                float& t = transmittance[p];
                image.pixels[p].head<3>() += s.color * (alpha * t);
                t *= 1.0f - alpha;
            }
        }
    }
    for (std::size_t p = 0; p < image.pixels.size(); ++p) image.pixels[p][3] = 1.0f - transmittance[p];
    return image;
}

} // namespace splatdyn
