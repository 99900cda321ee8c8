// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/bundle.hpp"
#include "splatdyn/synth.hpp"

#include <filesystem>
#include <random>

namespace splatdyn::testing {

/// Scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag)
    {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("splatdyn_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir()
    {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline Quatd random_rotation(std::mt19937& rng)
{
    std::normal_distribution<double> g;
    Quatd q(g(rng), g(rng), g(rng), g(rng));
    q.normalize();
    return q;
}

/// Kernels with random anisotropic scales, rotations, colors and SH in a box.
inline SplatScene random_scene(std::size_t n, std::uint32_t seed, int feature_dim = 0)
{
    std::mt19937 rng(seed);
    std::uniform_real_distribution<float> u(-1.f, 1.f), pos(0.05f, 0.3f);
    SplatScene s(feature_dim);
    for (std::size_t i = 0; i < n; ++i) {
        GaussianKernel k;
        k.position = Vec3f(u(rng), u(rng), u(rng));
        k.scale = Vec3f(pos(rng), pos(rng), pos(rng)) * 0.1f;
        k.rotation = random_rotation(rng).cast<float>();
        k.opacity = 0.5f + 0.4f * u(rng);
        for (auto& c : k.sh_dc) c = u(rng);
        for (auto& c : k.sh_rest) c = 0.1f * u(rng);
        k.object_id = std::uint32_t(i % 3);
        if (feature_dim > 0) k.feature = Eigen::VectorXf::Random(feature_dim);
        s.push_back(std::move(k));
    }
    return s;
}

/// Solid box of kernels on a jittered lattice; every lattice node gets one kernel.
inline SplatScene lattice_box(const Vec3i& nodes, double h, const Vec3d& origin, std::uint32_t seed = 3,
                              float scale = 0.004f)
{
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> j(-0.2 * h, 0.2 * h);
    SplatScene s;
    for (int z = 0; z < nodes.z(); ++z)
        for (int y = 0; y < nodes.y(); ++y)
            for (int x = 0; x < nodes.x(); ++x) {
                GaussianKernel k;
                const bool corner = (x == 0 || x == nodes.x() - 1) && (y == 0 || y == nodes.y() - 1) &&
                                    (z == 0 || z == nodes.z() - 1);
                const Vec3d jitter = corner ? Vec3d::Zero() : Vec3d(j(rng), j(rng), j(rng));
                k.position = (origin + Vec3d(x, y, z) * h + jitter).cast<float>();
                k.scale = Vec3f::Constant(scale);
                s.push_back(std::move(k));
            }
    return s;
}

/// Writes the synthetic labdesk scene into `dir` and builds its bundle.
inline SceneBundle labdesk_bundle(const std::filesystem::path& dir, std::uint32_t seed = 1)
{
    synth::write_labdesk(synth::make_labdesk(seed), dir, std::filesystem::path(SPLATDYN_DATA_DIR) / "fixtures");
    return build_bundle(dir / "bundle.json");
}

} // namespace splatdyn::testing
