// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/synth.hpp"

#include "splatdyn/ply.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

namespace splatdyn::synth {
namespace {

constexpr double kPi = std::numbers::pi;

void add_sphere(SplatScene& s, const Vec3d& c, const Vec3d& radii, int n, const Vec3f& rgb, std::uint32_t label,
                float scale)
{
    const double golden = kPi * (3 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        const double y = 1 - 2 * (i + 0.5) / n;
        const double r = std::sqrt(1 - y * y);
        const double t = golden * i;
        const Vec3d p = c + Vec3d(r * std::cos(t), y, r * std::sin(t)).cwiseProduct(radii);
        s.push_back(make_kernel(p.cast<float>(), Vec3f::Constant(scale), rgb, label));
    }
}

void add_box(SplatScene& s, const Vec3d& lo, const Vec3d& hi, double step, const Vec3f& rgb, std::uint32_t label,
             float scale)
{
    Vec3i n;
    for (int a = 0; a < 3; ++a) n[a] = std::max(1, int(std::round((hi[a] - lo[a]) / step)));
    for (int k = 0; k <= n.z(); ++k)
        for (int j = 0; j <= n.y(); ++j)
            for (int i = 0; i <= n.x(); ++i) {
                const bool face = i == 0 || j == 0 || k == 0 || i == n.x() || j == n.y() || k == n.z();
                if (!face) continue;
                const Vec3d f(double(i) / n.x(), double(j) / n.y(), double(k) / n.z());
                const Vec3d p = lo + f.cwiseProduct(hi - lo);
                s.push_back(make_kernel(p.cast<float>(), Vec3f::Constant(scale), rgb, label));
            }
}

// Open cylinder along +y with a floor, bottom center `base`.
void add_cup(SplatScene& s, const Vec3d& base, double radius, double height, double step, const Vec3f& rgb,
             std::uint32_t label, float scale)
{
    const int around = std::max(8, int(std::round(2 * kPi * radius / step)));
    const int rows = std::max(1, int(std::round(height / step)));
    for (int r = 0; r <= rows; ++r)
        for (int a = 0; a < around; ++a) {
            const double t = 2 * kPi * a / around;
            const Vec3d p = base + Vec3d(radius * std::cos(t), height * r / rows, radius * std::sin(t));
            s.push_back(make_kernel(p.cast<float>(), Vec3f::Constant(scale), rgb, label));
        }
    for (double x = -radius + step; x < radius; x += step)
        for (double z = -radius + step; z < radius; z += step)
            if (x * x + z * z < radius * radius)
                s.push_back(make_kernel((base + Vec3d(x, 0, z)).cast<float>(), Vec3f::Constant(scale), rgb, label));
}

} // namespace

GaussianKernel make_kernel(const Vec3f& position, const Vec3f& scale, const Vec3f& rgb, std::uint32_t label,
                           float opacity)
{
    GaussianKernel k;
    k.position = position;
    k.scale = scale;
    k.opacity = opacity;
    k.sh_dc = dc_from_color(rgb);
    k.object_id = label;
    return k;
}

void assign_identity_features(SplatScene& scene, IdentityClassifier& classifier, int classes, std::uint32_t seed,
                              float gain, float noise)
{
    std::mt19937 rng(seed);
    std::normal_distribution<float> n01(0.f, 1.f);
    SplatScene out(classes);
    out.reserve(scene.size());
    for (auto k : scene.kernels()) {
        if (int(k.object_id) >= classes) throw ArgumentError("label exceeds the class count");
        k.feature = Eigen::VectorXf::Zero(classes);
        for (int c = 0; c < classes; ++c) k.feature[c] = noise * n01(rng);
        k.feature[int(k.object_id)] += gain;
        out.push_back(std::move(k));
    }
    scene = std::move(out);
    classifier.weights = Eigen::MatrixXf::Identity(classes, classes);
    classifier.bias = Eigen::VectorXf::Zero(classes);
}

std::vector<Camera> ring_cameras(int count, const Vec3d& target, double radius, double height, double focal,
                                 int width, int height_px)
{
    std::vector<Camera> cams;
    for (int i = 0; i < count; ++i) {
        const double t = 2 * kPi * i / count;
        const Vec3d eye = target + Vec3d(radius * std::cos(t), height, radius * std::sin(t));
        cams.push_back(Camera::look_at(eye, target, Vec3d::UnitY(), focal, width, height_px));
    }
    return cams;
}

std::vector<CameraView> paint_label_views(const SplatScene& scene, const std::vector<Camera>& cameras)
{
    std::vector<CameraView> views;
    for (const auto& cam : cameras) {
        CameraView v{cam, LabelImage(cam.width, cam.height, 0)};
        Image<double> depth(cam.width, cam.height, std::numeric_limits<double>::infinity());
        for (const auto& k : scene.kernels()) {
            const auto p = project_point(cam, k.position.cast<double>());
            if (!p) continue;
            const double r = std::max(1.0, 1.5 * cam.fx * double(k.scale.maxCoeff()) / p->depth);
            const int x0 = int(std::floor(p->u - r)), x1 = int(std::ceil(p->u + r));
            const int y0 = int(std::floor(p->v - r)), y1 = int(std::ceil(p->v + r));
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    if (!v.mask.contains(x, y)) continue;
                    const double dx = x + 0.5 - p->u, dy = y + 0.5 - p->v;
                    if (dx * dx + dy * dy > r * r) continue;
                    if (p->depth >= depth.at(x, y)) continue;
                    depth.at(x, y) = p->depth;
                    v.mask.at(x, y) = std::uint16_t(k.object_id);
                }
        }
        views.push_back(std::move(v));
    }
    return views;
}

SynthScene make_blob_scene(std::uint32_t seed, std::size_t kernels_per_blob)
{
    SynthScene s;
    s.name = "blobs";
    std::mt19937 rng(seed);
    std::normal_distribution<double> n01(0, 1);
    const Vec3d centers[3] = {{-0.6, 0.0, 0.0}, {0.6, 0.0, 0.2}, {0.0, 0.1, -0.6}};
    const Vec3f colors[3] = {{0.9f, 0.2f, 0.2f}, {0.2f, 0.9f, 0.2f}, {0.2f, 0.2f, 0.9f}};
    const double sigma = 0.1;
    for (std::uint32_t b = 0; b < 3; ++b) {
        s.object_ids.push_back(b + 1);
        for (std::size_t i = 0; i < kernels_per_blob; ++i) {
            const Vec3d p = centers[b] + sigma * Vec3d(n01(rng), n01(rng), n01(rng));
            s.scene.push_back(make_kernel(p.cast<float>(), Vec3f::Constant(0.015f), colors[b], b + 1));
        }
    }
    assign_identity_features(s.scene, s.classifier, 4, seed + 1);
    s.views = paint_label_views(s.scene, ring_cameras(12, Vec3d::Zero(), 3.0, 1.5, 300, 320, 240));
    return s;
}

SplatScene make_powder_cup(double h, int cells, int rows, std::uint32_t label)
{
    SplatScene s;
    const Vec3f wall(0.6f, 0.7f, 0.8f), powder(0.35f, 0.2f, 0.08f);
    const float scale = float(0.5 * h);
    // Lattice points spaced h apart, so each kernel lands in its own voxel.
    const int level = rows / 2;
    for (int j = 0; j < rows; ++j)
        for (int k = 0; k < cells; ++k)
            for (int i = 0; i < cells; ++i) {
                const bool side = i == 0 || k == 0 || i == cells - 1 || k == cells - 1;
                const bool floor = j == 0, surface = j == level && !side;
                if (!(side || floor || surface)) continue;
                const Vec3f p = (Vec3d(i, j, k) * h).cast<float>();
                s.push_back(make_kernel(p, Vec3f::Constant(scale), surface ? powder : wall, label));
            }
    return s;
}

SynthScene make_labdesk(std::uint32_t seed)
{
    SynthScene s;
    s.name = "labdesk";
    const Vec3f desk(0.55f, 0.4f, 0.25f);
    for (double x = -0.6; x <= 0.6 + 1e-9; x += 0.02)
        for (double z = -0.4; z <= 0.4 + 1e-9; z += 0.02)
            s.scene.push_back(make_kernel(Vec3f(float(x), 0.f, float(z)), Vec3f(0.012f, 0.002f, 0.012f), desk, 0));
    add_box(s.scene, {0.3, 0.0, 0.2}, {0.5, 0.05, 0.35}, 0.012, {0.2f, 0.3f, 0.6f}, 0, 0.006f);

    const double lift = 0.004;
    add_sphere(s.scene, {-0.35, 0.05 + lift, -0.15}, {0.05, 0.05, 0.05}, 500, {0.7f, 0.5f, 0.3f}, 1, 0.006f);
    add_box(s.scene, {-0.17, lift, -0.25}, {-0.03, 0.07 + lift, -0.16}, 0.01, {0.95f, 0.95f, 0.95f}, 2, 0.005f);
    add_sphere(s.scene, {0.15, 0.035 + lift, -0.2}, {0.07, 0.035, 0.05}, 500, {0.8f, 0.2f, 0.4f}, 3, 0.006f);
    add_box(s.scene, {-0.41, lift, 0.135}, {-0.19, 0.03 + lift, 0.165}, 0.008, {0.9f, 0.8f, 0.1f}, 4, 0.004f);
    add_cup(s.scene, {0.0, lift, 0.1}, 0.045, 0.1, 0.008, {0.9f, 0.9f, 0.85f}, 5, 0.004f);

    const SplatScene cup = make_powder_cup(0.008, 14, 8, 6);
    for (auto k : cup.kernels()) {
        k.position += Vec3f(0.2f, float(lift), 0.0f);
        s.scene.push_back(std::move(k));
    }
    s.object_ids = {1, 2, 3, 4, 5, 6};
    assign_identity_features(s.scene, s.classifier, 7, seed);
    s.views = paint_label_views(s.scene, ring_cameras(12, {0, 0.05, 0}, 1.0, 0.7, 320, 320, 240));
    return s;
}

void write_labdesk(const SynthScene& s, const std::filesystem::path& dir, const std::filesystem::path& fixture_dir)
{
    std::filesystem::create_directories(dir);
    save_ply(s.scene, dir / "scene.ply");
    save_classifier(s.classifier, dir / "classifier.bin");
    save_camera_views(s.views, dir / "cameras.json");

    nlohmann::json objects = nlohmann::json::array();
    for (auto id : s.object_ids) {
        nlohmann::json o{{"id", id}};
        if (id == 6) o["fill"] = {{"h", 0.008}, {"shrink", 0.1}, {"s_f", 0.6}};
        else o["particle_cells"] = 8;
        objects.push_back(o);
    }
    const nlohmann::json bundle{
        {"scene", s.name},
        {"ply", "scene.ply"},
        {"cameras", "cameras.json"},
        {"classifier", "classifier.bin"},
        {"sigma1", 0.3},
        {"sigma2", 0.3},
        {"objects", objects},
        {"materials", {{"fixtures", std::filesystem::absolute(fixture_dir).string()}}},
        {"a", 1.0},
        {"plane", "fit"},
        {"sdf", {{"h", 0.008}}},
        {"solver", {{"dt", 0.02}, {"substeps", 4}, {"iterations", 8}, {"gravity", {0, -9.8, 0}}, {"deterministic", true}}},
    };
    std::ofstream(dir / "bundle.json") << bundle.dump(2) << "\n";
    std::ofstream(dir / "rest.json") << nlohmann::json{{"actions", nlohmann::json::array()}}.dump(2) << "\n";
    const nlohmann::json interact{
        {"actions",
         {{{"type", "spring"}, {"start", 0.2}, {"end", 1.2}, {"object", 1}, {"grab", {-0.35, 0.1, -0.15}},
           {"anchor", {-0.35, 0.4, -0.15}}, {"stiffness", 40.0}, {"damping", 2.0}, {"radius", 0.03}},
          {{"type", "drag"}, {"start", 0.4}, {"end", 1.4}, {"object", 4}, {"pick", {-0.3, 0.02, 0.15}},
           {"path", {{0.4, -0.3, 0.05, 0.15}, {1.4, -0.3, 0.15, 0.3}}}},
          {{"type", "spawn_projectile"}, {"start", 0.6}, {"radius", 0.02}, {"mass", 2.0},
           {"origin", {0.0, 0.06, 0.4}}, {"velocity", {0.0, 0.0, -8.0}}},
          {{"type", "release"}, {"start", 1.6}}}},
    };
    std::ofstream(dir / "interact.json") << interact.dump(2) << "\n";
}

} // namespace splatdyn::synth
