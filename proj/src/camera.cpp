// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/camera.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <iomanip>

namespace splatdyn {

void Camera::validate() const
{
    if (!(fx > 0.0) || !(fy > 0.0)) throw ArgumentError("camera focal lengths must be positive");
    if (width <= 0 || height <= 0) throw ArgumentError("camera image size must be positive");
}

Camera Camera::look_at(const Vec3d& eye, const Vec3d& target, const Vec3d& up, double focal, int width,
                       int height)
{
    const Vec3d forward = (target - eye).normalized();
    Vec3d right = forward.cross(up);
    if (right.norm() < 1e-9) right = forward.unitOrthogonal();
    right.normalize();
    const Vec3d down = forward.cross(right);
    Camera cam;
    cam.fx = cam.fy = focal;
    cam.cx = width / 2.0;
    cam.cy = height / 2.0;
    cam.width = width;
    cam.height = height;
    cam.rotation.row(0) = right.transpose();
    cam.rotation.row(1) = down.transpose();
    cam.rotation.row(2) = forward.transpose();
    cam.translation = -cam.rotation * eye;
    return cam;
}

void CameraView::validate() const
{
    camera.validate();
    if (mask.width != camera.width || mask.height != camera.height)
        throw ArgumentError("mask dimensions do not match camera image size");
}

std::optional<Projection> project_point(const Camera& camera, const Vec3d& world)
{
    const Vec3d c = camera.to_camera(world);
    if (c.z() <= 0.0) return std::nullopt;
    return Projection{camera.fx * c.x() / c.z() + camera.cx, camera.fy * c.y() / c.z() + camera.cy, c.z()};
}

std::vector<CameraView> load_camera_views(const std::filesystem::path& json_path)
{
    std::ifstream in(json_path);
    if (!in) throw std::runtime_error("cannot open camera file '" + json_path.string() + "'");
    const auto doc = nlohmann::json::parse(in);
    if (!doc.is_array()) throw std::runtime_error("camera file must hold a JSON array");
    std::vector<CameraView> views;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& j = doc[i];
        try {
            CameraView v;
            v.camera.fx = j.at("fx").get<double>();
            v.camera.fy = j.at("fy").get<double>();
            v.camera.cx = j.at("cx").get<double>();
            v.camera.cy = j.at("cy").get<double>();
            v.camera.width = j.at("width").get<int>();
            v.camera.height = j.at("height").get<int>();
            const auto r = j.at("R").get<std::vector<double>>();
            const auto t = j.at("t").get<std::vector<double>>();
            if (r.size() != 9 || t.size() != 3) throw std::runtime_error("R needs 9 values and t needs 3");
            for (int a = 0; a < 3; ++a) {
                for (int b = 0; b < 3; ++b) v.camera.rotation(a, b) = r[3 * a + b];
                v.camera.translation[a] = t[a];
            }
            std::filesystem::path mask = j.at("mask_path").get<std::string>();
            if (mask.is_relative()) mask = json_path.parent_path() / mask;
            v.mask = read_label_png(mask);
            v.validate();
            views.push_back(std::move(v));
        } catch (const std::exception& e) {
            throw std::runtime_error("camera " + std::to_string(i) + ": " + e.what());
        }
    }
    return views;
}

void save_camera_views(const std::vector<CameraView>& views, const std::filesystem::path& json_path)
{
    nlohmann::json doc = nlohmann::json::array();
    for (std::size_t i = 0; i < views.size(); ++i) {
        const auto& c = views[i].camera;
        char name[32];
        std::snprintf(name, sizeof(name), "mask_%03zu.png", i);
        write_label_png(views[i].mask, json_path.parent_path() / name);
        std::vector<double> r(9), t(3);
        for (int a = 0; a < 3; ++a) {
            for (int b = 0; b < 3; ++b) r[3 * a + b] = c.rotation(a, b);
            t[a] = c.translation[a];
        }
        doc.push_back({{"fx", c.fx}, {"fy", c.fy}, {"cx", c.cx}, {"cy", c.cy}, {"width", c.width},
                       {"height", c.height}, {"R", r}, {"t", t}, {"mask_path", name}});
    }
    std::ofstream out(json_path);
    if (!out) throw std::runtime_error("cannot write '" + json_path.string() + "'");
    out << std::setw(2) << doc << "\n";
}

} // namespace splatdyn
