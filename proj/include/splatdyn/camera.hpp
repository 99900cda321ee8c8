// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/image.hpp"
#include "splatdyn/types.hpp"

#include <filesystem>
#include <optional>

namespace splatdyn {

/// Pinhole camera, OpenCV convention: +z forward, +x right, +y down.
/// `rotation`/`translation` map world to camera: x_c = R x_w + t.
struct Camera {
    double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
    int width = 0, height = 0;
    Mat3d rotation = Mat3d::Identity();
    Vec3d translation = Vec3d::Zero();

    Vec3d to_camera(const Vec3d& world) const { return rotation * world + translation; }
    Vec3d center() const { return -rotation.transpose() * translation; }
    void validate() const;

    /// Camera at `eye` looking at `target`; `up` is the approximate world up direction.
    static Camera look_at(const Vec3d& eye, const Vec3d& target, const Vec3d& up, double focal, int width,
                          int height);
};

/// A camera together with its per-pixel object label mask.
struct CameraView {
    Camera camera;
    LabelImage mask;

    void validate() const;
};

struct Projection {
    double u, v, depth;
};

/// Pinhole projection of a world point; nullopt when the point is on or behind the image plane.
std::optional<Projection> project_point(const Camera& camera, const Vec3d& world);

/// Reads a JSON array of {fx,fy,cx,cy,width,height,R[9] row-major,t[3],mask_path}.
/// Relative mask paths resolve against the JSON file's directory.
std::vector<CameraView> load_camera_views(const std::filesystem::path& json_path);
void save_camera_views(const std::vector<CameraView>& views, const std::filesystem::path& json_path);

} // namespace splatdyn
