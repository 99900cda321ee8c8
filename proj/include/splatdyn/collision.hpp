// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/gaussian.hpp"
#include "splatdyn/particles.hpp"

#include <optional>
#include <span>

namespace splatdyn {

/// Plane {x : normal . x = offset} with unit normal pointing away from the support.
struct SupportPlane {
    Vec3d normal = Vec3d::UnitY();
    double offset = 0;

    double signed_distance(const Vec3d& x) const { return normal.dot(x) - offset; }
};

class PlaneFitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct PlaneFitOptions {
    int iterations = 256;
    double inlier_distance = 0.01;  ///< tau, meters
    double min_inlier_fraction = 0.3;
    std::uint32_t seed = 1;
    Vec3d gravity{0, -9.8, 0};
};

/// Random-sample consensus over the points followed by a least-squares refit on the inliers.
/// The normal is oriented against gravity. Deterministic for a fixed seed.
SupportPlane fit_support_plane(std::span<const Vec3d> points, const PlaneFitOptions& options = {});
SupportPlane fit_support_plane(const SplatScene& environment, const PlaneFitOptions& options = {});

/// Signed distance samples on a regular grid; negative inside occupied space.
/// Outside values approximate the distance to the nearest occupied cell center.
class DistanceField {
public:
    DistanceField() = default;
    DistanceField(const Vec3d& origin, double spacing, const Vec3i& dims, std::vector<float> values);

    const Vec3d& origin() const { return origin_; }
    double spacing() const { return spacing_; }
    const Vec3i& dims() const { return dims_; }
    bool empty() const { return values_.empty(); }

    float value(int i, int j, int k) const { return values_[index(i, j, k)]; }
    Vec3d node(int i, int j, int k) const { return origin_ + Vec3d(i, j, k) * spacing_; }

    /// Trilinear interpolation; nullopt outside the grid.
    std::optional<double> sample(const Vec3d& x) const;
    /// Gradient of the trilinear interpolant; zero outside the grid.
    Vec3d gradient(const Vec3d& x) const;

private:
    std::size_t index(int i, int j, int k) const { return std::size_t(i) + std::size_t(dims_.x()) * (j + std::size_t(dims_.y()) * k); }

    Vec3d origin_ = Vec3d::Zero();
    double spacing_ = 1;
    Vec3i dims_ = Vec3i::Zero();
    std::vector<float> values_;
};

struct SdfOptions {
    std::size_t max_cells = std::size_t(1) << 25;
    int margin_cells = 4;
    int max_dilation_cells = 6;
    /// Extra region the field must cover (e.g. where objects move).
    std::optional<Aabb> cover;
};

/// Occupancy from kernel centers dilated by each kernel's largest axis, unsigned distance by
/// fast sweeping (exact near the occupied set), negated inside. Samples sit at cell centers.
/// Throws ArgumentError when the grid would exceed options.max_cells, suggesting a spacing.
DistanceField build_sdf(const SplatScene& environment, double spacing, const SdfOptions& options = {});

/// Distance-field build from an explicit occupancy grid (cell centers at origin + (i,j,k) h).
DistanceField sdf_from_occupancy(const Vec3d& origin, double spacing, const Vec3i& dims,
                                 const std::vector<std::uint8_t>& occupied);

/// Plane and field contact for particle spheres, with each particle's friction coefficient
/// applied against its substep start position. Corrections accumulate into `external` when given.
void collide_plane(ParticleSet& particles, const SupportPlane& plane, std::vector<Vec3d>* external = nullptr);
void collide_sdf(ParticleSet& particles, const DistanceField& field, std::vector<Vec3d>* external = nullptr);

} // namespace splatdyn
