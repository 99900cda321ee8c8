// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/shape_matching.hpp"

#include "splatdyn/polar.hpp"

#include <cmath>

namespace splatdyn {

ShapeMatchResult project_shape_matching(ShapeCluster& cluster, ParticleSet& particles, double stiffness,
                                        double plasticity)
{
    ShapeMatchResult result;
    const std::size_t n = cluster.members.size();
    if (n == 0) return result;

    double total = 0;
    Vec3d c = Vec3d::Zero();
    for (auto i : cluster.members) {
        const double m = matching_mass(particles, i);
        c += m * particles.position[i];
        total += m;
    }
    c /= total;

    Mat3d apq = Mat3d::Zero();
    for (std::size_t k = 0; k < n; ++k) {
        const auto i = cluster.members[k];
        apq.noalias() += matching_mass(particles, i) * (particles.position[i] - c) * cluster.offsets[k].transpose();
    }

    Quatd q = cluster.rotation;
    if (n < 2 || is_rank_deficient(apq)) {
        result.degenerate = true;
    } else {
        // Warm-started every solver iteration, so a loose per-call budget still converges.
        extract_rotation(apq, q, 8, 1e-9);
    }
    cluster.rotation = q;
    cluster.degenerate = result.degenerate;
    result.rotation = q;
    const Mat3d r = q.toRotationMatrix();

    if (!result.degenerate && n >= 4 && plasticity > 0) {
        Mat3d aqq = Mat3d::Zero();
        for (std::size_t k = 0; k < n; ++k)
            aqq.noalias() += matching_mass(particles, cluster.members[k]) * cluster.offsets[k] * cluster.offsets[k].transpose();
        if (std::abs(aqq.determinant()) > 1e-30) {
            const Mat3d a = apq * aqq.inverse();
            result.deformation = (a - r).norm();
            if (result.deformation > cluster.yield) {
                const Mat3d stretch = r.transpose() * a;
                const Mat3d sym = 0.5 * (stretch + stretch.transpose());
                const double excess = (result.deformation - cluster.yield) / result.deformation;
                Mat3d sp = (Mat3d::Identity() + plasticity * excess * (sym - Mat3d::Identity())) * cluster.plastic;
                // Bound the accumulated plastic stretch; unbounded flow feeds back into the goals.
                Eigen::JacobiSVD<Mat3d> svd(sp, Eigen::ComputeFullU | Eigen::ComputeFullV);
                const Vec3d sv = svd.singularValues().cwiseMax(1.0 / kMaxPlasticStretch).cwiseMin(kMaxPlasticStretch);
                sp = svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
                const double det = sp.determinant();
                if (det > 1e-6) {
                    sp /= std::cbrt(det);
                    cluster.plastic = sp;
                    for (std::size_t k = 0; k < n; ++k) cluster.offsets[k] = sp * cluster.rest_offsets[k];
                    result.plastic_flow = true;
                }
            }
        }
    }

    for (std::size_t k = 0; k < n; ++k) {
        const auto i = cluster.members[k];
        if (particles.inv_mass[i] == 0) continue;
        const Vec3d goal = c + r * cluster.offsets[k];
        particles.position[i] += stiffness * (goal - particles.position[i]);
    }
    return result;
}

} // namespace splatdyn
