// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/types.hpp"

#include <cmath>

namespace splatdyn {

/// Rotational part of A via iterative rotation extraction; `q` is the warm start and
/// receives the result. Converges to the polar rotation for det(A) > 0.
/// Returns the number of iterations used.
template <typename Scalar>
int extract_rotation(const Mat3<Scalar>& a, Quat<Scalar>& q, int max_iterations = 24,
                     Scalar tolerance = Scalar(1e-11))
{
    int it = 0;
    for (; it < max_iterations; ++it) {
        const Mat3<Scalar> r = q.toRotationMatrix();
        const Vec3<Scalar> num = r.col(0).cross(a.col(0)) + r.col(1).cross(a.col(1)) + r.col(2).cross(a.col(2));
        const Scalar den = std::abs(r.col(0).dot(a.col(0)) + r.col(1).dot(a.col(1)) + r.col(2).dot(a.col(2))) +
                           Scalar(1e-12);
        const Vec3<Scalar> omega = num / den;
        const Scalar w = omega.norm();
        if (w < tolerance) break;
        // Below 1e-2 rad the first-order quaternion is accurate to w^3/12 and the fixed point
        // is unchanged, so skip the trigonometry.
        if (w < Scalar(1e-2))
            q = Quat<Scalar>(Scalar(1), omega.x() / 2, omega.y() / 2, omega.z() / 2) * q;
        else
            q = Quat<Scalar>(Eigen::AngleAxis<Scalar>(w, omega / w)) * q;
        q.normalize();
    }
    return it;
}

/// Cofactor-based rank test: true when A has rank <= 1 relative to its magnitude,
/// i.e. the point cloud it came from is collinear or coincident.
template <typename Scalar>
bool is_rank_deficient(const Mat3<Scalar>& a, Scalar relative = Scalar(1e-10))
{
    const Scalar n2 = a.squaredNorm();
    if (n2 <= std::numeric_limits<Scalar>::min()) return true;
    const Scalar cof = a.col(0).cross(a.col(1)).squaredNorm() + a.col(1).cross(a.col(2)).squaredNorm() +
                       a.col(2).cross(a.col(0)).squaredNorm();
    return cof <= relative * n2 * n2;
}

} // namespace splatdyn
