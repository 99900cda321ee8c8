// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace splatdyn {

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Mat4 = Eigen::Matrix<Scalar, 4, 4>;
template <typename Scalar>
using Quat = Eigen::Quaternion<Scalar>;

using Vec3f = Vec3<float>;
using Vec3d = Vec3<double>;
using Vec3i = Eigen::Vector3i;
using Mat3f = Mat3<float>;
using Mat3d = Mat3<double>;
using Quatf = Quat<float>;
using Quatd = Quat<double>;

/// Sorted list of kernel indices.
using IndexSet = std::vector<std::uint32_t>;

/// Raised for invalid arguments that violate a documented precondition.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when an operation is called on data in the wrong state
/// (e.g. segmenting a scene that carries no identity features).
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Applies a unit quaternion to a vector (q v q^-1) without building a matrix.
template <typename Scalar>
inline Vec3<Scalar> rotate(const Quat<Scalar>& q, const Vec3<Scalar>& v)
{
    const Vec3<Scalar> u = q.vec();
    const Vec3<Scalar> t = Scalar(2) * u.cross(v);
    return v + q.w() * t + u.cross(t);
}

/// Angular distance-like metric between rotations: 1 - |<a,b>|, zero iff equal up to sign.
template <typename Scalar>
inline Scalar quat_distance(const Quat<Scalar>& a, const Quat<Scalar>& b)
{
    return Scalar(1) - std::abs(a.coeffs().dot(b.coeffs()));
}

} // namespace splatdyn
