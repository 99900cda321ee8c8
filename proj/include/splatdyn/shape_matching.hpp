// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/constraints.hpp"

namespace splatdyn {

/// Largest singular value of a cluster's plastic matrix (the smallest is its inverse).
constexpr double kMaxPlasticStretch = 2.0;

struct ShapeMatchResult {
    Quatd rotation = Quatd::Identity();
    double deformation = 0; ///< ||A - R||_F of the linear fit; only computed when plasticity > 0
    bool degenerate = false;
    bool plastic_flow = false;
};

/// Fits the best rotation from the cluster's (plastically deformed) rest shape to the current
/// positions and moves members toward the goals c + R q_i by `stiffness`. When
/// `plasticity` > 0 and the deformation exceeds cluster.yield, that fraction of the excess
/// stretch is folded into the plastic state (renormalized to unit determinant) before the
/// goals are formed. Collinear or coincident clusters reuse the previous rotation and are flagged.
ShapeMatchResult project_shape_matching(ShapeCluster& cluster, ParticleSet& particles, double stiffness,
                                        double plasticity);

/// Mass used for weighting; pinned particles act as very heavy.
inline double matching_mass(const ParticleSet& p, std::size_t i) { return p.inv_mass[i] > 0 ? 1.0 / p.inv_mass[i] : 1e9; }

} // namespace splatdyn
