// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/constraints.hpp"

#include <span>

namespace splatdyn {

struct FractureOptions {
    int seeds = 6;
    std::size_t min_fragment = 4;
};

/// Partitions `members` by multi-source breadth-first growth over `adjacency` (restricted to
/// members) from seeds chosen at the highest `stress`, spread apart so they do not cluster at
/// one contact. Components unreachable from any seed become their own fragments, and fragments
/// smaller than min_fragment merge into an adjacent fragment. Returns sorted index sets that
/// partition `members`, ordered by their smallest index.
std::vector<IndexSet> grow_fragments(std::span<const std::uint32_t> members,
                                     const std::vector<std::vector<std::uint32_t>>& adjacency,
                                     std::span<const double> stress, std::span<const Vec3d> positions,
                                     const FractureOptions& options = {});

/// Replaces cluster `index` by one rigid cluster per fragment. The first fragment keeps the
/// cluster slot and body; the others get fresh clusters and bodies starting at `first_body`.
/// Rest offsets are recomputed from x0 and the fitted rotation is inherited. Adjacency links
/// across fragments are removed. Fragments are not fragile.
void split_cluster(ConstraintSet& constraints, ParticleSet& particles, std::size_t index,
                   const std::vector<IndexSet>& fragments, std::uint32_t first_body);

} // namespace splatdyn
