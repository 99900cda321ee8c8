// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/fracture.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>

namespace splatdyn {

std::vector<IndexSet> grow_fragments(std::span<const std::uint32_t> members,
                                     const std::vector<std::vector<std::uint32_t>>& adjacency,
                                     std::span<const double> stress, std::span<const Vec3d> positions,
                                     const FractureOptions& options)
{
    if (members.empty()) return {};
    constexpr int kNone = -1;
    std::vector<int> label(positions.size(), kNone);
    std::vector<char> inside(positions.size(), 0);
    for (auto m : members) inside[m] = 1;

    std::vector<std::uint32_t> order(members.begin(), members.end());
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return stress[a] != stress[b] ? stress[a] > stress[b] : a < b;
    });
    Vec3d lo = positions[members[0]], hi = lo;
    for (auto m : members) {
        lo = lo.cwiseMin(positions[m]);
        hi = hi.cwiseMax(positions[m]);
    }
    const std::size_t want = std::size_t(std::max(1, options.seeds));
    const double separation = (hi - lo).norm() / double(want);
    std::vector<std::uint32_t> seeds;
    for (auto m : order) {
        if (seeds.size() == want) break;
        const bool apart = std::all_of(seeds.begin(), seeds.end(), [&](std::uint32_t s) {
            return (positions[s] - positions[m]).norm() >= separation;
        });
        if (apart) seeds.push_back(m);
    }
    for (auto m : order) {
        if (seeds.size() == want) break;
        if (std::find(seeds.begin(), seeds.end(), m) == seeds.end()) seeds.push_back(m);
    }

    int fragments = 0;
    std::deque<std::uint32_t> queue;
    auto grow = [&]() {
        while (!queue.empty()) {
            const auto i = queue.front();
            queue.pop_front();
            for (auto j : adjacency[i]) {
                if (!inside[j] || label[j] != kNone) continue;
                label[j] = label[i];
                queue.push_back(j);
            }
        }
    };
    for (auto s : seeds) {
        label[s] = fragments++;
        queue.push_back(s);
    }
    grow();
    std::vector<std::uint32_t> sorted(members.begin(), members.end());
    std::sort(sorted.begin(), sorted.end());
    for (auto m : sorted) {
        if (label[m] != kNone) continue;
        label[m] = fragments++;
        queue.push_back(m);
        grow();
    }

    std::vector<std::size_t> size(std::size_t(fragments), 0);
    for (auto m : sorted) ++size[std::size_t(label[m])];
    for (bool changed = true; changed;) {
        changed = false;
        for (int f = 0; f < fragments; ++f) {
            if (size[std::size_t(f)] == 0 || size[std::size_t(f)] >= options.min_fragment) continue;
            std::map<int, std::size_t> links;
            for (auto m : sorted) {
                if (label[m] != f) continue;
                for (auto j : adjacency[m])
                    if (inside[j] && label[j] != f) ++links[label[j]];
            }
            if (links.empty()) continue;
            const auto best = std::max_element(links.begin(), links.end(), [](const auto& a, const auto& b) {
                return a.second < b.second;
            });
            for (auto m : sorted)
                if (label[m] == f) label[m] = best->first;
            size[std::size_t(best->first)] += size[std::size_t(f)];
            size[std::size_t(f)] = 0;
            changed = true;
        }
    }

    std::map<int, IndexSet> groups;
    for (auto m : sorted) groups[label[m]].push_back(m);
    std::vector<IndexSet> out;
    for (auto& [id, set] : groups) out.push_back(std::move(set));
    std::sort(out.begin(), out.end(), [](const IndexSet& a, const IndexSet& b) { return a.front() < b.front(); });
    return out;
}

void split_cluster(ConstraintSet& constraints, ParticleSet& particles, std::size_t index,
                   const std::vector<IndexSet>& fragments, std::uint32_t first_body)
{
    if (index >= constraints.clusters.size()) throw ArgumentError("cluster index out of range");
    if (fragments.empty()) return;
    const ShapeCluster parent = constraints.clusters[index];
    const std::uint32_t parent_body = parent.members.empty() ? 0 : particles.body[parent.members.front()];

    std::vector<int> owner(particles.size(), -1);
    for (std::size_t f = 0; f < fragments.size(); ++f)
        for (auto m : fragments[f]) owner[m] = int(f);

    for (std::size_t f = 0; f < fragments.size(); ++f) {
        ShapeCluster c;
        c.members = fragments[f];
        c.stiffness = parent.stiffness;
        c.rigid = true;
        c.rotation = parent.rotation;
        c.force_threshold = parent.force_threshold;
        c.reset_rest(particles);
        const std::uint32_t body = f == 0 ? parent_body : first_body + std::uint32_t(f - 1);
        for (auto m : c.members) particles.body[m] = body;
        if (f == 0) constraints.clusters[index] = std::move(c);
        else constraints.clusters.push_back(std::move(c));
    }
    for (const auto& frag : fragments) {
        for (auto m : frag) {
            if (m >= constraints.adjacency.size()) continue;
            auto& adj = constraints.adjacency[m];
            adj.erase(std::remove_if(adj.begin(), adj.end(), [&](std::uint32_t j) { return owner[j] != owner[m]; }),
                      adj.end());
        }
    }
}

} // namespace splatdyn
