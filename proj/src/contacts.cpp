// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/contacts.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

namespace splatdyn {
namespace {

struct CellKey {
    std::int64_t x, y, z;
    bool operator==(const CellKey&) const = default;
};

struct CellHash {
    std::size_t operator()(const CellKey& k) const
    {
        return std::size_t((k.x * 73856093) ^ (k.y * 19349663) ^ (k.z * 83492791));
    }
};

bool collides(const ParticleSet& p, std::uint32_t i, std::uint32_t j)
{
    if (p.body[i] != p.body[j]) return true;
    return p.phase[i] == Phase::Granular && p.phase[j] == Phase::Granular;
}

} // namespace

Vec3d coulomb_correction(const Vec3d& tangent, double depth, double mu)
{
    const double t = tangent.norm();
    const double limit = mu * depth;
    if (t <= 0 || mu <= 0) return Vec3d::Zero();
    if (t <= limit) return -tangent;
    return -tangent * (limit / t);
}

std::vector<ContactPair> find_contact_pairs(const ParticleSet& p, double margin)
{
    std::vector<ContactPair> pairs;
    if (p.size() < 2) return pairs;
    const double rmax = *std::max_element(p.radius.begin(), p.radius.end());
    const double cell = std::max(2.0 * rmax + margin, 1e-6);
    std::unordered_map<CellKey, std::vector<std::uint32_t>, CellHash> grid;
    grid.reserve(p.size());
    auto key = [&](const Vec3d& x) {
        return CellKey{std::int64_t(std::floor(x.x() / cell)), std::int64_t(std::floor(x.y() / cell)),
                       std::int64_t(std::floor(x.z() / cell))};
    };
    for (std::uint32_t i = 0; i < p.size(); ++i) grid[key(p.position[i])].push_back(i);
    for (std::uint32_t i = 0; i < p.size(); ++i) {
        const CellKey k = key(p.position[i]);
        for (int dx = -1; dx <= 1; ++dx)
            for (int dy = -1; dy <= 1; ++dy)
                for (int dz = -1; dz <= 1; ++dz) {
                    auto it = grid.find({k.x + dx, k.y + dy, k.z + dz});
                    if (it == grid.end()) continue;
                    for (auto j : it->second) {
                        if (j <= i || !collides(p, i, j)) continue;
                        const double reach = p.radius[i] + p.radius[j] + margin;
                        if ((p.position[i] - p.position[j]).squaredNorm() < reach * reach) pairs.push_back({i, j});
                    }
                }
    }
    std::sort(pairs.begin(), pairs.end(), [](const ContactPair& a, const ContactPair& b) {
        return a.i != b.i ? a.i < b.i : a.j < b.j;
    });
    return pairs;
}

void project_contacts(ParticleSet& p, std::span<const ContactPair> pairs, std::vector<Vec3d>* external)
{
    for (const auto& c : pairs) {
        const double wi = p.inv_mass[c.i], wj = p.inv_mass[c.j];
        const double wsum = wi + wj;
        if (wsum <= 0) continue;
        const Vec3d d = p.position[c.i] - p.position[c.j];
        const double target = p.radius[c.i] + p.radius[c.j];
        Vec3d n;
        double depth;
        const Vec3d d0 = p.previous[c.i] - p.previous[c.j];
        const Vec3d motion = d - d0;
        if (motion.squaredNorm() > 0.25 * target * target && d0.squaredNorm() >= target * target) {
            // Fast pair that started apart: separate along the normal at the time of impact,
            // so a sphere that crossed a particle's center is not pushed out the far side.
            const double a = motion.squaredNorm(), b = 2 * d0.dot(motion), cc = d0.squaredNorm() - target * target;
            const double disc = b * b - 4 * a * cc;
            if (disc < 0) continue;
            const double t = (-b - std::sqrt(disc)) / (2 * a);
            if (t < 0 || t > 1) continue;
            n = (d0 + t * motion) / target;
            depth = target - d.dot(n);
            if (depth <= 0) continue;
        } else {
            const double dist = d.norm();
            if (dist >= target) continue;
            n = dist > 1e-12 ? Vec3d(d / dist) : Vec3d::UnitY();
            depth = target - dist;
        }
        Vec3d di = (wi / wsum) * depth * n;
        Vec3d dj = -(wj / wsum) * depth * n;
        p.position[c.i] += di;
        p.position[c.j] += dj;

        const double mu = 0.5 * (p.friction[c.i] + p.friction[c.j]);
        if (mu > 0) {
            const Vec3d rel = (p.position[c.i] - p.previous[c.i]) - (p.position[c.j] - p.previous[c.j]);
            const Vec3d tangent = rel - rel.dot(n) * n;
            const Vec3d corr = coulomb_correction(tangent, depth, mu);
            const Vec3d fi = (wi / wsum) * corr, fj = -(wj / wsum) * corr;
            p.position[c.i] += fi;
            p.position[c.j] += fj;
            di += fi;
            dj += fj;
        }
        if (external && p.body[c.i] != p.body[c.j]) {
            (*external)[c.i] += di;
            (*external)[c.j] += dj;
        }
    }
}

void project_granular_contacts(ParticleSet& p, double radius, double mu)
{
    std::fill(p.radius.begin(), p.radius.end(), radius);
    std::fill(p.friction.begin(), p.friction.end(), mu);
    const auto pairs = find_contact_pairs(p, 0.0);
    project_contacts(p, pairs);
}

} // namespace splatdyn
