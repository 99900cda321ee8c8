// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/filling.hpp"
#include "splatdyn/generate.hpp"
#include "splatdyn/kdtree.hpp"
#include "splatdyn/synth.hpp"
#include "splatdyn/voxel_grid.hpp"

#include "support/test_support.hpp"

#include <doctest.h>

#include <deque>

using namespace splatdyn;

namespace {

/// Empty cells not reachable from the grid boundary through empty face neighbors.
std::vector<char> enclosed_cells(const VoxelGrid& g)
{
    std::vector<char> reached(g.cell_count(), 0);
    std::deque<Vec3i> queue;
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
        const Vec3i c = g.coords(i);
        const bool boundary = (c.array() == 0).any() || (c.array() == g.dims().array() - 1).any();
        if (boundary && g.state(i) != CellState::Occupied) {
            reached[i] = 1;
            queue.push_back(c);
        }
    }
    while (!queue.empty()) {
        const Vec3i c = queue.front();
        queue.pop_front();
        g.for_each_neighbor(c, [&](const Vec3i& n) {
            const auto idx = g.index(n);
            if (reached[idx] || g.state(idx) == CellState::Occupied) return;
            reached[idx] = 1;
            queue.push_back(n);
        });
    }
    std::vector<char> enclosed(g.cell_count(), 0);
    for (std::size_t i = 0; i < g.cell_count(); ++i)
        enclosed[i] = !reached[i] && g.state(i) != CellState::Occupied;
    return enclosed;
}

std::vector<Vec3d> centers(const SplatScene& s)
{
    std::vector<Vec3d> out;
    for (const auto& k : s.kernels()) out.push_back(k.position.cast<double>());
    return out;
}

} // namespace

TEST_SUITE("filling")
{
    TEST_CASE("voxelize puts lattice points at cell centers with padding")
    {
        const std::vector<Vec3d> pts{{0, 0, 0}, {0.3, 0.1, 0.2}};
        const VoxelGrid g = voxelize(pts, 0.1, 1);
        CHECK(g.dims() == Vec3i(6, 4, 5));
        CHECK(g.count(CellState::Occupied) == 2);
        CHECK(g.cell_of(pts[0]) == Vec3i(1, 1, 1));
        CHECK((g.center(g.cell_of(pts[1])) - pts[1]).norm() < 1e-12);
        for (std::size_t i = 0; i < g.cell_count(); ++i) CHECK(g.index(g.coords(i)) == i);
    }

    TEST_CASE("six-direction interior equals the flood-fill oracle on closed shells")
    {
        // Hollow boxes with and without a dent; every enclosed empty cell must be Interior6.
        for (int n : {3, 5, 8}) {
            std::vector<Vec3d> pts;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    for (int k = 0; k < n; ++k)
                        if (i == 0 || j == 0 || k == 0 || i == n - 1 || j == n - 1 || k == n - 1)
                            pts.emplace_back(i * 0.1, j * 0.1, k * 0.1);
            VoxelGrid g = voxelize(pts, 0.1);
            classify_interior_6dir(g);
            const auto oracle = enclosed_cells(g);
            for (std::size_t i = 0; i < g.cell_count(); ++i)
                CHECK((g.state(i) == CellState::Interior6) == bool(oracle[i]));
            CHECK(g.count(CellState::Interior6) == std::size_t((n - 2) * (n - 2) * (n - 2)));
        }
    }

    TEST_CASE("open cup: interior stops at the powder, five directions cover the column above")
    {
        const int cells = 10, rows = 8, level = rows / 2;
        const double h = 0.01;
        const SplatScene cup = synth::make_powder_cup(h, cells, rows);
        VoxelGrid g = voxelize(centers(cup), h);
        classify_interior_6dir(g);
        const auto oracle = enclosed_cells(g);
        std::size_t column = 0, column_interior = 0, column_above = 0;
        for (std::size_t i = 0; i < g.cell_count(); ++i) {
            CHECK((g.state(i) == CellState::Interior6) == bool(oracle[i]));
            const Vec3i c = g.coords(i) - Vec3i::Ones();
            if (c.x() >= 1 && c.x() <= cells - 2 && c.z() >= 1 && c.z() <= cells - 2 && c.y() > level &&
                c.y() < rows) {
                ++column;
                column_interior += g.state(i) == CellState::Interior6;
            }
        }
        CHECK(column == std::size_t((cells - 2) * (cells - 2) * (rows - 1 - level)));
        CHECK(column_interior == 0);
        classify_above_surface_5dir(g);
        for (std::size_t i = 0; i < g.cell_count(); ++i) {
            const Vec3i c = g.coords(i) - Vec3i::Ones();
            if (c.x() >= 1 && c.x() <= cells - 2 && c.z() >= 1 && c.z() <= cells - 2 && c.y() > level &&
                c.y() < rows)
                column_above += g.state(i) == CellState::AboveSurface5;
        }
        CHECK(column_above == column);
        // Without shrink the inner wall faces border the column too.
        CHECK(extract_surface(g, 0.0).size() == std::size_t((cells - 2) * (cells - 2) + 4 * (cells - 2) * (rows - 1 - level)));
        // Shrinking by 0.2 of the 9-cell span keeps the 6x6 powder cells away from the walls.
        const auto surface = extract_surface(g, 0.2);
        CHECK(surface.size() == 36);
        for (auto idx : surface) CHECK(g.coords(idx).y() - 1 == level);
        CHECK(std::is_sorted(surface.begin(), surface.end()));
        CHECK_THROWS_AS(extract_surface(g, 0.5), ArgumentError);
    }

    TEST_CASE("up axis choice follows gravity")
    {
        CHECK(AxisDir::up_from_gravity({0, -9.81, 0}).axis == 1);
        CHECK(AxisDir::up_from_gravity({0, -9.81, 0}).sign == 1);
        CHECK(AxisDir::up_from_gravity({0, 0, 9.81}).axis == 2);
        CHECK(AxisDir::up_from_gravity({0, 0, 9.81}).sign == -1);
    }

    TEST_CASE("fill_granular count equals the enclosed-cell oracle and scales are isotropic")
    {
        const int cells = 12, rows = 10, level = rows / 2;
        const double h = 0.01;
        const SplatScene cup = synth::make_powder_cup(h, cells, rows);
        FillOptions opt;
        opt.spacing = h;
        opt.scale_factor = 0.6;
        const auto r = fill_granular(cup, opt);
        VoxelGrid g = voxelize(centers(cup), h);
        const auto oracle = enclosed_cells(g);
        const auto enclosed = std::size_t(std::count(oracle.begin(), oracle.end(), 1));
        CHECK(enclosed == std::size_t((cells - 2) * (cells - 2) * (level - 1)));
        CHECK(r.report.filled_kernels == enclosed);
        CHECK(r.granules.size() == r.report.surface_kernels + enclosed);
        for (const auto& k : r.granules.kernels()) {
            CHECK(k.scale.x() == k.scale.y());
            CHECK(k.scale.y() == k.scale.z());
            CHECK(k.scale.x() == float(0.5 * h) * 0.6f);
        }
        for (auto i : r.surface_indices) CHECK(std::abs(cup[i].position.y() - float(level * h)) < 1e-6f);
        // Filled kernels copy the nearest surface kernel's color.
        for (std::size_t i = r.report.surface_kernels; i < r.granules.size(); ++i)
            CHECK(r.granules[i].sh_dc == r.granules[0].sh_dc);
        CHECK(r.report.to_json()["voxel_counts"]["interior_6"] == r.report.interior6);
    }

    TEST_CASE("above band adds the layer over the surface")
    {
        const SplatScene cup = synth::make_powder_cup(0.01, 10, 8);
        FillOptions opt;
        opt.spacing = 0.01;
        opt.shrink = 0.2;
        const auto base = fill_granular(cup, opt);
        opt.include_above_band = true;
        const auto band = fill_granular(cup, opt);
        CHECK(band.report.filled_kernels == base.report.filled_kernels + 36);
    }

    TEST_CASE("fill errors")
    {
        const SplatScene cup = synth::make_powder_cup(0.01, 8, 6);
        FillOptions bad;
        bad.scale_factor = 0;
        CHECK_THROWS_AS(fill_granular(cup, bad), ArgumentError);
        CHECK_THROWS_AS(fill_granular(SplatScene()), ArgumentError);
        // A solid block has no open surface.
        FillOptions opt;
        opt.spacing = 0.01;
        CHECK_THROWS_AS(fill_granular(testing::lattice_box({6, 6, 6}, 0.01, Vec3d::Zero()), opt), StateError);
        CHECK(auto_spacing(cup, 7) == doctest::Approx(0.01));
    }
}

TEST_SUITE("kdtree")
{
    TEST_CASE("knn equals brute force with lowest-index tie breaking")
    {
        std::mt19937 rng(21);
        std::uniform_int_distribution<int> grid(0, 6);
        std::vector<Vec3d> pts;
        // Integer lattice points with duplicates produce many exact distance ties.
        for (int i = 0; i < 800; ++i) pts.emplace_back(grid(rng), grid(rng), grid(rng));
        const KdTree<double> tree(pts);
        for (int q = 0; q < 200; ++q) {
            const Vec3d x(grid(rng) + 0.5 * (q % 2), grid(rng), grid(rng));
            for (std::size_t k : {1u, 4u, 9u, 30u}) {
                std::vector<std::pair<double, std::uint32_t>> all;
                for (std::uint32_t i = 0; i < pts.size(); ++i) all.emplace_back((pts[i] - x).squaredNorm(), i);
                std::sort(all.begin(), all.end());
                const auto got = tree.knn(x, k);
                REQUIRE(got.size() == k);
                for (std::size_t j = 0; j < k; ++j) {
                    CHECK(got[j].index == all[j].second);
                    CHECK(got[j].distance_squared == all[j].first);
                }
            }
        }
        CHECK(tree.knn(Vec3d::Zero(), 5000).size() == pts.size());
        CHECK(KdTree<double>().knn(Vec3d::Zero(), 3).empty());
    }
}

TEST_SUITE("particles")
{
    TEST_CASE("a 2x2x2 deformable cube yields 8 particles, 12 edges and 8 corner clusters")
    {
        const double h = 0.05;
        const auto box = testing::lattice_box({2, 2, 2}, h, Vec3d(1, 2, 3));
        const auto d = generate_particles(box, Phase::Deformable, h, 4, 9);
        CHECK(d.particles.size() == 8);
        CHECK(d.constraints.distance.size() == 12);
        CHECK(d.constraints.clusters.size() == 8);
        for (const auto& c : d.constraints.distance) CHECK(c.rest_length == h);
        for (std::size_t i = 0; i < 8; ++i) {
            CHECK(d.particles.radius[i] == 0.5 * h);
            CHECK(d.particles.object[i] == 4);
            CHECK(d.particles.body[i] == 9);
            CHECK(d.constraints.adjacency[i].size() == 3);
        }
        CHECK_NOTHROW(d.constraints.validate(8));
        const auto r = generate_particles(box, Phase::Rigid, h);
        CHECK(r.particles.size() == 8);
        REQUIRE(r.constraints.clusters.size() == 1);
        CHECK(r.constraints.clusters[0].rigid);
        CHECK(r.constraints.clusters[0].size() == 8);
        CHECK(r.constraints.adjacency[0].size() == 7);
        CHECK((r.constraints.clusters[0].rest_centroid - Vec3d(1.025, 2.025, 3.025)).norm() < 1e-6);
    }

    TEST_CASE("deformable solids include interior cells")
    {
        const auto box = testing::lattice_box({4, 4, 4}, 0.02, Vec3d::Zero());
        const auto d = generate_particles(box, Phase::Deformable, 0.02);
        CHECK(d.particles.size() == 64);
        CHECK(d.constraints.distance.size() == 3 * 4 * 4 * 3);
    }

    TEST_CASE("granular and projectile guards")
    {
        const auto box = testing::lattice_box({3, 3, 3}, 0.02, Vec3d::Zero());
        auto aniso = box;
        aniso[4].scale.x() *= 2;
        CHECK_THROWS_AS(generate_particles(aniso, Phase::Granular, 0.02), StateError);
        CHECK(generate_particles(box, Phase::Granular, 0.02).particles.size() == 27);
        CHECK_THROWS_AS(generate_particles(box, Phase::Projectile, 0.02), ArgumentError);
        CHECK_THROWS_AS(generate_particles(box, Phase::Rigid, 0.0), ArgumentError);
        CHECK_THROWS_AS(generate_particles(SplatScene(), Phase::Rigid, 0.02), ArgumentError);
    }
}
