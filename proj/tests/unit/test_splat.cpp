// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/gaussian.hpp"
#include "splatdyn/ply.hpp"

#include "../support/test_support.hpp"

#include <doctest.h>

#include <cstring>
#include <fstream>

using namespace splatdyn;
using splatdyn::testing::random_scene;
using splatdyn::testing::TempDir;

namespace {

/// Hand-built 3DGS PLY with raw (pre-activation) values, independent of the writer.
std::string raw_ply(const std::vector<std::array<float, 62>>& rows, const std::string& extra_header = "",
                    std::size_t truncate = 0)
{
    std::string h = "ply\nformat binary_little_endian 1.0\nelement vertex " + std::to_string(rows.size()) + "\n";
    for (const char* n : {"x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"}) h += std::string("property float ") + n + "\n";
    for (int i = 0; i < 45; ++i) h += "property float f_rest_" + std::to_string(i) + "\n";
    h += "property float opacity\n";
    for (const char* n : {"scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"})
        h += std::string("property float ") + n + "\n";
    h += extra_header + "end_header\n";
    std::string body(rows.size() * 62 * 4, '\0');
    for (std::size_t r = 0; r < rows.size(); ++r) std::memcpy(body.data() + r * 62 * 4, rows[r].data(), 62 * 4);
    body.resize(body.size() - truncate);
    return h + body;
}

std::array<float, 62> raw_row(Vec3f x, float opacity_logit, Vec3f log_scale, Eigen::Vector4f q_wxyz)
{
    std::array<float, 62> r{};
    r[0] = x.x(), r[1] = x.y(), r[2] = x.z();
    r[6] = 0.1f, r[7] = 0.2f, r[8] = 0.3f;
    for (int i = 0; i < 45; ++i) r[9 + i] = 0.01f * float(i);
    r[54] = opacity_logit;
    r[55] = log_scale.x(), r[56] = log_scale.y(), r[57] = log_scale.z();
    for (int i = 0; i < 4; ++i) r[58 + i] = q_wxyz[i];
    return r;
}

} // namespace

TEST_SUITE("splat")
{
    TEST_CASE("covariance equals R diag(s^2) R^T built from explicit matrices")
    {
        std::mt19937 rng(11);
        for (int t = 0; t < 50; ++t) {
            const Quatd q = splatdyn::testing::random_rotation(rng);
            const Vec3d s(0.1 + t * 0.01, 0.02, 0.5);
            Mat3d r = q.toRotationMatrix();
            Mat3d d = Mat3d::Zero();
            for (int i = 0; i < 3; ++i) d(i, i) = s[i] * s[i];
            const Mat3d expected = r * d * r.transpose();
            CHECK((covariance<double>(s, q) - expected).norm() < 1e-12);
            // Symmetric positive definite.
            Eigen::SelfAdjointEigenSolver<Mat3d> es(covariance<double>(s, q));
            CHECK(es.eigenvalues().minCoeff() > 0);
        }
    }

    TEST_CASE("density is one at the center and exp(-1/2) one standard deviation out")
    {
        const Quatd q(Eigen::AngleAxisd(0.7, Vec3d(1, 2, 3).normalized()));
        const Vec3d s(0.3, 0.1, 0.05), c(1, 2, 3);
        CHECK(evaluate_density<double>(c, s, q, c) == doctest::Approx(1.0));
        for (int axis = 0; axis < 3; ++axis) {
            const Vec3d x = c + s[axis] * (q * Vec3d::Unit(axis));
            CHECK(evaluate_density<double>(c, s, q, x) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
        }
    }

    TEST_CASE("clamp_anisotropy bounds max/min by the ratio and keeps the long axis")
    {
        SplatScene s = random_scene(200, 5);
        s[0].scale = Vec3f(1.0f, 0.01f, 0.5f);
        const auto before = s;
        const auto modified = clamp_anisotropy(s, 4.0);
        CHECK(modified >= 1);
        for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK(anisotropy_ratio(s[i]) <= doctest::Approx(4.0).epsilon(1e-6));
            CHECK(s[i].scale.maxCoeff() == before[i].scale.maxCoeff());
            CHECK((s[i].scale.array() >= before[i].scale.array()).all());
        }
        CHECK(s[0].scale.y() == doctest::Approx(0.25f));
        CHECK_THROWS_AS(clamp_anisotropy(s, 0.5), ArgumentError);
    }

    TEST_CASE("validate rejects broken invariants")
    {
        SplatScene s = random_scene(3, 1);
        CHECK_NOTHROW(s.validate());
        s[1].opacity = 1.5f;
        CHECK_THROWS_AS(s.validate(), ArgumentError);
        s = random_scene(3, 1);
        s[2].scale.x() = 0;
        CHECK_THROWS_AS(s.validate(), ArgumentError);
        SplatScene f(4);
        GaussianKernel k;
        k.feature = Eigen::VectorXf::Zero(3);
        CHECK_THROWS_AS(f.push_back(k), ArgumentError);
    }

    TEST_CASE("dc color round trip")
    {
        GaussianKernel k;
        k.sh_dc = dc_from_color(Vec3f(0.2f, 0.5f, 0.9f));
        CHECK((dc_color(k) - Vec3f(0.2f, 0.5f, 0.9f)).norm() < 1e-6f);
    }
}

TEST_SUITE("ply")
{
    TEST_CASE("loader activates log scales, opacity logits and normalizes w-first quaternions")
    {
        const auto bytes = raw_ply({raw_row({1, 2, 3}, 0.0f, {std::log(0.5f), std::log(0.25f), 0.0f}, {2, 0, 0, 0}),
                                    raw_row({-1, 0, 1}, 2.0f, {0, 0, 0}, {1, 1, 1, 1})});
        const SplatScene s = parse_ply(bytes);
        REQUIRE(s.size() == 2);
        CHECK(s[0].position == Vec3f(1, 2, 3));
        CHECK(s[0].opacity == doctest::Approx(0.5f));
        CHECK(s[1].opacity == doctest::Approx(1.0f / (1.0f + std::exp(-2.0f))));
        CHECK(s[0].scale.x() == doctest::Approx(0.5f));
        CHECK(s[0].scale.y() == doctest::Approx(0.25f));
        CHECK(s[0].rotation.w() == doctest::Approx(1.0f));
        CHECK(s[1].rotation.w() == doctest::Approx(0.5f));
        CHECK(s[1].rotation.x() == doctest::Approx(0.5f));
        CHECK(s[0].sh_rest[44] == doctest::Approx(0.44f));
        CHECK_FALSE(s.has_features());
    }

    TEST_CASE("save then load reproduces every attribute bit for bit")
    {
        TempDir dir("ply");
        SplatScene s = random_scene(300, 9, 8);
        for (auto& k : s.kernels()) k.object_id = 7;
        save_ply(s, dir / "a.ply");
        const SplatScene once = load_ply(dir / "a.ply");
        save_ply(once, dir / "b.ply");
        const SplatScene twice = load_ply(dir / "b.ply");
        REQUIRE(twice.size() == s.size());
        CHECK(twice.feature_dim() == 8);
        for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK(std::memcmp(once[i].position.data(), twice[i].position.data(), 12) == 0);
            CHECK(std::memcmp(once[i].scale.data(), twice[i].scale.data(), 12) == 0);
            CHECK(once[i].opacity == twice[i].opacity);
            CHECK(once[i].rotation.coeffs() == twice[i].rotation.coeffs());
            CHECK(once[i].feature == twice[i].feature);
            CHECK(once[i].sh_rest == twice[i].sh_rest);
            CHECK(twice[i].object_id == 7);
            // First trip is within float round-off of the in-memory values.
            CHECK((once[i].position - s[i].position).norm() == 0.0f);
            CHECK((once[i].scale - s[i].scale).cwiseQuotient(s[i].scale).cwiseAbs().maxCoeff() < 1e-5f);
            CHECK(std::abs(once[i].opacity - s[i].opacity) < 1e-5f);
        }
        // Bit-identical files after the first round trip.
        std::ifstream a(dir / "a.ply", std::ios::binary), b(dir / "b.ply", std::ios::binary);
        const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
        CHECK(sa == sb);
    }

    TEST_CASE("structured errors")
    {
        const auto good = raw_row({0, 0, 0}, 0, {0, 0, 0}, {1, 0, 0, 0});
        CHECK_THROWS_AS(parse_ply("not a ply"), PlyError);
        CHECK_THROWS_AS(parse_ply(raw_ply({good, good}, "", 10)), PlyError);
        auto zero_rot = raw_row({0, 0, 0}, 0, {0, 0, 0}, {0, 0, 0, 0});
        try {
            parse_ply(raw_ply({good, zero_rot}));
            FAIL("expected PlyError");
        } catch (const PlyError& e) {
            REQUIRE(e.element().has_value());
            CHECK(*e.element() == 1);
        }
        auto nan_row = good;
        nan_row[1] = std::numeric_limits<float>::quiet_NaN();
        CHECK_THROWS_AS(parse_ply(raw_ply({nan_row})), PlyError);
        std::string ascii = raw_ply({good});
        ascii.replace(ascii.find("binary_little_endian"), 20, "ascii");
        CHECK_THROWS_AS(parse_ply(ascii), PlyError);
        CHECK_THROWS_AS(load_ply("/nonexistent/file.ply"), PlyError);
    }

    TEST_CASE("empty scene round trips")
    {
        TempDir dir("ply_empty");
        save_ply(SplatScene(), dir / "e.ply");
        CHECK(load_ply(dir / "e.ply").empty());
    }
}
