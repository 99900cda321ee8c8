// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/analysis.hpp"
#include "splatdyn/generate.hpp"
#include "splatdyn/material.hpp"
#include "splatdyn/scenario.hpp"

#include "support/test_support.hpp"

#include <doctest.h>
#include <httplib.h>

#include <fstream>
#include <thread>

using namespace splatdyn;
using nlohmann::json;

namespace {

/// Material values as published for each scene, written out independently of the fixture files.
struct Published {
    std::string scene;
    std::uint32_t object;
    std::string dialogue;
    MaterialSpec spec;
};

MaterialSpec deform(double m, double d, double p)
{
    return {MaterialCategory::Deformation, m, d, p, std::nullopt, false, std::nullopt};
}
MaterialSpec granule(double m, double mu) { return {MaterialCategory::Granular, m, std::nullopt, std::nullopt, mu, false, std::nullopt}; }
MaterialSpec rigid(double m, std::optional<double> threshold)
{
    return {MaterialCategory::Rigid, m, std::nullopt, std::nullopt, std::nullopt, threshold.has_value(), threshold};
}

const std::vector<Published>& published()
{
    static const std::vector<Published> table{
        {"wolf", 1, "this wolf is made of sand", granule(0.5, 0.3)},
        {"fox", 1, "this fox is a doll", deform(0.5, 0.3, 0.2)},
        {"wolf", 1, "", deform(0.3, 0.2, 0.5)},
        {"sofa", 1, "", deform(0.3, 0.3, 0.1)},
        {"sofa", 2, "", deform(0.3, 0.3, 0.1)},
        {"sofa", 3, "", deform(0.3, 0.3, 0.1)},
        {"sofa", 4, "", deform(1.5, 0.3, 0.1)},
        {"garden", 1, "", deform(0.2, 0.3, 0.1)},
        {"garden", 2, "", rigid(0.5, 30.0)},
        {"labdesk", 1, "", deform(0.05, 0.2, 0.8)},
        {"labdesk", 2, "", deform(0.2, 0.3, 0.5)},
        {"labdesk", 3, "", deform(0.3, 0.4, 0.2)},
        {"labdesk", 4, "", rigid(0.5, std::nullopt)},
        {"labdesk", 5, "", rigid(0.3, 20.0)},
        {"labdesk", 6, "", granule(kDefaultGranularMass, 0.1)},
    };
    return table;
}

std::string material_error_path(const json& j)
{
    try {
        parse_material(j);
    } catch (const MaterialError& e) {
        return e.path();
    }
    return "";
}

} // namespace

TEST_SUITE("material")
{
    TEST_CASE("correction factor is a cube root for volumes and a square root for shells")
    {
        CHECK(correction_factor(1000, MaterialCategory::Deformation, 1.0) == 10.0);
        CHECK(correction_factor(1000, MaterialCategory::Granular, 1.0) == 10.0);
        CHECK(correction_factor(100, MaterialCategory::Rigid, 1.0) == 10.0);
        CHECK(correction_factor(8, MaterialCategory::Deformation, 2.5) == 5.0);
        CHECK(correction_factor(27, MaterialCategory::Deformation) == doctest::Approx(3.0));
        CHECK(correction_factor(50, MaterialCategory::Rigid) == doctest::Approx(std::sqrt(50.0)));
        CHECK_THROWS_AS(correction_factor(0, MaterialCategory::Rigid), ArgumentError);
    }

    TEST_CASE("apply_material spreads mass times C equally")
    {
        for (auto [phase, spec] : std::vector<std::pair<Phase, MaterialSpec>>{
                 {Phase::Deformable, deform(0.3, 0.4, 0.2)}, {Phase::Rigid, rigid(0.5, 30.0)}, {Phase::Rigid, rigid(0.7, std::nullopt)}}) {
            auto obj = generate_particles(testing::lattice_box({7, 5, 6}, 0.02, Vec3d::Zero()), phase, 0.02);
            const double c = apply_material(spec, obj.particles, obj.constraints);
            CHECK(c == correction_factor(obj.particles.size(), spec.category));
            double sum = 0;
            for (std::size_t i = 0; i < obj.particles.size(); ++i) sum += obj.particles.mass(i);
            CHECK(std::abs(sum - spec.mass_kg * c) <= 1e-9 * spec.mass_kg * c);
            for (const auto& cl : obj.constraints.clusters) {
                CHECK(cl.fragile == spec.fragile);
                if (spec.fragile) CHECK(cl.force_threshold == doctest::Approx(*spec.force_threshold_n * c));
            }
        }
        auto obj = generate_particles(testing::lattice_box({3, 3, 3}, 0.02, Vec3d::Zero()), Phase::Rigid, 0.02);
        CHECK_THROWS_AS(apply_material(deform(1, 0.5, 0.5), obj.particles, obj.constraints), ArgumentError);
    }

    TEST_CASE("normalized values map into solver ranges")
    {
        const auto soft = solver_material(deform(1, 0.2, 0.8), 1);
        const auto firm = solver_material(deform(1, 0.9, 0.1), 1);
        CHECK(soft.stiffness < firm.stiffness);
        CHECK(soft.plastic_rate > firm.plastic_rate);
        CHECK(soft.yield < firm.yield);
        CHECK(solver_material(granule(1, 0.6), 1).mu > solver_material(granule(1, 0.1), 1).mu);
        CHECK(solver_material(rigid(1, 20.0), 3).force_threshold == doctest::Approx(60.0));
        CHECK(solver_material(rigid(1, std::nullopt), 3).force_threshold == 0);
    }

    TEST_CASE("schema errors name the offending field")
    {
        CHECK(material_error_path(json::array()) == "$");
        CHECK(material_error_path({{"mass", 1}}) == "$.category");
        CHECK(material_error_path({{"category", "plasma"}, {"mass", 1}}) == "$.category");
        CHECK(material_error_path({{"category", "deformation"}, {"mass", 1}, {"deformation_resistance", 1.5}, {"plasticity", 0}}) ==
              "$.deformation_resistance");
        CHECK(material_error_path({{"category", "deformation"}, {"mass", -1}, {"deformation_resistance", 0.5}, {"plasticity", 0}}) ==
              "$.mass");
        CHECK(material_error_path({{"category", "granular"}, {"friction", 0.3}, {"plasticity", 0.1}}) == "$.plasticity");
        CHECK(material_error_path({{"category", "granular"}}) == "$.friction");
        CHECK(material_error_path({{"category", "rigid"}, {"mass", 1}, {"fragile", true}}) == "$.force_threshold");
        CHECK(material_error_path({{"category", "rigid"}, {"mass", 1}, {"fragile", false}, {"force_threshold", 3}}) ==
              "$.force_threshold");
        CHECK(material_error_path({{"category", "rigid"}, {"mass", 1}, {"fragile", "yes"}}) == "$.fragile");
        CHECK(material_error_path({{"category", "rigid"}, {"mass", "heavy"}}) == "$.mass");
    }

    TEST_CASE("granular mass defaults and JSON round trip")
    {
        const auto g = parse_material({{"category", "granule"}, {"friction", 0.1}});
        CHECK(g.category == MaterialCategory::Granular);
        CHECK(g.mass_kg == kDefaultGranularMass);
        for (const auto& p : published()) CHECK(parse_material(to_json(p.spec)) == p.spec);
    }
}

TEST_SUITE("analysis")
{
    TEST_CASE("fixtures reproduce every published material and the dialogue switch")
    {
        FixtureClient client(std::filesystem::path(SPLATDYN_DATA_DIR) / "fixtures");
        for (const auto& p : published()) {
            CAPTURE(p.scene);
            CAPTURE(p.object);
            AnalysisRequest r;
            r.scene = p.scene;
            r.object_id = p.object;
            r.dialogue = p.dialogue;
            CHECK(analyze(client, r) == p.spec);
        }
        AnalysisRequest wolf{"wolf", 1, {}, {}, "This Wolf Is Made Of Sand!"};
        CHECK(client.analyze(wolf).category == MaterialCategory::Granular);
        wolf.dialogue = "a plush toy";
        CHECK(client.analyze(wolf).category == MaterialCategory::Deformation);
        AnalysisRequest fox{"fox", 1, {}, {}, ""};
        CHECK_THROWS_AS(client.analyze(fox), AnalysisError);
        AnalysisRequest missing{"labdesk", 99, {}, {}, ""};
        CHECK_THROWS_AS(client.analyze(missing), AnalysisError);
    }

    TEST_CASE("reply parsing tolerates prose and fences and keeps raw text on failure")
    {
        const auto s = parse_reply("Sure!\n```json\n{\"category\": \"rigid\", \"mass\": 0.5, \"fragile\": false}\n```\n");
        CHECK(s == rigid(0.5, std::nullopt));
        try {
            parse_reply("I think it is soft.");
            FAIL("expected AnalysisError");
        } catch (const AnalysisError& e) {
            CHECK(e.raw() == "I think it is soft.");
        }
        CHECK_THROWS_AS(parse_reply("{\"category\": \"rigid\", \"mass\": }"), AnalysisError);
        CHECK_THROWS_AS(parse_reply("{\"category\": \"rigid\"}"), AnalysisError);
    }

    TEST_CASE("remote client sends prompts and images and validates the reply")
    {
        testing::TempDir dir("remote");
        {
            std::ofstream(dir / "img.png", std::ios::binary) << "PNGDATA";
            std::ofstream(dir / "mask.png", std::ios::binary) << "MASK";
        }
        httplib::Server server;
        std::string seen_auth;
        json seen_body;
        std::string reply = "{\"category\": \"granule\", \"mass\": 0.5, \"friction\": 0.3}";
        int status = 200;
        server.Post("/v1/chat", [&](const httplib::Request& req, httplib::Response& res) {
            seen_auth = req.get_header_value("Authorization");
            seen_body = json::parse(req.body);
            res.status = status;
            res.set_content(json{{"choices", {{{"message", {{"content", reply}}}}}}}.dump(), "application/json");
        });
        const int port = server.bind_to_any_port("127.0.0.1");
        std::thread t([&] { server.listen_after_bind(); });
        server.wait_until_ready();

        RemoteOptions opt;
        opt.endpoint = "http://127.0.0.1:" + std::to_string(port) + "/v1/chat";
        opt.token = "secret";
        opt.prompt_dir = std::filesystem::path(SPLATDYN_ASSET_DIR) / "prompts";
        opt.timeout_s = 5;
        RemoteClient client(opt);
        AnalysisRequest r{"wolf", 1, dir / "img.png", dir / "mask.png", "made of sand"};
        CHECK(client.analyze(r) == granule(0.5, 0.3));
        CHECK(seen_auth == "Bearer secret");
        CHECK(seen_body == client.build_body(r));
        const auto& msgs = seen_body.at("messages");
        CHECK(msgs.front().at("role") == "system");
        const auto& last = msgs.back().at("content");
        CHECK(last.size() == 3);
        CHECK(last[0].at("text").get<std::string>().find("made of sand") != std::string::npos);
        CHECK(last[1].at("image_url").at("url").get<std::string>().rfind("data:image/png;base64,", 0) == 0);

        reply = "no json here";
        CHECK_THROWS_AS(client.analyze(r), AnalysisError);
        status = 503;
        CHECK_THROWS_AS(client.analyze(r), TransportError);
        server.stop();
        t.join();
        CHECK_THROWS_AS(client.analyze(r), TransportError);
        RemoteOptions bad = opt;
        bad.endpoint = "";
        CHECK_THROWS_AS(RemoteClient{bad}, ArgumentError);
    }
}

TEST_SUITE("scenario")
{
    TEST_CASE("actions parse with defaults and drag paths interpolate")
    {
        const auto s = parse_scenario(json::parse(R"({"actions": [
            {"type": "spring", "start": 0.1, "end": 0.5, "object": 2, "grab": [0, 0.1, 0], "anchor": [0, 0.5, 0], "stiffness": 40},
            {"type": "drag", "start": 0.2, "end": 1.0, "object": 4, "pick": [0.1, 0, 0], "path": [[0.2, 0, 0, 0], [0.6, 0.4, 0, 0]]},
            {"type": "impulse", "start": 0.3, "object": 1, "vector": [0, 1, 0]},
            {"type": "spawn_projectile", "start": 0.3, "radius": 0.02, "mass": 1, "origin": [0, 0, 1], "velocity": [0, 0, -5]},
            {"type": "release", "start": 1.0}
        ]})"));
        REQUIRE(s.actions.size() == 5);
        CHECK(s.actions[0].type == ActionType::Spring);
        CHECK(s.actions[0].damping == 0);
        CHECK(s.actions[2].end == std::numeric_limits<double>::infinity());
        const auto& drag = s.actions[1];
        CHECK(drag.path_at(0.0) == Vec3d(0, 0, 0));
        CHECK((drag.path_at(0.4) - Vec3d(0.2, 0, 0)).norm() < 1e-12);
        CHECK(drag.path_at(5.0) == Vec3d(0.4, 0, 0));
        CHECK(std::string(to_string(ActionType::SpawnProjectile)) == "spawn_projectile");
    }

    TEST_CASE("ordering, unknown types and bad values are rejected")
    {
        CHECK_THROWS_AS(parse_scenario(json::parse(R"({"actions": [{"type": "release", "start": 1}, {"type": "release", "start": 0.5}]})")),
                        ArgumentError);
        CHECK_THROWS_AS(parse_scenario(json::parse(R"({"actions": [{"type": "teleport"}]})")), ArgumentError);
        CHECK_THROWS_AS(parse_scenario(json::parse(R"({"actions": [{"type": "release", "start": 1, "end": 0.5}]})")),
                        ArgumentError);
        CHECK_THROWS_AS(parse_scenario(json::parse(
                            R"({"actions": [{"type": "spawn_projectile", "radius": 0, "mass": 1, "origin": [0,0,0], "velocity": [0,0,0]}]})")),
                        ArgumentError);
        CHECK_THROWS_AS(parse_scenario(json::parse(R"({"actions": [{"type": "drag", "object": 1, "pick": [0,0,0], "path": [[0, 1]]}]})")),
                        ArgumentError);
        CHECK_THROWS_AS(load_scenario("/nonexistent/s.json"), ArgumentError);
    }
}
