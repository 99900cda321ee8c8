// SPDX-License-Identifier: Apache-2.0
// splatdyn command line: segmentation, filling, material analysis, simulation, service, bench.
#include "splatdyn/analysis.hpp"
#include "splatdyn/bench.hpp"
#include "splatdyn/bundle.hpp"
#include "splatdyn/filling.hpp"
#include "splatdyn/ply.hpp"
#include "splatdyn/segmentation.hpp"
#include "splatdyn/server.hpp"
#include "splatdyn/simulation.hpp"
#include "splatdyn/synth.hpp"

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include <csignal>
#include <fstream>
#include <iostream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace splatdyn;
using nlohmann::json;

namespace {

void write_json(const json& j, const fs::path& path)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

/// Runtime failures print one JSON object on stderr and exit 1.
int runtime_failure(const std::string& type, const std::string& message, json extra = json::object())
{
    extra["type"] = type;
    extra["message"] = message;
    std::cerr << json{{"error", extra}}.dump() << '\n';
    return 1;
}

struct SegmentArgs {
    fs::path scene, cameras, classifier, out = "segmented";
    std::vector<std::uint32_t> objects;
    double sigma1 = 0.3, sigma2 = 0.3;
};

int run_segment(const SegmentArgs& a)
{
    const SplatScene scene = load_ply(a.scene);
    const auto classifier = load_classifier(a.classifier);
    const auto views = load_camera_views(a.cameras);
    fs::create_directories(a.out);
    json report{{"kernels", scene.size()}, {"objects", json::array()}};

    std::vector<IndexSet> sets;
    if (a.objects.size() == 1) {
        const auto r = segment_object(scene, classifier, views, a.objects[0], a.sigma1, a.sigma2);
        if (r.empty_stage) spdlog::warn("object {}: a segmentation stage selected nothing", a.objects[0]);
        sets.push_back(r.final_set);
    } else {
        const std::vector<double> s2(a.objects.size(), a.sigma2);
        const auto assigned = assign_objects(scene, classifier, views, a.objects, a.sigma1, s2);
        if (!assigned.ties.empty()) spdlog::warn("{} kernels tied between objects", assigned.ties.size());
        for (auto id : a.objects) {
            IndexSet s;
            for (std::uint32_t i = 0; i < assigned.label.size(); ++i)
                if (assigned.label[i] == id) s.push_back(i);
            sets.push_back(std::move(s));
        }
    }
    IndexSet all;
    for (std::size_t o = 0; o < a.objects.size(); ++o) {
        auto [object, rest] = remove_object(scene, sets[o]);
        const fs::path path = a.out / ("object_" + std::to_string(a.objects[o]) + ".ply");
        save_ply(object, path);
        report["objects"].push_back({{"id", a.objects[o]}, {"kernels", object.size()}, {"path", path.string()}});
        all.insert(all.end(), sets[o].begin(), sets[o].end());
    }
    std::sort(all.begin(), all.end());
    auto [removed, environment] = remove_object(scene, all);
    save_ply(environment, a.out / "environment.ply");
    report["environment_kernels"] = environment.size();
    write_json(report, a.out / "segment_report.json");
    std::cout << report.dump(2) << '\n';
    return 0;
}

struct FillArgs {
    fs::path input, out = "granules.ply", report;
    FillOptions options;
    std::string up = "+y";
};

int run_fill(FillArgs a)
{
    static const std::map<std::string, AxisDir> axes{{"+x", {0, 1}}, {"-x", {0, -1}}, {"+y", {1, 1}},
                                                     {"-y", {1, -1}}, {"+z", {2, 1}}, {"-z", {2, -1}}};
    a.options.up = axes.at(a.up);
    const auto result = fill_granular(load_ply(a.input), a.options);
    save_ply(result.granules, a.out);
    const json report = result.report.to_json();
    if (!a.report.empty()) write_json(report, a.report);
    std::cout << report.dump(2) << '\n';
    return 0;
}

struct AnalyzeArgs {
    fs::path fixtures, image, mask, out, prompts = fs::path(SPLATDYN_ASSET_DIR) / "prompts";
    std::string endpoint, model = "vision-model", scene, dialogue;
    std::uint32_t object = 0;
};

int run_analyze(const AnalyzeArgs& a)
{
    std::unique_ptr<AnalysisClient> client;
    if (!a.fixtures.empty()) {
        client = std::make_unique<FixtureClient>(a.fixtures);
    } else {
        RemoteOptions ro;
        ro.endpoint = a.endpoint;
        ro.model = a.model;
        ro.prompt_dir = a.prompts;
        client = std::make_unique<RemoteClient>(ro);
    }
    const MaterialSpec spec = client->analyze({a.scene, a.object, a.image, a.mask, a.dialogue});
    const json j = to_json(spec);
    if (!a.out.empty()) write_json(j, a.out);
    std::cout << j.dump(2) << '\n';
    return 0;
}

struct SimulateArgs {
    fs::path bundle, scenario, out = "frames";
    double duration = 1.0;
    bool no_ply = false, transforms = false;
    int ply_every = 1;
};

int run_simulate(const SimulateArgs& a)
{
    Simulation sim(build_bundle(a.bundle));
    if (!a.scenario.empty()) sim.set_scenario(load_scenario(a.scenario));
    HeadlessOptions o;
    o.duration = a.duration;
    o.out_dir = a.out;
    o.write_ply = !a.no_ply;
    o.write_transforms = a.transforms;
    o.ply_every = a.ply_every;
    fs::create_directories(a.out);
    write_json(sim.bundle().report, a.out / "build_report.json");
    const RunSummary s = run_headless(sim, o);
    double total = 0;
    for (const auto& m : s.metrics) total += m.total_ms;
    const json summary{{"frames", s.frames},
                       {"mean_frame_ms", s.frames ? total / double(s.frames) : 0.0},
                       {"fracture_events", s.fracture_events},
                       {"fragments_created", s.fragments_created}};
    write_json(summary, a.out / "summary.json");
    std::cout << summary.dump(2) << '\n';
    return 0;
}

volatile std::sig_atomic_t g_interrupted = 0;

struct ServeArgs {
    fs::path bundle, scenario;
    ServeOptions options;
};

int run_serve(ServeArgs a)
{
    Simulation sim(build_bundle(a.bundle));
    if (!a.scenario.empty()) sim.set_scenario(load_scenario(a.scenario));
    Server server(sim, a.options);
    const auto port = server.start();
    std::cout << "listening on ws://" << a.options.address << ':' << port << std::endl;
    std::signal(SIGINT, [](int) { g_interrupted = 1; });
    std::signal(SIGTERM, [](int) { g_interrupted = 1; });
    while (!server.wait_for(std::chrono::milliseconds(100)))
        if (g_interrupted) break;
    server.stop();
    const auto st = server.stats();
    std::cout << json{{"frames", st.frames}, {"frames_dropped", st.frames_dropped}, {"sessions", st.sessions},
                      {"protocol_errors", st.protocol_errors}}
                     .dump()
              << '\n';
    if (auto f = server.fault()) return runtime_failure("SimulationFault", *f);
    return 0;
}

struct BenchArgs {
    BenchOptions options;
    int threads = 0;
    bool json_out = false;
};

int run_bench_cmd(BenchArgs a)
{
#ifdef _OPENMP
    if (a.threads > 0) omp_set_num_threads(a.threads);
#endif
    const auto r = run_bench(a.options);
    if (a.json_out) {
        std::cout << json{{"kernels", r.kernels}, {"particles", r.particles}, {"m", r.m}, {"threads", r.threads},
                          {"frames", r.frames}, {"step_ms", r.step_ms}, {"skin_ms", r.skin_ms},
                          {"total_ms", r.total_ms}, {"fps", r.fps}}
                         .dump(2)
                  << '\n';
    } else {
        std::cout << format_bench_table(r);
    }
    return 0;
}

struct SynthArgs {
    std::string kind = "labdesk";
    fs::path out = "labdesk";
    std::uint32_t seed = 1;
};

int run_synth(const SynthArgs& a)
{
    fs::create_directories(a.out);
    if (a.kind == "labdesk") {
        write_labdesk(synth::make_labdesk(a.seed), a.out, fs::path(SPLATDYN_DATA_DIR) / "fixtures");
    } else if (a.kind == "blobs") {
        const auto s = synth::make_blob_scene(a.seed);
        save_ply(s.scene, a.out / "scene.ply");
        save_classifier(s.classifier, a.out / "classifier.bin");
        save_camera_views(s.views, a.out / "cameras.json");
    } else {
        save_ply(synth::make_powder_cup(0.01, 14, 8), a.out / "cup.ply");
    }
    std::cout << "wrote " << a.kind << " to " << a.out.string() << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"splatdyn: physics and segmentation for Gaussian splat scenes"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "debug logging");

    SegmentArgs seg;
    auto* c_seg = app.add_subcommand("segment", "split a scene into object PLYs and the environment");
    c_seg->add_option("--scene", seg.scene, "scene PLY")->required()->check(CLI::ExistingFile);
    c_seg->add_option("--cameras", seg.cameras, "camera JSON with mask paths")->required()->check(CLI::ExistingFile);
    c_seg->add_option("--classifier", seg.classifier, "identity classifier")->required()->check(CLI::ExistingFile);
    c_seg->add_option("--object", seg.objects, "object id (repeatable)")->required();
    c_seg->add_option("--sigma1", seg.sigma1, "feature-stage softmax threshold")->check(CLI::Range(0.0, 1.0));
    c_seg->add_option("--sigma2", seg.sigma2, "mask-stage vote threshold")->check(CLI::Range(0.0, 1.0));
    c_seg->add_option("--out", seg.out, "output directory");

    FillArgs fill;
    auto* c_fill = app.add_subcommand("fill", "fill a granular container object with granule kernels");
    c_fill->add_option("--input", fill.input, "object PLY")->required()->check(CLI::ExistingFile);
    c_fill->add_option("--out", fill.out, "granule PLY");
    c_fill->add_option("--report", fill.report, "report JSON path");
    c_fill->add_option("--spacing", fill.options.spacing, "voxel size (default: auto)");
    c_fill->add_option("--cells", fill.options.target_cells, "cells along the longest axis when --h is unset");
    c_fill->add_option("--shrink", fill.options.shrink, "horizontal shrink per side")->check(CLI::Range(0.0, 0.49));
    c_fill->add_option("--sf", fill.options.scale_factor, "granule scale factor s_f");
    c_fill->add_option("--up", fill.up, "up axis")->check(CLI::IsMember({"+x", "-x", "+y", "-y", "+z", "-z"}));
    c_fill->add_flag("--above-band", fill.options.include_above_band, "also fill the band just above the surface");

    AnalyzeArgs an;
    auto* c_an = app.add_subcommand("analyze", "estimate a material spec from an image and mask");
    auto* src = c_an->add_option_group("source");
    src->add_option("--fixtures", an.fixtures, "fixture directory")->check(CLI::ExistingDirectory);
    src->add_option("--endpoint", an.endpoint, "http chat-completions endpoint");
    src->require_option(1);
    c_an->add_option("--scene", an.scene, "scene name")->required();
    c_an->add_option("--object", an.object, "object id")->required();
    c_an->add_option("--image", an.image, "RGB image");
    c_an->add_option("--mask", an.mask, "mask image");
    c_an->add_option("--dialogue", an.dialogue, "user description");
    c_an->add_option("--model", an.model, "remote model name");
    c_an->add_option("--prompts", an.prompts, "prompt directory");
    c_an->add_option("--out", an.out, "material JSON path");

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "run a scenario headless and export frames and metrics");
    c_sim->add_option("--bundle", sim.bundle, "bundle config JSON")->required()->check(CLI::ExistingFile);
    c_sim->add_option("--scenario", sim.scenario, "scenario JSON")->check(CLI::ExistingFile);
    c_sim->add_option("--duration", sim.duration, "seconds")->check(CLI::PositiveNumber);
    c_sim->add_option("--out", sim.out, "output directory");
    c_sim->add_flag("--no-ply", sim.no_ply, "skip PLY frames");
    c_sim->add_flag("--transforms", sim.transforms, "write transform buffers");
    c_sim->add_option("--ply-every", sim.ply_every, "write every n-th frame")->check(CLI::PositiveNumber);

    ServeArgs srv;
    auto* c_srv = app.add_subcommand("serve", "stream the simulation over WebSocket");
    c_srv->add_option("--bundle", srv.bundle, "bundle config JSON")->required()->check(CLI::ExistingFile);
    c_srv->add_option("--scenario", srv.scenario, "scripted actions")->check(CLI::ExistingFile);
    c_srv->add_option("--address", srv.options.address, "bind address");
    c_srv->add_option("--port", srv.options.port, "port (0 picks one)");
    c_srv->add_option("--token", srv.options.token, "shared token required as ?token=");
    c_srv->add_option("--duration", srv.options.duration, "stop after this simulated time (0 runs forever)");

    BenchArgs bench;
    auto* c_bench = app.add_subcommand("bench", "time solver step and skinning on a synthetic load");
    c_bench->add_option("--kernels", bench.options.kernels, "kernel count");
    c_bench->add_option("--particles", bench.options.particles, "particle count");
    c_bench->add_option("--m", bench.options.m, "bindings per kernel")->check(CLI::Range(1, 16));
    c_bench->add_option("--frames", bench.options.frames, "timed frames")->check(CLI::PositiveNumber);
    c_bench->add_option("--threads", bench.threads, "OpenMP threads (0 keeps the default)");
    c_bench->add_flag("--deterministic", bench.options.deterministic, "serial deterministic mode");
    c_bench->add_flag("--json", bench.json_out, "JSON output");

    SynthArgs syn;
    auto* c_syn = app.add_subcommand("synth", "write a synthetic fixture scene");
    c_syn->add_option("kind", syn.kind, "labdesk, blobs or cup")->check(CLI::IsMember({"labdesk", "blobs", "cup"}));
    c_syn->add_option("--out", syn.out, "output directory");
    c_syn->add_option("--seed", syn.seed, "random seed");

    if (argc <= 1) {
        std::cerr << app.help();
        return 2;
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
    spdlog::set_pattern("[%l] %v");

    try {
        if (*c_seg) return run_segment(seg);
        if (*c_fill) return run_fill(fill);
        if (*c_an) return run_analyze(an);
        if (*c_sim) return run_simulate(sim);
        if (*c_srv) return run_serve(srv);
        if (*c_bench) return run_bench_cmd(bench);
        if (*c_syn) return run_synth(syn);
    } catch (const BuildError& e) {
        return runtime_failure("BuildError", e.what(), {{"stage", e.stage()}});
    } catch (const MaterialError& e) {
        return runtime_failure("MaterialError", e.what(), {{"path", e.path()}});
    } catch (const AnalysisError& e) {
        return runtime_failure("AnalysisError", e.what(), {{"raw", e.raw()}});
    } catch (const SimulationFault& e) {
        return runtime_failure("SimulationFault", e.what(), {{"last_good_frame", e.frame()}});
    } catch (const PlyError& e) {
        return runtime_failure("PlyError", e.what());
    } catch (const std::exception& e) {
        return runtime_failure("Error", e.what());
    }
    return 2;
}
