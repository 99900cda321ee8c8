// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/bundle.hpp"

#include "splatdyn/generate.hpp"
#include "splatdyn/ply.hpp"
#include "splatdyn/render.hpp"

#include <spdlog/spdlog.h>

#include <fstream>
#include <set>

namespace splatdyn {
namespace {

Vec3d vec3(const nlohmann::json& j, const char* what)
{
    if (!j.is_array() || j.size() != 3) throw ArgumentError(std::string(what) + " must be an array of 3 numbers");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

template <typename Fn>
auto stage(const std::string& name, Fn&& fn) -> decltype(fn())
{
    try {
        return fn();
    } catch (const BuildError&) {
        throw;
    } catch (const std::exception& e) {
        throw BuildError(name, e.what());
    }
}

void write_analysis_images(const BundleInputs& in, std::uint32_t id, const std::filesystem::path& dir,
                           AnalysisRequest& req)
{
    if (in.views.empty()) throw ArgumentError("analysis images need at least one camera view");
    const CameraView& v = in.views.front();
    std::filesystem::create_directories(dir);
    req.image = dir / ("object_" + std::to_string(id) + "_image.png");
    req.mask = dir / ("object_" + std::to_string(id) + "_mask.png");
    write_rgba_png(render_reference(in.scene, v.camera), req.image);
    LabelImage mask(v.mask.width, v.mask.height, 0);
    for (std::size_t i = 0; i < mask.pixels.size(); ++i) mask.pixels[i] = v.mask.pixels[i] == id ? 0xFFFF : 0;
    write_label_png(mask, req.mask);
}

} // namespace

const BundleObject* SceneBundle::find(std::uint32_t id) const
{
    for (const auto& o : objects)
        if (o.id == id) return &o;
    return nullptr;
}

SolverConfig parse_solver_config(const nlohmann::json& j)
{
    SolverConfig c;
    if (j.is_null()) return c;
    c.dt = j.value("dt", c.dt);
    c.substeps = j.value("substeps", c.substeps);
    c.iterations = j.value("iterations", c.iterations);
    if (j.contains("gravity")) c.gravity = vec3(j["gravity"], "solver.gravity");
    c.deterministic = j.value("deterministic", c.deterministic);
    c.fracture_seeds = j.value("fracture_seeds", c.fracture_seeds);
    c.validate();
    return c;
}

double place_on_plane(World& world, BundleObject& obj, const SupportPlane& plane)
{
    auto& p = world.particles;
    const std::uint32_t begin = obj.particle_offset, end = obj.particle_offset + obj.particle_count;
    double clearance = std::numeric_limits<double>::infinity();
    for (auto i = begin; i < end; ++i) clearance = std::min(clearance, plane.signed_distance(p.position[i]) - p.radius[i]);
    if (!(clearance < 0)) return 0;
    const Vec3d shift = -clearance * plane.normal;
    const Vec3f shift_f = shift.cast<float>();
    for (auto i = begin; i < end; ++i) {
        p.position[i] += shift;
        p.previous[i] += shift;
        p.rest[i] += shift;
    }
    for (auto& c : world.constraints.clusters)
        if (!c.members.empty() && c.members.front() >= begin && c.members.front() < end) c.rest_centroid += shift;
    for (auto& k : obj.scene.kernels()) k.position += shift_f;
    for (auto& t : obj.binding.rest_position) t += shift_f;
    return -clearance;
}

SceneBundle build_bundle(const BundleInputs& in, const nlohmann::json& cfg, AnalysisClient* client,
                         const std::filesystem::path& work_dir)
{
    SceneBundle b;
    b.name = cfg.value("scene", in.name);
    b.world.config = stage("config", [&] { return parse_solver_config(cfg.value("solver", nlohmann::json())); });
    const double sigma1 = cfg.value("sigma1", 0.3);
    const double sigma2_default = cfg.value("sigma2", 0.3);
    const double a = cfg.value("a", 1.0);
    const AxisDir up = AxisDir::up_from_gravity(b.world.config.gravity);

    const auto& objects = cfg.at("objects");
    std::vector<std::uint32_t> ids;
    std::vector<double> sigma2;
    for (const auto& o : objects) {
        const auto id = o.at("id").get<std::uint32_t>();
        if (id == 0 || int(id) >= in.classifier.num_classes())
            throw BuildError("segmentation", "unknown object id " + std::to_string(id) + " (classifier has " +
                                           std::to_string(in.classifier.num_classes()) + " classes, 0 is background)");
        if (std::find(ids.begin(), ids.end(), id) != ids.end())
            throw BuildError("config", "object id " + std::to_string(id) + " listed twice");
        ids.push_back(id);
        sigma2.push_back(o.value("sigma2", sigma2_default));
    }

    const auto assignment = stage("segmentation", [&] {
        return assign_objects(in.scene, in.classifier, in.views, ids, sigma1, sigma2);
    });
    if (!assignment.ties.empty()) spdlog::warn("segment: {} kernels tied between objects", assignment.ties.size());

    SplatScene environment(in.scene.feature_dim());
    std::vector<SplatScene> parts(ids.size(), SplatScene(in.scene.feature_dim()));
    for (std::size_t k = 0; k < in.scene.size(); ++k) {
        const auto label = assignment.label[k];
        const auto it = std::find(ids.begin(), ids.end(), label);
        if (it == ids.end()) environment.push_back(in.scene[k]);
        else parts[std::size_t(it - ids.begin())].push_back(in.scene[k]);
    }

    nlohmann::json report_objects = nlohmann::json::array();
    for (std::size_t oi = 0; oi < ids.size(); ++oi) {
        const auto& oc = objects[oi];
        const std::uint32_t id = ids[oi];
        const std::string tag = "object " + std::to_string(id);
        if (parts[oi].empty()) throw BuildError("segmentation", tag + " selected no kernels");
        BundleObject obj;
        obj.id = id;
        obj.material = stage("analyze " + tag, [&] {
            if (oc.contains("material")) return parse_material(oc["material"]);
            if (!client) throw ArgumentError("no material source configured");
            AnalysisRequest req{b.name, id, {}, {}, oc.value("dialogue", "")};
            if (dynamic_cast<RemoteClient*>(client)) write_analysis_images(in, id, work_dir / "analysis", req);
            return client->analyze(req);
        });
        const Phase phase = phase_of(obj.material.category);
        const std::size_t segmented = parts[oi].size();

        if (phase == Phase::Granular) {
            stage("fill " + tag, [&] {
                const auto fc = oc.value("fill", nlohmann::json::object());
                FillOptions fo;
                fo.spacing = fc.value("h", 0.0);
                fo.target_cells = fc.value("target_cells", fo.target_cells);
                fo.shrink = fc.value("shrink", fo.shrink);
                fo.scale_factor = fc.value("s_f", fo.scale_factor);
                fo.include_above_band = fc.value("include_above_band", false);
                fo.up = up;
                auto fr = fill_granular(parts[oi], fo);
                std::vector<char> kept(parts[oi].size(), 0);
                for (auto i : fr.surface_indices) kept[i] = 1;
                for (std::size_t i = 0; i < parts[oi].size(); ++i)
                    if (!kept[i]) environment.push_back(parts[oi][i]);
                obj.scene = std::move(fr.granules);
                obj.spacing = fr.report.spacing;
                obj.fill = fr.report;
            });
        } else {
            obj.scene = std::move(parts[oi]);
            obj.spacing = oc.contains("h") ? oc["h"].get<double>()
                                           : auto_spacing(obj.scene, oc.value("particle_cells", 10));
        }

        auto op = stage("particles " + tag, [&] {
            return generate_particles(obj.scene, phase, obj.spacing, id, std::uint32_t(oi));
        });
        obj.correction = stage("material " + tag, [&] {
            return apply_material(obj.material, op.particles, op.constraints, a);
        });
        obj.particle_offset = b.world.particles.append(op.particles);
        obj.particle_count = std::uint32_t(op.particles.size());
        b.world.constraints.append(op.constraints, obj.particle_offset);
        obj.binding = stage("binding " + tag, [&] {
            return build_binding(obj.scene, op.particles.rest, binding_count(phase), obj.particle_offset);
        });

        nlohmann::json r{{"id", id},
                         {"category", to_string(obj.material.category)},
                         {"material", to_json(obj.material)},
                         {"segmented_kernels", segmented},
                         {"kernels", obj.scene.size()},
                         {"particles", obj.particle_count},
                         {"spacing", obj.spacing},
                         {"correction_factor", obj.correction},
                         {"effective_mass", obj.material.mass_kg * obj.correction},
                         {"binding_m", obj.binding.m}};
        if (obj.fill) r["fill"] = obj.fill->to_json();
        report_objects.push_back(std::move(r));
        b.objects.push_back(std::move(obj));
    }

    const auto plane_cfg = cfg.value("plane", nlohmann::json("fit"));
    if (plane_cfg.is_string() && plane_cfg.get<std::string>() == "fit") {
        b.world.plane = stage("plane", [&] {
            PlaneFitOptions po;
            po.gravity = b.world.config.gravity;
            return fit_support_plane(environment, po);
        });
    } else if (plane_cfg.is_object()) {
        b.world.plane = stage("plane", [&] {
            Vec3d n = vec3(plane_cfg.at("normal"), "plane.normal");
            if (n.norm() < 1e-12) throw ArgumentError("plane normal must be nonzero");
            const double scale = n.norm();
            return SupportPlane{n / scale, plane_cfg.value("offset", 0.0) / scale};
        });
    }

    if (b.world.plane) {
        stage("placement", [&] {
            for (std::size_t oi = 0; oi < b.objects.size(); ++oi) {
                const double lift = place_on_plane(b.world, b.objects[oi], *b.world.plane);
                report_objects[oi]["placement_lift"] = lift;
                if (lift > 0) spdlog::info("placement: object {} lifted {:.4f} m out of the support plane", b.objects[oi].id, lift);
            }
        });
    }

    const auto sdf_cfg = cfg.value("sdf", nlohmann::json());
    if (sdf_cfg.is_object()) {
        stage("sdf", [&] {
            SplatScene obstacles(environment.feature_dim());
            for (const auto& k : environment.kernels()) {
                const bool on_plane =
                    b.world.plane && std::abs(b.world.plane->signed_distance(k.position.cast<double>())) < 0.01;
                if (!on_plane) obstacles.push_back(k);
            }
            if (obstacles.empty()) return;
            SdfOptions so;
            Aabb cover;
            for (const auto& o : b.objects) {
                const Aabb ob = o.scene.bounds();
                cover.extend(ob.min - Vec3f::Constant(0.2f));
                cover.extend(ob.max + Vec3f::Constant(0.2f));
            }
            if (!cover.empty()) so.cover = cover;
            b.world.field = build_sdf(obstacles, sdf_cfg.at("h").get<double>(), so);
        });
    }

    b.environment = std::move(environment);
    b.world.constraints.validate(b.world.particles.size());
    b.report = {{"scene", b.name},
                {"environment_kernels", b.environment.size()},
                {"objects", report_objects},
                {"particles", b.world.particles.size()},
                {"ties", assignment.ties.size()}};
    if (b.world.plane)
        b.report["plane"] = {{"normal", {b.world.plane->normal.x(), b.world.plane->normal.y(), b.world.plane->normal.z()}},
                             {"offset", b.world.plane->offset}};
    if (b.world.field)
        b.report["sdf"] = {{"dims", {b.world.field->dims().x(), b.world.field->dims().y(), b.world.field->dims().z()}},
                           {"h", b.world.field->spacing()}};
    return b;
}

SceneBundle build_bundle(const std::filesystem::path& config_path)
{
    nlohmann::json cfg;
    {
        std::ifstream f(config_path);
        if (!f) throw BuildError("config", "cannot open " + config_path.string());
        try {
            f >> cfg;
        } catch (const nlohmann::json::exception& e) {
            throw BuildError("config", e.what());
        }
    }
    const auto dir = config_path.parent_path();
    auto resolve = [&](const std::string& p) { return std::filesystem::path(p).is_absolute() ? std::filesystem::path(p) : dir / p; };
    BundleInputs in;
    in.name = cfg.value("scene", config_path.stem().string());
    in.scene = stage("load", [&] { return load_ply(resolve(cfg.at("ply").get<std::string>())); });
    in.classifier = stage("load", [&] { return load_classifier(resolve(cfg.at("classifier").get<std::string>())); });
    in.views = stage("load", [&] { return load_camera_views(resolve(cfg.at("cameras").get<std::string>())); });

    std::unique_ptr<AnalysisClient> client;
    const auto mat = cfg.value("materials", nlohmann::json::object());
    stage("materials", [&] {
        if (mat.contains("fixtures")) {
            client = std::make_unique<FixtureClient>(resolve(mat["fixtures"].get<std::string>()));
        } else if (mat.contains("endpoint")) {
            RemoteOptions ro;
            ro.endpoint = mat["endpoint"].get<std::string>();
            ro.model = mat.value("model", ro.model);
            ro.prompt_dir = resolve(mat.value("prompts", std::string(SPLATDYN_ASSET_DIR) + "/prompts"));
            ro.max_in_flight = mat.value("max_in_flight", ro.max_in_flight);
            client = std::make_unique<RemoteClient>(ro);
        }
    });
    return build_bundle(in, cfg, client.get(), dir);
}

} // namespace splatdyn
