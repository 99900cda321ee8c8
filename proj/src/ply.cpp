// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/ply.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <sstream>
#include <unordered_map>

namespace splatdyn {
namespace {

static_assert(std::endian::native == std::endian::little, "PLY I/O assumes a little-endian host");

enum class PropType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<PropType> parse_type(const std::string& t)
{
    static const std::unordered_map<std::string, PropType> table = {
        {"char", PropType::Int8},     {"int8", PropType::Int8},       {"uchar", PropType::UInt8},
        {"uint8", PropType::UInt8},   {"short", PropType::Int16},     {"int16", PropType::Int16},
        {"ushort", PropType::UInt16}, {"uint16", PropType::UInt16},   {"int", PropType::Int32},
        {"int32", PropType::Int32},   {"uint", PropType::UInt32},     {"uint32", PropType::UInt32},
        {"float", PropType::Float32}, {"float32", PropType::Float32}, {"double", PropType::Float64},
        {"float64", PropType::Float64}};
    auto it = table.find(t);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

std::size_t type_size(PropType t)
{
    switch (t) {
    case PropType::Int8:
    case PropType::UInt8: return 1;
    case PropType::Int16:
    case PropType::UInt16: return 2;
    case PropType::Int32:
    case PropType::UInt32:
    case PropType::Float32: return 4;
    case PropType::Float64: return 8;
    }
    return 0;
}

template <typename T>
T read_as(const char* p)
{
    T v;
    std::memcpy(&v, p, sizeof(T));
    return v;
}

double read_value(const char* p, PropType t)
{
    switch (t) {
    case PropType::Int8: return read_as<std::int8_t>(p);
    case PropType::UInt8: return read_as<std::uint8_t>(p);
    case PropType::Int16: return read_as<std::int16_t>(p);
    case PropType::UInt16: return read_as<std::uint16_t>(p);
    case PropType::Int32: return read_as<std::int32_t>(p);
    case PropType::UInt32: return read_as<std::uint32_t>(p);
    case PropType::Float32: return read_as<float>(p);
    case PropType::Float64: return read_as<double>(p);
    }
    return 0.0;
}

struct Property {
    std::string name;
    PropType type;
    std::size_t offset;
};

float activate_scale(float raw) { return static_cast<float>(std::exp(static_cast<double>(raw))); }
float activate_opacity(float raw) { return static_cast<float>(1.0 / (1.0 + std::exp(-static_cast<double>(raw)))); }

// Finds the float whose activation reproduces `target` exactly, searching a few ulps
// around the analytic inverse. Falls back to the closest candidate.
float invert_exact(const std::function<float(float)>& activate, float target, float guess)
{
    if (activate(guess) == target) return guess;
    float best = guess;
    float best_err = std::abs(activate(guess) - target);
    float lo = guess, hi = guess;
    for (int step = 0; step < 64; ++step) {
        lo = std::nextafter(lo, -std::numeric_limits<float>::infinity());
        hi = std::nextafter(hi, std::numeric_limits<float>::infinity());
        for (float c : {lo, hi}) {
            const float v = activate(c);
            if (v == target) return c;
            const float err = std::abs(v - target);
            if (err < best_err) {
                best_err = err;
                best = c;
            }
        }
    }
    return best;
}

} // namespace

SplatScene parse_ply(const std::string& bytes)
{
    std::size_t header_end = bytes.find("end_header\n");
    if (bytes.rfind("ply\n", 0) != 0 || header_end == std::string::npos) throw PlyError("malformed PLY header");
    header_end += std::strlen("end_header\n");

    std::istringstream header(bytes.substr(0, header_end));
    std::string line;
    std::size_t vertex_count = 0;
    bool in_vertex = false, seen_vertex = false, seen_format = false;
    std::vector<Property> props;
    std::size_t stride = 0;
    while (std::getline(header, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string keyword;
        ls >> keyword;
        if (keyword == "ply" || keyword == "comment" || keyword == "obj_info" || keyword == "end_header" ||
            keyword.empty()) {
            continue;
        }
        if (keyword == "format") {
            std::string fmt, ver;
            ls >> fmt >> ver;
            if (fmt != "binary_little_endian") throw PlyError("unsupported PLY format '" + fmt + "'");
            seen_format = true;
        } else if (keyword == "element") {
            std::string name;
            long long count = -1;
            ls >> name >> count;
            if (ls.fail() || count < 0) throw PlyError("malformed element line: " + line);
            if (name == "vertex") {
                if (seen_vertex) throw PlyError("duplicate vertex element");
                vertex_count = static_cast<std::size_t>(count);
                in_vertex = seen_vertex = true;
            } else {
                if (count != 0) throw PlyError("unsupported element '" + name + "'");
                in_vertex = false;
            }
        } else if (keyword == "property") {
            std::string type, name;
            ls >> type >> name;
            if (type == "list") throw PlyError("list properties are not supported");
            auto t = parse_type(type);
            if (!t || name.empty()) throw PlyError("malformed property line: " + line);
            if (!in_vertex) throw PlyError("property outside vertex element");
            props.push_back({name, *t, stride});
            stride += type_size(*t);
        } else {
            throw PlyError("unknown header keyword '" + keyword + "'");
        }
    }
    if (!seen_format || !seen_vertex) throw PlyError("malformed PLY header: missing format or vertex element");

    std::unordered_map<std::string, const Property*> by_name;
    for (const auto& p : props) {
        if (!by_name.emplace(p.name, &p).second) throw PlyError("duplicate property '" + p.name + "'");
    }
    auto require = [&](const std::string& n) {
        auto it = by_name.find(n);
        if (it == by_name.end()) throw PlyError("missing required property '" + n + "'");
        return it->second;
    };
    auto count_series = [&](const std::string& prefix) {
        int n = 0;
        while (by_name.count(prefix + std::to_string(n))) ++n;
        for (const auto& p : props) {
            if (p.name.rfind(prefix, 0) == 0) {
                const auto suffix = p.name.substr(prefix.size());
                if (suffix.empty() || suffix.find_first_not_of("0123456789") != std::string::npos ||
                    std::stoi(suffix) >= n) {
                    throw PlyError("property count mismatch: '" + p.name + "' breaks the contiguous " + prefix +
                                   "* series");
                }
            }
        }
        return n;
    };

    const Property* xyz[3] = {require("x"), require("y"), require("z")};
    const Property* dc[3] = {require("f_dc_0"), require("f_dc_1"), require("f_dc_2")};
    const Property* opacity = require("opacity");
    const Property* scale[3] = {require("scale_0"), require("scale_1"), require("scale_2")};
    const Property* rot[4] = {require("rot_0"), require("rot_1"), require("rot_2"), require("rot_3")};
    const int rest_count = count_series("f_rest_");
    if (rest_count != 0 && rest_count != kShRestCount) {
        throw PlyError("property count mismatch: expected 45 f_rest_* properties, found " +
                       std::to_string(rest_count));
    }
    const Property* rest[kShRestCount] = {};
    for (int i = 0; i < rest_count; ++i) rest[i] = require("f_rest_" + std::to_string(i));
    const int feature_dim = count_series("feat_");
    std::vector<const Property*> feat;
    for (int i = 0; i < feature_dim; ++i) feat.push_back(require("feat_" + std::to_string(i)));
    const Property* obj_id = by_name.count("obj_id") ? by_name.at("obj_id") : nullptr;

    const std::size_t body = bytes.size() - header_end;
    if (body < vertex_count * stride) {
        throw PlyError("truncated PLY body: expected " + std::to_string(vertex_count * stride) + " bytes, found " +
                       std::to_string(body));
    }

    SplatScene scene(feature_dim);
    scene.reserve(vertex_count);
    const char* base = bytes.data() + header_end;
    for (std::size_t i = 0; i < vertex_count; ++i) {
        const char* rec = base + i * stride;
        auto f = [&](const Property* p) {
            const double v = read_value(rec + p->offset, p->type);
            if (!std::isfinite(v)) throw PlyError("non-finite value in property '" + p->name + "'", i);
            return static_cast<float>(v);
        };
        GaussianKernel k;
        k.position = Vec3f(f(xyz[0]), f(xyz[1]), f(xyz[2]));
        for (int c = 0; c < 3; ++c) k.sh_dc[c] = f(dc[c]);
        for (int c = 0; c < rest_count; ++c) k.sh_rest[c] = f(rest[c]);
        k.opacity = activate_opacity(f(opacity));
        for (int c = 0; c < 3; ++c) k.scale[c] = activate_scale(f(scale[c]));
        if (!(k.scale.array() > 0.0f).all() || !k.scale.allFinite())
            throw PlyError("scale not representable as a positive float", i);

        const Eigen::Vector4d q(f(rot[0]), f(rot[1]), f(rot[2]), f(rot[3]));
        const double n = q.norm();
        if (!(n > 0.0) || !std::isfinite(n)) throw PlyError("zero-length rotation quaternion", i);
        if (std::abs(n - 1.0) > 1e-6) {
            const Eigen::Vector4d u = q / n;
            k.rotation = Quatf(float(u[0]), float(u[1]), float(u[2]), float(u[3]));
        } else {
            k.rotation = Quatf(float(q[0]), float(q[1]), float(q[2]), float(q[3]));
        }
        if (feature_dim > 0) {
            k.feature.resize(feature_dim);
            for (int c = 0; c < feature_dim; ++c) k.feature[c] = f(feat[c]);
        }
        if (obj_id) {
            const double v = read_value(rec + obj_id->offset, obj_id->type);
            if (!(v >= 0.0) || v != std::floor(v)) throw PlyError("invalid obj_id", i);
            k.object_id = static_cast<std::uint32_t>(v);
        }
        scene.push_back(std::move(k));
    }
    return scene;
}

SplatScene load_ply(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw PlyError("cannot open '" + path.string() + "'");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_ply(bytes);
}

std::string serialize_ply(const SplatScene& scene)
{
    std::ostringstream out;
    out << "ply\nformat binary_little_endian 1.0\n";
    out << "element vertex " << scene.size() << "\n";
    for (const char* n : {"x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2"}) out << "property float " << n << "\n";
    for (int i = 0; i < kShRestCount; ++i) out << "property float f_rest_" << i << "\n";
    out << "property float opacity\n";
    for (const char* n : {"scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"})
        out << "property float " << n << "\n";
    for (int i = 0; i < scene.feature_dim(); ++i) out << "property float feat_" << i << "\n";
    out << "property uint obj_id\nend_header\n";

    std::string header = out.str();
    const std::size_t floats_per = 3 + 3 + kShRestCount + 1 + 3 + 4 + scene.feature_dim();
    const std::size_t stride = floats_per * 4 + 4;
    std::string data(header.size() + stride * scene.size(), '\0');
    std::memcpy(data.data(), header.data(), header.size());
    char* dst = data.data() + header.size();
    for (const auto& k : scene.kernels()) {
        std::vector<float> rec;
        rec.reserve(floats_per);
        rec.insert(rec.end(), {k.position.x(), k.position.y(), k.position.z()});
        rec.insert(rec.end(), k.sh_dc.begin(), k.sh_dc.end());
        rec.insert(rec.end(), k.sh_rest.begin(), k.sh_rest.end());

        const float a = std::clamp(k.opacity, kOpacityEpsilon, 1.0f - kOpacityEpsilon);
        const auto logit_guess = static_cast<float>(std::log(double(a) / (1.0 - double(a))));
        rec.push_back(invert_exact(activate_opacity, a, logit_guess));
        for (int c = 0; c < 3; ++c) {
            const float s = k.scale[c];
            rec.push_back(invert_exact(activate_scale, s, static_cast<float>(std::log(double(s)))));
        }
        rec.insert(rec.end(), {k.rotation.w(), k.rotation.x(), k.rotation.y(), k.rotation.z()});
        for (int c = 0; c < scene.feature_dim(); ++c) rec.push_back(k.feature[c]);
        std::memcpy(dst, rec.data(), rec.size() * 4);
        const std::uint32_t id = k.object_id;
        std::memcpy(dst + rec.size() * 4, &id, 4);
        dst += stride;
    }
    return data;
}

void save_ply(const SplatScene& scene, const std::filesystem::path& path)
{
    const std::string data = serialize_ply(scene);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

} // namespace splatdyn
