// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/binding.hpp"

#include "splatdyn/kdtree.hpp"

#include <spdlog/spdlog.h>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace splatdyn {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

void BindingTable::validate(std::size_t particle_count) const
{
    const std::size_t n = size();
    if (m == 0 && n > 0) throw ArgumentError("binding stride must be positive");
    if (particle.size() != n * m || weight.size() != n * m || offset.size() != n * m || rest_rotation.size() != n)
        throw ArgumentError("binding table arrays disagree in size");
    for (std::size_t k = 0; k < n; ++k) {
        double sum = 0;
        for (std::size_t s = 0; s < m; ++s) {
            if (particle[k * m + s] >= particle_count) throw ArgumentError("binding references a missing particle");
            if (weight[k * m + s] < 0) throw ArgumentError("negative binding weight");
            sum += weight[k * m + s];
        }
        if (std::abs(sum - 1) > 1e-5) throw ArgumentError("binding weights of kernel " + std::to_string(k) + " do not sum to 1");
    }
}

int binding_count(Phase phase) { return phase == Phase::Deformable ? 4 : 1; }

BindingTable build_binding(const SplatScene& object, std::span<const Vec3d> particle_rest, int m,
                           std::uint32_t index_offset)
{
    if (m < 1) throw ArgumentError("binding needs m >= 1");
    if (particle_rest.empty()) throw ArgumentError("binding needs at least one particle");
    if (std::size_t(m) > particle_rest.size()) {
        spdlog::warn("binding: only {} particles available, reducing m from {}", particle_rest.size(), m);
        m = int(particle_rest.size());
    }
    const KdTree<double> tree(std::vector<Vec3d>(particle_rest.begin(), particle_rest.end()));
    BindingTable t;
    t.m = std::size_t(m);
    const std::size_t n = object.size();
    t.particle.resize(n * t.m);
    t.weight.resize(n * t.m);
    t.offset.resize(n * t.m);
    t.rest_position.resize(n);
    t.rest_rotation.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        const GaussianKernel& g = object[k];
        const Vec3d x = g.position.cast<double>();
        t.rest_position[k] = g.position;
        t.rest_rotation[k] = g.rotation;
        const auto nb = tree.knn(x, t.m);
        std::vector<double> w(t.m);
        if (nb.front().distance_squared == 0) {
            w[0] = 1;
        } else {
            double sum = 0;
            for (std::size_t s = 0; s < t.m; ++s) sum += w[s] = 1.0 / std::sqrt(nb[s].distance_squared);
            for (auto& v : w) v /= sum;
        }
        for (std::size_t s = 0; s < t.m; ++s) {
            t.particle[k * t.m + s] = nb[s].index + index_offset;
            t.weight[k * t.m + s] = float(w[s]);
            t.offset[k * t.m + s] = (x - particle_rest[nb[s].index]).cast<float>();
        }
    }
    return t;
}

ParticleDeltas particle_deltas(const ParticleSet& p)
{
    ParticleDeltas d;
    d.translation.resize(p.size());
    d.rotation.resize(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        d.translation[i] = (p.position[i] - p.rest[i]).cast<float>();
        d.rotation[i] = p.rotation[i].cast<float>();
    }
    return d;
}

KernelTransform skin_kernel(const BindingTable& t, std::size_t k, const ParticleDeltas& d)
{
    const std::size_t base = k * t.m;
    const Quatf& lead = d.rotation[t.particle[base]];
    Vec3f translation = Vec3f::Zero();
    Eigen::Vector4f blend = Eigen::Vector4f::Zero();
    for (std::size_t s = 0; s < t.m; ++s) {
        const std::uint32_t i = t.particle[base + s];
        const float w = t.weight[base + s];
        const Quatf& q = d.rotation[i];
        const Vec3f& xd = t.offset[base + s];
        translation += w * (d.translation[i] + rotate(q, xd) - xd);
        const float sign = q.coeffs().dot(lead.coeffs()) < 0 ? -1.f : 1.f;
        blend += (w * sign) * q.coeffs();
    }
    KernelTransform out;
    out.position = t.rest_position[k] + translation;
    const float norm = blend.norm();
    Quatf delta;
    if (norm > 1e-8f) {
        delta.coeffs() = blend / norm;
    } else {
        delta = lead;
        out.fallback = true;
    }
    out.rotation = delta * t.rest_rotation[k];
    return out;
}

std::size_t skin_all(const BindingTable& t, const ParticleDeltas& d, std::vector<float>& buffer, bool parallel)
{
    const std::size_t n = t.size();
    for (auto i : t.particle)
        if (i >= d.size()) throw ArgumentError("particle deltas do not cover the binding table");
    buffer.resize(n * kTransformStride);
    std::size_t fallbacks = 0;
#pragma omp parallel for schedule(static) reduction(+ : fallbacks) if (parallel)
    for (std::ptrdiff_t sk = 0; sk < std::ptrdiff_t(n); ++sk) {
        const auto k = std::size_t(sk);
        const KernelTransform tr = skin_kernel(t, k, d);
        float* o = buffer.data() + k * kTransformStride;
        o[0] = tr.position.x();
        o[1] = tr.position.y();
        o[2] = tr.position.z();
        o[3] = tr.rotation.w();
        o[4] = tr.rotation.x();
        o[5] = tr.rotation.y();
        o[6] = tr.rotation.z();
        fallbacks += tr.fallback;
    }
    return fallbacks;
}

SplatScene apply_transforms(const SplatScene& scene, std::span<const float> buffer)
{
    if (buffer.size() != scene.size() * kTransformStride) throw ArgumentError("transform buffer size mismatch");
    SplatScene out = scene;
    for (std::size_t k = 0; k < scene.size(); ++k) {
        const float* b = buffer.data() + k * kTransformStride;
        out[k].position = Vec3f(b[0], b[1], b[2]);
        out[k].rotation = Quatf(b[3], b[4], b[5], b[6]);
    }
    return out;
}

void write_transform_buffer(const std::filesystem::path& path, std::span<const float> buffer)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(buffer.data()), std::streamsize(buffer.size_bytes()));
    if (!f) throw std::runtime_error("failed writing " + path.string());
}

std::vector<float> read_transform_buffer(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary | std::ios::ate);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    const auto bytes = std::size_t(f.tellg());
    if (bytes % (sizeof(float) * kTransformStride) != 0) throw std::runtime_error("truncated transform buffer " + path.string());
    std::vector<float> out(bytes / sizeof(float));
    f.seekg(0);
    f.read(reinterpret_cast<char*>(out.data()), std::streamsize(bytes));
    return out;
}

namespace {

template <typename T>
void put(std::vector<std::uint8_t>& out, const T& v)
{
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
}

struct Reader {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;

    template <typename T>
    T get()
    {
        if (pos + sizeof(T) > bytes.size()) throw ArgumentError("truncated binding table");
        T v;
        std::memcpy(&v, bytes.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
};

} // namespace

std::vector<std::uint8_t> serialize_binding(const BindingTable& t)
{
    std::vector<std::uint8_t> out;
    const std::size_t n = t.size();
    out.reserve(8 + n * t.m * 20 + n * 28);
    put(out, std::uint32_t(n));
    put(out, std::uint32_t(t.m));
    for (auto i : t.particle) put(out, i);
    for (auto w : t.weight) put(out, w);
    for (const auto& o : t.offset)
        for (int a = 0; a < 3; ++a) put(out, o[a]);
    for (std::size_t k = 0; k < n; ++k) {
        for (int a = 0; a < 3; ++a) put(out, t.rest_position[k][a]);
        const Quatf& q = t.rest_rotation[k];
        for (float v : {q.w(), q.x(), q.y(), q.z()}) put(out, v);
    }
    return out;
}

BindingTable deserialize_binding(std::span<const std::uint8_t> bytes)
{
    Reader r{bytes};
    BindingTable t;
    const std::size_t n = r.get<std::uint32_t>();
    t.m = r.get<std::uint32_t>();
    const std::size_t need = 8 + n * t.m * 20 + n * 28;
    if (bytes.size() != need) throw ArgumentError("binding table byte size mismatch");
    t.particle.resize(n * t.m);
    t.weight.resize(n * t.m);
    t.offset.resize(n * t.m);
    t.rest_position.resize(n);
    t.rest_rotation.resize(n);
    for (auto& i : t.particle) i = r.get<std::uint32_t>();
    for (auto& w : t.weight) w = r.get<float>();
    for (auto& o : t.offset)
        for (int a = 0; a < 3; ++a) o[a] = r.get<float>();
    for (std::size_t k = 0; k < n; ++k) {
        for (int a = 0; a < 3; ++a) t.rest_position[k][a] = r.get<float>();
        const float w = r.get<float>(), x = r.get<float>(), y = r.get<float>(), z = r.get<float>();
        t.rest_rotation[k] = Quatf(w, x, y, z);
    }
    return t;
}

} // namespace splatdyn
