// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/protocol.hpp"

#include <cstring>

namespace splatdyn::protocol {
namespace {

class Writer {
public:
    explicit Writer(Type t) { u8(std::uint8_t(t)); }
    void u8(std::uint8_t v) { bytes.push_back(v); }
    template <typename T>
    void put(T v)
    {
        const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
        bytes.insert(bytes.end(), p, p + sizeof(T));
    }
    void vec(const Vec3f& v)
    {
        for (int a = 0; a < 3; ++a) put(v[a]);
    }
    void raw(std::span<const std::uint8_t> b) { bytes.insert(bytes.end(), b.begin(), b.end()); }
    std::vector<std::uint8_t> bytes;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> b) : bytes_(b) {}
    template <typename T>
    T get()
    {
        need(sizeof(T));
        T v;
        std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }
    Vec3f vec()
    {
        Vec3f v;
        for (int a = 0; a < 3; ++a) v[a] = get<float>();
        return v;
    }
    std::span<const std::uint8_t> take(std::size_t n)
    {
        need(n);
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }
    void floats(std::vector<float>& out, std::size_t n)
    {
        need(n * sizeof(float));
        out.resize(n);
        std::memcpy(out.data(), bytes_.data() + pos_, n * sizeof(float));
        pos_ += n * sizeof(float);
    }
    void finish() const
    {
        if (pos_ != bytes_.size()) throw ProtocolError(ErrorCode::Malformed, "trailing bytes in message");
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const
    {
        if (pos_ + n > bytes_.size()) throw ProtocolError(ErrorCode::Malformed, "truncated message");
    }
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

void put_kernels(Writer& w, const SplatScene& s)
{
    w.put(std::uint32_t(s.size()));
    for (const auto& k : s.kernels()) {
        w.vec(k.position);
        for (float c : k.sh_dc) w.put(c);
        w.put(k.opacity);
        w.vec(k.scale);
        for (float v : {k.rotation.w(), k.rotation.x(), k.rotation.y(), k.rotation.z()}) w.put(v);
    }
}

std::vector<float> get_kernels(Reader& r)
{
    const auto n = r.get<std::uint32_t>();
    if (std::size_t(n) * kKernelStride * 4 > r.remaining()) throw ProtocolError(ErrorCode::Malformed, "kernel block exceeds message");
    std::vector<float> out;
    r.floats(out, std::size_t(n) * kKernelStride);
    return out;
}

Reader open(std::span<const std::uint8_t> bytes, Type expected)
{
    Reader r(bytes);
    if (bytes.empty() || bytes[0] != std::uint8_t(expected))
        throw ProtocolError(ErrorCode::UnknownType, "unexpected message type");
    r.get<std::uint8_t>();
    return r;
}

bool finite(const Vec3f& v) { return v.allFinite(); }

} // namespace

bool closes_session(ErrorCode code) { return code == ErrorCode::Malformed || code == ErrorCode::UnknownType || code == ErrorCode::Unauthorized; }

std::vector<std::uint8_t> encode_init(const Simulation& sim)
{
    const SceneBundle& b = sim.bundle();
    nlohmann::json objects = nlohmann::json::array();
    for (const auto& o : b.objects) {
        objects.push_back({{"id", o.id},
                           {"category", to_string(o.material.category)},
                           {"material", to_json(o.material)},
                           {"kernels", o.scene.size()},
                           {"particle_offset", o.particle_offset},
                           {"particle_count", o.particle_count},
                           {"m", o.binding.m}});
    }
    const auto& cfg = b.world.config;
    nlohmann::json meta{{"scene", b.name},
                        {"dt", cfg.dt},
                        {"substeps", cfg.substeps},
                        {"gravity", {cfg.gravity.x(), cfg.gravity.y(), cfg.gravity.z()}},
                        {"environment_kernels", b.environment.size()},
                        {"objects", objects},
                        {"particles", b.world.particles.size()}};
    if (b.world.plane)
        meta["plane"] = {{"normal", {b.world.plane->normal.x(), b.world.plane->normal.y(), b.world.plane->normal.z()}},
                         {"offset", b.world.plane->offset}};
    const std::string js = meta.dump();

    Writer w(Type::Init);
    w.put(kVersion);
    w.put(std::uint32_t(js.size()));
    w.raw({reinterpret_cast<const std::uint8_t*>(js.data()), js.size()});
    put_kernels(w, b.environment);
    for (const auto& o : b.objects) {
        put_kernels(w, o.scene);
        const auto table = serialize_binding(o.binding);
        w.put(std::uint32_t(table.size()));
        w.raw(table);
    }
    const auto& p = b.world.particles;
    w.put(std::uint32_t(p.size()));
    for (const auto& x : p.rest) w.vec(x.cast<float>());
    return std::move(w.bytes);
}

std::vector<std::uint8_t> encode_frame(const World& world)
{
    const auto& p = world.particles;
    Writer w(Type::Frame);
    w.bytes.reserve(9 + p.size() * kParticleStride * 4);
    w.put(std::uint32_t(world.frame()));
    w.put(std::uint32_t(p.size()));
    for (std::size_t i = 0; i < p.size(); ++i) {
        w.vec(p.position[i].cast<float>());
        const Quatf q = p.rotation[i].cast<float>();
        for (float v : {q.w(), q.x(), q.y(), q.z()}) w.put(v);
    }
    return std::move(w.bytes);
}

std::vector<std::uint8_t> encode_error(ErrorCode code, const std::string& message)
{
    Writer w(Type::Error);
    w.put(std::uint16_t(code));
    w.raw({reinterpret_cast<const std::uint8_t*>(message.data()), message.size()});
    return std::move(w.bytes);
}

std::vector<std::uint8_t> encode(const ClientMessage& m)
{
    return std::visit(
        [](const auto& msg) {
            using T = std::decay_t<decltype(msg)>;
            if constexpr (std::is_same_v<T, GrabMsg>) {
                Writer w(Type::Grab);
                w.vec(msg.origin);
                w.vec(msg.direction);
                w.put(msg.radius);
                return std::move(w.bytes);
            } else if constexpr (std::is_same_v<T, DragMsg>) {
                Writer w(Type::Drag);
                w.put(msg.timestamp);
                w.vec(msg.target);
                return std::move(w.bytes);
            } else if constexpr (std::is_same_v<T, ReleaseMsg>) {
                return Writer(Type::Release).bytes;
            } else {
                Writer w(Type::Spawn);
                w.put(msg.radius);
                w.put(msg.mass);
                w.vec(msg.origin);
                w.vec(msg.velocity);
                return std::move(w.bytes);
            }
        },
        m);
}

ClientMessage decode_client(std::span<const std::uint8_t> bytes)
{
    if (bytes.empty()) throw ProtocolError(ErrorCode::Malformed, "empty message");
    Reader r(bytes);
    const auto type = r.get<std::uint8_t>();
    switch (Type(type)) {
    case Type::Grab: {
        GrabMsg g{r.vec(), r.vec(), r.get<float>()};
        r.finish();
        if (!finite(g.origin) || !finite(g.direction) || !std::isfinite(g.radius) || g.radius <= 0 ||
            g.direction.norm() == 0)
            throw ProtocolError(ErrorCode::Malformed, "invalid grab ray");
        return g;
    }
    case Type::Drag: {
        DragMsg d{r.get<double>(), r.vec()};
        r.finish();
        if (!finite(d.target) || !std::isfinite(d.timestamp)) throw ProtocolError(ErrorCode::Malformed, "invalid drag target");
        return d;
    }
    case Type::Release:
        r.finish();
        return ReleaseMsg{};
    case Type::Spawn: {
        SpawnMsg s{r.get<float>(), r.get<float>(), r.vec(), r.vec()};
        r.finish();
        if (!(s.radius > 0) || !(s.mass > 0) || !std::isfinite(s.radius) || !std::isfinite(s.mass) ||
            !finite(s.origin) || !finite(s.velocity))
            throw ProtocolError(ErrorCode::Malformed, "invalid projectile");
        return s;
    }
    default: throw ProtocolError(ErrorCode::UnknownType, "unknown message type " + std::to_string(type));
    }
}

InitMsg decode_init(std::span<const std::uint8_t> bytes)
{
    Reader r = open(bytes, Type::Init);
    InitMsg m;
    m.version = r.get<std::uint32_t>();
    if (m.version != kVersion) throw ProtocolError(ErrorCode::Malformed, "protocol version mismatch");
    const auto len = r.get<std::uint32_t>();
    const auto js = r.take(len);
    try {
        m.metadata = nlohmann::json::parse(js.begin(), js.end());
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(ErrorCode::Malformed, std::string("bad metadata: ") + e.what());
    }
    m.environment = get_kernels(r);
    for (std::size_t o = 0; o < m.metadata.at("objects").size(); ++o) {
        m.object_kernels.push_back(get_kernels(r));
        const auto n = r.get<std::uint32_t>();
        try {
            m.bindings.push_back(deserialize_binding(r.take(n)));
        } catch (const ArgumentError& e) {
            throw ProtocolError(ErrorCode::Malformed, e.what());
        }
    }
    const auto count = r.get<std::uint32_t>();
    if (std::size_t(count) * 12 > r.remaining()) throw ProtocolError(ErrorCode::Malformed, "particle block exceeds message");
    m.rest.resize(count);
    for (auto& x : m.rest) x = r.vec();
    r.finish();
    return m;
}

FrameMsg decode_frame(std::span<const std::uint8_t> bytes)
{
    Reader r = open(bytes, Type::Frame);
    FrameMsg f;
    f.frame = r.get<std::uint32_t>();
    const auto n = r.get<std::uint32_t>();
    if (std::size_t(n) * kParticleStride * 4 != r.remaining()) throw ProtocolError(ErrorCode::Malformed, "frame size mismatch");
    r.floats(f.particles, std::size_t(n) * kParticleStride);
    return f;
}

ErrorMsg decode_error(std::span<const std::uint8_t> bytes)
{
    Reader r = open(bytes, Type::Error);
    ErrorMsg e{ErrorCode(r.get<std::uint16_t>()), {}};
    const auto rest = r.take(r.remaining());
    e.message.assign(rest.begin(), rest.end());
    return e;
}

std::vector<float> skin_from_frame(const InitMsg& init, std::size_t object, const FrameMsg& frame)
{
    const std::size_t n = frame.particles.size() / kParticleStride;
    if (n < init.rest.size()) throw ArgumentError("frame has fewer particles than INIT");
    ParticleDeltas d;
    d.translation.resize(init.rest.size());
    d.rotation.resize(init.rest.size());
    for (std::size_t i = 0; i < init.rest.size(); ++i) {
        const float* p = frame.particles.data() + i * kParticleStride;
        d.translation[i] = Vec3f(p[0], p[1], p[2]) - init.rest[i];
        d.rotation[i] = Quatf(p[3], p[4], p[5], p[6]);
    }
    std::vector<float> out;
    skin_all(init.bindings.at(object), d, out, false);
    return out;
}

} // namespace splatdyn::protocol
