// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/protocol.hpp"
#include "splatdyn/server.hpp"
#include "splatdyn/simulation.hpp"

#include "support/test_support.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>
#include <doctest.h>

#include <cstring>

using namespace splatdyn;
using namespace splatdyn::protocol;

namespace {

using Bytes = std::vector<std::uint8_t>;

template <typename T>
void put(Bytes& b, T v)
{
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    b.insert(b.end(), p, p + sizeof(T));
}

ErrorCode decode_code(const Bytes& b)
{
    try {
        decode_client(b);
    } catch (const ProtocolError& e) {
        return e.code();
    }
    FAIL("expected ProtocolError");
    return ErrorCode::Malformed;
}

Simulation& labdesk_sim()
{
    static testing::TempDir dir("proto");
    static Simulation sim(testing::labdesk_bundle(dir.path()));
    return sim;
}

namespace asio = boost::asio;
namespace beast = boost::beast;
namespace ws = beast::websocket;

/// Minimal synchronous test client.
struct Client {
    asio::io_context io;
    ws::stream<asio::ip::tcp::socket> stream{io};

    explicit Client(std::uint16_t port, const std::string& target = "/")
    {
        asio::ip::tcp::resolver r(io);
        asio::connect(stream.next_layer(), r.resolve("127.0.0.1", std::to_string(port)));
        stream.binary(true);
        stream.handshake("127.0.0.1", target);
    }
    Bytes read()
    {
        beast::flat_buffer buf;
        stream.read(buf);
        const auto d = buf.data();
        return Bytes(static_cast<const std::uint8_t*>(d.data()), static_cast<const std::uint8_t*>(d.data()) + d.size());
    }
    /// Reads until a message of `type` arrives.
    Bytes read_type(Type type)
    {
        for (;;) {
            auto b = read();
            if (!b.empty() && b[0] == std::uint8_t(type)) return b;
        }
    }
    void send(const Bytes& b) { stream.write(asio::buffer(b)); }
};

} // namespace

TEST_SUITE("protocol")
{
    TEST_CASE("client messages have fixed little-endian layouts and round trip")
    {
        const GrabMsg g{{1, 2, 3}, {0, -1, 0}, 0.05f};
        const auto gb = encode(g);
        Bytes expect{0x10};
        for (float f : {1.f, 2.f, 3.f, 0.f, -1.f, 0.f, 0.05f}) put(expect, f);
        CHECK(gb == expect);
        const auto gd = std::get<GrabMsg>(decode_client(gb));
        CHECK(gd.origin == g.origin);
        CHECK(gd.radius == g.radius);

        const DragMsg d{12.5, {0.1f, 0.2f, 0.3f}};
        const auto db = encode(d);
        CHECK(db.size() == 1 + 8 + 12);
        double ts;
        std::memcpy(&ts, db.data() + 1, 8);
        CHECK(ts == 12.5);
        CHECK(std::get<DragMsg>(decode_client(db)).target == d.target);

        CHECK(encode(ReleaseMsg{}) == Bytes{0x12});
        CHECK(std::holds_alternative<ReleaseMsg>(decode_client(Bytes{0x12})));

        const SpawnMsg s{0.02f, 2.f, {0, 0.1f, 0.4f}, {0, 0, -8}};
        const auto sb = encode(s);
        CHECK(sb.size() == 1 + 8 * 4);
        const auto sd = std::get<SpawnMsg>(decode_client(sb));
        CHECK(sd.velocity == s.velocity);
        CHECK(sd.mass == 2.f);
    }

    TEST_CASE("malformed and unknown messages carry the right code")
    {
        CHECK(decode_code({}) == ErrorCode::Malformed);
        CHECK(decode_code({0x55, 1, 2}) == ErrorCode::UnknownType);
        CHECK(decode_code({0x01}) == ErrorCode::UnknownType);
        auto g = encode(GrabMsg{{0, 0, 0}, {0, 1, 0}, 0.1f});
        for (std::size_t cut = 1; cut < g.size(); ++cut) CHECK(decode_code(Bytes(g.begin(), g.begin() + cut)) == ErrorCode::Malformed);
        auto trailing = g;
        trailing.push_back(0);
        CHECK(decode_code(trailing) == ErrorCode::Malformed);
        CHECK(decode_code({0x12, 0}) == ErrorCode::Malformed);
        CHECK(decode_code(encode(GrabMsg{{0, 0, 0}, {0, 0, 0}, 0.1f})) == ErrorCode::Malformed);
        CHECK(decode_code(encode(GrabMsg{{0, 0, 0}, {0, 1, 0}, -1.f})) == ErrorCode::Malformed);
        const float nan = std::numeric_limits<float>::quiet_NaN();
        CHECK(decode_code(encode(DragMsg{0, {nan, 0, 0}})) == ErrorCode::Malformed);
        CHECK(decode_code(encode(SpawnMsg{0.02f, 0.f, {0, 0, 0}, {0, 0, 0}})) == ErrorCode::Malformed);
        CHECK(closes_session(ErrorCode::Malformed));
        CHECK(closes_session(ErrorCode::UnknownType));
        CHECK(closes_session(ErrorCode::Unauthorized));
        CHECK_FALSE(closes_session(ErrorCode::NotOwner));
        CHECK_FALSE(closes_session(ErrorCode::Miss));
    }

    TEST_CASE("error messages round trip")
    {
        const auto b = encode_error(ErrorCode::NotOwner, "held elsewhere");
        CHECK(b[0] == 0x7F);
        CHECK(b[1] == 3);
        CHECK(b[2] == 0);
        const auto e = decode_error(b);
        CHECK(e.code == ErrorCode::NotOwner);
        CHECK(e.message == "held elsewhere");
    }

    TEST_CASE("INIT carries the scene and bindings; FRAME carries particle state")
    {
        auto& sim = labdesk_sim();
        const auto init = decode_init(encode_init(sim));
        CHECK(init.version == kVersion);
        REQUIRE(init.object_kernels.size() == sim.bundle().objects.size());
        CHECK(init.environment.size() == sim.bundle().environment.size() * kKernelStride);
        CHECK(init.rest.size() == sim.world().particles.size());
        CHECK(init.metadata["objects"].size() == 6);
        CHECK(init.metadata["dt"] == sim.world().config.dt);
        for (std::size_t o = 0; o < init.bindings.size(); ++o) {
            CHECK(serialize_binding(init.bindings[o]) == serialize_binding(sim.bundle().objects[o].binding));
            CHECK(init.object_kernels[o].size() == sim.bundle().objects[o].scene.size() * kKernelStride);
        }
        const auto& k0 = sim.bundle().environment[0];
        CHECK(init.environment[0] == k0.position.x());
        CHECK(init.environment[7] == k0.scale.x());
        CHECK(init.environment[10] == k0.rotation.w());

        for (int f = 0; f < 5; ++f) sim.advance();
        const auto frame = decode_frame(encode_frame(sim.world()));
        CHECK(frame.frame == sim.frame());
        REQUIRE(frame.particles.size() == sim.world().particles.size() * kParticleStride);
        CHECK(frame.particles[7 * 3 + 1] == float(sim.world().particles.position[3].y()));
        CHECK_THROWS_AS(decode_frame(Bytes{0x02, 0, 0}), ProtocolError);
        auto truncated = encode_init(sim);
        truncated.resize(truncated.size() - 5);
        CHECK_THROWS_AS(decode_init(truncated), ProtocolError);
    }

    TEST_CASE("client-side skinning from INIT and FRAME matches the server")
    {
        auto& sim = labdesk_sim();
        const auto init = decode_init(encode_init(sim));
        for (int f = 0; f < 5; ++f) {
            sim.advance();
            const auto frame = decode_frame(encode_frame(sim.world()));
            for (std::size_t o = 0; o < init.bindings.size(); ++o) {
                const auto client = skin_from_frame(init, o, frame);
                const auto& server = sim.transforms()[o];
                REQUIRE(client.size() == server.size());
                float worst = 0;
                for (std::size_t k = 0; k < client.size(); k += 7)
                    worst = std::max(worst, (Vec3f(client[k], client[k + 1], client[k + 2]) -
                                             Vec3f(server[k], server[k + 1], server[k + 2])).norm());
                CHECK(worst < 1e-4f);
            }
        }
    }
}

TEST_SUITE("server")
{
    TEST_CASE("sessions receive INIT then frames, and interaction has one owner")
    {
        testing::TempDir dir("srv");
        Simulation sim(testing::labdesk_bundle(dir.path()));
        const auto expected_init = encode_init(sim);
        // The tool's top surface sits at rest near y = 0.035; aim straight down at it.
        const auto* tool = sim.bundle().find(4);
        Vec3d c = Vec3d::Zero();
        for (std::uint32_t i = tool->particle_offset; i < tool->particle_offset + tool->particle_count; ++i)
            c += sim.world().particles.position[i];
        c /= tool->particle_count;

        ServeOptions opt;
        opt.port = 0;
        opt.token = "t0k";
        Server server(sim, opt);
        const auto port = server.start();

        {
            // A wrong token is answered with an Unauthorized error and a 4005 close.
            Client intruder(port, "/?token=wrong");
            CHECK(decode_error(intruder.read()).code == ErrorCode::Unauthorized);
            beast::flat_buffer buf;
            beast::error_code ec;
            intruder.stream.read(buf, ec);
            CHECK(ec == ws::error::closed);
            CHECK(intruder.stream.reason().code == 4005);
        }
        Client a(port, "/?token=t0k"), b(port, "/?token=t0k");
        CHECK(a.read() == expected_init);
        CHECK(b.read() == expected_init);
        const auto f1 = decode_frame(a.read_type(Type::Frame));
        const auto f2 = decode_frame(a.read_type(Type::Frame));
        CHECK(f2.frame > f1.frame);

        a.send(encode(GrabMsg{{9, 9, 9}, {0, 1, 0}, 0.01f}));
        CHECK(decode_error(a.read_type(Type::Error)).code == ErrorCode::Miss);
        a.send(encode(GrabMsg{(c + Vec3d(0, 0.5, 0)).cast<float>(), {0, -1, 0}, 0.03f}));
        b.send(encode(DragMsg{0, {0, 1, 0}}));
        CHECK(decode_error(b.read_type(Type::Error)).code == ErrorCode::NotOwner);
        b.send(encode(GrabMsg{(c + Vec3d(0, 0.5, 0)).cast<float>(), {0, -1, 0}, 0.03f}));
        CHECK(decode_error(b.read_type(Type::Error)).code == ErrorCode::NotOwner);
        const Vec3f goal = (c + Vec3d(0, 0.12, 0)).cast<float>();
        a.send(encode(DragMsg{0, goal}));
        // The tool rises toward the drag target.
        float best = 1e9f;
        for (int i = 0; i < 40; ++i) {
            const auto fr = decode_frame(a.read_type(Type::Frame));
            Vec3f m = Vec3f::Zero();
            for (std::uint32_t p = tool->particle_offset; p < tool->particle_offset + tool->particle_count; ++p)
                m += Vec3f(fr.particles[p * 7], fr.particles[p * 7 + 1], fr.particles[p * 7 + 2]);
            m /= float(tool->particle_count);
            best = std::min(best, std::abs(goal.y() - m.y()));
        }
        CHECK(best < 0.06f);
        a.send(encode(ReleaseMsg{}));
        a.send(encode(SpawnMsg{0.02f, 1.f, {0, 0.3f, 0.5f}, {0, 0, -2}}));
        const std::size_t initial = decode_init(expected_init).rest.size();
        bool grew = false;
        for (int i = 0; i < 1000 && !grew; ++i)
            grew = decode_frame(b.read_type(Type::Frame)).particles.size() == (initial + 1) * kParticleStride;
        CHECK(grew);

        // A malformed message gets an ERROR then a close carrying 4000 + code.
        b.send(Bytes{0x10, 1, 2});
        CHECK(decode_error(b.read_type(Type::Error)).code == ErrorCode::Malformed);
        beast::error_code ec;
        for (int i = 0; i < 100 && !ec; ++i) {
            beast::flat_buffer buf;
            b.stream.read(buf, ec);
        }
        CHECK(ec == ws::error::closed);
        CHECK(b.stream.reason().code == 4001);
        server.stop();
        CHECK(server.wait_for(std::chrono::seconds(5)));
        const auto st = server.stats();
        CHECK(st.sessions >= 2);
        CHECK(st.protocol_errors >= 1);
        CHECK_FALSE(server.fault());
    }

    TEST_CASE("streamed frames equal a headless run of the same scenario")
    {
        testing::TempDir a("eqa"), b("eqb");
        Simulation served(testing::labdesk_bundle(a.path()));
        Simulation local(testing::labdesk_bundle(b.path()));
        served.set_scenario(load_scenario(a / "interact.json"));
        local.set_scenario(load_scenario(b / "interact.json"));
        ServeOptions opt;
        opt.port = 0;
        opt.realtime = true;
        opt.duration = 0.6;
        opt.frame_queue_cap = 64;
        Server server(served, opt);
        Client c(server.start());
        c.read_type(Type::Init);
        std::map<std::uint32_t, FrameMsg> got;
        beast::error_code ec;
        while (server.wait_for(std::chrono::milliseconds(0)) == false || got.size() < 30) {
            beast::flat_buffer buf;
            c.stream.read(buf, ec);
            if (ec) break;
            const auto d = buf.data();
            const Bytes bytes(static_cast<const std::uint8_t*>(d.data()), static_cast<const std::uint8_t*>(d.data()) + d.size());
            if (bytes[0] != std::uint8_t(Type::Frame)) continue;
            auto f = decode_frame(bytes);
            const auto n = f.frame;
            got[n] = std::move(f);
            if (n >= 30) break;
        }
        server.stop();
        REQUIRE(got.size() >= 10);
        std::size_t compared = 0;
        for (std::uint32_t frame = 1; frame <= got.rbegin()->first; ++frame) {
            local.advance();
            auto it = got.find(frame);
            if (it == got.end()) continue;
            CHECK(it->second.particles == decode_frame(encode_frame(local.world())).particles);
            ++compared;
        }
        CHECK(compared >= 10);
    }
}
