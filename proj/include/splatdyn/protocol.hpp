// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/simulation.hpp"

#include <span>
#include <variant>

namespace splatdyn::protocol {

// One WebSocket binary message per protocol message. Byte 0 is the type; all integers and
// floats are little-endian, floats are IEEE float32 unless stated.
constexpr std::uint32_t kVersion = 1;

enum class Type : std::uint8_t {
    Init = 0x01,
    Frame = 0x02,
    Grab = 0x10,
    Drag = 0x11,
    Release = 0x12,
    Spawn = 0x13,
    Error = 0x7F,
};

enum class ErrorCode : std::uint16_t {
    Malformed = 1,   ///< closes the session
    UnknownType = 2, ///< closes the session
    NotOwner = 3,    ///< another session holds the interaction; session stays open
    Miss = 4,        ///< grab ray hit no particle; session stays open
    Unauthorized = 5,
};

bool closes_session(ErrorCode code);

class ProtocolError : public std::runtime_error {
public:
    ProtocolError(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

/// Floats per kernel in an INIT kernel block:
/// x y z, dc0 dc1 dc2, opacity, sx sy sz (linear), qw qx qy qz.
constexpr std::size_t kKernelStride = 14;
/// Floats per particle in a FRAME: x y z qw qx qy qz.
constexpr std::size_t kParticleStride = 7;

struct GrabMsg {
    Vec3f origin, direction;
    float radius;
};
struct DragMsg {
    double timestamp;
    Vec3f target;
};
struct ReleaseMsg {};
struct SpawnMsg {
    float radius, mass;
    Vec3f origin, velocity;
};
using ClientMessage = std::variant<GrabMsg, DragMsg, ReleaseMsg, SpawnMsg>;

/// INIT: u8 type, u32 version, u32 metadata length, metadata JSON (UTF-8),
/// environment kernel block, then per object a kernel block and its binding table
/// (serialize_binding, prefixed by u32 byte length), then u32 particle count and
/// f32 x0 y0 z0 per particle. A kernel block is u32 count then count * 14 floats.
std::vector<std::uint8_t> encode_init(const Simulation& sim);
/// FRAME: u8 type, u32 frame, u32 particle count, count * (x y z qw qx qy qz).
/// Particles beyond the INIT count are projectiles spawned later.
std::vector<std::uint8_t> encode_frame(const World& world);
std::vector<std::uint8_t> encode_error(ErrorCode code, const std::string& message);

std::vector<std::uint8_t> encode(const ClientMessage& m);
/// Throws ProtocolError (Malformed or UnknownType).
ClientMessage decode_client(std::span<const std::uint8_t> bytes);

/// Decoded server messages, for clients and tests.
struct InitMsg {
    std::uint32_t version = 0;
    nlohmann::json metadata;
    std::vector<float> environment;
    std::vector<std::vector<float>> object_kernels;
    std::vector<BindingTable> bindings;
    std::vector<Vec3f> rest;
};
struct FrameMsg {
    std::uint32_t frame = 0;
    std::vector<float> particles;
};
struct ErrorMsg {
    ErrorCode code;
    std::string message;
};
InitMsg decode_init(std::span<const std::uint8_t> bytes);
FrameMsg decode_frame(std::span<const std::uint8_t> bytes);
ErrorMsg decode_error(std::span<const std::uint8_t> bytes);

/// Client-side skinning of one object from a FRAME, using only INIT data.
std::vector<float> skin_from_frame(const InitMsg& init, std::size_t object, const FrameMsg& frame);

} // namespace splatdyn::protocol
