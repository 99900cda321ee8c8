// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/gaussian.hpp"

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>

namespace splatdyn {

/// Structured PLY parse failure. `element` names the offending vertex when known.
class PlyError : public std::runtime_error {
public:
    PlyError(const std::string& what, std::optional<std::size_t> element = std::nullopt)
        : std::runtime_error(element ? what + " (element " + std::to_string(*element) + ")" : what),
          element_(element)
    {
    }
    std::optional<std::size_t> element() const { return element_; }

private:
    std::optional<std::size_t> element_;
};

/// Opacity clamp used when writing logits.
constexpr float kOpacityEpsilon = 1e-6f;

/// Reads a binary little-endian 3DGS PLY. Log-scales are exponentiated, opacity logits
/// pass through a sigmoid and quaternions (w-first) are renormalized.
/// Optional properties: feat_0..feat_{F-1} (float) and obj_id (uint).
SplatScene load_ply(const std::filesystem::path& path);
SplatScene parse_ply(const std::string& bytes);

/// Writes the inverse transforms of load_ply. Output reloads bit-identically.
void save_ply(const SplatScene& scene, const std::filesystem::path& path);
std::string serialize_ply(const SplatScene& scene);

} // namespace splatdyn
