// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "splatdyn/material.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <semaphore>

namespace splatdyn {

struct AnalysisRequest {
    std::string scene;
    std::uint32_t object_id = 0;
    std::filesystem::path image;
    std::filesystem::path mask;
    std::string dialogue; ///< optional user prompt, e.g. "this wolf is made of sand"
};

/// The reply could not be turned into a valid material; raw() holds it verbatim.
class AnalysisError : public std::runtime_error {
public:
    AnalysisError(const std::string& what, std::string raw) : std::runtime_error(what), raw_(std::move(raw)) {}
    const std::string& raw() const { return raw_; }

private:
    std::string raw_;
};

/// Network or endpoint failure; the request may be retried.
class TransportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class AnalysisClient {
public:
    virtual ~AnalysisClient() = default;
    virtual MaterialSpec analyze(const AnalysisRequest& request) = 0;
};

/// Offline client answering from JSON files named <scene>.json:
///   {"scene": "...", "entries": [{"object_id": 1, "dialogue": "made of sand", "material": {...}}, ...]}
/// An entry whose dialogue occurs (case-insensitively) in the request's dialogue wins over an
/// entry without one. Immutable after construction.
class FixtureClient final : public AnalysisClient {
public:
    explicit FixtureClient(const std::filesystem::path& directory);
    MaterialSpec analyze(const AnalysisRequest& request) override;

    std::size_t entry_count() const;
    /// Every (scene, object, dialogue) key with its spec, in file order.
    struct Entry {
        std::string scene;
        std::uint32_t object_id;
        std::string dialogue;
        MaterialSpec spec;
    };
    const std::vector<Entry>& entries() const { return entries_; }

private:
    std::vector<Entry> entries_;
};

struct RemoteOptions {
    std::string endpoint;   ///< http://host:port/path of a chat-completions style endpoint
    std::string model = "vision-model";
    std::string token;      ///< bearer token; empty reads SPLATDYN_ANALYSIS_TOKEN
    std::filesystem::path prompt_dir; ///< holds system.txt and few_shot.json
    int max_in_flight = 2;
    int timeout_s = 60;
};

/// Sends the image, mask and dialogue with the prompt assets to a vision-language endpoint
/// and validates the JSON it returns.
class RemoteClient final : public AnalysisClient {
public:
    explicit RemoteClient(RemoteOptions options);
    MaterialSpec analyze(const AnalysisRequest& request) override;

    /// Request body for `request`; exposed for inspection and tests.
    nlohmann::json build_body(const AnalysisRequest& request) const;

private:
    RemoteOptions options_;
    std::string system_prompt_;
    nlohmann::json few_shot_;
    std::counting_semaphore<64> in_flight_;
};

/// Extracts the material object from a model reply that may wrap the JSON in prose or fences.
MaterialSpec parse_reply(const std::string& reply);

inline MaterialSpec analyze(AnalysisClient& client, const AnalysisRequest& request) { return client.analyze(request); }

} // namespace splatdyn
