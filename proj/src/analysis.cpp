// SPDX-License-Identifier: Apache-2.0
#include "splatdyn/analysis.hpp"

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/transform_width.hpp>
#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>

namespace splatdyn {
namespace {

std::string lower(std::string s)
{
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return char(std::tolower(c)); });
    return s;
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string base64(const std::string& bytes)
{
    using namespace boost::archive::iterators;
    using It = base64_from_binary<transform_width<std::string::const_iterator, 6, 8>>;
    std::string out(It(bytes.begin()), It(bytes.end()));
    out.append((3 - bytes.size() % 3) % 3, '=');
    return out;
}

std::string data_url(const std::filesystem::path& path)
{
    const std::string ext = lower(path.extension().string());
    const char* mime = ext == ".png" ? "image/png" : (ext == ".jpg" || ext == ".jpeg") ? "image/jpeg" : "application/octet-stream";
    return std::string("data:") + mime + ";base64," + base64(read_file(path));
}

} // namespace

FixtureClient::FixtureClient(const std::filesystem::path& directory)
{
    if (!std::filesystem::is_directory(directory)) throw ArgumentError("fixture directory not found: " + directory.string());
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(directory))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(file));
        } catch (const nlohmann::json::exception& e) {
            throw ArgumentError("fixture " + file.string() + ": " + e.what());
        }
        const std::string scene = j.value("scene", file.stem().string());
        for (const auto& e : j.at("entries")) {
            try {
                entries_.push_back({scene, e.at("object_id").get<std::uint32_t>(), lower(e.value("dialogue", "")),
                                    parse_material(e.at("material"))});
            } catch (const MaterialError& err) {
                throw ArgumentError("fixture " + file.string() + ": " + err.what());
            }
        }
    }
}

std::size_t FixtureClient::entry_count() const { return entries_.size(); }

MaterialSpec FixtureClient::analyze(const AnalysisRequest& request)
{
    const std::string dialogue = lower(request.dialogue);
    const Entry* fallback = nullptr;
    for (const auto& e : entries_) {
        if (e.scene != request.scene || e.object_id != request.object_id) continue;
        if (e.dialogue.empty()) {
            if (!fallback) fallback = &e;
        } else if (!dialogue.empty() && dialogue.find(e.dialogue) != std::string::npos) {
            return e.spec;
        }
    }
    if (fallback) return fallback->spec;
    throw AnalysisError("no fixture for scene '" + request.scene + "' object " + std::to_string(request.object_id) +
                            (dialogue.empty() ? std::string() : " with dialogue '" + request.dialogue + "'"),
                        "");
}

MaterialSpec parse_reply(const std::string& reply)
{
    const auto open = reply.find('{');
    const auto close = reply.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open)
        throw AnalysisError("reply contains no JSON object", reply);
    try {
        return parse_material(nlohmann::json::parse(reply.substr(open, close - open + 1)));
    } catch (const nlohmann::json::exception& e) {
        throw AnalysisError(std::string("reply is not valid JSON: ") + e.what(), reply);
    } catch (const MaterialError& e) {
        throw AnalysisError(std::string("reply violates the material schema: ") + e.what(), reply);
    }
}

RemoteClient::RemoteClient(RemoteOptions options)
    : options_(std::move(options)), in_flight_(std::clamp(options_.max_in_flight, 1, 64))
{
    if (options_.endpoint.empty()) throw ArgumentError("remote analysis needs an endpoint");
    if (options_.token.empty())
        if (const char* t = std::getenv("SPLATDYN_ANALYSIS_TOKEN")) options_.token = t;
    system_prompt_ = read_file(options_.prompt_dir / "system.txt");
    few_shot_ = nlohmann::json::parse(read_file(options_.prompt_dir / "few_shot.json"));
}

nlohmann::json RemoteClient::build_body(const AnalysisRequest& r) const
{
    nlohmann::json messages = nlohmann::json::array();
    messages.push_back({{"role", "system"}, {"content", system_prompt_}});
    for (const auto& shot : few_shot_) {
        messages.push_back({{"role", "user"}, {"content", shot.at("user")}});
        messages.push_back({{"role", "assistant"}, {"content", shot.at("assistant").dump()}});
    }
    std::string text = "Image 1 is the scene, image 2 marks the target object in white.";
    if (!r.dialogue.empty()) text += " User note: " + r.dialogue;
    nlohmann::json content = nlohmann::json::array();
    content.push_back({{"type", "text"}, {"text", text}});
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", data_url(r.image)}}}});
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", data_url(r.mask)}}}});
    messages.push_back({{"role", "user"}, {"content", content}});
    return {{"model", options_.model}, {"messages", messages}, {"temperature", 0}};
}

MaterialSpec RemoteClient::analyze(const AnalysisRequest& request)
{
    static const std::regex url(R"(^http://([^/:]+)(?::(\d+))?(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(options_.endpoint, m, url)) throw ArgumentError("endpoint must look like http://host[:port]/path");
    const std::string host = m[1];
    const int port = m[2].matched ? std::stoi(m[2]) : 80;
    const std::string path = m[3].matched ? std::string(m[3]) : "/";
    const std::string body = build_body(request).dump();

    in_flight_.acquire();
    struct Release {
        std::counting_semaphore<64>& s;
        ~Release() { s.release(); }
    } release{in_flight_};

    httplib::Client client(host, port);
    client.set_read_timeout(options_.timeout_s, 0);
    client.set_connection_timeout(options_.timeout_s, 0);
    httplib::Headers headers;
    if (!options_.token.empty()) headers.emplace("Authorization", "Bearer " + options_.token);
    const auto res = client.Post(path, headers, body, "application/json");
    if (!res) throw TransportError("analysis endpoint unreachable: " + httplib::to_string(res.error()));
    if (res->status >= 500 || res->status == 429)
        throw TransportError("analysis endpoint returned HTTP " + std::to_string(res->status));
    if (res->status != 200) throw AnalysisError("analysis endpoint returned HTTP " + std::to_string(res->status), res->body);
    std::string reply;
    try {
        reply = nlohmann::json::parse(res->body).at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw AnalysisError("unexpected response envelope", res->body);
    }
    return parse_reply(reply);
}

} // namespace splatdyn
