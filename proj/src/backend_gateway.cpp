// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#include "gcot/backend_gateway.hpp"

#include "gcot/core_model.hpp"

#include <cstdlib>
#include <thread>

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

namespace gcot {

namespace {

constexpr std::string_view kDataUriPrefix = "data:";
constexpr std::string_view kBase64Tag = ";base64,";

struct Endpoint {
    std::string scheme_host_port;
    std::string path_prefix;
};

Endpoint split_endpoint(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ConfigError("endpoint_url needs a scheme: " + url);
    const auto path_start = url.find('/', scheme_end + 3);
    Endpoint ep;
    ep.scheme_host_port = url.substr(0, path_start);
    if (path_start != std::string::npos) ep.path_prefix = url.substr(path_start);
    while (!ep.path_prefix.empty() && ep.path_prefix.back() == '/') ep.path_prefix.pop_back();
    return ep;
}

/// Leaves the in-flight count consistent on every exit path.
class InFlightSlot {
public:
    InFlightSlot(std::mutex& m, std::condition_variable& cv, GatewayCounters& c, int limit)
        : mutex_(m), cv_(cv), counters_(c) {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [&] { return counters_.in_flight < limit; });
        ++counters_.in_flight;
        counters_.peak_in_flight = std::max(counters_.peak_in_flight, counters_.in_flight);
        ++counters_.requests;
    }
    ~InFlightSlot() {
        {
            std::lock_guard lock(mutex_);
            --counters_.in_flight;
        }
        cv_.notify_one();
    }
    InFlightSlot(const InFlightSlot&) = delete;
    InFlightSlot& operator=(const InFlightSlot&) = delete;

private:
    std::mutex& mutex_;
    std::condition_variable& cv_;
    GatewayCounters& counters_;
};

}  // namespace

std::string ChatRequest::all_text() const {
    std::string out;
    for (const auto& m : messages) {
        for (const auto& p : m.parts) {
            if (p.image) continue;
            if (!out.empty()) out += '\n';
            out += p.text;
        }
    }
    return out;
}

const ImageAttachment* ChatRequest::image() const {
    for (const auto& m : messages) {
        for (const auto& p : m.parts) {
            if (p.image) return &*p.image;
        }
    }
    return nullptr;
}

ImageAttachment attachment_from_file(const std::filesystem::path& path) {
    ImageAttachment img;
    img.bytes = read_file_bytes(path);
    img.media_type = sniff_media_type(img.bytes);
    return img;
}

ChatRequest make_user_request(std::string model, std::string text, std::optional<ImageAttachment> image,
                              double temperature, int max_tokens) {
    ChatRequest req;
    req.model = std::move(model);
    req.temperature = temperature;
    req.max_tokens = max_tokens;
    ChatMessage msg{"user", {MessagePart::of_text(std::move(text))}};
    if (image) msg.parts.push_back(MessagePart::of_image(std::move(*image)));
    req.messages.push_back(std::move(msg));
    return req;
}

nlohmann::json to_wire_json(const ChatRequest& request) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : request.messages) {
        nlohmann::json content = nlohmann::json::array();
        for (const auto& p : m.parts) {
            if (p.image) {
                std::string url = std::string(kDataUriPrefix) + p.image->media_type + std::string(kBase64Tag) +
                                  base64_encode(p.image->bytes);
                content.push_back({{"type", "image_url"}, {"image_url", {{"url", std::move(url)}}}});
            } else {
                content.push_back({{"type", "text"}, {"text", p.text}});
            }
        }
        messages.push_back({{"role", m.role}, {"content", std::move(content)}});
    }
    nlohmann::json body = {
        {"model", request.model},
        {"messages", std::move(messages)},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
    };
    if (request.seed) body["seed"] = *request.seed;
    return body;
}

std::string serialize_request(const ChatRequest& request) { return to_wire_json(request).dump(); }

ChatRequest request_from_wire(const nlohmann::json& body) {
    try {
        ChatRequest req;
        req.model = body.at("model").get<std::string>();
        req.temperature = body.value("temperature", kDefaultTemperature);
        req.max_tokens = body.value("max_tokens", kDefaultMaxTokens);
        if (body.contains("seed")) req.seed = body.at("seed").get<std::uint64_t>();
        for (const auto& m : body.at("messages")) {
            ChatMessage msg;
            msg.role = m.at("role").get<std::string>();
            const auto& content = m.at("content");
            if (content.is_string()) {
                msg.parts.push_back(MessagePart::of_text(content.get<std::string>()));
            } else {
                for (const auto& part : content) {
                    const auto type = part.at("type").get<std::string>();
                    if (type == "text") {
                        msg.parts.push_back(MessagePart::of_text(part.at("text").get<std::string>()));
                    } else if (type == "image_url") {
                        const auto url = part.at("image_url").at("url").get<std::string>();
                        const auto tag = url.find(kBase64Tag);
                        if (!url.starts_with(kDataUriPrefix) || tag == std::string::npos) {
                            throw ProtocolError("image_url must be a base64 data URI");
                        }
                        ImageAttachment img;
                        img.media_type = url.substr(kDataUriPrefix.size(), tag - kDataUriPrefix.size());
                        img.bytes = base64_decode(std::string_view(url).substr(tag + kBase64Tag.size()));
                        msg.parts.push_back(MessagePart::of_image(std::move(img)));
                    } else {
                        throw ProtocolError("unsupported content part type '" + type + "'");
                    }
                }
            }
            req.messages.push_back(std::move(msg));
        }
        return req;
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("malformed chat request: ") + e.what());
    }
}

std::string extract_completion_text(std::string_view response_body) {
    const auto body = nlohmann::json::parse(response_body, nullptr, false);
    if (body.is_discarded()) throw ProtocolError("response body is not JSON");
    try {
        const auto& content = body.at("choices").at(0).at("message").at("content");
        if (content.is_string()) return content.get<std::string>();
        if (content.is_array()) {
            std::string out;
            for (const auto& part : content) {
                if (part.value("type", "") == "text") out += part.at("text").get<std::string>();
            }
            return out;
        }
        if (content.is_null()) return {};
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(std::string("malformed completion: ") + e.what());
    }
    throw ProtocolError("completion content has unexpected type");
}

std::string make_completion_body(std::string_view model, std::string_view content) {
    const nlohmann::json body = {
        {"object", "chat.completion"},
        {"model", model},
        {"choices",
         {{{"index", 0}, {"finish_reason", "stop"}, {"message", {{"role", "assistant"}, {"content", content}}}}}},
    };
    return body.dump();
}

void validate(const BackendProfile& profile) {
    if (profile.max_retries < 0) throw ConfigError("profile '" + profile.name + "': max_retries must be >= 0");
    if (profile.max_in_flight < 1) throw ConfigError("profile '" + profile.name + "': max_in_flight must be >= 1");
    if (!profile.oracle && profile.endpoint_url.empty()) {
        throw ConfigError("profile '" + profile.name + "': endpoint_url is required for live backends");
    }
}

Gateway::Gateway() : Gateway([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {}

Gateway::Gateway(Sleeper sleeper) : sleeper_(std::move(sleeper)) {}

std::chrono::milliseconds Gateway::backoff_delay(int retry) {
    // retry 1 -> 1 s, 2 -> 2 s, 3 -> 4 s ...
    return std::chrono::milliseconds(1000LL << std::min(retry - 1, 20));
}

Gateway::ProfileState& Gateway::state_for(const std::string& name) {
    std::lock_guard lock(states_mutex_);
    auto& slot = states_[name];
    if (!slot) slot = std::make_unique<ProfileState>();
    return *slot;
}

GatewayCounters Gateway::counters(const std::string& profile_name) const {
    std::lock_guard lock(states_mutex_);
    const auto it = states_.find(profile_name);
    if (it == states_.end()) return {};
    std::lock_guard inner(it->second->mutex);
    return it->second->counters;
}

std::string Gateway::complete(const BackendProfile& profile, const ChatRequest& request) {
    validate(profile);
    auto& state = state_for(profile.name);
    InFlightSlot slot(state.mutex, state.cv, state.counters, profile.max_in_flight);
    if (profile.oracle) {
        {
            std::lock_guard lock(state.mutex);
            ++state.counters.attempts;
        }
        return profile.oracle->answer(request);
    }
    return send_http(profile, request, state);
}

std::string Gateway::send_http(const BackendProfile& profile, const ChatRequest& request, ProfileState& state) {
    const auto endpoint = split_endpoint(profile.endpoint_url);
    const std::string body = serialize_request(request);
    httplib::Headers headers;
    if (!profile.auth_env_var.empty()) {
        if (const char* token = std::getenv(profile.auth_env_var.c_str()); token && *token) {
            headers.emplace("Authorization", std::string("Bearer ") + token);
        }
    }
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(profile.timeout_s));

    std::string last_error;
    for (int attempt = 0; attempt <= profile.max_retries; ++attempt) {
        if (attempt > 0) {
            {
                std::lock_guard lock(state.mutex);
                ++state.counters.retries;
            }
            sleeper_(backoff_delay(attempt));
        }
        {
            std::lock_guard lock(state.mutex);
            ++state.counters.attempts;
        }
        httplib::Client client(endpoint.scheme_host_port);
        client.set_connection_timeout(timeout);
        client.set_read_timeout(timeout);
        client.set_write_timeout(timeout);
        auto res = client.Post(endpoint.path_prefix + "/chat/completions", headers, body, "application/json");
        if (!res) {
            last_error = "transport: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
            continue;
        }
        if (res->status < 200 || res->status >= 300) {
            std::lock_guard lock(state.mutex);
            ++state.counters.failures;
            throw TransportError("HTTP " + std::to_string(res->status) + " from " + profile.endpoint_url);
        }
        return extract_completion_text(res->body);
    }
    {
        std::lock_guard lock(state.mutex);
        ++state.counters.failures;
    }
    throw TransportError(last_error + " (" + profile.endpoint_url + ", " + std::to_string(profile.max_retries) +
                         " retries)");
}

}  // namespace gcot
