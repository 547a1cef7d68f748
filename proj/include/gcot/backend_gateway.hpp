// Copyright (C) 2026 The gcot-forge Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "gcot/image.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace gcot {

// Verbatim prompt fragments. The scripted oracle classifies requests by these.
inline constexpr std::string_view kGroundingInstruction = "Please provide the bounding box coordinate of the region.";
inline constexpr std::string_view kReadingPrompt = "The content in this image is:";
inline constexpr std::string_view kAnswerMarker = "*Answer*:";
inline constexpr std::string_view kDistillPromptHead = "Based on the following question: ";
inline constexpr std::string_view kGenerationInstruction =
    "Reason step by step, give the bounding box coordinate [x1, y1, x2, y2] right after each key item you read "
    "from the image, and finish with the format '*Answer*:'";

inline constexpr double kDefaultTemperature = 0.0;
inline constexpr double kGenerationTemperature = 0.8;
inline constexpr int kDefaultMaxTokens = 1024;

struct ImageAttachment {
    std::string media_type;  // "image/png" or "image/jpeg"
    Bytes bytes;

    bool operator==(const ImageAttachment&) const = default;
};

/// One content part: text, or an image attachment.
struct MessagePart {
    std::string text;
    std::optional<ImageAttachment> image;

    static MessagePart of_text(std::string t) { return {std::move(t), std::nullopt}; }
    static MessagePart of_image(ImageAttachment img) { return {{}, std::move(img)}; }

    bool operator==(const MessagePart&) const = default;
};

struct ChatMessage {
    std::string role;
    std::vector<MessagePart> parts;

    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = kDefaultTemperature;
    int max_tokens = kDefaultMaxTokens;
    /// Sampling seed; set for multi-sample generation so each draw is reproducible.
    std::optional<std::uint64_t> seed;

    /// Concatenated text of every part of every message.
    std::string all_text() const;
    /// The single image attachment, if any.
    const ImageAttachment* image() const;

    bool operator==(const ChatRequest&) const = default;
};

/// Reads an image file into an attachment, sniffing its media type.
ImageAttachment attachment_from_file(const std::filesystem::path& path);

/// Single user turn: text, then an optional image.
ChatRequest make_user_request(std::string model, std::string text, std::optional<ImageAttachment> image,
                              double temperature = kDefaultTemperature, int max_tokens = kDefaultMaxTokens);

/// Chat-completions request body. Keys are emitted in sorted order, so the
/// dump is byte-stable.
nlohmann::json to_wire_json(const ChatRequest& request);
std::string serialize_request(const ChatRequest& request);
/// Inverse of to_wire_json. Throws ProtocolError.
ChatRequest request_from_wire(const nlohmann::json& body);

/// Text of the first choice's message. Throws ProtocolError.
std::string extract_completion_text(std::string_view response_body);
/// Minimal response body wrapping one completion.
std::string make_completion_body(std::string_view model, std::string_view content);

/// In-process backend standing in for a served model.
class Oracle {
public:
    virtual ~Oracle() = default;
    virtual std::string answer(const ChatRequest& request) const = 0;
};

struct BackendProfile {
    std::string name = "default";
    std::string endpoint_url;
    std::string auth_env_var = "GCOT_API_KEY";
    double timeout_s = 120.0;
    int max_retries = 3;
    int max_in_flight = 4;
    /// When set, completions come from the oracle instead of HTTP.
    std::shared_ptr<const Oracle> oracle;
};

void validate(const BackendProfile& profile);

struct GatewayCounters {
    std::uint64_t requests = 0;
    std::uint64_t attempts = 0;
    std::uint64_t retries = 0;
    std::uint64_t failures = 0;
    int in_flight = 0;
    int peak_in_flight = 0;
};

/// Shared entry point for every model call. Thread-safe; bounds concurrent
/// calls per profile name to the profile's max_in_flight.
class Gateway {
public:
    using Sleeper = std::function<void(std::chrono::milliseconds)>;

    Gateway();
    explicit Gateway(Sleeper sleeper);

    Gateway(const Gateway&) = delete;
    Gateway& operator=(const Gateway&) = delete;

    /// Retries transport failures (connection errors, HTTP 429 and 5xx) with
    /// exponential backoff starting at 1 s, doubling, at most max_retries times.
    /// Throws TransportError once retries are exhausted, ProtocolError on an
    /// unparsable body.
    std::string complete(const BackendProfile& profile, const ChatRequest& request);

    GatewayCounters counters(const std::string& profile_name) const;

    static std::chrono::milliseconds backoff_delay(int retry);

private:
    struct ProfileState {
        std::mutex mutex;
        std::condition_variable cv;
        GatewayCounters counters;
    };

    ProfileState& state_for(const std::string& name);
    std::string send_http(const BackendProfile& profile, const ChatRequest& request, ProfileState& state);

    Sleeper sleeper_;
    mutable std::mutex states_mutex_;
    std::map<std::string, std::unique_ptr<ProfileState>> states_;
};

}  // namespace gcot
