#include "vidsearch/speech.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "vidsearch/error.hpp"

namespace vidsearch {

std::string EchoSpeechToText::transcribe(const AudioInput& audio) const {
    return audio.transcript_hint.empty() ? canned_ : audio.transcript_hint;
}

RemoteSpeechToText::RemoteSpeechToText(std::string base_url, std::string path, int timeout_seconds)
    : base_url_(std::move(base_url)), path_(std::move(path)), timeout_seconds_(timeout_seconds) {}

std::string RemoteSpeechToText::transcribe(const AudioInput& audio) const {
    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_seconds_);
    client.set_read_timeout(timeout_seconds_);
    const std::string mime = audio.mime_type.empty() ? "application/octet-stream" : audio.mime_type;
    auto res = client.Post(path_, audio.bytes, mime);
    if (!res) throw TransportError("speech backend: " + httplib::to_string(res.error()));
    if (res->status != 200) throw TransportError("speech backend: HTTP " + std::to_string(res->status));
    nlohmann::json reply;
    try {
        reply = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
        throw TransportError(std::string("speech backend: bad JSON reply: ") + e.what());
    }
    if (!reply.is_object() || !reply.contains("transcript") || !reply["transcript"].is_string()) {
        throw TransportError("speech backend: reply lacks a string \"transcript\"");
    }
    return reply["transcript"].get<std::string>();
}

}  // namespace vidsearch
