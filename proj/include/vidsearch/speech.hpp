#pragma once

#include <string>
#include <string_view>

namespace vidsearch {

struct AudioInput {
    std::string bytes;
    std::string mime_type;
    /// Text supplied out of band (the X-Mock-Transcript header); only the
    /// echo client looks at it.
    std::string transcript_hint;
};

/// Speech-to-text backend. Implementations must tolerate concurrent calls.
/// Failures are reported as TransportError.
class SpeechToText {
public:
    virtual ~SpeechToText() = default;
    virtual std::string transcribe(const AudioInput& audio) const = 0;
};

/// Ignores the audio: returns the hint when present, else the canned text.
class EchoSpeechToText final : public SpeechToText {
public:
    explicit EchoSpeechToText(std::string canned = {}) : canned_(std::move(canned)) {}

    std::string transcribe(const AudioInput& audio) const override;

private:
    std::string canned_;
};

/// Posts the raw audio (with its Content-Type) to an HTTP endpoint that
/// replies `{"transcript": "..."}`.
class RemoteSpeechToText final : public SpeechToText {
public:
    explicit RemoteSpeechToText(std::string base_url, std::string path = "/transcribe",
                                int timeout_seconds = 30);

    std::string transcribe(const AudioInput& audio) const override;

private:
    std::string base_url_;
    std::string path_;
    int timeout_seconds_;
};

}  // namespace vidsearch
