#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include "touchforge/corpus.hpp"
#include "touchforge/error.hpp"

namespace touchforge::asr {

class AsrError : public Error {
public:
    using Error::Error;
};

// Connection failures and timeouts, after retries.
class TransportError : public AsrError {
public:
    using AsrError::AsrError;
};

class ServiceError : public AsrError {
public:
    ServiceError(int status, std::string body_snippet);
    int status() const { return status_; }
    const std::string& body() const { return body_; }

private:
    int status_;
    std::string body_;
};

class UnknownUtterance : public AsrError {
public:
    explicit UnknownUtterance(const std::string& id) : AsrError("unknown utterance '" + id + "'") {}
};

inline constexpr const char* kAsrUrlEnv = "TOUCHFORGE_ASR_URL";

struct AsrEndpoint {
    std::string base_url;
    std::string model_name;
    int timeout_ms = 30000;
    int max_retries = 2;
    // First retry delay; doubles on each further attempt.
    int backoff_ms = 200;

    void validate() const;
};

// $TOUCHFORGE_ASR_URL, if set and non-empty.
std::optional<std::string> default_asr_url();

class Transcriber {
public:
    virtual ~Transcriber() = default;
    // Must be safe to call from several threads at once.
    virtual std::string transcribe(const std::string& id, std::span<const std::uint8_t> wav) = 0;
};

// POST {base_url}/transcribe, multipart fields id, model_name, audio; expects {"text": ...}.
class HttpTranscriber : public Transcriber {
public:
    explicit HttpTranscriber(AsrEndpoint endpoint);
    std::string transcribe(const std::string& id, std::span<const std::uint8_t> wav) override;

    const AsrEndpoint& endpoint() const { return endpoint_; }

private:
    AsrEndpoint endpoint_;
    std::string host_;
    std::string path_;
};

// Serves transcripts from an id<TAB>text file; ignores the audio.
class StubTranscriber : public Transcriber {
public:
    explicit StubTranscriber(std::map<std::string, std::string> transcripts);
    static StubTranscriber load(const std::filesystem::path& path);

    std::string transcribe(const std::string& id, std::span<const std::uint8_t> wav) override;

private:
    std::map<std::string, std::string> transcripts_;
};

std::string transcribe(const AsrEndpoint& endpoint, const std::string& id, std::span<const std::uint8_t> wav);

enum class Side { asr, copilot };

std::string_view to_string(Side side);

struct BatchOptions {
    Side side = Side::asr;
    unsigned concurrency = 1;
    // Called once per finished record with (done, total); may run on worker threads.
    std::function<void(std::size_t, std::size_t)> progress;
};

// Fills text_asr or text_copilot for every record that lacks it. Audio is read
// from audio_root / source_id and cut to the segment. A failed record gets an
// empty transcript and a reason instead of aborting the batch. Output order
// equals input order; at most `concurrency` requests are in flight.
Manifest transcribe_batch(Transcriber& backend, const Manifest& manifest, const std::filesystem::path& audio_root,
                          const BatchOptions& options);

} // namespace touchforge::asr
