#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace touchforge {

enum class Lang { zh, en, mixed };

std::string_view to_string(Lang lang);
Lang parse_lang(std::string_view s);

// Mono audio, samples normalized to [-1, 1].
struct AudioClip {
    std::string id;
    std::vector<float> samples;
    int sample_rate = 16000;

    double duration_s() const {
        return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
    }

    // Samples in [start_s, end_s), clamped to the clip.
    AudioClip slice(double start_s, double end_s) const;
};

struct Segment {
    std::string source_id;
    double start_s = 0.0;
    double end_s = 0.0;

    double duration_s() const { return end_s - start_s; }
    bool operator==(const Segment&) const = default;
};

struct Utterance {
    std::string id;
    Segment segment;
    Lang lang = Lang::zh;
    std::optional<std::string> domain;
    std::optional<std::string> text_asr;
    std::optional<std::string> text_copilot;
    std::optional<double> cross_wer;
    std::optional<double> cross_per;
    std::optional<bool> keep;
    // Why a record was dropped or failed a stage.
    std::optional<std::string> reason;
    // Fields this version does not know about; written back after the known ones.
    nlohmann::ordered_json extra = nlohmann::ordered_json::object();

    bool operator==(const Utterance&) const = default;
};

struct Manifest {
    std::vector<Utterance> records;

    bool operator==(const Manifest&) const = default;
};

// Throws ParseError if a record breaks the Utterance invariants.
void validate(const Utterance& u);

nlohmann::ordered_json to_json(const Utterance& u);
Utterance utterance_from_json(const nlohmann::ordered_json& j);

std::string to_jsonl(const Manifest& m);
Manifest parse_manifest(std::istream& in);

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const Manifest& m, const std::filesystem::path& path);

// PCM WAV, mono, 16-bit integer or 32-bit float.
AudioClip read_wav(const std::filesystem::path& path);
AudioClip decode_wav(std::span<const std::uint8_t> bytes, std::string id = {});
std::vector<std::uint8_t> encode_wav_pcm16(const AudioClip& clip);
void write_wav(const AudioClip& clip, const std::filesystem::path& path);

} // namespace touchforge
