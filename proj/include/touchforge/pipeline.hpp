#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>

#include "touchforge/asr_client.hpp"
#include "touchforge/corpus.hpp"
#include "touchforge/rover.hpp"
#include "touchforge/vad.hpp"

namespace touchforge::pipeline {

// Flat key/value settings. Keys are lowercase snake_case; the matching
// environment variable is TOUCHFORGE_<KEY> in upper case.
using Settings = std::map<std::string, std::string>;

inline constexpr const char* kDataDirEnv = "TOUCHFORGE_DATA_DIR";

// $TOUCHFORGE_DATA_DIR, else the data directory this build was configured with.
std::filesystem::path default_data_dir();

// "key = value" lines; '#' starts a comment.
Settings parse_settings(std::string_view text);
Settings load_settings(const std::filesystem::path& path);

// Layers settings: file < environment < flags.
Settings resolve_settings(const Settings& file, const Settings& flags,
                          const std::function<std::optional<std::string>(const std::string&)>& getenv);
Settings resolve_settings(const Settings& file, const Settings& flags);

struct BackendConfig {
    std::optional<std::filesystem::path> stub;
    std::optional<asr::AsrEndpoint> endpoint;

    bool configured() const { return stub.has_value() || endpoint.has_value(); }
};

struct PipelineConfig {
    std::filesystem::path input;     // WAV file or directory of WAV files
    std::filesystem::path manifest;  // output manifest, also the resume state
    std::filesystem::path report;    // retention report (JSON)
    Lang lang = Lang::zh;
    vad::VadConfig vad;
    rover::RoverConfig rover;
    BackendConfig asr;
    BackendConfig copilot;
    std::filesystem::path zh_table;
    std::filesystem::path en_dict;
    unsigned parallelism = 1;

    // Throws ConfigError naming the stage that is misconfigured.
    void validate() const;

    static PipelineConfig from_settings(const Settings& s);
};

// Lists WAV files below `input` (or `input` itself), sorted by relative path.
std::vector<std::filesystem::path> list_wavs(const std::filesystem::path& input);

// Segments every WAV file into utterances. Ids are "<relative path without extension>-<NNNN>";
// files inside a subdirectory take its first path component as their domain.
Manifest segment_inputs(const std::filesystem::path& input, const vad::VadConfig& cfg, Lang lang,
                        unsigned parallelism = 1);

std::unique_ptr<asr::Transcriber> make_transcriber(const BackendConfig& cfg, const std::string& stage);

using Progress = std::function<void(const std::string&)>;

// segment -> asr -> copilot-asr -> rover, writing the manifest after every stage.
// Stages skip records that already carry their output, so a re-run over a
// finished manifest rewrites identical bytes.
rover::RetentionReport run_pipeline(const PipelineConfig& cfg, const Progress& progress = {});

void write_report(const rover::RetentionReport& report, const std::filesystem::path& path);

} // namespace touchforge::pipeline
