#include "touchforge/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "touchforge/error.hpp"
#include "touchforge/g2p.hpp"

#ifndef TOUCHFORGE_DEFAULT_DATA_DIR
#define TOUCHFORGE_DEFAULT_DATA_DIR "data"
#endif

namespace touchforge::pipeline {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "input",          "manifest",       "report",        "lang",          "parallelism",
        "frame_ms",       "hop_ms",         "noise_percentile", "margin_db",  "hangover_ms",
        "merge_gap_ms",   "min_s",          "max_s",         "wer_max",       "per_max",
        "reference_side", "rule",           "asr_stub",      "asr_url",       "asr_model",
        "asr_timeout_ms", "asr_retries",    "copilot_stub",  "copilot_url",   "copilot_model",
        "copilot_timeout_ms", "copilot_retries", "zh_table", "en_dict"};
    return keys;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

double as_double(const Settings& s, const std::string& key, double fallback) {
    auto it = s.find(key);
    if (it == s.end()) return fallback;
    double v = 0;
    const auto& str = it->second;
    auto [ptr, ec] = std::from_chars(str.data(), str.data() + str.size(), v);
    if (ec != std::errc() || ptr != str.data() + str.size())
        throw ConfigError("setting '" + key + "': expected a number, got '" + str + "'");
    return v;
}

long as_int(const Settings& s, const std::string& key, long fallback) {
    auto it = s.find(key);
    if (it == s.end()) return fallback;
    long v = 0;
    const auto& str = it->second;
    auto [ptr, ec] = std::from_chars(str.data(), str.data() + str.size(), v);
    if (ec != std::errc() || ptr != str.data() + str.size())
        throw ConfigError("setting '" + key + "': expected an integer, got '" + str + "'");
    return v;
}

std::optional<std::string> get(const Settings& s, const std::string& key) {
    auto it = s.find(key);
    if (it == s.end() || it->second.empty()) return std::nullopt;
    return it->second;
}

BackendConfig backend_from(const Settings& s, const std::string& prefix) {
    BackendConfig b;
    if (auto stub = get(s, prefix + "_stub")) b.stub = fs::path(*stub);
    if (auto url = get(s, prefix + "_url")) {
        asr::AsrEndpoint ep;
        ep.base_url = *url;
        ep.model_name = get(s, prefix + "_model").value_or(prefix);
        ep.timeout_ms = static_cast<int>(as_int(s, prefix + "_timeout_ms", ep.timeout_ms));
        ep.max_retries = static_cast<int>(as_int(s, prefix + "_retries", ep.max_retries));
        b.endpoint = ep;
    }
    return b;
}

} // namespace

fs::path default_data_dir() {
    if (const char* v = std::getenv(kDataDirEnv); v != nullptr && *v != '\0') return fs::path(v);
    return fs::path(TOUCHFORGE_DEFAULT_DATA_DIR);
}

Settings parse_settings(std::string_view text) {
    Settings out;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const auto& keys = known_keys();
        if (std::find(keys.begin(), keys.end(), key) == keys.end())
            throw ConfigError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

Settings load_settings(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_settings(ss.str());
}

Settings resolve_settings(const Settings& file, const Settings& flags,
                          const std::function<std::optional<std::string>(const std::string&)>& getenv) {
    Settings out = file;
    for (const auto& key : known_keys()) {
        std::string var = "TOUCHFORGE_";
        for (char c : key) var.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
        if (auto v = getenv(var)) out[key] = *v;
    }
    for (const auto& [k, v] : flags) out[k] = v;
    return out;
}

Settings resolve_settings(const Settings& file, const Settings& flags) {
    return resolve_settings(file, flags, [](const std::string& var) -> std::optional<std::string> {
        const char* v = std::getenv(var.c_str());
        if (v == nullptr || *v == '\0') return std::nullopt;
        return std::string(v);
    });
}

void PipelineConfig::validate() const {
    if (input.empty()) throw ConfigError("segment stage: no input configured");
    if (manifest.empty()) throw ConfigError("pipeline: no output manifest configured");
    if (report.empty()) throw ConfigError("pipeline: no report path configured");
    if (parallelism < 1) throw ConfigError("pipeline: parallelism must be >= 1");
    try {
        vad.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("segment stage: ") + e.what());
    }
    if (!asr.configured()) throw ConfigError("asr stage: no ASR endpoint or stub configured");
    if (!copilot.configured()) throw ConfigError("copilot-asr stage: no Copilot-ASR endpoint or stub configured");
    try {
        rover.validate();
        if (asr.endpoint) asr.endpoint->validate();
        if (copilot.endpoint) copilot.endpoint->validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("rover stage: ") + e.what());
    }
}

PipelineConfig PipelineConfig::from_settings(const Settings& s) {
    PipelineConfig c;
    if (auto v = get(s, "input")) c.input = *v;
    if (auto v = get(s, "manifest")) c.manifest = *v;
    if (auto v = get(s, "report")) c.report = *v;
    try {
        if (auto v = get(s, "lang")) c.lang = parse_lang(*v);
    } catch (const ParseError& e) {
        throw ConfigError(e.what());
    }
    const long par = as_int(s, "parallelism", 1);
    if (par < 1) throw ConfigError("pipeline: parallelism must be >= 1");
    c.parallelism = static_cast<unsigned>(par);

    c.vad.frame_ms = as_double(s, "frame_ms", c.vad.frame_ms);
    c.vad.hop_ms = as_double(s, "hop_ms", c.vad.hop_ms);
    c.vad.noise_percentile = as_double(s, "noise_percentile", c.vad.noise_percentile);
    c.vad.margin_db = as_double(s, "margin_db", c.vad.margin_db);
    c.vad.hangover_ms = as_double(s, "hangover_ms", c.vad.hangover_ms);
    c.vad.merge_gap_ms = as_double(s, "merge_gap_ms", c.vad.merge_gap_ms);
    c.vad.min_clip_s = as_double(s, "min_s", c.vad.min_clip_s);
    c.vad.max_clip_s = as_double(s, "max_s", c.vad.max_clip_s);

    c.rover.wer_max = as_double(s, "wer_max", c.rover.wer_max);
    c.rover.per_max = as_double(s, "per_max", c.rover.per_max);
    if (auto v = get(s, "reference_side")) {
        if (*v == "asr") c.rover.reference_side = rover::ReferenceSide::asr;
        else if (*v == "copilot") c.rover.reference_side = rover::ReferenceSide::copilot;
        else throw ConfigError("rover stage: reference_side must be asr or copilot");
    }
    if (auto v = get(s, "rule")) {
        if (*v == "all") c.rover.rule = rover::DropRule::all;
        else if (*v == "any") c.rover.rule = rover::DropRule::any;
        else throw ConfigError("rover stage: rule must be all or any");
    }

    c.asr = backend_from(s, "asr");
    c.copilot = backend_from(s, "copilot");

    const fs::path data = default_data_dir();
    c.zh_table = get(s, "zh_table").value_or((data / "g2p" / "zh_pinyin.tsv").string());
    c.en_dict = get(s, "en_dict").value_or((data / "g2p" / "en_dict.tsv").string());
    return c;
}

std::vector<fs::path> list_wavs(const fs::path& input) {
    std::vector<fs::path> out;
    if (fs::is_regular_file(input)) {
        out.push_back(input);
        return out;
    }
    if (!fs::is_directory(input)) throw IoError("input " + input.string() + " does not exist");
    for (const auto& entry : fs::recursive_directory_iterator(input)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
        if (ext == ".wav") out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end(), [&](const fs::path& a, const fs::path& b) {
        return a.lexically_relative(input).generic_string() < b.lexically_relative(input).generic_string();
    });
    return out;
}

namespace {

fs::path audio_root_of(const fs::path& input) {
    return fs::is_regular_file(input) ? input.parent_path() : input;
}

template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), count));
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

} // namespace

Manifest segment_inputs(const fs::path& input, const vad::VadConfig& cfg, Lang lang, unsigned parallelism) {
    cfg.validate();
    const auto files = list_wavs(input);
    const fs::path root = audio_root_of(input);
    std::vector<std::vector<Utterance>> per_file(files.size());
    std::vector<std::string> errors(files.size());
    parallel_for(files.size(), parallelism, [&](std::size_t i) {
        const fs::path rel = files[i].lexically_relative(root);
        const std::string source_id = rel.generic_string();
        try {
            const AudioClip clip = read_wav(files[i]);
            if (clip.samples.empty()) return;
            const auto segments = vad::segment_clip(clip, cfg, source_id);
            std::string stem = (rel.parent_path() / rel.stem()).generic_string();
            std::optional<std::string> domain;
            if (rel.has_parent_path() && !rel.parent_path().empty()) domain = rel.begin()->generic_string();
            for (std::size_t k = 0; k < segments.size(); ++k) {
                char idx[16];
                std::snprintf(idx, sizeof idx, "-%04zu", k);
                Utterance u;
                u.id = stem + idx;
                u.segment = segments[k];
                u.lang = lang;
                u.domain = domain;
                per_file[i].push_back(std::move(u));
            }
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    });
    for (const auto& e : errors) {
        if (!e.empty()) throw IoError("segment stage: " + e);
    }
    Manifest m;
    for (auto& utts : per_file) {
        for (auto& u : utts) m.records.push_back(std::move(u));
    }
    return m;
}

std::unique_ptr<asr::Transcriber> make_transcriber(const BackendConfig& cfg, const std::string& stage) {
    if (cfg.stub) {
        try {
            return std::make_unique<asr::StubTranscriber>(asr::StubTranscriber::load(*cfg.stub));
        } catch (const Error& e) {
            throw ConfigError(stage + " stage: " + e.what());
        }
    }
    if (cfg.endpoint) return std::make_unique<asr::HttpTranscriber>(*cfg.endpoint);
    throw ConfigError(stage + " stage: no endpoint or stub configured");
}

void write_report(const rover::RetentionReport& report, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write report " + path.string());
    out << report.to_json().dump(2) << '\n';
}

rover::RetentionReport run_pipeline(const PipelineConfig& cfg, const Progress& progress) {
    cfg.validate();
    auto say = [&](const std::string& msg) {
        if (progress) progress(msg);
    };
    auto asr_backend = make_transcriber(cfg.asr, "asr");
    auto copilot_backend = make_transcriber(cfg.copilot, "copilot-asr");
    g2p::G2pTables tables;
    try {
        tables = g2p::G2pTables::load(cfg.zh_table, cfg.en_dict);
    } catch (const Error& e) {
        throw ConfigError(std::string("rover stage: ") + e.what());
    }

    Manifest m;
    if (fs::exists(cfg.manifest)) {
        m = read_manifest(cfg.manifest);
        say("segment: resuming from " + cfg.manifest.string() + " (" + std::to_string(m.records.size()) + " records)");
    } else {
        m = segment_inputs(cfg.input, cfg.vad, cfg.lang, cfg.parallelism);
        write_manifest(m, cfg.manifest);
        say("segment: " + std::to_string(m.records.size()) + " clips");
    }

    const fs::path audio_root = audio_root_of(cfg.input);
    for (auto [side, backend] : {std::pair{asr::Side::asr, asr_backend.get()},
                                 std::pair{asr::Side::copilot, copilot_backend.get()}}) {
        asr::BatchOptions opts;
        opts.side = side;
        opts.concurrency = cfg.parallelism;
        m = asr::transcribe_batch(*backend, m, audio_root, opts);
        write_manifest(m, cfg.manifest);
        say(std::string(asr::to_string(side)) + ": done");
    }

    Manifest pending;
    std::vector<std::size_t> index;
    for (std::size_t i = 0; i < m.records.size(); ++i) {
        if (!m.records[i].keep) {
            pending.records.push_back(m.records[i]);
            index.push_back(i);
        }
    }
    if (!pending.records.empty()) {
        auto [scored, _] = rover::filter_manifest(pending, cfg.rover, tables, cfg.parallelism);
        for (std::size_t k = 0; k < index.size(); ++k) m.records[index[k]] = std::move(scored.records[k]);
    }
    write_manifest(m, cfg.manifest);

    const auto report = rover::compute_report(m);
    write_report(report, cfg.report);
    say("rover: kept " + std::to_string(report.kept) + "/" + std::to_string(report.total) + " (" +
        report.render_retention() + ")");
    return report;
}

} // namespace touchforge::pipeline
