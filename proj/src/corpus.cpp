#include "touchforge/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "touchforge/error.hpp"

namespace touchforge {

using ojson = nlohmann::ordered_json;

std::string_view to_string(Lang lang) {
    switch (lang) {
    case Lang::zh: return "zh";
    case Lang::en: return "en";
    case Lang::mixed: return "mixed";
    }
    return "zh";
}

Lang parse_lang(std::string_view s) {
    if (s == "zh") return Lang::zh;
    if (s == "en") return Lang::en;
    if (s == "mixed") return Lang::mixed;
    throw ParseError("unknown lang '" + std::string(s) + "' (expected zh, en or mixed)");
}

AudioClip AudioClip::slice(double start_s, double end_s) const {
    const auto n = static_cast<double>(samples.size());
    const auto lo = static_cast<std::size_t>(std::clamp(std::floor(start_s * sample_rate), 0.0, n));
    const auto hi = static_cast<std::size_t>(std::clamp(std::floor(end_s * sample_rate), 0.0, n));
    AudioClip out{id, {}, sample_rate};
    if (hi > lo) out.samples.assign(samples.begin() + lo, samples.begin() + hi);
    return out;
}

void validate(const Utterance& u) {
    if (u.id.empty()) throw ParseError("empty id");
    const auto& s = u.segment;
    if (!(s.start_s >= 0.0)) throw ParseError("start_s must be >= 0");
    if (!(s.start_s < s.end_s)) throw ParseError("end_s must be greater than start_s");
    for (const auto& rate : {u.cross_wer, u.cross_per}) {
        if (rate && !(*rate >= 0.0 && *rate <= 1.0))
            throw ParseError("cross_wer/cross_per must lie in [0, 1]");
    }
    if (u.keep && !(u.text_asr && u.text_copilot))
        throw ParseError("keep present without both transcripts");
    const bool has_rates = u.cross_wer.has_value() && u.cross_per.has_value();
    if (u.cross_wer.has_value() != u.cross_per.has_value() || has_rates != u.keep.has_value())
        throw ParseError("cross_wer, cross_per and keep must be present together");
}

ojson to_json(const Utterance& u) {
    ojson j = ojson::object();
    j["id"] = u.id;
    j["source_id"] = u.segment.source_id;
    j["start_s"] = u.segment.start_s;
    j["end_s"] = u.segment.end_s;
    j["lang"] = std::string(to_string(u.lang));
    if (u.domain) j["domain"] = *u.domain;
    if (u.text_asr) j["text_asr"] = *u.text_asr;
    if (u.text_copilot) j["text_copilot"] = *u.text_copilot;
    if (u.cross_wer) j["cross_wer"] = *u.cross_wer;
    if (u.cross_per) j["cross_per"] = *u.cross_per;
    if (u.keep) j["keep"] = *u.keep;
    if (u.reason) j["reason"] = *u.reason;
    for (const auto& [key, value] : u.extra.items()) j[key] = value;
    return j;
}

namespace {

const std::vector<std::string>& known_keys() {
    static const std::vector<std::string> keys = {
        "id",       "source_id", "start_s",   "end_s", "lang",  "domain",
        "text_asr", "text_copilot", "cross_wer", "cross_per", "keep", "reason"};
    return keys;
}

template <typename T>
std::optional<T> optional_field(const ojson& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<T>();
}

} // namespace

Utterance utterance_from_json(const ojson& j) {
    if (!j.is_object()) throw ParseError("record is not an object");
    Utterance u;
    try {
        u.id = j.at("id").get<std::string>();
        u.segment.source_id = j.at("source_id").get<std::string>();
        u.segment.start_s = j.at("start_s").get<double>();
        u.segment.end_s = j.at("end_s").get<double>();
        u.lang = parse_lang(j.at("lang").get<std::string>());
        u.domain = optional_field<std::string>(j, "domain");
        u.text_asr = optional_field<std::string>(j, "text_asr");
        u.text_copilot = optional_field<std::string>(j, "text_copilot");
        u.cross_wer = optional_field<double>(j, "cross_wer");
        u.cross_per = optional_field<double>(j, "cross_per");
        u.keep = optional_field<bool>(j, "keep");
        u.reason = optional_field<std::string>(j, "reason");
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(e.what());
    }
    const auto& keys = known_keys();
    for (const auto& [key, value] : j.items()) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) u.extra[key] = value;
    }
    validate(u);
    return u;
}

std::string to_jsonl(const Manifest& m) {
    std::string out;
    for (const auto& u : m.records) {
        out += to_json(u).dump(-1, ' ', false, nlohmann::json::error_handler_t::strict);
        out += '\n';
    }
    return out;
}

Manifest parse_manifest(std::istream& in) {
    Manifest m;
    std::unordered_map<std::string, std::size_t> first_line;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        Utterance u;
        try {
            u = utterance_from_json(ojson::parse(line));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
        } catch (const ParseError& e) {
            throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
        }
        auto [it, inserted] = first_line.emplace(u.id, lineno);
        if (!inserted) {
            throw ParseError("duplicate id '" + u.id + "' at lines " + std::to_string(it->second) +
                             " and " + std::to_string(lineno));
        }
        m.records.push_back(std::move(u));
    }
    return m;
}

Manifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open manifest " + path.string());
    return parse_manifest(in);
}

void write_manifest(const Manifest& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write manifest " + path.string());
    out << to_jsonl(m);
    if (!out) throw IoError("write failed for " + path.string());
}

// ---- WAV ----

namespace {

std::uint32_t le32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t le16(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v & 0xFF));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

} // namespace

AudioClip decode_wav(std::span<const std::uint8_t> bytes, std::string id) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
        std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw ParseError("not a RIFF/WAVE file");

    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    bool have_fmt = false;
    std::span<const std::uint8_t> data;
    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const auto* chunk = bytes.data() + pos;
        const std::uint32_t size = le32(chunk + 4);
        const std::size_t body = pos + 8;
        const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
        if (std::memcmp(chunk, "fmt ", 4) == 0) {
            if (avail < 16) throw ParseError("truncated fmt chunk");
            format = le16(chunk + 8);
            channels = le16(chunk + 10);
            rate = le32(chunk + 12);
            bits = le16(chunk + 22);
            if (format == kFormatExtensible && avail >= 26) format = le16(chunk + 8 + 24);
            have_fmt = true;
        } else if (std::memcmp(chunk, "data", 4) == 0) {
            data = bytes.subspan(body, avail);
        }
        pos = body + size + (size & 1);
    }
    if (!have_fmt) throw ParseError("missing fmt chunk");
    if (channels != 1) throw ParseError("only mono WAV is supported, got " + std::to_string(channels) + " channels");
    if (rate == 0) throw ParseError("sample rate must be positive");

    AudioClip clip{std::move(id), {}, static_cast<int>(rate)};
    if (format == kFormatPcm && bits == 16) {
        clip.samples.reserve(data.size() / 2);
        for (std::size_t i = 0; i + 1 < data.size(); i += 2) {
            const auto v = static_cast<std::int16_t>(le16(data.data() + i));
            clip.samples.push_back(static_cast<float>(v) / 32768.0f);
        }
    } else if (format == kFormatFloat && bits == 32) {
        clip.samples.reserve(data.size() / 4);
        for (std::size_t i = 0; i + 3 < data.size(); i += 4) {
            const std::uint32_t raw = le32(data.data() + i);
            float v;
            std::memcpy(&v, &raw, sizeof v);
            if (!std::isfinite(v)) v = 0.0f;
            clip.samples.push_back(std::clamp(v, -1.0f, 1.0f));
        }
    } else {
        throw ParseError("unsupported WAV encoding (format " + std::to_string(format) + ", " +
                         std::to_string(bits) + " bits)");
    }
    return clip;
}

AudioClip read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open audio " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_wav(bytes, path.stem().string());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_wav_pcm16(const AudioClip& clip) {
    const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
    std::vector<std::uint8_t> out;
    out.reserve(44 + data_bytes);
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put32(out, 36 + data_bytes);
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put32(out, 16);
    put16(out, kFormatPcm);
    put16(out, 1);
    put32(out, static_cast<std::uint32_t>(clip.sample_rate));
    put32(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
    put16(out, 2);
    put16(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put32(out, data_bytes);
    for (float s : clip.samples) {
        const float c = std::clamp(s, -1.0f, 1.0f);
        const auto v = static_cast<std::int16_t>(std::lround(std::clamp(c * 32768.0f, -32768.0f, 32767.0f)));
        put16(out, static_cast<std::uint16_t>(v));
    }
    return out;
}

void write_wav(const AudioClip& clip, const std::filesystem::path& path) {
    const auto bytes = encode_wav_pcm16(clip);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write audio " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace touchforge
