#include "touchforge/packer.hpp"

#include "touchforge/error.hpp"

namespace touchforge::pack {

std::string_view to_string(Task t) { return t == Task::tts ? "tts" : "asr"; }

std::string_view to_string(Role r) {
    switch (r) {
    case Role::start: return "start";
    case Role::speaker_embedding: return "speaker_embedding";
    case Role::text: return "text";
    case Role::separator: return "separator";
    case Role::audio_tokens: return "audio_tokens";
    case Role::continuous_features: return "continuous_features";
    case Role::end: return "end";
    }
    return "end";
}

Task parse_task(std::string_view s) {
    if (s == "tts") return Task::tts;
    if (s == "asr") return Task::asr;
    throw ParseError("unknown task '" + std::string(s) + "' (expected tts or asr)");
}

std::size_t PackedSample::total_length() const {
    std::size_t n = 0;
    for (const auto& s : slots) n += s.length;
    return n;
}

std::size_t PackedSample::loss_length() const {
    std::size_t n = 0;
    for (const auto& s : slots) n += s.in_loss ? s.length : 0;
    return n;
}

std::vector<bool> PackedSample::loss_mask() const {
    std::vector<bool> m;
    m.reserve(total_length());
    for (const auto& s : slots) m.insert(m.end(), s.length, s.in_loss);
    return m;
}

nlohmann::ordered_json PackedSample::to_json() const {
    nlohmann::ordered_json j;
    j["task"] = std::string(to_string(task));
    j["total_length"] = total_length();
    j["loss_length"] = loss_length();
    auto& arr = j["slots"] = nlohmann::ordered_json::array();
    for (const auto& s : slots) {
        arr.push_back({{"role", std::string(to_string(s.role))}, {"length", s.length}, {"loss", s.in_loss}});
    }
    return j;
}

PackedSample pack_tts(std::size_t text_tokens, std::size_t audio_tokens) {
    if (text_tokens < 1 || audio_tokens < 1) throw Error("pack_tts: text and audio lengths must be >= 1");
    return {Task::tts,
            {{Role::start, 1},
             {Role::speaker_embedding, 1},
             {Role::text, text_tokens},
             {Role::separator, 1},
             {Role::audio_tokens, audio_tokens, true},
             {Role::end, 1, true}}};
}

PackedSample pack_asr(std::size_t feature_frames, std::size_t text_tokens, bool use_continuous) {
    if (feature_frames < 1 || text_tokens < 1) throw Error("pack_asr: feature and text lengths must be >= 1");
    return {Task::asr,
            {{Role::start, 1},
             {use_continuous ? Role::continuous_features : Role::audio_tokens, feature_frames},
             {Role::separator, 1},
             {Role::text, text_tokens, true},
             {Role::end, 1, true}}};
}

} // namespace touchforge::pack
