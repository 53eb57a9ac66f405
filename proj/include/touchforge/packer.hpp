#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace touchforge::pack {

enum class Task { tts, asr };
enum class Role { start, speaker_embedding, text, separator, audio_tokens, continuous_features, end };

std::string_view to_string(Task t);
std::string_view to_string(Role r);
Task parse_task(std::string_view s);

struct Slot {
    Role role;
    std::size_t length;
    bool in_loss = false;

    bool operator==(const Slot&) const = default;
};

// One training sequence: a single whole text span and a single whole speech
// span, bracketed by start/end markers.
struct PackedSample {
    Task task = Task::tts;
    std::vector<Slot> slots;

    std::size_t total_length() const;
    std::size_t loss_length() const;
    // Per-position flag: true where the position contributes to the loss.
    std::vector<bool> loss_mask() const;

    nlohmann::ordered_json to_json() const;
};

// [start, speaker_embedding, text, separator, audio_tokens, end]; loss on audio tokens and end.
PackedSample pack_tts(std::size_t text_tokens, std::size_t audio_tokens);

// [start, input, separator, text, end]; input is continuous features or discrete
// audio tokens; loss on text and end.
PackedSample pack_asr(std::size_t feature_frames, std::size_t text_tokens, bool use_continuous);

} // namespace touchforge::pack
