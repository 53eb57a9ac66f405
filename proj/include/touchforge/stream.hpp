#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace touchforge::stream {

struct StreamConfig {
    std::size_t first_chunk_tokens = 25;
    std::size_t chunk_tokens = 50;
    std::size_t overlap_tokens = 5;

    // Throws ParseError unless sizes are positive and overlap < min(first, chunk).
    void validate() const;
    bool operator==(const StreamConfig&) const = default;
};

// "(a b c)" or "a b c": a and b in seconds, or raw tokens with a "t" suffix;
// c is always a token count. Seconds are scaled by token_rate and rounded.
StreamConfig parse_config(std::string_view text, double token_rate = 25.0);

struct PlannedChunk {
    std::size_t gen_start = 0;
    std::size_t gen_end = 0;
    std::size_t emit_start = 0;
    std::size_t emit_end = 0;

    std::size_t overlap() const { return emit_start - gen_start; }
    bool operator==(const PlannedChunk&) const = default;
};

using ChunkPlan = std::vector<PlannedChunk>;

// Emit ranges partition [0, total); chunk k > 0 also regenerates up to
// overlap_tokens tokens before its emit range for boundary smoothing.
ChunkPlan plan_chunks(std::size_t total_tokens, const StreamConfig& cfg);

using Frame = std::vector<float>;

// out[t] = (1 - w) * tail[t] + w * head[t], w = (t + 1) / (ramp_len + 1).
std::vector<Frame> crossfade(std::span<const Frame> tail, std::span<const Frame> head, std::size_t ramp_len);

// Assembles per-chunk frame outputs (frames_per_token frames per generated
// token) into one continuous stream, crossfading each overlap region. The last
// overlap of every chunk is held back until the next chunk arrives.
class Stitcher {
public:
    Stitcher(ChunkPlan plan, std::size_t frames_per_token = 2);

    // Frames of the next chunk's generation range; returns frames now final.
    std::vector<Frame> push(std::span<const Frame> chunk_frames);
    bool done() const { return next_ == plan_.size(); }

private:
    ChunkPlan plan_;
    std::size_t fpt_;
    std::size_t next_ = 0;
    std::vector<Frame> held_;
};

struct MeasuredLatency {
    double max_ms = 0.0;
    double avg_ms = 0.0;
    double p95_ms = 0.0;
};

struct ThroughputProfile {
    double llm_prefill_rate = 0.0;  // tokens/s
    double llm_decode_rate = 0.0;   // tokens/s
    std::optional<MeasuredLatency> llm_first_chunk_ms;
    std::size_t flow_steps = 5;
    double flow_chunk_ms = 0.0;

    void validate() const;
};

// key=value lines: llm_prefill_rate, llm_decode_rate, llm_first_chunk_ms_max,
// llm_first_chunk_ms_avg, llm_first_chunk_ms_p95, flow_steps, flow_chunk_ms.
ThroughputProfile parse_profile(std::string_view text);
ThroughputProfile load_profile(const std::filesystem::path& path);

enum class LlmTerm { analytic, measured_max, measured_avg, measured_p95 };

LlmTerm parse_llm_term(std::string_view s);

struct LatencyBreakdown {
    double llm_ms = 0.0;
    double flow_ms = 0.0;

    double total_ms() const { return llm_ms + flow_ms; }
};

// Analytic LLM term: prompt prefill plus decoding the first chunk. Measured
// terms take the first-chunk statistic directly. Flow cost is added on top.
LatencyBreakdown first_packet_latency(const ThroughputProfile& profile, std::size_t input_tokens,
                                      const StreamConfig& cfg, LlmTerm term = LlmTerm::analytic);

double estimate_first_packet_latency(const ThroughputProfile& profile, std::size_t input_tokens,
                                     const StreamConfig& cfg, LlmTerm term = LlmTerm::analytic);

} // namespace touchforge::stream
