#include "touchforge/stream.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "touchforge/error.hpp"

namespace touchforge::stream {

void StreamConfig::validate() const {
    if (first_chunk_tokens < 1 || chunk_tokens < 1) throw ParseError("stream config: chunk sizes must be positive");
    if (overlap_tokens >= std::min(first_chunk_tokens, chunk_tokens))
        throw ParseError("stream config: overlap must be smaller than both chunk sizes");
}

namespace {

double parse_number(std::string_view s, const std::string& what) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) throw ParseError("stream config: bad " + what + " '" + std::string(s) + "'");
    return v;
}

std::size_t to_tokens(std::string_view field, double token_rate, const std::string& what) {
    const bool raw = !field.empty() && (field.back() == 't' || field.back() == 'T');
    const double v = parse_number(raw ? field.substr(0, field.size() - 1) : field, what);
    if (raw) {
        if (v != std::floor(v)) throw ParseError("stream config: " + what + " token count must be an integer");
        if (v <= 0) throw ParseError("stream config: " + what + " must be positive");
        return static_cast<std::size_t>(v);
    }
    const double tokens = std::round(v * token_rate);
    if (!(v > 0) || tokens < 1) throw ParseError("stream config: " + what + " must be positive");
    return static_cast<std::size_t>(tokens);
}

} // namespace

StreamConfig parse_config(std::string_view text, double token_rate) {
    if (!(token_rate > 0)) throw ParseError("stream config: token rate must be positive");
    std::string body(text);
    auto first = body.find_first_not_of(" \t");
    auto last = body.find_last_not_of(" \t");
    if (first == std::string::npos) throw ParseError("stream config: empty");
    body = body.substr(first, last - first + 1);
    if (body.front() == '(' || body.back() == ')') {
        if (body.size() < 2 || body.front() != '(' || body.back() != ')')
            throw ParseError("stream config: unbalanced parentheses in '" + std::string(text) + "'");
        body = body.substr(1, body.size() - 2);
    }
    std::istringstream ss(body);
    std::vector<std::string> fields;
    for (std::string f; ss >> f;) fields.push_back(f);
    if (fields.size() != 3)
        throw ParseError("stream config: expected three fields '(first chunk overlap)', got '" + std::string(text) + "'");

    StreamConfig cfg;
    cfg.first_chunk_tokens = to_tokens(fields[0], token_rate, "first chunk");
    cfg.chunk_tokens = to_tokens(fields[1], token_rate, "chunk");
    std::string_view ov = fields[2];
    if (!ov.empty() && (ov.back() == 't' || ov.back() == 'T')) ov.remove_suffix(1);
    const double overlap = parse_number(ov, "overlap");
    if (overlap < 0 || overlap != std::floor(overlap))
        throw ParseError("stream config: overlap must be a non-negative token count");
    cfg.overlap_tokens = static_cast<std::size_t>(overlap);
    cfg.validate();
    return cfg;
}

ChunkPlan plan_chunks(std::size_t total_tokens, const StreamConfig& cfg) {
    if (total_tokens < 1) throw Error("plan_chunks: total_tokens must be >= 1");
    cfg.validate();
    ChunkPlan plan;
    std::size_t emit = std::min(cfg.first_chunk_tokens, total_tokens);
    plan.push_back({0, emit, 0, emit});
    while (emit < total_tokens) {
        const std::size_t end = std::min(emit + cfg.chunk_tokens, total_tokens);
        const std::size_t gen = emit >= cfg.overlap_tokens ? emit - cfg.overlap_tokens : 0;
        plan.push_back({gen, end, emit, end});
        emit = end;
    }
    return plan;
}

std::vector<Frame> crossfade(std::span<const Frame> tail, std::span<const Frame> head, std::size_t ramp_len) {
    if (tail.size() != ramp_len || head.size() != ramp_len)
        throw Error("crossfade: expected " + std::to_string(ramp_len) + " frames on both sides, got " +
                    std::to_string(tail.size()) + " and " + std::to_string(head.size()));
    std::vector<Frame> out(ramp_len);
    for (std::size_t t = 0; t < ramp_len; ++t) {
        if (tail[t].size() != head[t].size()) throw Error("crossfade: frame dimension mismatch at " + std::to_string(t));
        const double w = static_cast<double>(t + 1) / static_cast<double>(ramp_len + 1);
        out[t].resize(tail[t].size());
        for (std::size_t d = 0; d < tail[t].size(); ++d) {
            // Exact when both sides agree.
            out[t][d] = tail[t][d] == head[t][d]
                            ? tail[t][d]
                            : static_cast<float>((1.0 - w) * tail[t][d] + w * head[t][d]);
        }
    }
    return out;
}

Stitcher::Stitcher(ChunkPlan plan, std::size_t frames_per_token) : plan_(std::move(plan)), fpt_(frames_per_token) {
    if (fpt_ < 1) throw Error("stitcher: frames_per_token must be >= 1");
}

std::vector<Frame> Stitcher::push(std::span<const Frame> frames) {
    if (done()) throw Error("stitcher: all chunks already pushed");
    const PlannedChunk& c = plan_[next_];
    const std::size_t expected = (c.gen_end - c.gen_start) * fpt_;
    if (frames.size() != expected)
        throw Error("stitcher: chunk " + std::to_string(next_) + " expected " + std::to_string(expected) +
                    " frames, got " + std::to_string(frames.size()));
    const std::size_t ramp = c.overlap() * fpt_;
    if (ramp != held_.size()) throw Error("stitcher: overlap does not match held frames");

    std::vector<Frame> out = crossfade(held_, frames.first(ramp), ramp);
    held_.clear();
    ++next_;

    // Hold back the frames the next chunk will regenerate.
    const std::size_t hold = done() ? 0 : plan_[next_].overlap() * fpt_;
    const auto body = frames.subspan(ramp);
    out.insert(out.end(), body.begin(), body.end() - static_cast<std::ptrdiff_t>(hold));
    held_.assign(body.end() - static_cast<std::ptrdiff_t>(hold), body.end());
    return out;
}

void ThroughputProfile::validate() const {
    if (!(llm_prefill_rate > 0) || !(llm_decode_rate > 0)) throw ParseError("profile: rates must be positive");
    if (flow_steps < 1) throw ParseError("profile: flow_steps must be >= 1");
    if (flow_chunk_ms < 0) throw ParseError("profile: flow_chunk_ms must be >= 0");
}

ThroughputProfile parse_profile(std::string_view text) {
    ThroughputProfile p;
    MeasuredLatency measured;
    bool have_measured = false;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("profile line " + std::to_string(lineno) + ": expected key=value");
        auto trim = [](std::string s) {
            const auto a = s.find_first_not_of(" \t\r");
            const auto b = s.find_last_not_of(" \t\r");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        double v;
        try {
            v = parse_number(value, key);
        } catch (const ParseError&) {
            throw ParseError("profile line " + std::to_string(lineno) + ": bad value for " + key);
        }
        if (key == "llm_prefill_rate") {
            p.llm_prefill_rate = v;
        } else if (key == "llm_decode_rate") {
            p.llm_decode_rate = v;
        } else if (key == "llm_first_chunk_ms_max") {
            measured.max_ms = v;
            have_measured = true;
        } else if (key == "llm_first_chunk_ms_avg") {
            measured.avg_ms = v;
            have_measured = true;
        } else if (key == "llm_first_chunk_ms_p95") {
            measured.p95_ms = v;
            have_measured = true;
        } else if (key == "flow_steps") {
            if (v < 1 || v != std::floor(v)) throw ParseError("profile: flow_steps must be a positive integer");
            p.flow_steps = static_cast<std::size_t>(v);
        } else if (key == "flow_chunk_ms") {
            p.flow_chunk_ms = v;
        } else {
            throw ParseError("profile line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    if (have_measured) p.llm_first_chunk_ms = measured;
    p.validate();
    return p;
}

ThroughputProfile load_profile(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open profile " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_profile(ss.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

LlmTerm parse_llm_term(std::string_view s) {
    if (s == "analytic") return LlmTerm::analytic;
    if (s == "max") return LlmTerm::measured_max;
    if (s == "avg") return LlmTerm::measured_avg;
    if (s == "p95") return LlmTerm::measured_p95;
    throw ParseError("unknown measured statistic '" + std::string(s) + "' (expected max, avg or p95)");
}

LatencyBreakdown first_packet_latency(const ThroughputProfile& profile, std::size_t input_tokens,
                                      const StreamConfig& cfg, LlmTerm term) {
    profile.validate();
    LatencyBreakdown b;
    b.flow_ms = profile.flow_chunk_ms;
    if (term == LlmTerm::analytic) {
        b.llm_ms = 1000.0 * static_cast<double>(input_tokens) / profile.llm_prefill_rate +
                   1000.0 * static_cast<double>(cfg.first_chunk_tokens) / profile.llm_decode_rate;
        return b;
    }
    if (!profile.llm_first_chunk_ms) throw Error("latency: profile has no measured first-chunk statistics");
    const auto& m = *profile.llm_first_chunk_ms;
    b.llm_ms = term == LlmTerm::measured_max ? m.max_ms : term == LlmTerm::measured_avg ? m.avg_ms : m.p95_ms;
    return b;
}

double estimate_first_packet_latency(const ThroughputProfile& profile, std::size_t input_tokens,
                                     const StreamConfig& cfg, LlmTerm term) {
    return first_packet_latency(profile, input_tokens, cfg, term).total_ms();
}

} // namespace touchforge::stream
