#include "touchforge/vad.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "touchforge/error.hpp"

namespace touchforge::vad {

namespace {

std::size_t ms_to_samples(double ms, int rate) {
    return static_cast<std::size_t>(std::llround(ms * rate / 1000.0));
}

// Frame index -> start time. Exact for integral millisecond hops.
double frame_time(std::size_t frame, const VadConfig& cfg) {
    return static_cast<double>(frame) * cfg.hop_ms / 1000.0;
}

// Linear-interpolated quantile of an unsorted sequence.
double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return v[lo] + (v[hi] - v[lo]) * frac;
}

} // namespace

void VadConfig::validate() const {
    if (!(hop_ms > 0.0 && hop_ms <= frame_ms)) throw ConfigError("vad: require 0 < hop_ms <= frame_ms");
    if (!(min_clip_s < max_clip_s)) throw ConfigError("vad: require min_clip_s < max_clip_s");
    if (!(noise_percentile > 0.0 && noise_percentile < 1.0))
        throw ConfigError("vad: noise_percentile must lie in (0, 1)");
    if (hangover_ms < 0.0 || merge_gap_ms < 0.0) throw ConfigError("vad: negative hangover or merge gap");
}

std::vector<double> frame_energies(const AudioClip& clip, const VadConfig& cfg) {
    if (clip.samples.empty()) throw Error("vad: empty clip '" + clip.id + "'");
    if (clip.sample_rate <= 0) throw Error("vad: sample rate must be positive");
    cfg.validate();
    const std::size_t frame_len = ms_to_samples(cfg.frame_ms, clip.sample_rate);
    const std::size_t hop_len = std::max<std::size_t>(1, ms_to_samples(cfg.hop_ms, clip.sample_rate));
    const std::size_t n = clip.samples.size();
    std::vector<double> out;
    if (frame_len == 0 || n < frame_len) return out;
    const std::size_t frames = (n - frame_len) / hop_len + 1;
    out.reserve(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        const float* p = clip.samples.data() + f * hop_len;
        double acc = 0.0;
        for (std::size_t i = 0; i < frame_len; ++i) acc += static_cast<double>(p[i]) * p[i];
        out.push_back(10.0 * std::log10(acc / static_cast<double>(frame_len) + kEnergyFloor));
    }
    return out;
}

std::vector<Region> detect_speech_regions(std::span<const double> energies, const VadConfig& cfg) {
    if (energies.empty()) throw Error("vad: no frames");
    cfg.validate();
    const double threshold =
        quantile(std::vector<double>(energies.begin(), energies.end()), cfg.noise_percentile) + cfg.margin_db;
    const double frame_s = cfg.frame_ms / 1000.0;
    const double total_s = frame_time(energies.size() - 1, cfg) + frame_s;
    const double hangover_s = cfg.hangover_ms / 1000.0;
    const double merge_gap_s = cfg.merge_gap_ms / 1000.0;

    std::vector<Region> regions;
    std::size_t f = 0;
    while (f < energies.size()) {
        if (!(energies[f] > threshold)) {
            ++f;
            continue;
        }
        const std::size_t first = f;
        while (f < energies.size() && energies[f] > threshold) ++f;
        const std::size_t last = f - 1;
        Region r{frame_time(first, cfg), std::min(total_s, frame_time(last, cfg) + frame_s + hangover_s)};
        if (!regions.empty() && r.start_s - regions.back().end_s < merge_gap_s) {
            regions.back().end_s = std::max(regions.back().end_s, r.end_s);
        } else {
            regions.push_back(r);
        }
    }
    return regions;
}

std::vector<Segment> enforce_duration_bounds(std::span<const Region> regions,
                                             std::span<const double> energies,
                                             const VadConfig& cfg,
                                             const std::string& source_id) {
    cfg.validate();
    const double min_s = cfg.min_clip_s;
    const double max_s = cfg.max_clip_s;
    std::vector<Segment> out;

    // Pieces are processed left to right with an explicit stack so output stays ordered.
    std::vector<Region> stack;
    for (const auto& region : regions) {
        stack.assign(1, region);
        while (!stack.empty()) {
            const Region r = stack.back();
            stack.pop_back();
            const double dur = r.end_s - r.start_s;
            if (dur < min_s) continue;
            if (dur <= max_s) {
                out.push_back({source_id, r.start_s, r.end_s});
                continue;
            }
            // Candidate cut frames lie strictly inside the region; when the region is long
            // enough, also keep min_s away from both ends so neither side is discarded.
            auto pick = [&](double lo, double hi) -> std::optional<std::size_t> {
                std::optional<std::size_t> best;
                if (energies.empty()) return best;
                const auto first = static_cast<std::size_t>(std::max(0.0, std::floor(lo * 1000.0 / cfg.hop_ms)));
                const auto last = std::min(energies.size() - 1,
                                           static_cast<std::size_t>(std::max(0.0, std::ceil(hi * 1000.0 / cfg.hop_ms))));
                for (std::size_t f = first; f <= last; ++f) {
                    const double t = frame_time(f, cfg);
                    if (t <= lo || t >= hi) continue;
                    if (!best || energies[f] < energies[*best]) best = f;
                }
                return best;
            };
            auto cut = pick(r.start_s + min_s - 1e-9, r.end_s - min_s + 1e-9);
            if (!cut) cut = pick(r.start_s, r.end_s);
            if (!cut) {
                // No frame information covers this region; cut at the longest admissible point.
                const double t = r.start_s + max_s;
                stack.push_back({t, r.end_s});
                stack.push_back({r.start_s, t});
                continue;
            }
            const double t = frame_time(*cut, cfg);
            stack.push_back({t, r.end_s});
            stack.push_back({r.start_s, t});
        }
    }
    return out;
}

std::vector<Segment> segment_clip(const AudioClip& clip, const VadConfig& cfg, const std::string& source_id) {
    const auto energies = frame_energies(clip, cfg);
    if (energies.empty()) return {};
    const auto regions = detect_speech_regions(energies, cfg);
    return enforce_duration_bounds(regions, energies, cfg, source_id);
}

} // namespace touchforge::vad
