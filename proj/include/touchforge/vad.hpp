#pragma once

#include <span>
#include <vector>

#include "touchforge/corpus.hpp"

namespace touchforge::vad {

struct VadConfig {
    double frame_ms = 25.0;
    double hop_ms = 10.0;
    double noise_percentile = 0.10;
    double margin_db = 6.0;
    double hangover_ms = 300.0;
    double merge_gap_ms = 200.0;
    double min_clip_s = 2.0;
    double max_clip_s = 30.0;

    // Throws ConfigError when the invariants do not hold.
    void validate() const;
};

struct Region {
    double start_s = 0.0;
    double end_s = 0.0;

    bool operator==(const Region&) const = default;
};

constexpr double kEnergyFloor = 1e-12;

// Per-frame log energy, 10*log10(mean square + 1e-12). Frame f covers samples
// [f*hop, f*hop + frame). Clips shorter than one frame yield no frames.
std::vector<double> frame_energies(const AudioClip& clip, const VadConfig& cfg);

// Frames louder than the noise-floor quantile plus margin, extended by the
// hangover and merged across short gaps. Times are frame-grid aligned.
std::vector<Region> detect_speech_regions(std::span<const double> energies, const VadConfig& cfg);

// Drops regions below min_clip_s and splits regions above max_clip_s at their
// lowest-energy interior frame until every piece fits.
std::vector<Segment> enforce_duration_bounds(std::span<const Region> regions,
                                             std::span<const double> energies,
                                             const VadConfig& cfg,
                                             const std::string& source_id = {});

// frame_energies -> detect_speech_regions -> enforce_duration_bounds.
std::vector<Segment> segment_clip(const AudioClip& clip, const VadConfig& cfg,
                                  const std::string& source_id);

} // namespace touchforge::vad
