#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

#include "touchforge/corpus.hpp"
#include "touchforge/g2p.hpp"

namespace touchforge::rover {

enum class ReferenceSide { asr, copilot };

// all: drop only when both rates exceed their thresholds.
// any: drop when either rate does.
enum class DropRule { all, any };

struct RoverConfig {
    double wer_max = 0.10;
    double per_max = 0.05;
    ReferenceSide reference_side = ReferenceSide::asr;
    DropRule rule = DropRule::all;

    void validate() const;
};

inline constexpr std::string_view kReasonEmptyReference = "empty-reference";
inline constexpr std::string_view kReasonMissingTranscript = "missing-transcript";
inline constexpr std::string_view kReasonDisagreement = "transcript-disagreement";

// Threshold comparison is strict: a rate equal to its threshold does not count as exceeding it.
bool should_drop(double wer, double per, const RoverConfig& cfg);

// Lowercased, punctuation-free form both transcripts are compared in.
std::string normalize_transcript(std::string_view text);

// Scores the two transcripts against each other and sets cross_wer, cross_per and keep.
// Stored rates are clamped to 1; the decision uses the unclamped values.
// A drop keeps any reason an earlier stage recorded. Throws Error when a transcript is missing.
Utterance cross_validate(const Utterance& u, const RoverConfig& cfg, const g2p::G2pTables& tables);

struct DomainCount {
    std::size_t total = 0;
    std::size_t kept = 0;

    bool operator==(const DomainCount&) const = default;
};

struct RetentionReport {
    std::size_t total = 0;
    std::size_t kept = 0;
    std::map<std::string, DomainCount> per_domain;

    // kept / total, or nullopt for an empty corpus.
    std::optional<double> retention() const;
    // "51.6%" style, one decimal; "n/a" for an empty corpus.
    std::string render_retention() const;

    nlohmann::ordered_json to_json() const;
    std::string render_text() const;
};

inline const std::string kDefaultDomain = "default";

// Counts keep == true records; records without a decision count toward the total only.
RetentionReport compute_report(const Manifest& m);

// Annotates every record; per-record failures become drops with a reason.
// Order and ids are preserved regardless of thread count.
std::pair<Manifest, RetentionReport> filter_manifest(const Manifest& m, const RoverConfig& cfg,
                                                     const g2p::G2pTables& tables, unsigned threads = 1);

} // namespace touchforge::rover
