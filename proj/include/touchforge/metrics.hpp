#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "touchforge/corpus.hpp"
#include "touchforge/g2p.hpp"

namespace touchforge::metrics {

struct ErrorCounts {
    long sub = 0;
    long del = 0;
    long ins = 0;
    long ref_len = 0;

    long errors() const { return sub + del + ins; }
    // Throws Error when ref_len == 0.
    double rate() const;

    ErrorCounts& operator+=(const ErrorCounts& o) {
        sub += o.sub;
        del += o.del;
        ins += o.ins;
        ref_len += o.ref_len;
        return *this;
    }
    bool operator==(const ErrorCounts&) const = default;
};

struct SeedResult {
    long seed = 0;
    ErrorCounts counts;
};

struct Scored {
    ErrorCounts counts;
    double rate = 0.0;
};

// Minimum edit alignment with unit costs. When several alignments share the
// minimal cost, the backtrace prefers substitution, then deletion, then insertion.
ErrorCounts align(std::span<const std::string> ref, std::span<const std::string> hyp);

// Scoring units: Chinese characters one by one, everything else by whitespace word.
std::vector<std::string> wer_units(std::string_view text, Lang lang);

Scored wer(std::string_view ref_text, std::string_view hyp_text, Lang lang);
Scored per(std::string_view ref_text, std::string_view hyp_text, const g2p::G2pTables& tables, Lang lang);

// Pooled errors over pooled reference length.
double aggregate_seeds(std::span<const SeedResult> results);

double cosine(std::span<const double> a, std::span<const double> b);
double sim_average(std::span<const std::pair<std::vector<double>, std::vector<double>>> pairs);

} // namespace touchforge::metrics
