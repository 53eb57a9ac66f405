#include "touchforge/chunk_mask.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "touchforge/error.hpp"

namespace touchforge::mask {

ChunkLayout::ChunkLayout(std::vector<std::size_t> chunk_sizes) : sizes_(std::move(chunk_sizes)) {
    starts_.reserve(sizes_.size());
    for (std::size_t c = 0; c < sizes_.size(); ++c) {
        if (sizes_[c] == 0) throw Error("chunk layout: chunk sizes must be positive");
        starts_.push_back(n_);
        n_ += sizes_[c];
        owner_.insert(owner_.end(), sizes_[c], c);
    }
}

ChunkLayout ChunkLayout::tiled(std::size_t n, std::size_t chunk) {
    if (chunk == 0) throw Error("chunk layout: chunk size must be positive");
    std::vector<std::size_t> sizes;
    for (std::size_t pos = 0; pos < n; pos += chunk) sizes.push_back(std::min(chunk, n - pos));
    return ChunkLayout(std::move(sizes));
}

std::size_t ChunkLayout::chunk_of(std::size_t position) const {
    if (position >= n_) throw Error("chunk layout: position " + std::to_string(position) + " out of range");
    return owner_[position];
}

void MaskSchedule::validate() const {
    if (min_chunk_tokens < 1) throw ConfigError("mask schedule: min_chunk_tokens must be >= 1");
    if (!(full_sentence_prob >= 0.0 && full_sentence_prob <= 1.0))
        throw ConfigError("mask schedule: full_sentence_prob must lie in [0, 1]");
    if (history_choices.empty()) throw ConfigError("mask schedule: history_choices is empty");
    if (!(token_rate > 0.0)) throw ConfigError("mask schedule: token_rate must be positive");
}

namespace {

// Uniform integer in [0, bound) by rejection; std::uniform_int_distribution
// differs between standard libraries.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

} // namespace

SampledLayout sample_layout(std::size_t n, const MaskSchedule& schedule, std::mt19937_64& rng) {
    if (n < 1) throw Error("sample_layout: n must be >= 1");
    schedule.validate();
    const bool full = unit(rng) < schedule.full_sentence_prob;
    if (full || n <= schedule.min_chunk_tokens) {
        return {ChunkLayout({n}), 0, true};
    }
    const std::size_t span = n - schedule.min_chunk_tokens + 1;
    const std::size_t chunk = schedule.min_chunk_tokens + static_cast<std::size_t>(bounded(rng, span));
    const std::size_t history = schedule.history_choices[bounded(rng, schedule.history_choices.size())];
    return {ChunkLayout::tiled(n, chunk), history, chunk >= n};
}

AttnMask training_mask(const ChunkLayout& layout, std::size_t history) {
    const std::size_t n = layout.n();
    AttnMask m(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = layout.chunk_of(i);
        const std::size_t first = c >= history ? c - history : 0;
        const std::size_t lo = layout.chunk_start(first);
        const std::size_t hi = layout.chunk_end(c);
        for (std::size_t j = lo; j < hi; ++j) m.set(i, j, true);
    }
    return m;
}

AttnMask inference_mask(const ChunkLayout& layout, std::size_t current_chunk, std::size_t history) {
    if (current_chunk >= layout.num_chunks())
        throw Error("inference_mask: chunk " + std::to_string(current_chunk) + " out of range (" +
                    std::to_string(layout.num_chunks()) + " chunks)");
    const std::size_t k = layout.chunk_end(current_chunk);
    AttnMask m(k);
    // Replays the stream: when chunk t was current, its rows saw the whole chunk
    // plus `history` earlier chunks, and those rows are cached unchanged afterwards.
    for (std::size_t t = 0; t <= current_chunk; ++t) {
        const std::size_t window_start = layout.chunk_start(t > history ? t - history : 0);
        for (std::size_t i = layout.chunk_start(t); i < layout.chunk_end(t); ++i) {
            for (std::size_t j = window_start; j < layout.chunk_end(t); ++j) m.set(i, j, true);
        }
    }
    return m;
}

AttnMask AttnMask::prefix(std::size_t k) const {
    if (k > n_) throw Error("mask prefix larger than mask");
    AttnMask out(k);
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) out.set(i, j, at(i, j));
    }
    return out;
}

std::vector<std::vector<std::pair<bool, std::size_t>>> AttnMask::run_length_rows() const {
    std::vector<std::vector<std::pair<bool, std::size_t>>> rows(n_);
    for (std::size_t i = 0; i < n_; ++i) {
        auto& row = rows[i];
        for (std::size_t j = 0; j < n_; ++j) {
            const bool v = at(i, j);
            if (row.empty() || row.back().first != v) {
                row.emplace_back(v, 1);
            } else {
                ++row.back().second;
            }
        }
    }
    return rows;
}

std::string AttnMask::serialize(std::size_t chunk, std::size_t history) const {
    std::string out = std::to_string(n_) + " " + std::to_string(chunk) + " " + std::to_string(history) + "\n";
    out.reserve(out.size() + n_ * (n_ + 1));
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < n_; ++j) out.push_back(at(i, j) ? '1' : '0');
        out.push_back('\n');
    }
    return out;
}

} // namespace touchforge::mask
