#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace touchforge::mask {

// Contiguous chunks covering positions [0, n).
class ChunkLayout {
public:
    // Throws Error unless every size is positive.
    explicit ChunkLayout(std::vector<std::size_t> chunk_sizes);

    // Chunks of `chunk` tokens with a shorter last chunk when n is not a multiple.
    static ChunkLayout tiled(std::size_t n, std::size_t chunk);

    std::size_t n() const { return n_; }
    std::size_t num_chunks() const { return sizes_.size(); }
    const std::vector<std::size_t>& chunk_sizes() const { return sizes_; }
    std::size_t chunk_start(std::size_t chunk) const { return starts_[chunk]; }
    std::size_t chunk_end(std::size_t chunk) const { return starts_[chunk] + sizes_[chunk]; }
    std::size_t chunk_of(std::size_t position) const;

    bool operator==(const ChunkLayout& o) const { return sizes_ == o.sizes_; }

private:
    std::vector<std::size_t> sizes_;
    std::vector<std::size_t> starts_;
    std::vector<std::size_t> owner_;
    std::size_t n_ = 0;
};

struct MaskSchedule {
    double token_rate = 25.0;
    std::size_t min_chunk_tokens = 13;
    double full_sentence_prob = 0.5;
    std::vector<std::size_t> history_choices = {0, 1};

    void validate() const;
};

struct SampledLayout {
    ChunkLayout layout;
    std::size_t history = 0;
    bool full_sentence = false;
};

// Row-major n x n visibility matrix; at(i, j) means position i may attend to j.
class AttnMask {
public:
    AttnMask() = default;
    explicit AttnMask(std::size_t n, bool value = false) : n_(n), bits_(n * n, value ? 1 : 0) {}

    std::size_t n() const { return n_; }
    bool at(std::size_t i, std::size_t j) const { return bits_[i * n_ + j] != 0; }
    void set(std::size_t i, std::size_t j, bool v) { bits_[i * n_ + j] = v ? 1 : 0; }

    // Top-left k x k block.
    AttnMask prefix(std::size_t k) const;

    // (value, run length) pairs per row, starting with the value of column 0.
    std::vector<std::vector<std::pair<bool, std::size_t>>> run_length_rows() const;

    // Header "n c h", then one row of 0/1 characters per line.
    std::string serialize(std::size_t chunk, std::size_t history) const;

    bool operator==(const AttnMask&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<std::uint8_t> bits_;
};

// Full-sentence layout with probability full_sentence_prob; otherwise one chunk
// size drawn uniformly from [min_chunk_tokens, n], tiled, and a history drawn
// from history_choices. Identical seeds give identical draws on every platform.
SampledLayout sample_layout(std::size_t n, const MaskSchedule& schedule, std::mt19937_64& rng);

// mask[i][j] <=> chunk(i) - history <= chunk(j) <= chunk(i).
AttnMask training_mask(const ChunkLayout& layout, std::size_t history);

// Mask over positions [0, chunk_end(current_chunk)) seen while streaming that chunk.
AttnMask inference_mask(const ChunkLayout& layout, std::size_t current_chunk, std::size_t history);

} // namespace touchforge::mask
