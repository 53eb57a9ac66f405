#include <doctest.h>

#include <random>

#include "../support/oracles.hpp"
#include "touchforge/error.hpp"
#include "touchforge/chunk_mask.hpp"

using namespace touchforge;
using namespace touchforge::mask;

namespace {
AttnMask from_rows(const std::vector<std::string>& rows) {
    AttnMask m(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.size(); ++j) m.set(i, j, rows[i][j] == '1');
    return m;
}
} // namespace

TEST_CASE("ChunkLayout") {
    const auto l = ChunkLayout::tiled(50, 13);
    CHECK(l.chunk_sizes() == std::vector<std::size_t>{13, 13, 13, 11});
    CHECK(l.n() == 50);
    CHECK(l.chunk_of(0) == 0);
    CHECK(l.chunk_of(13) == 1);
    CHECK(l.chunk_of(49) == 3);
    CHECK(l.chunk_end(3) == 50);
    CHECK_THROWS_AS(ChunkLayout({2, 0}), Error);
    CHECK(ChunkLayout::tiled(5, 13).chunk_sizes() == std::vector<std::size_t>{5});
}

TEST_CASE("training_mask examples") {
    CHECK(training_mask(ChunkLayout({4}), 0) == AttnMask(4, true));
    CHECK(training_mask(ChunkLayout({2, 2}), 0) == from_rows({"1100", "1100", "0011", "0011"}));
    CHECK(training_mask(ChunkLayout({2, 2}), 1) == from_rows({"1100", "1100", "1111", "1111"}));
}

TEST_CASE("training_mask matches the visibility rule") {
    std::mt19937_64 rng(1);
    for (int k = 0; k < 300; ++k) {
        std::vector<std::size_t> sizes;
        for (int c = 1 + static_cast<int>(rng() % 6); c > 0; --c) sizes.push_back(1 + rng() % 5);
        const std::size_t h = rng() % 4;
        const ChunkLayout layout(sizes);
        const auto m = training_mask(layout, h);
        const auto wider = training_mask(layout, h + 1);
        for (std::size_t i = 0; i < layout.n(); ++i) {
            for (std::size_t j = 0; j < layout.n(); ++j) {
                REQUIRE(m.at(i, j) == testing::chunk_rule(sizes, h, i, j));
                if (m.at(i, j)) CHECK(wider.at(i, j));
            }
        }
    }
}

TEST_CASE("inference_mask") {
    const ChunkLayout l({2, 2});
    CHECK(inference_mask(l, 0, 1) == AttnMask(2, true));
    CHECK(inference_mask(l, 1, 1) == training_mask(l, 1).prefix(4));
    CHECK_THROWS_AS(inference_mask(l, 2, 0), Error);

    const ChunkLayout big({3, 3, 3});
    const auto sat = inference_mask(big, 2, 5);
    for (std::size_t j = 0; j < 9; ++j) CHECK(sat.at(8, j));
}

TEST_CASE("sample_layout") {
    MaskSchedule s;
    std::mt19937_64 rng(2024);
    const auto small = sample_layout(5, s, rng);
    CHECK(small.layout.chunk_sizes() == std::vector<std::size_t>{5});

    s.full_sentence_prob = 1.0;
    CHECK(sample_layout(50, s, rng).layout.chunk_sizes() == std::vector<std::size_t>{50});
    CHECK(sample_layout(50, s, rng).full_sentence);

    s.full_sentence_prob = 0.0;
    for (int k = 0; k < 500; ++k) {
        const auto d = sample_layout(50, s, rng);
        const auto c = d.layout.chunk_sizes().front();
        CHECK(c >= 13);
        CHECK(c <= 50);
        CHECK(d.layout == ChunkLayout::tiled(50, c));
        CHECK((d.history == 0 || d.history == 1));
        if (d.full_sentence) CHECK(c == 50);
    }

    std::mt19937_64 a(77), b(77);
    MaskSchedule def;
    for (int k = 0; k < 50; ++k) {
        const auto x = sample_layout(64, def, a);
        const auto y = sample_layout(64, def, b);
        CHECK(x.layout == y.layout);
        CHECK(x.history == y.history);
    }

    MaskSchedule bad;
    bad.min_chunk_tokens = 0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("serialize and run-length rows") {
    const auto m = training_mask(ChunkLayout({2, 2}), 0);
    CHECK(m.serialize(2, 0) == "4 2 0\n1100\n1100\n0011\n0011\n");
    const auto rle = m.run_length_rows();
    using Runs = std::vector<std::pair<bool, std::size_t>>;
    CHECK(rle[0] == Runs{{true, 2}, {false, 2}});
    CHECK(rle[3] == Runs{{false, 2}, {true, 2}});
}
