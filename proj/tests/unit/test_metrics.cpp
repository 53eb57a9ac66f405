#include <doctest.h>

#include <algorithm>
#include <random>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "touchforge/error.hpp"
#include "touchforge/metrics.hpp"

using namespace touchforge;
using metrics::ErrorCounts;
using Seq = std::vector<std::string>;

TEST_CASE("align: worked examples") {
    CHECK(metrics::align(Seq{"a", "b", "c"}, Seq{"a", "b", "c"}) == ErrorCounts{0, 0, 0, 3});
    CHECK(metrics::align(Seq{"a", "b", "c"}, Seq{"a", "x", "c"}) == ErrorCounts{1, 0, 0, 3});
    CHECK(metrics::align(Seq{"a", "b"}, Seq{"a", "b", "b"}) == ErrorCounts{0, 0, 1, 2});
    CHECK(metrics::align(Seq{}, Seq{"a", "b"}) == ErrorCounts{0, 0, 2, 0});
    CHECK(metrics::align(Seq{"a", "b"}, Seq{}) == ErrorCounts{0, 2, 0, 2});
}

TEST_CASE("align: tie-breaking prefers substitution over a delete/insert pair") {
    // [a] vs [b]: sub (cost 1) beats del+ins (cost 2); [a b] vs [b a] admits
    // 2 subs or del+ins; both cost 2 and the backtrace picks substitutions.
    CHECK(metrics::align(Seq{"a", "b"}, Seq{"b", "a"}) == ErrorCounts{2, 0, 0, 2});
}

TEST_CASE("align: agrees with exhaustive enumeration for short sequences") {
    const auto seqs = testing::all_sequences({"a", "b", "c"}, 4);
    long checked = 0;
    for (const auto& r : seqs) {
        for (const auto& h : seqs) {
            const auto got = metrics::align(r, h);
            const auto oracle = testing::enumerate_alignments(r, h);
            REQUIRE(got.errors() == oracle.min_cost);
            REQUIRE(oracle.splits.count({got.sub, got.del, got.ins}) == 1);
            REQUIRE(got.sub + got.del <= got.ref_len);
            ++checked;
        }
    }
    CHECK(checked == 121 * 121);
}

TEST_CASE("align: identity and symmetry") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> len(0, 8), sym(0, 3);
    for (int k = 0; k < 500; ++k) {
        Seq x, y;
        for (int i = len(rng); i > 0; --i) x.push_back(std::string(1, static_cast<char>('a' + sym(rng))));
        for (int i = len(rng); i > 0; --i) y.push_back(std::string(1, static_cast<char>('a' + sym(rng))));
        CHECK(metrics::align(x, x).errors() == 0);
        const auto xy = metrics::align(x, y);
        const auto yx = metrics::align(y, x);
        CHECK(xy.errors() == yx.errors());
        // Mirror alignment: deletions become insertions.
        const auto oracle = testing::enumerate_alignments(y, x);
        CHECK(oracle.splits.count({xy.sub, xy.ins, xy.del}) == 1);
    }
}

TEST_CASE("wer: units and rates") {
    auto r = metrics::wer("a b c", "a b c", Lang::en);
    CHECK(r.rate == 0.0);
    r = metrics::wer("a b c", "a x c", Lang::en);
    CHECK(r.counts == ErrorCounts{1, 0, 0, 3});
    CHECK(r.rate == doctest::Approx(1.0 / 3.0));
    r = metrics::wer("天黑了", "天黑", Lang::zh);
    CHECK(r.counts == ErrorCounts{0, 1, 0, 3});
    CHECK(r.rate == doctest::Approx(1.0 / 3.0));
    CHECK_THROWS_WITH_AS(metrics::wer("", "a", Lang::en), doctest::Contains("empty reference"), Error);
}

TEST_CASE("wer_units: mixed text splits CJK by character and Latin by word") {
    CHECK(metrics::wer_units("我爱 new york 城市", Lang::mixed) == Seq{"我", "爱", "new", "york", "城", "市"});
    CHECK(metrics::wer_units("hello世界", Lang::mixed) == Seq{"hello", "世", "界"});
    CHECK(metrics::wer_units("new york", Lang::en) == Seq{"new", "york"});
}

TEST_CASE("per: phoneme-level scoring") {
    const auto tables = g2p::G2pTables::load(testing::zh_table_path(), testing::en_dict_path());
    CHECK(metrics::per("天黑了", "天黑了", tables, Lang::zh).rate == 0.0);

    // 公式 / 攻势 read gong shi on both sides.
    const auto w = metrics::wer("公式", "攻势", Lang::zh);
    const auto p = metrics::per("公式", "攻势", tables, Lang::zh);
    CHECK(w.rate == 1.0);
    CHECK(p.rate == 0.0);

    // cat = K AE T, cap = K AE P.
    const auto cc = metrics::per("cat", "cap", tables, Lang::en);
    CHECK(cc.counts == ErrorCounts{1, 0, 0, 3});
    CHECK_THROWS_AS(metrics::per("", "cat", tables, Lang::en), Error);
}

TEST_CASE("aggregate_seeds: pooled micro-average") {
    using metrics::SeedResult;
    const std::vector<SeedResult> one{{2024, {1, 1, 0, 8}}};
    CHECK(metrics::aggregate_seeds(one) == doctest::Approx(0.25));

    const std::vector<SeedResult> two{{2024, {1, 0, 0, 10}}, {2025, {0, 1, 0, 10}}};
    CHECK(metrics::aggregate_seeds(two) == doctest::Approx(0.10));

    std::vector<SeedResult> five;
    for (long s = 2024; s <= 2028; ++s) five.push_back({s, {1, 1, 0, 8}});
    CHECK(metrics::aggregate_seeds(five) == doctest::Approx(0.25));

    CHECK_THROWS_AS(metrics::aggregate_seeds(std::vector<SeedResult>{}), Error);
    CHECK_THROWS_AS(metrics::aggregate_seeds(std::vector<SeedResult>{{1, {0, 0, 1, 0}}}), Error);
}

TEST_CASE("aggregate_seeds: equals one alignment over sentinel-joined pairs") {
    // Each separator is a block longer than any pair, so no minimal alignment crosses it.
    constexpr int kBlock = 16;
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> len(1, 6), sym(0, 2);
    auto rand_seq = [&] {
        Seq s;
        for (int i = len(rng); i > 0; --i) s.push_back(std::string(1, static_cast<char>('a' + sym(rng))));
        return s;
    };
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<metrics::SeedResult> seeds;
        Seq joined_ref, joined_hyp;
        for (long s = 0; s < 5; ++s) {
            const Seq r = rand_seq(), h = rand_seq();
            seeds.push_back({2024 + s, metrics::align(r, h)});
            const std::string sentinel = "#" + std::to_string(s);
            joined_ref.insert(joined_ref.end(), kBlock, sentinel);
            joined_hyp.insert(joined_hyp.end(), kBlock, sentinel);
            joined_ref.insert(joined_ref.end(), r.begin(), r.end());
            joined_hyp.insert(joined_hyp.end(), h.begin(), h.end());
        }
        const auto joined = metrics::align(joined_ref, joined_hyp);
        const double pooled = static_cast<double>(joined.errors()) / static_cast<double>(joined.ref_len - 5 * kBlock);
        CHECK(metrics::aggregate_seeds(seeds) == doctest::Approx(pooled));
    }
}

TEST_CASE("sim_average") {
    using P = std::pair<std::vector<double>, std::vector<double>>;
    const std::vector<double> v{0.6, 0.8};
    const std::vector<double> neg{-0.6, -0.8};
    CHECK(metrics::sim_average(std::vector<P>{{v, v}}) == doctest::Approx(1.0));
    CHECK(metrics::sim_average(std::vector<P>{{{1, 0}, {0, 1}}}) == doctest::Approx(0.0));
    CHECK(metrics::sim_average(std::vector<P>{{v, v}, {v, neg}}) == doctest::Approx(0.0));
    CHECK_THROWS_AS(metrics::sim_average(std::vector<P>{{{0, 0}, {1, 0}}}), Error);
    CHECK_THROWS_AS(metrics::sim_average(std::vector<P>{{{1, 0, 0}, {1, 0}}}), Error);
}
