#include <doctest.h>

#include <fstream>
#include <random>

#include "../support/fixtures.hpp"
#include "touchforge/error.hpp"
#include "touchforge/g2p.hpp"
#include "touchforge/utf8.hpp"

using namespace touchforge;
using namespace touchforge::g2p;
using Phones = std::vector<std::string>;

namespace {
const G2pTables& tables() {
    static const G2pTables t = G2pTables::load(testing::zh_table_path(), testing::en_dict_path());
    return t;
}
} // namespace

TEST_CASE("bundled tables load") {
    CHECK(tables().zh_size() > 20000);
    CHECK(tables().en_size() > 100000);
}

TEST_CASE("zh_to_phonemes") {
    CHECK(zh_to_phonemes("天黑了", tables()).phones == Phones{"tian", "hei", "le"});
    CHECK(zh_to_phonemes("", tables()).phones.empty());
    CHECK(zh_to_phonemes("了了", tables()).phones == Phones{"le", "le"});
    CHECK(zh_to_phonemes("公式", tables()).phones == zh_to_phonemes("攻势", tables()).phones);
    CHECK(zh_to_phonemes("\xEE\x80\x80", tables()).phones == Phones{std::string(kUnkPhone)});
}

TEST_CASE("zh phone count equals character count") {
    std::mt19937_64 rng(8);
    std::uniform_int_distribution<char32_t> cp(0x4E00, 0x9FA5);
    for (int k = 0; k < 500; ++k) {
        std::u32string s;
        for (int i = static_cast<int>(rng() % 20); i > 0; --i) s.push_back(cp(rng));
        const auto p = zh_to_phonemes(utf8::encode(s), tables());
        CHECK(p.phones.size() == s.size());
        for (const auto& ph : p.phones) {
            CHECK(!ph.empty());
            CHECK(ph.find_first_of("0123456789") == std::string::npos);
        }
    }
}

TEST_CASE("en_to_phonemes") {
    CHECK(en_to_phonemes("cat", tables()).phones == Phones{"K", "AE", "T"});
    CHECK(en_to_phonemes("Cat", tables()).phones == Phones{"K", "AE", "T"});
    CHECK(en_to_phonemes("", tables()).phones.empty());
    const auto oov = en_to_phonemes("zzq", tables());
    CHECK(oov.phones == Phones{letter_name(U'z'), letter_name(U'z'), letter_name(U'q')});
    CHECK(en_to_phonemes("the cat", tables()).phones.size() ==
          en_to_phonemes("the", tables()).phones.size() + 3);
}

TEST_CASE("to_phonemes: mixed text") {
    const auto p = to_phonemes("天黑 cat", Lang::mixed, tables());
    CHECK(p.phones == Phones{"tian", "hei", "K", "AE", "T"});
    CHECK(to_phonemes("天黑", Lang::zh, tables()) == to_phonemes("天黑", Lang::zh, tables()));
}

TEST_CASE("custom tables and malformed files") {
    G2pTables t;
    t.add_zh("行", {"xing2", "hang2"});
    t.add_en("ok", {"OW", "K", "EY"});
    CHECK(*t.zh_reading("行") == "xing");
    CHECK(zh_to_phonemes("行", t).phones == Phones{"xing"});
    CHECK(en_to_phonemes("OK", t).phones == Phones{"OW", "K", "EY"});

    testing::TempDir dir("g2p");
    {
        std::ofstream(dir / "zh.tsv") << "天\n";
        std::ofstream(dir / "en.tsv") << "cat\tK AE T\n";
    }
    CHECK_THROWS_AS(G2pTables::load(dir / "zh.tsv", dir / "en.tsv"), ParseError);
    CHECK_THROWS_AS(G2pTables::load(dir / "missing.tsv", dir / "en.tsv"), IoError);
}
