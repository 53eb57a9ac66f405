#include <doctest.h>

#include <random>

#include "../support/fixtures.hpp"
#include "touchforge/error.hpp"
#include "touchforge/text.hpp"
#include "touchforge/utf8.hpp"

using namespace touchforge;
using namespace touchforge::text;

namespace {

BpeModel toy_model() {
    std::unordered_map<std::string, int> vocab;
    int id = 1;
    for (char c = 'a'; c <= 'z'; ++c) vocab[std::string(1, c)] = id++;
    vocab["he"] = id++;
    vocab["hello"] = id++;
    vocab["ll"] = id++;
    vocab["llo"] = id++;
    vocab["hel"] = id++;
    return BpeModel(vocab, {{"h", "e"}, {"l", "l"}, {"ll", "o"}, {"he", "llo"}});
}

const BpeModel& shipped_bpe() {
    static const BpeModel m = BpeModel::load(testing::data_dir() / "bpe" / "vocab.tsv",
                                             testing::data_dir() / "bpe" / "merges.txt");
    return m;
}

const CharVocab& shipped_chars() {
    static const CharVocab v = CharVocab::from_table_keys(testing::zh_table_path(), shipped_bpe().max_id() + 1);
    return v;
}

} // namespace

TEST_CASE("strip_punctuation: sample sentences") {
    CHECK(strip_punctuation("天黑了，路灯亮起，雪雾扬起，寒冷像潮水一样涌来。") ==
          "天黑了路灯亮起雪雾扬起寒冷像潮水一样涌来");
    CHECK(strip_punctuation(
              "I heard the land where the hobbits live, the Shire, has actually been filmed in New Zealand.") ==
          "I heard the land where the hobbits live the Shire has actually been filmed in New Zealand");
    CHECK(strip_punctuation("") == "");
}

TEST_CASE("strip_punctuation: apostrophes and whitespace") {
    CHECK(strip_punctuation("don't") == "don't");
    CHECK(strip_punctuation("don’t") == "don't");
    CHECK(strip_punctuation("'quoted'") == "quoted");
    CHECK(strip_punctuation("rock 'n' roll") == "rock n roll");
    CHECK(strip_punctuation("well-known") == "well known");
    CHECK(strip_punctuation("  a \t\n b  ") == "a b");
    CHECK(strip_punctuation("「你好」！") == "你好");
    CHECK(strip_punctuation("1+1=2") == "1+1=2");
}

TEST_CASE("strip_punctuation is idempotent") {
    const char* samples[] = {"天黑了，路灯亮起。", "Hello, world!!  ok", "it's -- 'fine'", "（注）a.b.c", " ' ' "};
    for (const char* s : samples) {
        const auto once = strip_punctuation(s);
        CHECK(strip_punctuation(once) == once);
    }
}

TEST_CASE("split_script_runs") {
    using R = std::vector<ScriptRun>;
    CHECK(split_script_runs("天黑了") == R{{"天黑了", Script::cjk}});
    CHECK(split_script_runs("hello世界ok") ==
          R{{"hello", Script::latin}, {"世界", Script::cjk}, {"ok", Script::latin}});
    CHECK(split_script_runs("abc 123") ==
          R{{"abc", Script::latin}, {" ", Script::other}, {"123", Script::digit}});
    CHECK(split_script_runs("").empty());

    std::mt19937_64 rng(3);
    const std::u32string pool = U"天黑ab 12’x了";
    for (int k = 0; k < 300; ++k) {
        std::u32string s;
        for (int i = static_cast<int>(rng() % 12); i > 0; --i) s.push_back(pool[rng() % pool.size()]);
        const auto text = utf8::encode(s);
        std::string joined;
        const auto runs = split_script_runs(text);
        for (std::size_t i = 0; i < runs.size(); ++i) {
            joined += runs[i].text;
            if (i > 0) CHECK(runs[i].script != runs[i - 1].script);
        }
        CHECK(joined == text);
    }
}

TEST_CASE("fold_case") {
    CHECK(fold_case("Hello WORLD") == "hello world");
    CHECK(fold_case("ÀÉÎ Ŝ") == "àéî ŝ");
    CHECK(fold_case("天黑") == "天黑");
}

TEST_CASE("tokenize_zh_char") {
    const auto& chars = shipped_chars();
    auto seq = tokenize_zh_char("夫妇做豆腐", chars);
    CHECK(seq.size() == 5);
    for (const auto& t : seq.tokens) CHECK(t.kind == TokenKind::zh_char);
    CHECK(tokenize_zh_char("", chars).size() == 0);

    seq = tokenize_zh_char("了了了", chars);
    REQUIRE(seq.size() == 3);
    CHECK(seq.tokens[0].id == seq.tokens[1].id);
    CHECK(seq.tokens[1].id == seq.tokens[2].id);
    CHECK(seq.tokens[0].id > shipped_bpe().max_id());

    const CharVocab tiny({"天"}, 100);
    seq = tokenize_zh_char("天地", tiny);
    CHECK(seq.tokens[0].id == 100);
    CHECK(seq.tokens[1].id == kUnkId);
    CHECK(seq.tokens[1].surface == "地");
}

TEST_CASE("tokenize_zh_char: token count equals character count") {
    const auto& chars = shipped_chars();
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<char32_t> cp(0x4E00, 0x9FFF);
    std::uniform_int_distribution<int> len(0, 40);
    for (int k = 0; k < 2000; ++k) {
        std::u32string s;
        for (int i = len(rng); i > 0; --i) s.push_back(cp(rng));
        const auto seq = tokenize_zh_char(utf8::encode(s), chars);
        REQUIRE(seq.size() == s.size());
        for (std::size_t i = 0; i < s.size(); ++i) CHECK(seq.tokens[i].surface == utf8::encode(s[i]));
    }
}

TEST_CASE("BPE: toy merges") {
    const auto m = toy_model();
    CHECK(m.encode_word("he") == std::vector<std::string>{"he"});
    CHECK(m.encode_word("hello") == std::vector<std::string>{"hello"});
    CHECK(m.encode_word("hell") == std::vector<std::string>{"he", "ll"});

    const auto seq = tokenize_en_bpe("He", m);
    REQUIRE(seq.size() == 1);
    CHECK(seq.tokens[0].surface == "he");
    CHECK(seq.tokens[0].word_start);
    CHECK(seq.tokens[0].kind == TokenKind::en_bpe);

    const BpeModel empty_merges({{"x", 1}, {"y", 2}, {"z", 3}}, {});
    const auto xyz = tokenize_en_bpe("xyz", empty_merges);
    CHECK(xyz.size() == 3);
    CHECK(xyz.ids() == std::vector<int>{1, 2, 3});
    CHECK(xyz.tokens[0].word_start);
    CHECK_FALSE(xyz.tokens[1].word_start);

    const auto unk = tokenize_en_bpe("x7", empty_merges);
    CHECK(unk.tokens[1].id == kUnkId);
    CHECK(unk.tokens[1].surface == "7");
}

TEST_CASE("BPE: invalid models are rejected") {
    CHECK_THROWS_AS(BpeModel({{"a", 1}, {"b", 2}}, {{"a", "b"}}), ParseError);
    CHECK_THROWS_AS(BpeModel({{"a", 0}}, {}), ParseError);
}

TEST_CASE("tokenize: mixed text and detokenize") {
    const auto& bpe = shipped_bpe();
    const auto& chars = shipped_chars();
    const auto seq = tokenize("我爱 New York，真的！", chars, bpe);
    CHECK(seq.detokenize() == fold_case(strip_punctuation("我爱 New York，真的！")));
    std::size_t zh = 0;
    for (const auto& t : seq.tokens) zh += t.kind == TokenKind::zh_char;
    CHECK(zh == 4);

    const auto a = tokenize("the hobbits live in the Shire", chars, bpe);
    const auto b = tokenize("the hobbits live in the Shire", chars, bpe);
    CHECK(a.ids() == b.ids());
    CHECK(a.detokenize() == "the hobbits live in the shire");
    for (const auto& t : a.tokens) CHECK(t.id != kUnkId);
}
