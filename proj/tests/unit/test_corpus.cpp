#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "../support/fixtures.hpp"
#include "touchforge/corpus.hpp"
#include "touchforge/error.hpp"

using namespace touchforge;

namespace {

Utterance random_record(std::mt19937_64& rng, int i) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Utterance r;
    r.id = "utt-" + std::to_string(i);
    r.segment.source_id = "src/" + std::to_string(i % 7) + ".wav";
    r.segment.start_s = std::round(u(rng) * 1000.0) / 10.0;
    r.segment.end_s = r.segment.start_s + 2.0 + std::round(u(rng) * 280.0) / 10.0;
    r.lang = static_cast<Lang>(rng() % 3);
    if (rng() % 2) r.domain = "d" + std::to_string(rng() % 3);
    const int stage = static_cast<int>(rng() % 4);
    if (stage >= 1) r.text_asr = (rng() % 5 == 0) ? "" : "天黑了 \"quoted\" \\ " + std::to_string(i);
    if (stage >= 2) r.text_copilot = "天黑了 " + std::to_string(i);
    if (stage >= 3) {
        r.cross_wer = u(rng);
        r.cross_per = u(rng);
        r.keep = rng() % 2 == 0;
        if (!*r.keep) r.reason = "transcript-disagreement";
    }
    if (rng() % 4 == 0) r.extra["speaker"] = "spk" + std::to_string(i);
    return r;
}

} // namespace

TEST_CASE("manifest: empty file") {
    testing::TempDir dir("corpus");
    write_manifest(Manifest{}, dir / "m.jsonl");
    CHECK(std::filesystem::file_size(dir / "m.jsonl") == 0);
    CHECK(read_manifest(dir / "m.jsonl").records.empty());
}

TEST_CASE("manifest: round trip of random records") {
    std::mt19937_64 rng(99);
    Manifest m;
    for (int i = 0; i < 100; ++i) m.records.push_back(random_record(rng, i));
    testing::TempDir dir("corpus");
    write_manifest(m, dir / "m.jsonl");
    const auto back = read_manifest(dir / "m.jsonl");
    CHECK(back == m);
    write_manifest(back, dir / "m2.jsonl");
    std::ifstream a(dir / "m.jsonl"), b(dir / "m2.jsonl");
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    CHECK(sa.str() == sb.str());
}

TEST_CASE("manifest: file order and field order") {
    std::istringstream in(
        R"({"id":"b","source_id":"s.wav","start_s":0,"end_s":3,"lang":"zh"})" "\n"
        R"({"id":"a","source_id":"s.wav","start_s":3,"end_s":6,"lang":"en","custom":1})" "\n"
        R"({"lang":"mixed","id":"c","end_s":9,"start_s":6,"source_id":"s.wav"})" "\n");
    const auto m = parse_manifest(in);
    REQUIRE(m.records.size() == 3);
    CHECK(m.records[0].id == "b");
    CHECK(m.records[1].id == "a");
    CHECK(m.records[2].id == "c");
    CHECK(m.records[1].extra["custom"] == 1);
    const auto line = to_json(m.records[2]).dump();
    CHECK(line == R"({"id":"c","source_id":"s.wav","start_s":6.0,"end_s":9.0,"lang":"mixed"})");
    CHECK(to_json(m.records[1]).dump().find("\"custom\":1}") != std::string::npos);
}

TEST_CASE("manifest: errors name lines") {
    std::istringstream bad_order(
        R"({"id":"a","source_id":"s","start_s":0,"end_s":3,"lang":"zh"})" "\n"
        R"({"id":"b","source_id":"s","start_s":5,"end_s":3,"lang":"zh"})" "\n");
    CHECK_THROWS_WITH_AS(parse_manifest(bad_order), doctest::Contains("line 2"), ParseError);

    std::istringstream junk("{not json}\n");
    CHECK_THROWS_WITH_AS(parse_manifest(junk), doctest::Contains("line 1"), ParseError);

    std::istringstream dup(
        R"({"id":"a","source_id":"s","start_s":0,"end_s":3,"lang":"zh"})" "\n"
        R"({"id":"x","source_id":"s","start_s":0,"end_s":3,"lang":"zh"})" "\n"
        R"({"id":"a","source_id":"s","start_s":0,"end_s":3,"lang":"zh"})" "\n");
    CHECK_THROWS_WITH_AS(parse_manifest(dup), doctest::Contains("lines 1 and 3"), ParseError);

    std::istringstream keep_without_text(
        R"({"id":"a","source_id":"s","start_s":0,"end_s":3,"lang":"zh","keep":true,"cross_wer":0,"cross_per":0})" "\n");
    CHECK_THROWS_AS(parse_manifest(keep_without_text), ParseError);

    CHECK_THROWS_AS(read_manifest("/nonexistent/dir/m.jsonl"), IoError);
    CHECK_THROWS_AS(write_manifest(Manifest{}, "/nonexistent/dir/m.jsonl"), IoError);
}

TEST_CASE("wav: pcm16 round trip and float input") {
    AudioClip clip{"x", {0.0f, 0.5f, -0.5f, 1.0f, -1.0f}, 8000};
    const auto bytes = encode_wav_pcm16(clip);
    const auto back = decode_wav(bytes, "x");
    CHECK(back.sample_rate == 8000);
    REQUIRE(back.samples.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(back.samples[i] == doctest::Approx(clip.samples[i]).epsilon(1e-4));

    testing::TempDir dir("wav");
    write_wav(clip, dir / "a.wav");
    CHECK(read_wav(dir / "a.wav").samples.size() == 5);

    std::vector<std::uint8_t> garbage{'R', 'I', 'F', 'F', 0, 0};
    CHECK_THROWS_AS(decode_wav(garbage), ParseError);
}

TEST_CASE("AudioClip slice") {
    AudioClip clip{"x", std::vector<float>(16000, 0.25f), 16000};
    CHECK(clip.duration_s() == 1.0);
    CHECK(clip.slice(0.25, 0.5).samples.size() == 4000);
    CHECK(clip.slice(0.5, 5.0).samples.size() == 8000);
}
