#include <doctest.h>

#include <atomic>
#include <fstream>
#include <httplib.h>
#include <mutex>
#include <thread>

#include "../support/fixtures.hpp"
#include "touchforge/asr_client.hpp"
#include "touchforge/error.hpp"

using namespace touchforge;
using namespace touchforge::asr;

namespace {

// Local HTTP server on an ephemeral port, stopped on destruction.
class TestServer {
public:
    explicit TestServer(httplib::Server::Handler handler) {
        server_.Post("/v1/transcribe", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~TestServer() {
        server_.stop();
        thread_.join();
    }
    std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

AsrEndpoint endpoint(const std::string& url) {
    AsrEndpoint e;
    e.base_url = url;
    e.model_name = "whisper";
    e.timeout_ms = 5000;
    e.max_retries = 2;
    e.backoff_ms = 1;
    return e;
}

void reply_text(httplib::Response& res, const std::string& text) {
    res.set_content(nlohmann::json{{"text", text}}.dump(), "application/json");
}

Manifest records_for(const std::string& source, int n) {
    Manifest m;
    for (int i = 0; i < n; ++i) {
        Utterance u;
        u.id = "r" + std::to_string(i);
        u.segment = {source, 0.1 * i, 0.1 * i + 0.5};
        m.records.push_back(u);
    }
    return m;
}

} // namespace

TEST_CASE("stub transcriber") {
    StubTranscriber stub(std::map<std::string, std::string>{{"a", "天黑了"}});
    CHECK(stub.transcribe("a", {}) == "天黑了");
    CHECK_THROWS_WITH_AS(stub.transcribe("b", {}), doctest::Contains("unknown utterance"), UnknownUtterance);

    testing::TempDir dir("stub");
    std::ofstream(dir / "t.tsv") << "x\thello world\ny\t\n";
    auto loaded = StubTranscriber::load(dir / "t.tsv");
    CHECK(loaded.transcribe("x", {}) == "hello world");
    CHECK(loaded.transcribe("y", {}) == "");
}

TEST_CASE("http: retries transient failures") {
    std::atomic<int> calls{0};
    std::mutex mu;
    std::string seen_id, seen_model;
    std::size_t seen_audio = 0;
    TestServer server([&](const httplib::Request& req, httplib::Response& res) {
        if (++calls <= 2) {
            res.status = 500;
            res.set_content("busy", "text/plain");
            return;
        }
        std::lock_guard lock(mu);
        seen_id = req.get_file_value("id").content;
        seen_model = req.get_file_value("model_name").content;
        seen_audio = req.get_file_value("audio").content.size();
        reply_text(res, "天黑了");
    });
    HttpTranscriber client(endpoint(server.url()));
    const std::vector<std::uint8_t> wav(44, 0);
    CHECK(client.transcribe("utt-1", wav) == "天黑了");
    CHECK(calls == 3);
    CHECK(seen_id == "utt-1");
    CHECK(seen_model == "whisper");
    CHECK(seen_audio == 44);
}

TEST_CASE("http: retry budget exhausted and client errors") {
    std::atomic<int> calls{0};
    TestServer server([&](const httplib::Request& req, httplib::Response& res) {
        ++calls;
        if (req.get_file_value("id").content == "missing") {
            res.status = 404;
            res.set_content("no such model", "text/plain");
        } else {
            res.status = 503;
        }
    });
    HttpTranscriber client(endpoint(server.url()));
    try {
        client.transcribe("x", {});
        FAIL("expected ServiceError");
    } catch (const ServiceError& e) {
        CHECK(e.status() == 503);
    }
    CHECK(calls == 3);

    calls = 0;
    try {
        client.transcribe("missing", {});
        FAIL("expected ServiceError");
    } catch (const ServiceError& e) {
        CHECK(e.status() == 404);
        CHECK(e.body().find("no such model") != std::string::npos);
    }
    CHECK(calls == 1);
}

TEST_CASE("http: connection refused is a transport error") {
    auto e = endpoint("http://127.0.0.1:1");
    e.max_retries = 1;
    HttpTranscriber client(e);
    CHECK_THROWS_AS(client.transcribe("x", {}), TransportError);
}

TEST_CASE("endpoint validation") {
    AsrEndpoint e = endpoint("http://localhost:1");
    e.timeout_ms = 0;
    CHECK_THROWS_AS(e.validate(), ConfigError);
    e = endpoint("http://localhost:1");
    e.max_retries = -1;
    CHECK_THROWS_AS(e.validate(), ConfigError);
}

TEST_CASE("transcribe_batch: bounded concurrency, order, idempotent retries") {
    testing::TempDir dir("batch");
    write_wav(testing::synth_bursts("src", 2.0, {{0.2, 1.5}}), dir / "src.wav");

    std::atomic<int> in_flight{0}, peak{0}, calls{0};
    std::mutex mu;
    std::map<std::string, int> attempts;
    TestServer server([&](const httplib::Request& req, httplib::Response& res) {
        const int now = ++in_flight;
        int prev = peak.load();
        while (now > prev && !peak.compare_exchange_weak(prev, now)) {
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        --in_flight;
        ++calls;
        // Every other id fails its first attempt; the retried answer must be identical.
        const auto id = req.get_file_value("id").content;
        {
            std::lock_guard lock(mu);
            if (attempts[id]++ == 0 && (id.back() - '0') % 2 == 0) {
                res.status = 502;
                return;
            }
        }
        reply_text(res, "text " + id);
    });

    HttpTranscriber client(endpoint(server.url()));
    const auto m = records_for("src.wav", 10);
    BatchOptions opt;
    opt.concurrency = 3;
    std::atomic<std::size_t> progress_calls{0};
    opt.progress = [&](std::size_t, std::size_t total) {
        CHECK(total == 10);
        ++progress_calls;
    };
    const auto out = transcribe_batch(client, m, dir.path(), opt);
    REQUIRE(out.records.size() == 10);
    for (int i = 0; i < 10; ++i) {
        CHECK(out.records[i].id == "r" + std::to_string(i));
        CHECK(*out.records[i].text_asr == "text r" + std::to_string(i));
        CHECK_FALSE(out.records[i].reason.has_value());
    }
    CHECK(peak <= 3);
    CHECK(peak >= 1);
    CHECK(progress_calls == 10);
    CHECK(calls == 15);

    opt.side = Side::copilot;
    opt.concurrency = 1;
    peak = 0;
    const auto again = transcribe_batch(client, out, dir.path(), opt);
    CHECK(peak == 1);
    CHECK(calls == 25);
    for (const auto& r : again.records) CHECK(*r.text_copilot == *r.text_asr);
}

TEST_CASE("transcribe_batch: failures are recorded per record") {
    testing::TempDir dir("batch");
    write_wav(testing::synth_bursts("src", 2.0, {{0.2, 1.5}}), dir / "src.wav");
    StubTranscriber stub(std::map<std::string, std::string>{{"r0", "a"}, {"r1", "b"}, {"r2", "c"}, {"r3", "d"}, {"r4", "e"},
                          {"r5", "f"}, {"r6", "g"}, {"r7", "h"}, {"r8", "i"}, {"r9", "j"}});
    auto m = records_for("src.wav", 10);
    m.records[4].segment.source_id = "gone.wav";
    BatchOptions opt;
    opt.concurrency = 4;
    const auto out = transcribe_batch(stub, m, dir.path(), opt);
    std::size_t ok = 0;
    for (const auto& r : out.records) {
        if (r.reason) {
            CHECK(r.id == "r4");
            CHECK(*r.text_asr == "");
            CHECK(r.reason->find("asr failed") == 0);
        } else {
            ++ok;
        }
    }
    CHECK(ok == 9);

    CHECK(transcribe_batch(stub, Manifest{}, dir.path(), opt).records.empty());

    auto done = out;
    done.records[0].text_asr = "already";
    CHECK(transcribe_batch(stub, done, dir.path(), opt).records[0].text_asr == "already");
}
