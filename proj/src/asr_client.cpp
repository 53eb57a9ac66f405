#include "touchforge/asr_client.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <future>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace touchforge::asr {

ServiceError::ServiceError(int status, std::string body_snippet)
    : AsrError("asr service returned HTTP " + std::to_string(status) +
               (body_snippet.empty() ? std::string() : ": " + body_snippet)),
      status_(status),
      body_(std::move(body_snippet)) {}

void AsrEndpoint::validate() const {
    if (base_url.empty()) throw ConfigError("asr endpoint: base_url is empty");
    if (timeout_ms <= 0) throw ConfigError("asr endpoint: timeout_ms must be positive");
    if (max_retries < 0) throw ConfigError("asr endpoint: max_retries must be >= 0");
    if (backoff_ms < 0) throw ConfigError("asr endpoint: backoff_ms must be >= 0");
}

std::optional<std::string> default_asr_url() {
    const char* v = std::getenv(kAsrUrlEnv);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
}

std::string_view to_string(Side side) { return side == Side::asr ? "asr" : "copilot"; }

// ---- HTTP ----

HttpTranscriber::HttpTranscriber(AsrEndpoint endpoint) : endpoint_(std::move(endpoint)) {
    endpoint_.validate();
    std::string url = endpoint_.base_url;
    while (!url.empty() && url.back() == '/') url.pop_back();
    const auto scheme = url.find("://");
    const auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    if (path_start == std::string::npos) {
        host_ = url;
    } else {
        host_ = url.substr(0, path_start);
        path_ = url.substr(path_start);
    }
    path_ += "/transcribe";
}

namespace {

std::string snippet(const std::string& body) {
    constexpr std::size_t kMax = 200;
    return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

bool transient(int status) { return status >= 500 || status == 429 || status == 408; }

} // namespace

std::string HttpTranscriber::transcribe(const std::string& id, std::span<const std::uint8_t> wav) {
    httplib::Client client(host_);
    const auto secs = endpoint_.timeout_ms / 1000;
    const auto usecs = (endpoint_.timeout_ms % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    const httplib::MultipartFormDataItems items = {
        {"id", id, "", ""},
        {"model_name", endpoint_.model_name, "", ""},
        {"audio", std::string(reinterpret_cast<const char*>(wav.data()), wav.size()), id + ".wav", "audio/wav"},
    };

    std::string last_error;
    int last_status = 0;
    std::string last_body;
    for (int attempt = 0; attempt <= endpoint_.max_retries; ++attempt) {
        if (attempt > 0) {
            const auto delay = static_cast<long long>(endpoint_.backoff_ms) << std::min(attempt - 1, 16);
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
        auto res = client.Post(path_, items);
        if (!res) {
            last_status = 0;
            last_error = httplib::to_string(res.error());
            continue;
        }
        if (res->status >= 200 && res->status < 300) {
            try {
                const auto j = nlohmann::json::parse(res->body);
                return j.at("text").get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                throw ServiceError(res->status, "malformed response: " + snippet(res->body));
            }
        }
        last_status = res->status;
        last_body = snippet(res->body);
        if (!transient(res->status)) break;
    }
    if (last_status != 0) throw ServiceError(last_status, last_body);
    throw TransportError("asr request to " + host_ + path_ + " failed after " +
                         std::to_string(endpoint_.max_retries + 1) + " attempt(s): " + last_error);
}

std::string transcribe(const AsrEndpoint& endpoint, const std::string& id, std::span<const std::uint8_t> wav) {
    return HttpTranscriber(endpoint).transcribe(id, wav);
}

// ---- stub ----

StubTranscriber::StubTranscriber(std::map<std::string, std::string> transcripts)
    : transcripts_(std::move(transcripts)) {}

StubTranscriber StubTranscriber::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open stub transcripts " + path.string());
    std::map<std::string, std::string> m;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0)
            throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected id<TAB>text");
        m[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return StubTranscriber(std::move(m));
}

std::string StubTranscriber::transcribe(const std::string& id, std::span<const std::uint8_t>) {
    auto it = transcripts_.find(id);
    if (it == transcripts_.end()) throw UnknownUtterance(id);
    return it->second;
}

// ---- batch ----

namespace {

class SourceCache {
public:
    explicit SourceCache(std::filesystem::path root) : root_(std::move(root)) {}

    std::shared_ptr<const AudioClip> get(const std::string& source_id) {
        std::shared_future<std::shared_ptr<const AudioClip>> fut;
        std::promise<std::shared_ptr<const AudioClip>> promise;
        bool loader = false;
        {
            std::lock_guard lock(mu_);
            auto it = entries_.find(source_id);
            if (it == entries_.end()) {
                fut = promise.get_future().share();
                entries_.emplace(source_id, fut);
                loader = true;
            } else {
                fut = it->second;
            }
        }
        if (loader) {
            try {
                promise.set_value(std::make_shared<const AudioClip>(read_wav(root_ / source_id)));
            } catch (...) {
                promise.set_exception(std::current_exception());
            }
        }
        return fut.get();
    }

private:
    std::filesystem::path root_;
    std::mutex mu_;
    std::map<std::string, std::shared_future<std::shared_ptr<const AudioClip>>> entries_;
};

} // namespace

Manifest transcribe_batch(Transcriber& backend, const Manifest& manifest, const std::filesystem::path& audio_root,
                          const BatchOptions& options) {
    if (options.concurrency < 1) throw ConfigError("transcribe_batch: concurrency must be >= 1");
    Manifest out = manifest;
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < out.records.size(); ++i) {
        const auto& u = out.records[i];
        const auto& field = options.side == Side::asr ? u.text_asr : u.text_copilot;
        if (!field) todo.push_back(i);
    }
    if (todo.empty()) return out;

    SourceCache cache(audio_root);
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> done{0};
    auto work = [&] {
        for (std::size_t k = next++; k < todo.size(); k = next++) {
            Utterance& u = out.records[todo[k]];
            auto& field = options.side == Side::asr ? u.text_asr : u.text_copilot;
            try {
                const auto source = cache.get(u.segment.source_id);
                const auto wav = encode_wav_pcm16(source->slice(u.segment.start_s, u.segment.end_s));
                field = backend.transcribe(u.id, wav);
            } catch (const std::exception& e) {
                field = std::string();
                u.reason = std::string(to_string(options.side)) + " failed: " + e.what();
            }
            if (options.progress) options.progress(++done, todo.size());
        }
    };
    const auto workers = static_cast<unsigned>(std::min<std::size_t>(options.concurrency, todo.size()));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return out;
}

} // namespace touchforge::asr
