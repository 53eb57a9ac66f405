#include "touchforge/rover.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <thread>

#include "touchforge/error.hpp"
#include "touchforge/metrics.hpp"
#include "touchforge/text.hpp"

namespace touchforge::rover {

void RoverConfig::validate() const {
    if (!(wer_max > 0.0 && wer_max <= 1.0)) throw ConfigError("rover: wer_max must lie in (0, 1]");
    if (!(per_max > 0.0 && per_max <= 1.0)) throw ConfigError("rover: per_max must lie in (0, 1]");
}

bool should_drop(double wer, double per, const RoverConfig& cfg) {
    const bool wer_bad = wer > cfg.wer_max;
    const bool per_bad = per > cfg.per_max;
    return cfg.rule == DropRule::all ? (wer_bad && per_bad) : (wer_bad || per_bad);
}

std::string normalize_transcript(std::string_view text) {
    return text::fold_case(text::strip_punctuation(text));
}

Utterance cross_validate(const Utterance& u, const RoverConfig& cfg, const g2p::G2pTables& tables) {
    if (!u.text_asr || !u.text_copilot) throw Error("rover: utterance '" + u.id + "' is missing a transcript");
    const bool asr_ref = cfg.reference_side == ReferenceSide::asr;
    const std::string ref = normalize_transcript(asr_ref ? *u.text_asr : *u.text_copilot);
    const std::string hyp = normalize_transcript(asr_ref ? *u.text_copilot : *u.text_asr);

    Utterance out = u;
    const auto ref_units = metrics::wer_units(ref, u.lang);
    const auto ref_phones = g2p::to_phonemes(ref, u.lang, tables);
    if (ref_units.empty() || ref_phones.phones.empty()) {
        out.cross_wer = 1.0;
        out.cross_per = 1.0;
        out.keep = false;
        if (!out.reason) out.reason = std::string(kReasonEmptyReference);
        return out;
    }
    const double wer = metrics::align(ref_units, metrics::wer_units(hyp, u.lang)).rate();
    const double per = metrics::align(ref_phones.phones, g2p::to_phonemes(hyp, u.lang, tables).phones).rate();
    out.cross_wer = std::min(wer, 1.0);
    out.cross_per = std::min(per, 1.0);
    out.keep = !should_drop(wer, per, cfg);
    if (*out.keep) {
        out.reason.reset();
    } else if (!out.reason) {
        out.reason = std::string(kReasonDisagreement);
    }
    return out;
}

std::optional<double> RetentionReport::retention() const {
    if (total == 0) return std::nullopt;
    return static_cast<double>(kept) / static_cast<double>(total);
}

namespace {

std::string percent(std::size_t kept, std::size_t total) {
    if (total == 0) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * static_cast<double>(kept) / static_cast<double>(total));
    return buf;
}

} // namespace

std::string RetentionReport::render_retention() const { return percent(kept, total); }

nlohmann::ordered_json RetentionReport::to_json() const {
    nlohmann::ordered_json j;
    j["total"] = total;
    j["kept"] = kept;
    if (auto r = retention()) {
        j["retention"] = *r;
    } else {
        j["retention"] = nullptr;
    }
    j["retention_pct"] = render_retention();
    auto& domains = j["per_domain"] = nlohmann::ordered_json::object();
    for (const auto& [name, c] : per_domain) {
        domains[name] = {{"total", c.total}, {"kept", c.kept}, {"retention_pct", percent(c.kept, c.total)}};
    }
    return j;
}

std::string RetentionReport::render_text() const {
    std::string out = "total " + std::to_string(total) + "  kept " + std::to_string(kept) + "  retention " +
                      render_retention() + "\n";
    for (const auto& [name, c] : per_domain) {
        out += "  " + name + ": " + std::to_string(c.kept) + "/" + std::to_string(c.total) + " (" +
               percent(c.kept, c.total) + ")\n";
    }
    return out;
}

RetentionReport compute_report(const Manifest& m) {
    RetentionReport r;
    for (const auto& u : m.records) {
        auto& d = r.per_domain[u.domain.value_or(kDefaultDomain)];
        ++r.total;
        ++d.total;
        if (u.keep.value_or(false)) {
            ++r.kept;
            ++d.kept;
        }
    }
    return r;
}

std::pair<Manifest, RetentionReport> filter_manifest(const Manifest& m, const RoverConfig& cfg,
                                                     const g2p::G2pTables& tables, unsigned threads) {
    cfg.validate();
    Manifest out;
    out.records.resize(m.records.size());
    auto process = [&](std::size_t i) {
        const Utterance& u = m.records[i];
        try {
            out.records[i] = cross_validate(u, cfg, tables);
        } catch (const std::exception& e) {
            Utterance d = u;
            d.keep.reset();
            d.cross_wer.reset();
            d.cross_per.reset();
            d.reason = (!u.text_asr || !u.text_copilot) ? std::string(kReasonMissingTranscript)
                                                        : std::string("error: ") + e.what();
            out.records[i] = std::move(d);
        }
    };
    const unsigned workers = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(m.records.size())));
    if (workers <= 1) {
        for (std::size_t i = 0; i < m.records.size(); ++i) process(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < m.records.size(); i = next++) process(i);
            });
        }
        for (auto& t : pool) t.join();
    }
    RetentionReport report = compute_report(out);
    return {std::move(out), std::move(report)};
}

} // namespace touchforge::rover
