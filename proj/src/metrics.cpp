#include "touchforge/metrics.hpp"

#include <cassert>
#include <cmath>

#include "touchforge/error.hpp"
#include "touchforge/text.hpp"
#include "touchforge/utf8.hpp"

namespace touchforge::metrics {

double ErrorCounts::rate() const {
    if (ref_len <= 0) throw Error("empty reference: error rate undefined");
    return static_cast<double>(errors()) / static_cast<double>(ref_len);
}

ErrorCounts align(std::span<const std::string> ref, std::span<const std::string> hyp) {
    const std::size_t n = ref.size();
    const std::size_t m = hyp.size();
    const std::size_t w = m + 1;
    std::vector<unsigned> cost((n + 1) * w);
    for (std::size_t j = 0; j <= m; ++j) cost[j] = static_cast<unsigned>(j);
    for (std::size_t i = 1; i <= n; ++i) {
        cost[i * w] = static_cast<unsigned>(i);
        for (std::size_t j = 1; j <= m; ++j) {
            const unsigned diag = cost[(i - 1) * w + j - 1] + (ref[i - 1] == hyp[j - 1] ? 0u : 1u);
            const unsigned up = cost[(i - 1) * w + j] + 1;
            const unsigned left = cost[i * w + j - 1] + 1;
            cost[i * w + j] = std::min({diag, up, left});
        }
    }

    ErrorCounts c;
    c.ref_len = static_cast<long>(n);
    std::size_t i = n, j = m;
    while (i > 0 || j > 0) {
        const unsigned here = cost[i * w + j];
        if (i > 0 && j > 0) {
            const bool same = ref[i - 1] == hyp[j - 1];
            if (cost[(i - 1) * w + j - 1] + (same ? 0u : 1u) == here) {
                if (!same) ++c.sub;
                --i;
                --j;
                continue;
            }
        }
        if (i > 0 && cost[(i - 1) * w + j] + 1 == here) {
            ++c.del;
            --i;
            continue;
        }
        ++c.ins;
        --j;
    }
    assert(c.sub + c.del <= c.ref_len);
    return c;
}

std::vector<std::string> wer_units(std::string_view text, Lang lang) {
    std::vector<std::string> units;
    const std::u32string cps = utf8::decode(text);
    std::size_t i = 0;
    while (i < cps.size()) {
        if (text::is_space(cps[i])) {
            ++i;
            continue;
        }
        if (lang != Lang::en && text::is_cjk(cps[i])) {
            units.push_back(utf8::encode(cps[i]));
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < cps.size() && !text::is_space(cps[j]) && (lang == Lang::en || !text::is_cjk(cps[j]))) ++j;
        units.push_back(utf8::encode(std::u32string_view(cps).substr(i, j - i)));
        i = j;
    }
    return units;
}

Scored wer(std::string_view ref_text, std::string_view hyp_text, Lang lang) {
    const auto ref = wer_units(ref_text, lang);
    const auto hyp = wer_units(hyp_text, lang);
    const ErrorCounts c = align(ref, hyp);
    return {c, c.rate()};
}

Scored per(std::string_view ref_text, std::string_view hyp_text, const g2p::G2pTables& tables, Lang lang) {
    const auto ref = g2p::to_phonemes(ref_text, lang, tables);
    const auto hyp = g2p::to_phonemes(hyp_text, lang, tables);
    if (ref.phones.empty()) throw Error("empty phoneme reference: error rate undefined");
    const ErrorCounts c = align(ref.phones, hyp.phones);
    return {c, c.rate()};
}

double aggregate_seeds(std::span<const SeedResult> results) {
    if (results.empty()) throw Error("aggregate_seeds: no seed results");
    ErrorCounts total;
    for (const auto& r : results) {
        if (r.counts.ref_len <= 0) throw Error("aggregate_seeds: seed " + std::to_string(r.seed) + " has empty reference");
        total += r.counts;
    }
    return total.rate();
}

double cosine(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw Error("cosine: dimension mismatch (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        dot += a[k] * b[k];
        na += a[k] * a[k];
        nb += b[k] * b[k];
    }
    if (na == 0.0 || nb == 0.0) throw Error("cosine: zero-norm embedding");
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double sim_average(std::span<const std::pair<std::vector<double>, std::vector<double>>> pairs) {
    if (pairs.empty()) throw Error("sim_average: no embedding pairs");
    double sum = 0.0;
    for (const auto& [a, b] : pairs) sum += cosine(a, b);
    return sum / static_cast<double>(pairs.size());
}

} // namespace touchforge::metrics
