#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <mutex>

#include "touchforge/chunk_mask.hpp"
#include "touchforge/corpus.hpp"
#include "touchforge/error.hpp"
#include "touchforge/g2p.hpp"
#include "touchforge/metrics.hpp"
#include "touchforge/packer.hpp"
#include "touchforge/pipeline.hpp"
#include "touchforge/rover.hpp"
#include "touchforge/stream.hpp"
#include "touchforge/text.hpp"
#include "touchforge/vad.hpp"

#define STRINGIFY(x) #x
#define MACRO_STRINGIFY(x) STRINGIFY(x)

namespace py = pybind11;
using namespace touchforge;

namespace {

struct Resources {
    g2p::G2pTables tables;
    text::BpeModel bpe;
    text::CharVocab chars;
};

// Bundled tables, loaded on first use from the data directory.
const Resources& resources() {
    static std::once_flag once;
    static std::unique_ptr<Resources> r;
    std::call_once(once, [] {
        const auto dir = pipeline::default_data_dir();
        auto res = std::make_unique<Resources>();
        res->tables = g2p::G2pTables::load(dir / "g2p" / "zh_pinyin.tsv", dir / "g2p" / "en_dict.tsv");
        res->bpe = text::BpeModel::load(dir / "bpe" / "vocab.tsv", dir / "bpe" / "merges.txt");
        res->chars = text::CharVocab::from_table_keys(dir / "g2p" / "zh_pinyin.tsv", res->bpe.max_id() + 1);
        r = std::move(res);
    });
    return *r;
}

py::object to_python(const nlohmann::ordered_json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

nlohmann::ordered_json from_python(const py::handle& obj) {
    return nlohmann::ordered_json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

py::dict counts_dict(const metrics::ErrorCounts& c) {
    py::dict d;
    d["sub"] = c.sub;
    d["del"] = c.del;
    d["ins"] = c.ins;
    d["ref_len"] = c.ref_len;
    return d;
}

py::dict scored_dict(const metrics::Scored& s) {
    auto d = counts_dict(s.counts);
    d["rate"] = s.rate;
    return d;
}

std::vector<std::vector<bool>> mask_rows(const mask::AttnMask& m) {
    std::vector<std::vector<bool>> rows(m.n(), std::vector<bool>(m.n()));
    for (std::size_t i = 0; i < m.n(); ++i)
        for (std::size_t j = 0; j < m.n(); ++j) rows[i][j] = m.at(i, j);
    return rows;
}

rover::RoverConfig rover_config(double wer_max, double per_max, const std::string& reference,
                                const std::string& rule) {
    rover::RoverConfig c;
    c.wer_max = wer_max;
    c.per_max = per_max;
    if (reference == "copilot") {
        c.reference_side = rover::ReferenceSide::copilot;
    } else if (reference != "asr") {
        throw ConfigError("reference must be 'asr' or 'copilot'");
    }
    if (rule == "any") {
        c.rule = rover::DropRule::any;
    } else if (rule != "all") {
        throw ConfigError("rule must be 'all' or 'any'");
    }
    c.validate();
    return c;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "touchforge core bindings";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<ConfigError>(m, "ConfigError", error.ptr());

    m.def("data_dir", [] { return pipeline::default_data_dir(); });

    m.def(
        "align",
        [](const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
            return counts_dict(metrics::align(ref, hyp));
        },
        py::arg("ref"), py::arg("hyp"), "Minimum edit alignment counts: sub, del, ins, ref_len.");
    m.def(
        "wer",
        [](const std::string& ref, const std::string& hyp, const std::string& lang) {
            return scored_dict(metrics::wer(ref, hyp, parse_lang(lang)));
        },
        py::arg("ref"), py::arg("hyp"), py::arg("lang") = "zh");
    m.def(
        "per",
        [](const std::string& ref, const std::string& hyp, const std::string& lang) {
            return scored_dict(metrics::per(ref, hyp, resources().tables, parse_lang(lang)));
        },
        py::arg("ref"), py::arg("hyp"), py::arg("lang") = "zh");
    m.def(
        "aggregate_seeds",
        [](const std::vector<std::tuple<long, long, long, long>>& counts) {
            std::vector<metrics::SeedResult> seeds;
            for (const auto& [s, d, i, n] : counts) seeds.push_back({static_cast<long>(seeds.size()), {s, d, i, n}});
            return metrics::aggregate_seeds(seeds);
        },
        py::arg("counts"), "Pooled rate over (sub, del, ins, ref_len) tuples, one per seed.");
    m.def(
        "sim_average",
        [](const std::vector<std::pair<std::vector<double>, std::vector<double>>>& pairs) {
            return metrics::sim_average(pairs);
        },
        py::arg("pairs"));

    m.def("strip_punctuation", [](const std::string& s) { return text::strip_punctuation(s); }, py::arg("text"));
    m.def(
        "split_script_runs",
        [](const std::string& s) {
            std::vector<std::pair<std::string, std::string>> out;
            for (const auto& r : text::split_script_runs(s)) out.emplace_back(r.text, std::string(text::to_string(r.script)));
            return out;
        },
        py::arg("text"));
    m.def(
        "tokenize",
        [](const std::string& s) {
            const auto& r = resources();
            py::list out;
            for (const auto& t : text::tokenize(s, r.chars, r.bpe).tokens) {
                py::dict d;
                d["id"] = t.id;
                d["surface"] = t.surface;
                d["kind"] = std::string(text::to_string(t.kind));
                out.append(d);
            }
            return out;
        },
        py::arg("text"));
    m.def(
        "to_phonemes",
        [](const std::string& s, const std::string& lang) {
            return g2p::to_phonemes(s, parse_lang(lang), resources().tables).phones;
        },
        py::arg("text"), py::arg("lang") = "zh");

    m.def(
        "should_drop",
        [](double wer, double per, double wer_max, double per_max, const std::string& rule) {
            return rover::should_drop(wer, per, rover_config(wer_max, per_max, "asr", rule));
        },
        py::arg("wer"), py::arg("per"), py::arg("wer_max") = 0.10, py::arg("per_max") = 0.05,
        py::arg("rule") = "all");
    m.def(
        "cross_validate",
        [](const std::string& asr_text, const std::string& copilot_text, const std::string& lang, double wer_max,
           double per_max, const std::string& reference, const std::string& rule) {
            Utterance u;
            u.id = "python";
            u.segment = {"python", 0.0, 1.0};
            u.lang = parse_lang(lang);
            u.text_asr = asr_text;
            u.text_copilot = copilot_text;
            const auto out =
                rover::cross_validate(u, rover_config(wer_max, per_max, reference, rule), resources().tables);
            py::dict d;
            d["cross_wer"] = *out.cross_wer;
            d["cross_per"] = *out.cross_per;
            d["keep"] = *out.keep;
            d["reason"] = out.reason ? py::cast(*out.reason) : py::none();
            return d;
        },
        py::arg("asr_text"), py::arg("copilot_text"), py::arg("lang") = "zh", py::arg("wer_max") = 0.10,
        py::arg("per_max") = 0.05, py::arg("reference") = "asr", py::arg("rule") = "all");

    m.def(
        "training_mask",
        [](const std::vector<std::size_t>& chunk_sizes, std::size_t history) {
            return mask_rows(mask::training_mask(mask::ChunkLayout(chunk_sizes), history));
        },
        py::arg("chunk_sizes"), py::arg("history") = 0);
    m.def(
        "inference_mask",
        [](const std::vector<std::size_t>& chunk_sizes, std::size_t current_chunk, std::size_t history) {
            return mask_rows(mask::inference_mask(mask::ChunkLayout(chunk_sizes), current_chunk, history));
        },
        py::arg("chunk_sizes"), py::arg("current_chunk"), py::arg("history") = 0);

    m.def(
        "parse_config",
        [](const std::string& s, double rate) {
            const auto c = stream::parse_config(s, rate);
            return std::make_tuple(c.first_chunk_tokens, c.chunk_tokens, c.overlap_tokens);
        },
        py::arg("text"), py::arg("token_rate") = 25.0, "Streaming config as (first, chunk, overlap) tokens.");
    m.def(
        "plan_chunks",
        [](std::size_t total, const std::string& config, double rate) {
            py::list out;
            for (const auto& c : stream::plan_chunks(total, stream::parse_config(config, rate))) {
                py::dict d;
                d["gen"] = std::make_pair(c.gen_start, c.gen_end);
                d["emit"] = std::make_pair(c.emit_start, c.emit_end);
                out.append(d);
            }
            return out;
        },
        py::arg("total"), py::arg("config") = "(1 2 5)", py::arg("token_rate") = 25.0);
    m.def(
        "crossfade",
        [](const std::vector<stream::Frame>& tail, const std::vector<stream::Frame>& head) {
            return stream::crossfade(tail, head, tail.size());
        },
        py::arg("tail"), py::arg("head"));
    m.def(
        "estimate_first_packet_latency",
        [](const std::filesystem::path& profile, std::size_t input_tokens, const std::string& config,
           const std::string& measured) {
            const auto term = measured.empty() ? stream::LlmTerm::analytic : stream::parse_llm_term(measured);
            return stream::estimate_first_packet_latency(stream::load_profile(profile), input_tokens,
                                                         stream::parse_config(config), term);
        },
        py::arg("profile"), py::arg("input_tokens") = 128, py::arg("config") = "(1 2 5)",
        py::arg("measured") = "");

    m.def(
        "pack_tts", [](std::size_t text, std::size_t audio) { return to_python(pack::pack_tts(text, audio).to_json()); },
        py::arg("text_tokens"), py::arg("audio_tokens"));
    m.def(
        "pack_asr",
        [](std::size_t frames, std::size_t text, bool continuous) {
            return to_python(pack::pack_asr(frames, text, continuous).to_json());
        },
        py::arg("feature_frames"), py::arg("text_tokens"), py::arg("use_continuous") = true);

    m.def(
        "segment_wav",
        [](const std::filesystem::path& path, double min_s, double max_s, double margin_db) {
            vad::VadConfig cfg;
            cfg.min_clip_s = min_s;
            cfg.max_clip_s = max_s;
            cfg.margin_db = margin_db;
            cfg.validate();
            std::vector<std::pair<double, double>> out;
            for (const auto& s : vad::segment_clip(read_wav(path), cfg, path.filename().string()))
                out.emplace_back(s.start_s, s.end_s);
            return out;
        },
        py::arg("path"), py::arg("min_s") = 2.0, py::arg("max_s") = 30.0, py::arg("margin_db") = 6.0);

    m.def(
        "read_manifest",
        [](const std::filesystem::path& path) {
            py::list out;
            for (const auto& u : read_manifest(path).records) out.append(to_python(to_json(u)));
            return out;
        },
        py::arg("path"));
    m.def(
        "write_manifest",
        [](const py::list& records, const std::filesystem::path& path) {
            Manifest mf;
            for (const auto& r : records) mf.records.push_back(utterance_from_json(from_python(r)));
            write_manifest(mf, path);
        },
        py::arg("records"), py::arg("path"));
    m.def(
        "run_pipeline",
        [](const std::map<std::string, std::string>& settings) {
            const auto cfg = pipeline::PipelineConfig::from_settings(settings);
            rover::RetentionReport report;
            {
                py::gil_scoped_release release;
                report = pipeline::run_pipeline(cfg);
            }
            return to_python(report.to_json());
        },
        py::arg("settings"), "Full pipeline from settings keys (input, manifest, report, asr_stub, ...).");

#ifdef VERSION_INFO
    m.attr("__version__") = MACRO_STRINGIFY(VERSION_INFO);
#else
    m.attr("__version__") = "dev";
#endif
}
