// touchforge: corpus pipeline and streaming utilities.
//
// Exit codes: 0 success, 1 runtime failure, 2 configuration error.

#include <glob.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <regex>
#include <sstream>

#include <CLI11.hpp>

#include "touchforge/asr_client.hpp"
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

namespace fs = std::filesystem;
using namespace touchforge;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

fs::path data_path(const std::string& override_path, const fs::path& rel) {
    if (!override_path.empty()) return override_path;
    return pipeline::default_data_dir() / rel;
}

g2p::G2pTables load_tables(const std::string& zh, const std::string& en) {
    return g2p::G2pTables::load(data_path(zh, "g2p/zh_pinyin.tsv"), data_path(en, "g2p/en_dict.tsv"));
}

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    return lines;
}

// Either "id<TAB>text" lines keyed by id, or plain lines paired by position.
std::vector<std::pair<std::string, std::string>> pair_texts(const std::vector<std::string>& ref,
                                                            const std::vector<std::string>& hyp) {
    auto keyed = [](const std::vector<std::string>& lines) {
        return !lines.empty() && std::all_of(lines.begin(), lines.end(),
                                             [](const std::string& l) { return l.find('\t') != std::string::npos; });
    };
    std::vector<std::pair<std::string, std::string>> out;
    if (keyed(ref) && keyed(hyp)) {
        std::map<std::string, std::string> hyps;
        for (const auto& l : hyp) hyps[l.substr(0, l.find('\t'))] = l.substr(l.find('\t') + 1);
        for (const auto& l : ref) {
            const std::string id = l.substr(0, l.find('\t'));
            auto it = hyps.find(id);
            out.emplace_back(l.substr(l.find('\t') + 1), it == hyps.end() ? std::string() : it->second);
        }
        return out;
    }
    if (ref.size() != hyp.size())
        throw Error("reference has " + std::to_string(ref.size()) + " lines but hypothesis has " +
                    std::to_string(hyp.size()));
    for (std::size_t i = 0; i < ref.size(); ++i) out.emplace_back(ref[i], hyp[i]);
    return out;
}

std::vector<std::vector<double>> read_embeddings(const fs::path& path) {
    std::vector<std::vector<double>> out;
    for (const auto& line : read_lines(path)) {
        std::istringstream ss(line);
        std::vector<double> v;
        for (double x; ss >> x;) v.push_back(x);
        if (!ss.eof()) throw ParseError(path.string() + ": malformed embedding line");
        out.push_back(std::move(v));
    }
    return out;
}

nlohmann::ordered_json counts_json(const metrics::ErrorCounts& c) {
    nlohmann::ordered_json j;
    j["sub"] = c.sub;
    j["del"] = c.del;
    j["ins"] = c.ins;
    j["ref_len"] = c.ref_len;
    if (c.ref_len > 0) j["rate"] = c.rate();
    return j;
}

std::vector<std::string> expand_glob(const std::string& pattern) {
    glob_t g{};
    std::vector<std::string> out;
    if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
        for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
    }
    globfree(&g);
    std::sort(out.begin(), out.end());
    return out;
}

long seed_from_name(const std::string& path, long fallback) {
    static const std::regex digits("(\\d+)(?!.*\\d)");
    std::smatch m;
    const std::string name = fs::path(path).filename().string();
    if (std::regex_search(name, m, digits)) return std::stol(m[1]);
    return fallback;
}

void write_text(const std::string& path, const std::string& body) {
    if (path.empty() || path == "-") {
        std::cout << body;
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out << body;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"touchforge: TTS corpus pipeline, scoring and streaming utilities"};
    app.require_subcommand(1);

    // segment
    std::string seg_in, seg_out, seg_lang = "zh", seg_export;
    vad::VadConfig vcfg;
    unsigned seg_par = 1;
    auto* seg = app.add_subcommand("segment", "Cut WAV audio into 2-30 s clips with an energy VAD");
    seg->add_option("--in", seg_in, "WAV file or directory")->required();
    seg->add_option("--out", seg_out, "Output manifest")->required();
    seg->add_option("--frame-ms", vcfg.frame_ms);
    seg->add_option("--hop-ms", vcfg.hop_ms);
    seg->add_option("--margin-db", vcfg.margin_db);
    seg->add_option("--hangover-ms", vcfg.hangover_ms);
    seg->add_option("--merge-gap-ms", vcfg.merge_gap_ms);
    seg->add_option("--min-s", vcfg.min_clip_s);
    seg->add_option("--max-s", vcfg.max_clip_s);
    seg->add_option("--lang", seg_lang, "zh, en or mixed");
    seg->add_option("--parallelism", seg_par);
    seg->add_option("--export-dir", seg_export, "Also write each clip as a WAV file here");

    // transcribe
    std::string tr_in, tr_out, tr_root, tr_side = "asr", tr_url, tr_stub, tr_model;
    int tr_timeout = 30000, tr_retries = 2;
    unsigned tr_conc = 4;
    auto* tr = app.add_subcommand("transcribe", "Fill one transcript side from an ASR service or stub file");
    tr->add_option("--in", tr_in)->required();
    tr->add_option("--out", tr_out)->required();
    tr->add_option("--audio-root", tr_root, "Directory source_id paths are relative to")->required();
    tr->add_option("--side", tr_side, "asr or copilot")->check(CLI::IsMember({"asr", "copilot"}));
    tr->add_option("--url", tr_url, "Service base URL (default $TOUCHFORGE_ASR_URL)");
    tr->add_option("--stub", tr_stub, "id<TAB>text transcripts file");
    tr->add_option("--model", tr_model);
    tr->add_option("--timeout-ms", tr_timeout);
    tr->add_option("--retries", tr_retries);
    tr->add_option("--concurrency", tr_conc);

    // rover
    std::string rv_in, rv_out, rv_report, rv_zh, rv_en, rv_ref = "asr";
    rover::RoverConfig rcfg;
    bool rv_any = false, rv_all = false;
    unsigned rv_par = 1;
    auto* rv = app.add_subcommand("rover", "Cross-validate the two transcripts and filter the manifest");
    rv->add_option("--in", rv_in)->required();
    rv->add_option("--out", rv_out)->required();
    rv->add_option("--report", rv_report)->required();
    rv->add_option("--wer-max", rcfg.wer_max);
    rv->add_option("--per-max", rcfg.per_max);
    auto* any_flag = rv->add_flag("--any", rv_any, "Drop when either rate exceeds its threshold");
    auto* all_flag = rv->add_flag("--all", rv_all, "Drop only when both rates exceed (default)");
    any_flag->excludes(all_flag);
    rv->add_option("--reference", rv_ref)->check(CLI::IsMember({"asr", "copilot"}));
    rv->add_option("--zh-table", rv_zh);
    rv->add_option("--en-dict", rv_en);
    rv->add_option("--parallelism", rv_par);

    // tokenize
    std::string tk_text, tk_manifest, tk_vocab, tk_merges, tk_zh;
    auto* tk = app.add_subcommand("tokenize", "Character/BPE tokenization");
    auto* tk_text_opt = tk->add_option("--text", tk_text);
    auto* tk_man_opt = tk->add_option("--manifest", tk_manifest);
    tk_text_opt->excludes(tk_man_opt);
    tk->add_option("--bpe-vocab", tk_vocab);
    tk->add_option("--bpe-merges", tk_merges);
    tk->add_option("--zh-table", tk_zh, "Character list (first column) for zh ids");

    // g2p
    std::string gp_text, gp_lang = "zh", gp_zh, gp_en;
    auto* gp = app.add_subcommand("g2p", "Convert text to phonemes");
    gp->add_option("--text", gp_text)->required();
    gp->add_option("--lang", gp_lang);
    gp->add_option("--zh-table", gp_zh);
    gp->add_option("--en-dict", gp_en);

    // score
    std::string sc_ref, sc_hyp, sc_metric = "per", sc_lang = "zh", sc_glob, sc_zh, sc_en;
    auto* sc = app.add_subcommand("score", "WER/PER with S/D/I breakdown, multi-seed pooling, or speaker SIM");
    sc->add_option("--ref", sc_ref)->required();
    sc->add_option("--hyp", sc_hyp);
    sc->add_option("--metric", sc_metric)->check(CLI::IsMember({"wer", "per", "sim"}));
    sc->add_option("--lang", sc_lang);
    sc->add_option("--per-seed", sc_glob, "Glob of hypothesis files, one per seed");
    sc->add_option("--zh-table", sc_zh);
    sc->add_option("--en-dict", sc_en);

    // mask
    std::size_t mk_n = 0, mk_history = 0;
    std::string mk_chunk = "dynamic", mk_out;
    std::uint64_t mk_seed = 2024;
    long mk_current = -1;
    mask::MaskSchedule sched;
    auto* mk = app.add_subcommand("mask", "Export a dynamic-chunk attention mask");
    mk->add_option("--n", mk_n)->required();
    mk->add_option("--chunk", mk_chunk, "Chunk size in tokens, or 'dynamic'");
    mk->add_option("--history", mk_history, "History chunks (ignored with --chunk dynamic)");
    mk->add_option("--seed", mk_seed);
    mk->add_option("--current-chunk", mk_current, "Emit the inference mask up to this chunk");
    mk->add_option("--min-chunk", sched.min_chunk_tokens);
    mk->add_option("--full-prob", sched.full_sentence_prob);
    mk->add_option("--out", mk_out, "Output file (default stdout)");

    // stream-plan
    std::size_t sp_total = 0, sp_fpt = 2;
    std::string sp_config = "(1 2 5)";
    double sp_rate = 25.0;
    auto* sp = app.add_subcommand("stream-plan", "Plan streaming chunks with overlap");
    sp->add_option("--total", sp_total)->required();
    sp->add_option("--config", sp_config);
    sp->add_option("--rate", sp_rate);
    sp->add_option("--frames-per-token", sp_fpt);

    // latency
    std::string lt_profile, lt_config = "(1 2 5)", lt_measured;
    std::size_t lt_input = 128;
    double lt_rate = 25.0;
    auto* lt = app.add_subcommand("latency", "Estimate first-packet latency");
    lt->add_option("--profile", lt_profile)->required();
    lt->add_option("--input-tokens", lt_input);
    lt->add_option("--config", lt_config);
    lt->add_option("--rate", lt_rate);
    lt->add_option("--measured", lt_measured)->check(CLI::IsMember({"max", "avg", "p95"}));

    // pack
    std::string pk_task;
    std::size_t pk_text = 0, pk_speech = 0;
    bool pk_cont = false;
    auto* pk = app.add_subcommand("pack", "Lay out one TTS or ASR training sample");
    pk->add_option("--task", pk_task)->required()->check(CLI::IsMember({"tts", "asr"}));
    pk->add_option("--text-len", pk_text)->required();
    pk->add_option("--speech-len", pk_speech)->required();
    pk->add_flag("--continuous", pk_cont, "ASR input is continuous features");

    // report
    std::string rp_in, rp_out;
    auto* rp = app.add_subcommand("report", "Retention report for an annotated manifest");
    rp->add_option("--in", rp_in)->required();
    rp->add_option("--out", rp_out);

    // run
    std::string run_config;
    std::map<std::string, std::string> run_flags;
    auto* run = app.add_subcommand("run", "Full pipeline: segment, ASR, Copilot-ASR, rover");
    run->add_option("--config", run_config, "key = value settings file");
    for (const char* key : {"input", "manifest", "report", "lang", "parallelism", "asr-stub", "asr-url", "asr-model",
                            "copilot-stub", "copilot-url", "copilot-model", "wer-max", "per-max", "rule",
                            "reference-side", "zh-table", "en-dict", "min-s", "max-s", "margin-db"}) {
        std::string k = key;
        std::replace(k.begin(), k.end(), '-', '_');
        run->add_option_function<std::string>(std::string("--") + key,
                                              [&run_flags, k](const std::string& v) { run_flags[k] = v; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*seg) {
            const auto m = pipeline::segment_inputs(seg_in, vcfg, parse_lang(seg_lang), seg_par);
            write_manifest(m, seg_out);
            if (!seg_export.empty()) {
                const fs::path root = fs::is_regular_file(seg_in) ? fs::path(seg_in).parent_path() : fs::path(seg_in);
                fs::create_directories(seg_export);
                for (const auto& u : m.records) {
                    const AudioClip src = read_wav(root / u.segment.source_id);
                    const fs::path dst = fs::path(seg_export) / (u.id + ".wav");
                    fs::create_directories(dst.parent_path());
                    write_wav(src.slice(u.segment.start_s, u.segment.end_s), dst);
                }
            }
            std::cerr << "segment: " << m.records.size() << " clips\n";
        } else if (*tr) {
            std::unique_ptr<asr::Transcriber> backend;
            if (!tr_stub.empty()) {
                backend = std::make_unique<asr::StubTranscriber>(asr::StubTranscriber::load(tr_stub));
            } else {
                if (tr_url.empty()) tr_url = asr::default_asr_url().value_or("");
                if (tr_url.empty()) throw ConfigError("transcribe: give --url, --stub or set TOUCHFORGE_ASR_URL");
                backend = std::make_unique<asr::HttpTranscriber>(
                    asr::AsrEndpoint{tr_url, tr_model.empty() ? tr_side : tr_model, tr_timeout, tr_retries});
            }
            asr::BatchOptions opts;
            opts.side = tr_side == "asr" ? asr::Side::asr : asr::Side::copilot;
            opts.concurrency = tr_conc;
            const auto out = asr::transcribe_batch(*backend, read_manifest(tr_in), tr_root, opts);
            write_manifest(out, tr_out);
            std::size_t failed = 0;
            for (const auto& u : out.records) failed += u.reason.has_value() ? 1 : 0;
            std::cerr << "transcribe: " << out.records.size() << " records, " << failed << " with failures\n";
        } else if (*rv) {
            rcfg.rule = rv_any ? rover::DropRule::any : rover::DropRule::all;
            rcfg.reference_side = rv_ref == "asr" ? rover::ReferenceSide::asr : rover::ReferenceSide::copilot;
            rcfg.validate();
            const auto tables = load_tables(rv_zh, rv_en);
            auto [out, report] = rover::filter_manifest(read_manifest(rv_in), rcfg, tables, rv_par);
            write_manifest(out, rv_out);
            pipeline::write_report(report, rv_report);
            std::cerr << report.render_text();
        } else if (*tk) {
            text::BpeModel bpe = text::BpeModel::load(data_path(tk_vocab, "bpe/vocab.tsv"),
                                                      data_path(tk_merges, "bpe/merges.txt"));
            const auto chars =
                text::CharVocab::from_table_keys(data_path(tk_zh, "g2p/zh_pinyin.tsv"), bpe.max_id() + 1);
            auto emit = [](const text::TokenSeq& seq) {
                nlohmann::ordered_json arr = nlohmann::ordered_json::array();
                for (const auto& t : seq.tokens) {
                    arr.push_back({{"id", t.id}, {"surface", t.surface}, {"kind", std::string(text::to_string(t.kind))}});
                }
                return arr;
            };
            if (!tk_manifest.empty()) {
                for (const auto& u : read_manifest(tk_manifest).records) {
                    nlohmann::ordered_json j;
                    j["id"] = u.id;
                    j["tokens"] = emit(text::tokenize(u.text_asr.value_or(""), chars, bpe));
                    std::cout << j.dump() << '\n';
                }
            } else {
                std::cout << emit(text::tokenize(tk_text, chars, bpe)).dump() << '\n';
            }
        } else if (*gp) {
            const auto tables = load_tables(gp_zh, gp_en);
            const auto seq = g2p::to_phonemes(text::strip_punctuation(gp_text), parse_lang(gp_lang), tables);
            std::string line;
            for (const auto& p : seq.phones) line += (line.empty() ? "" : " ") + p;
            std::cout << line << '\n';
        } else if (*sc) {
            nlohmann::ordered_json out;
            out["metric"] = sc_metric;
            if (sc_metric == "sim") {
                if (sc_hyp.empty()) throw ConfigError("score: --metric sim needs --hyp");
                const auto a = read_embeddings(sc_ref);
                const auto b = read_embeddings(sc_hyp);
                if (a.size() != b.size()) throw Error("score: embedding files differ in line count");
                std::vector<std::pair<std::vector<double>, std::vector<double>>> pairs;
                for (std::size_t i = 0; i < a.size(); ++i) pairs.emplace_back(a[i], b[i]);
                out["pairs"] = pairs.size();
                out["sim"] = metrics::sim_average(pairs);
            } else {
                const Lang lang = parse_lang(sc_lang);
                std::optional<g2p::G2pTables> tables;
                if (sc_metric == "per") tables = load_tables(sc_zh, sc_en);
                const auto ref_lines = read_lines(sc_ref);
                auto score_file = [&](const std::string& hyp_path) {
                    metrics::ErrorCounts total;
                    for (const auto& [r, h] : pair_texts(ref_lines, read_lines(hyp_path))) {
                        const std::string rs = text::strip_punctuation(r), hs = text::strip_punctuation(h);
                        if (tables) {
                            total += metrics::align(g2p::to_phonemes(rs, lang, *tables).phones,
                                                    g2p::to_phonemes(hs, lang, *tables).phones);
                        } else {
                            total += metrics::align(metrics::wer_units(rs, lang), metrics::wer_units(hs, lang));
                        }
                    }
                    return total;
                };
                if (!sc_glob.empty()) {
                    const auto files = expand_glob(sc_glob);
                    if (files.empty()) throw Error("score: no files match " + sc_glob);
                    std::vector<metrics::SeedResult> seeds;
                    auto& per_seed = out["seeds"] = nlohmann::ordered_json::array();
                    for (std::size_t i = 0; i < files.size(); ++i) {
                        metrics::SeedResult r{seed_from_name(files[i], static_cast<long>(i)), score_file(files[i])};
                        auto j = counts_json(r.counts);
                        j["seed"] = r.seed;
                        j["file"] = files[i];
                        per_seed.push_back(j);
                        seeds.push_back(r);
                    }
                    out["rate"] = metrics::aggregate_seeds(seeds);
                } else {
                    if (sc_hyp.empty()) throw ConfigError("score: give --hyp or --per-seed");
                    const auto c = score_file(sc_hyp);
                    out.update(counts_json(c));
                    out["rate"] = c.rate();
                }
            }
            std::cout << out.dump(2) << '\n';
        } else if (*mk) {
            if (mk_n < 1) throw ConfigError("mask: --n must be >= 1");
            std::optional<mask::ChunkLayout> layout;
            std::size_t history = mk_history;
            if (mk_chunk == "dynamic") {
                std::mt19937_64 rng(mk_seed);
                auto s = mask::sample_layout(mk_n, sched, rng);
                layout = s.layout;
                history = s.history;
            } else {
                std::size_t c = 0;
                try {
                    c = std::stoul(mk_chunk);
                } catch (const std::exception&) {
                    throw ConfigError("mask: --chunk must be a token count or 'dynamic'");
                }
                if (c < 1) throw ConfigError("mask: --chunk must be >= 1");
                layout = mask::ChunkLayout::tiled(mk_n, c);
            }
            const std::size_t chunk = layout->chunk_sizes().front();
            const auto m = mk_current >= 0
                               ? mask::inference_mask(*layout, static_cast<std::size_t>(mk_current), history)
                               : mask::training_mask(*layout, history);
            write_text(mk_out, m.serialize(chunk, history));
        } else if (*sp) {
            const auto cfg = stream::parse_config(sp_config, sp_rate);
            nlohmann::ordered_json out;
            out["config"] = {{"first_chunk_tokens", cfg.first_chunk_tokens},
                             {"chunk_tokens", cfg.chunk_tokens},
                             {"overlap_tokens", cfg.overlap_tokens}};
            auto& chunks = out["chunks"] = nlohmann::ordered_json::array();
            for (const auto& c : stream::plan_chunks(sp_total, cfg)) {
                chunks.push_back({{"gen", {c.gen_start, c.gen_end}},
                                  {"emit", {c.emit_start, c.emit_end}},
                                  {"crossfade_frames", c.overlap() * sp_fpt}});
            }
            std::cout << out.dump(2) << '\n';
        } else if (*lt) {
            const auto profile = stream::load_profile(lt_profile);
            const auto cfg = stream::parse_config(lt_config, lt_rate);
            const auto term = lt_measured.empty() ? stream::LlmTerm::analytic : stream::parse_llm_term(lt_measured);
            const auto b = stream::first_packet_latency(profile, lt_input, cfg, term);
            nlohmann::ordered_json out;
            out["llm_ms"] = b.llm_ms;
            out["flow_ms"] = b.flow_ms;
            out["total_ms"] = b.total_ms();
            out["within_200ms"] = b.total_ms() < 200.0;
            std::cout << out.dump(2) << '\n';
        } else if (*pk) {
            const auto sample = pk_task == "tts" ? pack::pack_tts(pk_text, pk_speech)
                                                 : pack::pack_asr(pk_speech, pk_text, pk_cont);
            std::cout << sample.to_json().dump(2) << '\n';
        } else if (*rp) {
            const auto report = rover::compute_report(read_manifest(rp_in));
            write_text(rp_out, report.to_json().dump(2) + "\n");
            std::cerr << report.render_text();
        } else if (*run) {
            pipeline::Settings file;
            if (!run_config.empty()) file = pipeline::load_settings(run_config);
            const auto cfg = pipeline::PipelineConfig::from_settings(pipeline::resolve_settings(file, run_flags));
            const auto report = pipeline::run_pipeline(cfg, [](const std::string& msg) { std::cerr << msg << '\n'; });
            std::cout << report.render_text();
        }
    } catch (const ConfigError& e) {
        std::cerr << "touchforge: configuration error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "touchforge: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
