#include "touchforge/text.hpp"

#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "touchforge/error.hpp"
#include "touchforge/utf8.hpp"

namespace touchforge::text {

std::string_view to_string(Script s) {
    switch (s) {
    case Script::cjk: return "cjk";
    case Script::latin: return "latin";
    case Script::digit: return "digit";
    case Script::other: return "other";
    }
    return "other";
}

std::string_view to_string(TokenKind k) { return k == TokenKind::zh_char ? "zh_char" : "en_bpe"; }

bool is_cjk(char32_t cp) {
    return (cp >= 0x3400 && cp <= 0x4DBF) || (cp >= 0x4E00 && cp <= 0x9FFF) || (cp >= 0xF900 && cp <= 0xFAFF) ||
           (cp >= 0x20000 && cp <= 0x2FA1F) || (cp >= 0x3040 && cp <= 0x309F) || (cp >= 0x30A1 && cp <= 0x30FA) ||
           cp == 0x3007;
}

bool is_latin_letter(char32_t cp) {
    return (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z') ||
           (cp >= 0xC0 && cp <= 0x24F && cp != 0xD7 && cp != 0xF7) || (cp >= 0x1E00 && cp <= 0x1EFF) ||
           (cp >= 0xFF21 && cp <= 0xFF3A) || (cp >= 0xFF41 && cp <= 0xFF5A);
}

bool is_digit(char32_t cp) { return (cp >= '0' && cp <= '9') || (cp >= 0xFF10 && cp <= 0xFF19); }

bool is_space(char32_t cp) {
    return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\v' || cp == '\f' || cp == 0xA0 ||
           cp == 0x3000 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x202F || cp == 0x205F;
}

namespace {

struct Range {
    char32_t lo, hi;
};

// Unicode general category P*, restricted to the blocks that occur in
// Chinese and English text.
constexpr Range kPunct[] = {
    {0x21, 0x23},     {0x25, 0x2A},     {0x2C, 0x2F},     {0x3A, 0x3B},     {0x3F, 0x40},
    {0x5B, 0x5D},     {0x5F, 0x5F},     {0x7B, 0x7B},     {0x7D, 0x7D},     {0xA1, 0xA1},
    {0xA7, 0xA7},     {0xAB, 0xAB},     {0xB6, 0xB7},     {0xBB, 0xBB},     {0xBF, 0xBF},
    {0x2010, 0x2027}, {0x2030, 0x2043}, {0x2045, 0x2051}, {0x2053, 0x205E}, {0x2E00, 0x2E4F},
    {0x3001, 0x3003}, {0x3008, 0x3011}, {0x3014, 0x301F}, {0x3030, 0x3030}, {0x303D, 0x303D},
    {0x30A0, 0x30A0}, {0x30FB, 0x30FB}, {0xFE10, 0xFE19}, {0xFE30, 0xFE52}, {0xFE54, 0xFE61},
    {0xFE63, 0xFE63}, {0xFE68, 0xFE68}, {0xFE6A, 0xFE6B}, {0xFF01, 0xFF03}, {0xFF05, 0xFF0A},
    {0xFF0C, 0xFF0F}, {0xFF1A, 0xFF1B}, {0xFF1F, 0xFF20}, {0xFF3B, 0xFF3D}, {0xFF3F, 0xFF3F},
    {0xFF5B, 0xFF5B}, {0xFF5D, 0xFF5D}, {0xFF5F, 0xFF65},
};

bool is_apostrophe(char32_t cp) { return cp == '\'' || cp == 0x2019; }

char32_t fold(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    if (cp >= 0xFF21 && cp <= 0xFF3A) return cp + 0x20;
    if ((cp >= 0x100 && cp <= 0x137) || (cp >= 0x14A && cp <= 0x177)) return (cp % 2 == 0) ? cp + 1 : cp;
    if ((cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E)) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp == 0x178) return 0xFF;
    return cp;
}

} // namespace

bool is_punctuation(char32_t cp) {
    for (const auto& r : kPunct) {
        if (cp >= r.lo && cp <= r.hi) return true;
    }
    return false;
}

Script classify(char32_t cp) {
    if (is_cjk(cp)) return Script::cjk;
    if (is_latin_letter(cp) || cp == '\'') return Script::latin;
    if (is_digit(cp)) return Script::digit;
    return Script::other;
}

std::string strip_punctuation(std::string_view text) {
    const std::u32string in = utf8::decode(text);
    std::u32string out;
    bool pending_space = false;
    auto emit = [&](char32_t cp) {
        if (pending_space && !out.empty()) out.push_back(' ');
        pending_space = false;
        out.push_back(cp);
    };
    for (std::size_t i = 0; i < in.size(); ++i) {
        const char32_t cp = in[i];
        if (is_space(cp)) {
            pending_space = true;
            continue;
        }
        const bool between_letters = !pending_space && !out.empty() && is_latin_letter(out.back()) &&
                                     i + 1 < in.size() && is_latin_letter(in[i + 1]);
        if (is_apostrophe(cp)) {
            if (between_letters) emit('\'');
            continue;
        }
        if (is_punctuation(cp)) {
            if (between_letters) pending_space = true;
            continue;
        }
        emit(cp);
    }
    return utf8::encode(out);
}

std::vector<ScriptRun> split_script_runs(std::string_view text) {
    std::vector<ScriptRun> runs;
    for (char32_t cp : utf8::decode(text)) {
        const Script s = classify(cp);
        if (runs.empty() || runs.back().script != s) runs.push_back({"", s});
        runs.back().text += utf8::encode(cp);
    }
    return runs;
}

std::string fold_case(std::string_view text) {
    std::u32string cps = utf8::decode(text);
    for (auto& cp : cps) cp = fold(cp);
    return utf8::encode(cps);
}

std::vector<int> TokenSeq::ids() const {
    std::vector<int> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) out.push_back(t.id);
    return out;
}

std::string TokenSeq::detokenize() const {
    std::string out;
    for (const auto& t : tokens) {
        if (t.space_before && !out.empty()) out += ' ';
        out += t.surface;
    }
    return out;
}

// ---- character vocabulary ----

CharVocab::CharVocab(const std::vector<std::string>& chars, int first_id) {
    int next = first_id;
    for (const auto& c : chars) {
        if (ids_.emplace(c, next).second) ++next;
    }
}

CharVocab CharVocab::from_table_keys(const std::filesystem::path& path, int first_id) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open character table " + path.string());
    std::vector<std::string> chars;
    std::string line;
    while (std::getline(in, line)) {
        const auto tab = line.find('\t');
        std::string key = line.substr(0, tab);
        if (key.empty() || key[0] == '#') continue;
        chars.push_back(std::move(key));
    }
    return CharVocab(chars, first_id);
}

int CharVocab::id(std::string_view ch) const {
    auto it = ids_.find(std::string(ch));
    return it == ids_.end() ? kUnkId : it->second;
}

// ---- BPE ----

BpeModel::BpeModel(std::unordered_map<std::string, int> vocab, std::vector<Merge> merges)
    : vocab_(std::move(vocab)), merges_(std::move(merges)) {
    for (const auto& [surface, id] : vocab_) {
        if (id == kUnkId) throw ParseError("bpe: id 0 is reserved for UNK ('" + surface + "')");
        max_id_ = std::max(max_id_, id);
    }
    for (std::size_t rank = 0; rank < merges_.size(); ++rank) {
        const auto& m = merges_[rank];
        if (!vocab_.count(m.first + m.second))
            throw ParseError("bpe: merge result '" + m.first + m.second + "' missing from vocabulary");
        ranks_.emplace(m, rank);
    }
}

BpeModel BpeModel::load(const std::filesystem::path& vocab_path, const std::filesystem::path& merges_path) {
    std::unordered_map<std::string, int> vocab;
    {
        std::ifstream in(vocab_path);
        if (!in) throw IoError("cannot open bpe vocabulary " + vocab_path.string());
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            const auto tab = line.rfind('\t');
            if (tab == std::string::npos || tab == 0)
                throw ParseError(vocab_path.string() + ":" + std::to_string(lineno) + ": expected surface<TAB>id");
            try {
                std::size_t used = 0;
                const std::string num = line.substr(tab + 1);
                const int id = std::stoi(num, &used);
                if (used != num.size()) throw std::invalid_argument(num);
                vocab[line.substr(0, tab)] = id;
            } catch (const std::exception&) {
                throw ParseError(vocab_path.string() + ":" + std::to_string(lineno) + ": bad id");
            }
        }
    }
    std::vector<Merge> merges;
    {
        std::ifstream in(merges_path);
        if (!in) throw IoError("cannot open bpe merges " + merges_path.string());
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            std::istringstream ss(line);
            std::string a, b, rest;
            if (!(ss >> a >> b) || (ss >> rest))
                throw ParseError(merges_path.string() + ":" + std::to_string(lineno) + ": expected 'left right'");
            merges.emplace_back(std::move(a), std::move(b));
        }
    }
    return BpeModel(std::move(vocab), std::move(merges));
}

int BpeModel::id(std::string_view piece) const {
    auto it = vocab_.find(std::string(piece));
    return it == vocab_.end() ? kUnkId : it->second;
}

std::vector<std::string> BpeModel::encode_word(std::string_view word) const {
    std::vector<std::string> pieces = utf8::chars(word);
    while (pieces.size() > 1) {
        std::size_t best_rank = std::numeric_limits<std::size_t>::max();
        std::optional<Merge> best;
        for (std::size_t i = 0; i + 1 < pieces.size(); ++i) {
            auto it = ranks_.find({pieces[i], pieces[i + 1]});
            if (it != ranks_.end() && it->second < best_rank) {
                best_rank = it->second;
                best = it->first;
            }
        }
        if (!best) break;
        std::vector<std::string> next;
        next.reserve(pieces.size());
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            if (i + 1 < pieces.size() && pieces[i] == best->first && pieces[i + 1] == best->second) {
                next.push_back(pieces[i] + pieces[i + 1]);
                ++i;
            } else {
                next.push_back(pieces[i]);
            }
        }
        pieces = std::move(next);
    }
    return pieces;
}

namespace {

// Tokenizes whitespace-separated words; returns whether the span ended in whitespace.
bool append_bpe(std::u32string_view span, const BpeModel& model, bool space_pending, TokenSeq& seq) {
    std::size_t i = 0;
    while (i < span.size()) {
        if (is_space(span[i])) {
            space_pending = true;
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < span.size() && !is_space(span[j])) ++j;
        const std::string word = fold_case(utf8::encode(span.substr(i, j - i)));
        bool first = true;
        for (auto& piece : model.encode_word(word)) {
            Token t;
            t.id = model.id(piece);
            t.surface = std::move(piece);
            t.kind = TokenKind::en_bpe;
            t.word_start = first;
            t.space_before = first && space_pending;
            seq.tokens.push_back(std::move(t));
            first = false;
        }
        space_pending = false;
        i = j;
    }
    return space_pending;
}

} // namespace

TokenSeq tokenize_zh_char(std::string_view run, const CharVocab& vocab) {
    TokenSeq seq;
    for (char32_t cp : utf8::decode(run)) {
        if (is_space(cp)) throw Error("tokenize_zh_char: run contains whitespace");
        Token t;
        t.surface = utf8::encode(cp);
        t.id = vocab.id(t.surface);
        t.kind = TokenKind::zh_char;
        seq.tokens.push_back(std::move(t));
    }
    return seq;
}

TokenSeq tokenize_en_bpe(std::string_view run, const BpeModel& model) {
    TokenSeq seq;
    const std::u32string cps = utf8::decode(run);
    append_bpe(cps, model, false, seq);
    return seq;
}

TokenSeq tokenize(std::string_view text, const CharVocab& chars, const BpeModel& bpe) {
    const std::u32string cps = utf8::decode(strip_punctuation(text));
    TokenSeq seq;
    bool space_pending = false;
    std::size_t i = 0;
    while (i < cps.size()) {
        if (is_cjk(cps[i])) {
            Token t;
            t.surface = utf8::encode(cps[i]);
            t.id = chars.id(t.surface);
            t.kind = TokenKind::zh_char;
            t.space_before = space_pending;
            seq.tokens.push_back(std::move(t));
            space_pending = false;
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < cps.size() && !is_cjk(cps[j])) ++j;
        space_pending = append_bpe(std::u32string_view(cps).substr(i, j - i), bpe, space_pending, seq);
        i = j;
    }
    return seq;
}

} // namespace touchforge::text
