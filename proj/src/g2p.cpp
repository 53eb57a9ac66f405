#include "touchforge/g2p.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "touchforge/error.hpp"
#include "touchforge/text.hpp"
#include "touchforge/utf8.hpp"

namespace touchforge::g2p {

namespace {

std::string strip_tone(std::string reading) {
    std::string out;
    for (char c : reading) {
        if (!std::isdigit(static_cast<unsigned char>(c))) out.push_back(c);
    }
    return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(s);
    while (std::getline(ss, cur, sep)) {
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

} // namespace

void G2pTables::add_zh(std::string ch, std::vector<std::string> readings) {
    std::vector<std::string> clean;
    for (auto& r : readings) {
        auto t = strip_tone(std::move(r));
        if (t.empty()) throw ParseError("g2p: empty reading for '" + ch + "'");
        if (std::find(clean.begin(), clean.end(), t) == clean.end()) clean.push_back(std::move(t));
    }
    if (clean.empty()) throw ParseError("g2p: no readings for '" + ch + "'");
    zh_[std::move(ch)] = std::move(clean);
}

void G2pTables::add_en(std::string word, std::vector<std::string> phones) {
    if (phones.empty()) throw ParseError("g2p: empty pronunciation for '" + word + "'");
    en_[text::fold_case(word)] = std::move(phones);
}

G2pTables G2pTables::load(const std::filesystem::path& zh_table, const std::filesystem::path& en_dict) {
    G2pTables t;
    auto each_line = [](const std::filesystem::path& path, auto&& fn) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open g2p table " + path.string());
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            const auto tab = line.find('\t');
            if (tab == std::string::npos || tab == 0)
                throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected key<TAB>value");
            try {
                fn(line.substr(0, tab), line.substr(tab + 1));
            } catch (const ParseError& e) {
                throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
            }
        }
    };
    each_line(zh_table, [&](std::string key, const std::string& value) {
        if (utf8::length(key) != 1) throw ParseError("key must be a single character");
        t.add_zh(std::move(key), split(value, ','));
    });
    each_line(en_dict, [&](std::string key, const std::string& value) {
        std::vector<std::string> phones;
        for (auto& p : split(value, ' ')) {
            std::string up;
            for (char c : p) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
            phones.push_back(std::move(up));
        }
        t.add_en(std::move(key), std::move(phones));
    });
    return t;
}

const std::string* G2pTables::zh_reading(std::string_view ch) const {
    auto it = zh_.find(std::string(ch));
    return it == zh_.end() ? nullptr : &it->second.front();
}

const std::vector<std::string>* G2pTables::en_phones(std::string_view word) const {
    auto it = en_.find(std::string(word));
    return it == en_.end() ? nullptr : &it->second;
}

std::string letter_name(char32_t letter) {
    // Spelled-out letter names, chosen to avoid colliding with ARPAbet symbols.
    static const char* const kNames[26] = {"AYE", "BEE", "CEE", "DEE",   "EE",   "EF",  "GEE", "AITCH", "EYE",
                                           "JAY", "KAY", "EL",  "EM",    "EN",   "OH",  "PEE", "CUE",   "AR",
                                           "ESS", "TEE", "YOU", "VEE",   "DOUBLEU", "EX", "WYE", "ZED"};
    const char32_t folded = utf8::decode(text::fold_case(utf8::encode(letter))).front();
    if (folded >= 'a' && folded <= 'z') return kNames[folded - 'a'];
    if (folded >= '0' && folded <= '9') {
        static const char* const kDigits[10] = {"ZERO", "ONE", "TWO",   "THREE", "FOUR",
                                                "FIVE", "SIX", "SEVEN", "EIGHT", "NINE"};
        return kDigits[folded - '0'];
    }
    std::string up;
    for (char c : utf8::encode(folded)) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    return up;
}

PhonemeSeq zh_to_phonemes(std::string_view text, const G2pTables& tables) {
    PhonemeSeq seq{{}, Lang::zh};
    for (const auto& ch : utf8::chars(text)) {
        if (text::is_space(utf8::decode(ch).front())) continue;
        const std::string* r = tables.zh_reading(ch);
        seq.phones.emplace_back(r ? *r : std::string(kUnkPhone));
    }
    return seq;
}

namespace {

void append_word(std::string_view word, const G2pTables& tables, std::vector<std::string>& out) {
    const std::string folded = text::fold_case(word);
    if (const auto* phones = tables.en_phones(folded)) {
        out.insert(out.end(), phones->begin(), phones->end());
        return;
    }
    for (char32_t cp : utf8::decode(folded)) {
        if (cp == '\'') continue;
        out.push_back(letter_name(cp));
    }
}

} // namespace

PhonemeSeq en_to_phonemes(std::string_view text, const G2pTables& tables) {
    PhonemeSeq seq{{}, Lang::en};
    const std::u32string cps = utf8::decode(text);
    std::size_t i = 0;
    while (i < cps.size()) {
        if (text::is_space(cps[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < cps.size() && !text::is_space(cps[j])) ++j;
        append_word(utf8::encode(std::u32string_view(cps).substr(i, j - i)), tables, seq.phones);
        i = j;
    }
    return seq;
}

PhonemeSeq to_phonemes(std::string_view text, Lang lang, const G2pTables& tables) {
    switch (lang) {
    case Lang::zh: return zh_to_phonemes(text, tables);
    case Lang::en: return en_to_phonemes(text, tables);
    case Lang::mixed: break;
    }
    PhonemeSeq seq{{}, Lang::mixed};
    const std::u32string cps = utf8::decode(text);
    std::size_t i = 0;
    while (i < cps.size()) {
        std::size_t j = i;
        const bool cjk = text::is_cjk(cps[i]);
        while (j < cps.size() && text::is_cjk(cps[j]) == cjk) ++j;
        const std::string run = utf8::encode(std::u32string_view(cps).substr(i, j - i));
        auto part = cjk ? zh_to_phonemes(run, tables) : en_to_phonemes(run, tables);
        seq.phones.insert(seq.phones.end(), part.phones.begin(), part.phones.end());
        i = j;
    }
    return seq;
}

} // namespace touchforge::g2p
