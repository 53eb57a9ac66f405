#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "touchforge/corpus.hpp"

namespace touchforge::g2p {

// Phone emitted for Chinese characters missing from the pinyin table.
inline constexpr std::string_view kUnkPhone = "UNK";

struct PhonemeSeq {
    std::vector<std::string> phones;
    Lang lang = Lang::zh;

    bool operator==(const PhonemeSeq&) const = default;
};

class G2pTables {
public:
    G2pTables() = default;

    // zh: "字<TAB>reading1,reading2,..."; en: "word<TAB>PH1 PH2 ...".
    static G2pTables load(const std::filesystem::path& zh_table, const std::filesystem::path& en_dict);

    void add_zh(std::string ch, std::vector<std::string> readings);
    void add_en(std::string word, std::vector<std::string> phones);

    // First (default) toneless reading, or nullptr.
    const std::string* zh_reading(std::string_view ch) const;
    const std::vector<std::string>* en_phones(std::string_view lowercase_word) const;

    std::size_t zh_size() const { return zh_.size(); }
    std::size_t en_size() const { return en_.size(); }

private:
    std::unordered_map<std::string, std::vector<std::string>> zh_;
    std::unordered_map<std::string, std::vector<std::string>> en_;
};

// Phone used for a letter of an out-of-vocabulary word.
std::string letter_name(char32_t letter);

PhonemeSeq zh_to_phonemes(std::string_view text, const G2pTables& tables);
PhonemeSeq en_to_phonemes(std::string_view text, const G2pTables& tables);

// Mixed text: CJK runs through the pinyin table, the rest through the dictionary.
PhonemeSeq to_phonemes(std::string_view text, Lang lang, const G2pTables& tables);

} // namespace touchforge::g2p
