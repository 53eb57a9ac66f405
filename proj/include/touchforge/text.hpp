#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace touchforge::text {

// Reserved for characters and pieces missing from a vocabulary.
constexpr int kUnkId = 0;

enum class Script { cjk, latin, digit, other };
enum class TokenKind { zh_char, en_bpe };

std::string_view to_string(Script s);
std::string_view to_string(TokenKind k);

struct ScriptRun {
    std::string text;
    Script script;

    bool operator==(const ScriptRun&) const = default;
};

struct Token {
    int id = kUnkId;
    std::string surface;
    TokenKind kind = TokenKind::zh_char;
    // First piece of a whitespace-delimited Latin word.
    bool word_start = false;
    // Whitespace preceded this token in the normalized text.
    bool space_before = false;

    bool operator==(const Token&) const = default;
};

struct TokenSeq {
    std::vector<Token> tokens;

    std::size_t size() const { return tokens.size(); }
    std::vector<int> ids() const;
    // Rebuilds the normalized text the sequence was produced from.
    std::string detokenize() const;
};

bool is_cjk(char32_t cp);
bool is_latin_letter(char32_t cp);
bool is_digit(char32_t cp);
bool is_punctuation(char32_t cp);
bool is_space(char32_t cp);
Script classify(char32_t cp);

// Removes Unicode punctuation, keeps apostrophes inside Latin words, collapses
// whitespace and trims. Punctuation joining two Latin letters ("well-known")
// becomes a space so the words stay separate.
std::string strip_punctuation(std::string_view text);

// Maximal same-script runs; concatenating them restores the input.
std::vector<ScriptRun> split_script_runs(std::string_view text);

// Lowercases ASCII and Latin-1/Latin Extended-A letters.
std::string fold_case(std::string_view text);

// One id per Chinese character, in a range disjoint from the BPE vocabulary.
class CharVocab {
public:
    CharVocab() = default;
    CharVocab(const std::vector<std::string>& chars, int first_id);

    // Reads the first column of a tab-separated file (e.g. the pinyin table).
    static CharVocab from_table_keys(const std::filesystem::path& path, int first_id);

    int id(std::string_view ch) const;
    std::size_t size() const { return ids_.size(); }

private:
    std::unordered_map<std::string, int> ids_;
};

class BpeModel {
public:
    using Merge = std::pair<std::string, std::string>;

    BpeModel() = default;
    // Throws ParseError if a merge result is missing from the vocabulary.
    BpeModel(std::unordered_map<std::string, int> vocab, std::vector<Merge> merges);

    // vocab: surface<TAB>id per line; merges: "left right" per line, rank = line order.
    static BpeModel load(const std::filesystem::path& vocab_path, const std::filesystem::path& merges_path);

    int id(std::string_view piece) const;
    int max_id() const { return max_id_; }
    bool empty() const { return vocab_.empty(); }
    const std::vector<Merge>& merges() const { return merges_; }

    // Applies merges to one lowercased word, lowest rank first.
    std::vector<std::string> encode_word(std::string_view word) const;

private:
    std::unordered_map<std::string, int> vocab_;
    std::vector<Merge> merges_;
    std::map<Merge, std::size_t> ranks_;
    int max_id_ = kUnkId;
};

TokenSeq tokenize_zh_char(std::string_view run, const CharVocab& vocab);
TokenSeq tokenize_en_bpe(std::string_view run, const BpeModel& model);

// Strips punctuation, then routes CJK runs to the character tokenizer and
// everything else (Latin, digits) to BPE.
TokenSeq tokenize(std::string_view text, const CharVocab& chars, const BpeModel& bpe);

} // namespace touchforge::text
