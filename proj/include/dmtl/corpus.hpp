#pragma once

#include "dmtl/affect_label.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace dmtl {

using Sentence = std::vector<std::string>;
using Document = std::vector<Sentence>;
using TokenId = std::int32_t;

struct DialoguePair {
    Sentence x;
    Sentence y;
    std::optional<AffectLabel> b;

    bool operator==(const DialoguePair&) const = default;
};

// Tables driving normalize_text. All keys and values are lowercase.
struct NormalizationRules {
    std::map<std::string, std::string> misspellings;
    std::map<std::string, Sentence> contractions;
    // Words that are never treated as proper nouns when capitalized mid-sentence.
    std::unordered_set<std::string> common_words;
    std::string proper_noun_token = "<name>";

    // Tables shipped under data/ and compiled into the library.
    static NormalizationRules bundled();

    // Throws UsageError when a key or value is not lowercase, or when a
    // misspelling correction is itself a misspelling key (normalization
    // would then not be idempotent).
    void validate() const;
};

// "wrong right" per line, '#' starts a comment.
std::map<std::string, std::string> parse_misspellings(std::istream& in);
// "contraction word word..." per line.
std::map<std::string, Sentence> parse_contractions(std::istream& in);
// One word per line.
std::unordered_set<std::string> parse_word_list(std::istream& in);

NormalizationRules load_rules(const std::filesystem::path& misspellings,
                              const std::filesystem::path& contractions,
                              const std::filesystem::path& common_words);

// Lowercases, strips punctuation, fixes misspellings, expands contractions and
// replaces capitalized non-initial unknown words with the proper-noun token.
// Returns an empty sentence when nothing survives; callers skip those lines.
Sentence normalize_text(std::string_view raw, const NormalizationRules& rules);

// Blank lines separate documents; lines that normalize to nothing are dropped.
std::vector<Document> read_documents(std::istream& in, const NormalizationRules& rules);

// Overlapping (line_i, line_i+1) pairs, never crossing a document boundary.
std::vector<DialoguePair> pair_consecutive(std::span<const Document> documents);

std::string join(const Sentence& sentence);
Sentence split_words(std::string_view text);

class Vocabulary {
public:
    static constexpr TokenId kPad = 0;
    static constexpr TokenId kSos = 1;
    static constexpr TokenId kEos = 2;
    static constexpr TokenId kUnk = 3;
    static constexpr TokenId kName = 4;
    static constexpr std::size_t kReserved = 5;

    // Reserved symbols only.
    Vocabulary();

    // Appends `words` after the reserved block in the given order.
    Vocabulary(std::span<const std::string> words, std::span<const std::uint64_t> counts);

    std::size_t size() const { return words_.size(); }
    bool contains(std::string_view word) const;
    TokenId id(std::string_view word) const;  // kUnk when absent
    const std::string& word(TokenId id) const;
    std::uint64_t count(TokenId id) const { return counts_.at(static_cast<std::size_t>(id)); }

    // Non-reserved words in id order.
    std::span<const std::string> regular_words() const;

    static bool is_reserved(std::string_view word);
    static std::span<const std::string> reserved_symbols();

private:
    std::vector<std::string> words_;
    std::vector<std::uint64_t> counts_;
    std::unordered_map<std::string, TokenId> index_;
};

// Keeps the most frequent words with count >= min_count, ties broken
// lexicographically. Counts tokens on both sides of every pair.
Vocabulary build_vocab(std::span<const DialoguePair> pairs, std::size_t max_size, std::uint64_t min_count);
Vocabulary build_vocab(std::span<const Document> documents, std::size_t max_size, std::uint64_t min_count);

// "word count" per line, ordered by id after the reserved block.
void write_vocab(std::ostream& out, const Vocabulary& vocab);
Vocabulary read_vocab(std::istream& in);

// [sos, w_1..w_k, eos] truncated to max_len with eos kept last.
std::vector<TokenId> encode(const Sentence& sentence, const Vocabulary& vocab, std::size_t max_len);
// Inverse of encode, dropping framing and padding symbols.
Sentence decode(std::span<const TokenId> ids, const Vocabulary& vocab);

// "x<TAB>y" or "x<TAB>y<TAB>label" per line.
void write_pairs(std::ostream& out, std::span<const DialoguePair> pairs);
std::vector<DialoguePair> read_pairs(std::istream& in);

}  // namespace dmtl
