#pragma once

#include "dmtl/affect_label.hpp"
#include "dmtl/corpus.hpp"

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

namespace dmtl {

// Positive and negative affect word sets. Disjoint, lowercase, both non-empty.
struct AffectLexicon {
    std::unordered_set<std::string> positive;
    std::unordered_set<std::string> negative;

    static AffectLexicon bundled();
};

// Sections headed [positive] / [negative], one word per line, '#' comments.
// Throws Error naming the word when it appears under both headings, or when
// either section is empty.
AffectLexicon parse_lexicon(std::istream& in);
AffectLexicon load_lexicon(const std::filesystem::path& path);

// Majority of affect-word occurrences (with multiplicity); ties are Unlabeled.
AffectLabel label_sentence(const Sentence& sentence, const AffectLexicon& lexicon);

// Sets b = label_sentence(x) on every pair.
std::vector<DialoguePair> augment_dataset(std::span<const DialoguePair> pairs, const AffectLexicon& lexicon);

struct LabelStats {
    std::size_t positive = 0;
    std::size_t negative = 0;
    std::size_t unlabeled = 0;

    std::size_t total() const { return positive + negative + unlabeled; }
    double fraction(AffectLabel label) const;
    void add(AffectLabel label);
};

// Pairs without a label count as unlabeled.
LabelStats label_stats(std::span<const DialoguePair> pairs);

}  // namespace dmtl
