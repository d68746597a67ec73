#include "dmtl/affect.hpp"

#include "bundled_data.hpp"
#include "dmtl/error.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace dmtl {

AffectLexicon AffectLexicon::bundled() {
    std::istringstream in(bundled::kLexicon);
    return parse_lexicon(in);
}

AffectLexicon parse_lexicon(std::istream& in) {
    AffectLexicon lexicon;
    std::unordered_set<std::string>* section = nullptr;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        const Sentence fields = split_words(line);
        if (fields.empty()) continue;
        if (fields.size() != 1) throw Error("lexicon line " + std::to_string(line_no) + " must hold one word");
        const std::string& word = fields.front();
        if (word == "[positive]") {
            section = &lexicon.positive;
        } else if (word == "[negative]") {
            section = &lexicon.negative;
        } else if (section == nullptr) {
            throw Error("lexicon word before any [positive]/[negative] heading: " + word);
        } else {
            std::string lower = word;
            for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            section->insert(std::move(lower));
        }
    }
    if (lexicon.positive.empty()) throw Error("lexicon has no positive words");
    if (lexicon.negative.empty()) throw Error("lexicon has no negative words");
    for (const auto& word : lexicon.positive) {
        if (lexicon.negative.contains(word)) throw Error("lexicon word listed as both positive and negative: " + word);
    }
    return lexicon;
}

AffectLexicon load_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open input file: " + path.string());
    return parse_lexicon(in);
}

AffectLabel label_sentence(const Sentence& sentence, const AffectLexicon& lexicon) {
    long balance = 0;
    for (const auto& word : sentence) {
        if (lexicon.positive.contains(word)) {
            ++balance;
        } else if (lexicon.negative.contains(word)) {
            --balance;
        }
    }
    if (balance > 0) return AffectLabel::Positive;
    if (balance < 0) return AffectLabel::Negative;
    return AffectLabel::Unlabeled;
}

std::vector<DialoguePair> augment_dataset(std::span<const DialoguePair> pairs, const AffectLexicon& lexicon) {
    std::vector<DialoguePair> out(pairs.begin(), pairs.end());
    for (auto& pair : out) pair.b = label_sentence(pair.x, lexicon);
    return out;
}

double LabelStats::fraction(AffectLabel label) const {
    if (total() == 0) return 0.0;
    const std::size_t n = label == AffectLabel::Positive   ? positive
                          : label == AffectLabel::Negative ? negative
                                                           : unlabeled;
    return static_cast<double>(n) / static_cast<double>(total());
}

void LabelStats::add(AffectLabel label) {
    switch (label) {
        case AffectLabel::Positive: ++positive; break;
        case AffectLabel::Negative: ++negative; break;
        case AffectLabel::Unlabeled: ++unlabeled; break;
    }
}

LabelStats label_stats(std::span<const DialoguePair> pairs) {
    LabelStats stats;
    for (const auto& pair : pairs) stats.add(pair.b.value_or(AffectLabel::Unlabeled));
    return stats;
}

}  // namespace dmtl
