#include "dmtl/corpus.hpp"

#include "bundled_data.hpp"
#include "dmtl/error.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace dmtl {

namespace {

bool is_ascii_upper(char c) { return c >= 'A' && c <= 'Z'; }

char to_lower(char c) { return is_ascii_upper(c) ? static_cast<char>(c - 'A' + 'a') : c; }

std::string lowercase(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = to_lower(c);
    return out;
}

bool is_lowercase(std::string_view s) {
    return std::none_of(s.begin(), s.end(), is_ascii_upper);
}

bool is_word_char(char c) {
    const auto u = static_cast<unsigned char>(c);
    return (c >= 'a' && c <= 'z') || is_ascii_upper(c) || (c >= '0' && c <= '9') || c == '\'' || u >= 0x80;
}

bool ends_sentence(char c) { return c == '.' || c == '!' || c == '?'; }

// Strips a trailing '#' comment and surrounding whitespace.
std::string_view content_of(std::string_view line) {
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto first = line.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = line.find_last_not_of(" \t\r\n");
    return line.substr(first, last - first + 1);
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open input file: " + path.string());
    return in;
}

const std::array<std::string, Vocabulary::kReserved> kReservedSymbols = {
    "<pad>", "<s>", "</s>", "<unk>", "<name>"};

class Normalizer {
public:
    explicit Normalizer(const NormalizationRules& rules) : rules_(rules) {}

    void emit(std::string word, Sentence& out) const {
        if (auto m = rules_.misspellings.find(word); m != rules_.misspellings.end()) word = m->second;
        if (auto c = rules_.contractions.find(word); c != rules_.contractions.end()) {
            out.insert(out.end(), c->second.begin(), c->second.end());
            return;
        }
        std::string stripped;
        stripped.reserve(word.size());
        for (char ch : word) {
            if (ch != '\'') stripped.push_back(ch);
        }
        if (stripped.empty()) return;
        if (stripped != word) {
            emit(std::move(stripped), out);
        } else {
            out.push_back(std::move(stripped));
        }
    }

    bool is_known(const std::string& lower) const {
        std::string word = lower;
        if (auto m = rules_.misspellings.find(word); m != rules_.misspellings.end()) word = m->second;
        return rules_.common_words.contains(word) || rules_.contractions.contains(word);
    }

private:
    const NormalizationRules& rules_;
};

}  // namespace

std::string_view to_string(AffectLabel label) {
    switch (label) {
        case AffectLabel::Positive: return "positive";
        case AffectLabel::Negative: return "negative";
        case AffectLabel::Unlabeled: break;
    }
    return "unlabeled";
}

std::optional<AffectLabel> parse_affect_label(std::string_view text) {
    if (text == "positive") return AffectLabel::Positive;
    if (text == "negative") return AffectLabel::Negative;
    if (text == "unlabeled") return AffectLabel::Unlabeled;
    return std::nullopt;
}

std::map<std::string, std::string> parse_misspellings(std::istream& in) {
    std::map<std::string, std::string> table;
    std::string line;
    while (std::getline(in, line)) {
        const Sentence fields = split_words(content_of(line));
        if (fields.empty()) continue;
        if (fields.size() != 2) throw Error("misspelling entry needs exactly two words: " + line);
        table[fields[0]] = fields[1];
    }
    return table;
}

std::map<std::string, Sentence> parse_contractions(std::istream& in) {
    std::map<std::string, Sentence> table;
    std::string line;
    while (std::getline(in, line)) {
        Sentence fields = split_words(content_of(line));
        if (fields.empty()) continue;
        if (fields.size() < 2) throw Error("contraction entry needs an expansion: " + line);
        table[fields[0]] = Sentence(fields.begin() + 1, fields.end());
    }
    return table;
}

std::unordered_set<std::string> parse_word_list(std::istream& in) {
    std::unordered_set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
        const auto word = content_of(line);
        if (!word.empty()) words.emplace(word);
    }
    return words;
}

NormalizationRules NormalizationRules::bundled() {
    NormalizationRules rules;
    std::istringstream missp(bundled::kMisspellings);
    std::istringstream contr(bundled::kContractions);
    std::istringstream common(bundled::kCommonWords);
    rules.misspellings = parse_misspellings(missp);
    rules.contractions = parse_contractions(contr);
    rules.common_words = parse_word_list(common);
    rules.validate();
    return rules;
}

void NormalizationRules::validate() const {
    for (const auto& [wrong, right] : misspellings) {
        if (!is_lowercase(wrong) || !is_lowercase(right)) {
            throw UsageError("misspelling entries must be lowercase: " + wrong);
        }
        if (misspellings.contains(right)) {
            throw UsageError("misspelling correction is itself a misspelling: " + wrong + " -> " + right);
        }
    }
    for (const auto& [contraction, expansion] : contractions) {
        if (!is_lowercase(contraction)) throw UsageError("contraction must be lowercase: " + contraction);
        for (const auto& word : expansion) {
            if (!is_lowercase(word) || word.find('\'') != std::string::npos || misspellings.contains(word) ||
                contractions.contains(word)) {
                throw UsageError("contraction expansion is not a normalized word: " + contraction + " -> " + word);
            }
        }
    }
    for (const auto& word : common_words) {
        if (!is_lowercase(word)) throw UsageError("common word must be lowercase: " + word);
    }
}

NormalizationRules load_rules(const std::filesystem::path& misspellings,
                              const std::filesystem::path& contractions,
                              const std::filesystem::path& common_words) {
    NormalizationRules rules = NormalizationRules::bundled();
    if (!misspellings.empty()) {
        auto in = open_input(misspellings);
        rules.misspellings = parse_misspellings(in);
    }
    if (!contractions.empty()) {
        auto in = open_input(contractions);
        rules.contractions = parse_contractions(in);
    }
    if (!common_words.empty()) {
        auto in = open_input(common_words);
        rules.common_words = parse_word_list(in);
    }
    rules.validate();
    return rules;
}

Sentence normalize_text(std::string_view raw, const NormalizationRules& rules) {
    const Normalizer normalizer(rules);
    const std::string_view name = rules.proper_noun_token;
    Sentence out;
    bool sentence_start = true;
    std::size_t i = 0;
    while (i < raw.size()) {
        if (!name.empty() && raw.substr(i, name.size()) == name) {
            out.emplace_back(name);
            sentence_start = false;
            i += name.size();
            continue;
        }
        if (!is_word_char(raw[i])) {
            if (ends_sentence(raw[i])) sentence_start = true;
            ++i;
            continue;
        }
        std::size_t end = i;
        while (end < raw.size() && is_word_char(raw[end])) ++end;
        std::string_view piece = raw.substr(i, end - i);
        i = end;
        while (!piece.empty() && piece.front() == '\'') piece.remove_prefix(1);
        while (!piece.empty() && piece.back() == '\'') piece.remove_suffix(1);
        if (piece.empty()) continue;

        const bool capitalized = is_ascii_upper(piece.front());
        const bool initial = sentence_start;
        sentence_start = false;
        std::string lower = lowercase(piece);
        if (capitalized && !initial && !normalizer.is_known(lower)) {
            out.emplace_back(name);
            continue;
        }
        normalizer.emit(std::move(lower), out);
    }
    return out;
}

std::vector<Document> read_documents(std::istream& in, const NormalizationRules& rules) {
    std::vector<Document> documents;
    Document current;
    std::string line;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            if (!current.empty()) documents.push_back(std::move(current));
            current.clear();
            continue;
        }
        Sentence sentence = normalize_text(line, rules);
        if (!sentence.empty()) current.push_back(std::move(sentence));
    }
    if (!current.empty()) documents.push_back(std::move(current));
    return documents;
}

std::vector<DialoguePair> pair_consecutive(std::span<const Document> documents) {
    std::vector<DialoguePair> pairs;
    for (const auto& doc : documents) {
        for (std::size_t i = 0; i + 1 < doc.size(); ++i) {
            pairs.push_back(DialoguePair{doc[i], doc[i + 1], std::nullopt});
        }
    }
    return pairs;
}

std::string join(const Sentence& sentence) {
    std::string out;
    for (std::size_t i = 0; i < sentence.size(); ++i) {
        if (i > 0) out.push_back(' ');
        out += sentence[i];
    }
    return out;
}

Sentence split_words(std::string_view text) {
    Sentence words;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '\r' || text[i] == '\n')) ++i;
        std::size_t end = i;
        while (end < text.size() && text[end] != ' ' && text[end] != '\t' && text[end] != '\r' && text[end] != '\n') {
            ++end;
        }
        if (end > i) words.emplace_back(text.substr(i, end - i));
        i = end;
    }
    return words;
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

Vocabulary::Vocabulary() : Vocabulary(std::span<const std::string>{}, std::span<const std::uint64_t>{}) {}

Vocabulary::Vocabulary(std::span<const std::string> words, std::span<const std::uint64_t> counts) {
    if (words.size() != counts.size()) throw UsageError("vocabulary words and counts differ in length");
    for (const auto& symbol : kReservedSymbols) {
        index_.emplace(symbol, static_cast<TokenId>(words_.size()));
        words_.push_back(symbol);
        counts_.push_back(0);
    }
    for (std::size_t i = 0; i < words.size(); ++i) {
        const auto id = static_cast<TokenId>(words_.size());
        if (!index_.emplace(words[i], id).second) throw Error("duplicate vocabulary word: " + words[i]);
        words_.push_back(words[i]);
        counts_.push_back(counts[i]);
    }
}

bool Vocabulary::contains(std::string_view word) const { return index_.contains(std::string(word)); }

TokenId Vocabulary::id(std::string_view word) const {
    auto it = index_.find(std::string(word));
    return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::word(TokenId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= words_.size()) {
        throw UsageError("token id out of range: " + std::to_string(id));
    }
    return words_[static_cast<std::size_t>(id)];
}

std::span<const std::string> Vocabulary::regular_words() const {
    return std::span<const std::string>(words_).subspan(kReserved);
}

bool Vocabulary::is_reserved(std::string_view word) {
    return std::find(kReservedSymbols.begin(), kReservedSymbols.end(), word) != kReservedSymbols.end();
}

std::span<const std::string> Vocabulary::reserved_symbols() { return kReservedSymbols; }

namespace {

Vocabulary vocab_from_counts(const std::map<std::string, std::uint64_t>& counts, std::size_t max_size,
                             std::uint64_t min_count) {
    if (max_size <= Vocabulary::kReserved) {
        throw UsageError("max vocabulary size must exceed the " + std::to_string(Vocabulary::kReserved) +
                         " reserved symbols");
    }
    std::vector<std::pair<std::string, std::uint64_t>> ranked;
    for (const auto& [word, count] : counts) {
        if (count >= min_count && !Vocabulary::is_reserved(word)) ranked.emplace_back(word, count);
    }
    // std::map iteration is lexicographic, so a stable sort on count keeps ties in word order.
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    const std::size_t keep = std::min(ranked.size(), max_size - Vocabulary::kReserved);
    std::vector<std::string> words;
    std::vector<std::uint64_t> kept_counts;
    for (std::size_t i = 0; i < keep; ++i) {
        words.push_back(ranked[i].first);
        kept_counts.push_back(ranked[i].second);
    }
    return Vocabulary(words, kept_counts);
}

void count_into(const Sentence& sentence, std::map<std::string, std::uint64_t>& counts) {
    for (const auto& word : sentence) ++counts[word];
}

}  // namespace

Vocabulary build_vocab(std::span<const DialoguePair> pairs, std::size_t max_size, std::uint64_t min_count) {
    std::map<std::string, std::uint64_t> counts;
    for (const auto& pair : pairs) {
        count_into(pair.x, counts);
        count_into(pair.y, counts);
    }
    return vocab_from_counts(counts, max_size, min_count);
}

Vocabulary build_vocab(std::span<const Document> documents, std::size_t max_size, std::uint64_t min_count) {
    std::map<std::string, std::uint64_t> counts;
    for (const auto& doc : documents) {
        for (const auto& sentence : doc) count_into(sentence, counts);
    }
    return vocab_from_counts(counts, max_size, min_count);
}

void write_vocab(std::ostream& out, const Vocabulary& vocab) {
    for (std::size_t id = Vocabulary::kReserved; id < vocab.size(); ++id) {
        out << vocab.word(static_cast<TokenId>(id)) << ' ' << vocab.count(static_cast<TokenId>(id)) << '\n';
    }
}

Vocabulary read_vocab(std::istream& in) {
    std::vector<std::string> words;
    std::vector<std::uint64_t> counts;
    std::string line;
    while (std::getline(in, line)) {
        const Sentence fields = split_words(line);
        if (fields.empty()) continue;
        if (fields.size() != 2) throw Error("vocabulary line must be \"word count\": " + line);
        words.push_back(fields[0]);
        try {
            counts.push_back(std::stoull(fields[1]));
        } catch (const std::exception&) {
            throw Error("bad vocabulary count: " + line);
        }
    }
    return Vocabulary(words, counts);
}

std::vector<TokenId> encode(const Sentence& sentence, const Vocabulary& vocab, std::size_t max_len) {
    if (max_len < 3) throw UsageError("max_len must be at least 3");
    const std::size_t words = std::min(sentence.size(), max_len - 2);
    std::vector<TokenId> ids;
    ids.reserve(words + 2);
    ids.push_back(Vocabulary::kSos);
    for (std::size_t i = 0; i < words; ++i) ids.push_back(vocab.id(sentence[i]));
    ids.push_back(Vocabulary::kEos);
    return ids;
}

Sentence decode(std::span<const TokenId> ids, const Vocabulary& vocab) {
    Sentence out;
    for (TokenId id : ids) {
        if (id == Vocabulary::kSos || id == Vocabulary::kEos || id == Vocabulary::kPad) continue;
        out.push_back(vocab.word(id));
    }
    return out;
}

void write_pairs(std::ostream& out, std::span<const DialoguePair> pairs) {
    for (const auto& pair : pairs) {
        out << join(pair.x) << '\t' << join(pair.y);
        if (pair.b) out << '\t' << to_string(*pair.b);
        out << '\n';
    }
}

std::vector<DialoguePair> read_pairs(std::istream& in) {
    std::vector<DialoguePair> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string_view> fields;
        std::string_view rest = line;
        while (true) {
            const auto tab = rest.find('\t');
            fields.push_back(rest.substr(0, tab));
            if (tab == std::string_view::npos) break;
            rest.remove_prefix(tab + 1);
        }
        if (fields.size() < 2 || fields.size() > 3) {
            throw Error("pair line " + std::to_string(line_no) + " must have 2 or 3 tab-separated fields");
        }
        DialoguePair pair{split_words(fields[0]), split_words(fields[1]), std::nullopt};
        if (pair.x.empty() || pair.y.empty()) throw Error("empty sentence in pair line " + std::to_string(line_no));
        if (fields.size() == 3) {
            pair.b = parse_affect_label(fields[2]);
            if (!pair.b) throw Error("unknown affect label on pair line " + std::to_string(line_no));
        }
        pairs.push_back(std::move(pair));
    }
    return pairs;
}

}  // namespace dmtl
