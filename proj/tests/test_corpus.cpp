#include "doctest.h"

#include "dmtl/corpus.hpp"
#include "dmtl/error.hpp"
#include "dmtl/rng.hpp"

#include <sstream>

using namespace dmtl;

namespace {

const NormalizationRules& rules() {
    static const NormalizationRules r = NormalizationRules::bundled();
    return r;
}

Sentence words(std::initializer_list<const char*> list) { return Sentence(list.begin(), list.end()); }

std::vector<DialoguePair> pairs_of(std::initializer_list<std::pair<Sentence, Sentence>> list) {
    std::vector<DialoguePair> out;
    for (const auto& [x, y] : list) out.push_back({x, y, std::nullopt});
    return out;
}

}  // namespace

TEST_CASE("normalize_text: contractions and punctuation") {
    CHECK(normalize_text("Don't go!", rules()) == words({"do", "not", "go"}));
    CHECK(normalize_text("  well,THAT's   it... ", rules()) == words({"well", "that", "is", "it"}));
}

TEST_CASE("normalize_text: misspellings") {
    NormalizationRules custom;
    custom.misspellings = {{"teh", "the"}};
    CHECK(normalize_text("teh dog", custom) == words({"the", "dog"}));
    // A misspelling that corrects to a contraction is expanded.
    CHECK(normalize_text("i dont know", rules()) == words({"i", "do", "not", "know"}));
}

TEST_CASE("normalize_text: proper nouns") {
    CHECK(normalize_text("I saw Marcus today", rules()) == words({"i", "saw", "<name>", "today"}));
    // Sentence-initial capitals are kept, also after a full stop.
    CHECK(normalize_text("Marcus left. Jenny stayed", rules()) == words({"marcus", "left", "jenny", "stayed"}));
    // Known words are not replaced when capitalized mid-sentence.
    CHECK(normalize_text("then I said Yes", rules()) == words({"then", "i", "said", "yes"}));
    // The reserved token passes through untouched.
    CHECK(normalize_text("hi <name>, bye", rules()) == words({"hi", "<name>", "bye"}));
}

TEST_CASE("normalize_text: nothing survives") {
    CHECK(normalize_text("", rules()).empty());
    CHECK(normalize_text("?! ... --", rules()).empty());
}

TEST_CASE("normalize_text: idempotent on its own output") {
    const std::vector<std::string> atoms = {
        "Don't", "dont", "teh", "Marcus", "I", "i'm", "We're", "hello", "HELLO", "o'clock", "dog's", "'quoted'",
        "wasn't", "x", "42", "Paris,", "well.", "ok!", "u", "ur", "Yes?", "y'all", "gonna", "<name>", "can't's",
        "do'nt", "'", "--", "Im"};
    Rng rng(7);
    for (int trial = 0; trial < 2000; ++trial) {
        std::string line;
        const auto n = 1 + rng.below(10);
        for (std::uint64_t i = 0; i < n; ++i) {
            if (i > 0) line += rng.bernoulli(0.8) ? " " : "";
            line += atoms[rng.below(atoms.size())];
        }
        const Sentence once = normalize_text(line, rules());
        const Sentence twice = normalize_text(join(once), rules());
        INFO("line: " << line);
        CHECK(once == twice);
        for (const auto& w : once) {
            if (Vocabulary::is_reserved(w)) continue;
            for (char c : w) CHECK_FALSE((c >= 'A' && c <= 'Z'));
        }
    }
}

TEST_CASE("rules validation rejects tables that break idempotence") {
    NormalizationRules bad;
    bad.misspellings = {{"teh", "hte"}, {"hte", "the"}};
    CHECK_THROWS_AS(bad.validate(), UsageError);
    NormalizationRules bad_expansion;
    bad_expansion.contractions = {{"can't", {"can't"}}};
    CHECK_THROWS_AS(bad_expansion.validate(), UsageError);
    CHECK_NOTHROW(rules().validate());
}

TEST_CASE("pair_consecutive") {
    const Sentence a = words({"a"}), b = words({"b"}), c = words({"c"}), d = words({"d"});
    SUBCASE("overlapping pairs within a document") {
        const std::vector<Document> docs{{a, b, c}};
        const auto pairs = pair_consecutive(docs);
        REQUIRE(pairs.size() == 2);
        CHECK(pairs[0] == DialoguePair{a, b, std::nullopt});
        CHECK(pairs[1] == DialoguePair{b, c, std::nullopt});
    }
    SUBCASE("too short") {
        const std::vector<Document> docs{{a}};
        CHECK(pair_consecutive(docs).empty());
    }
    SUBCASE("documents are not bridged") {
        const std::vector<Document> docs{{a, b}, {c, d}};
        const auto pairs = pair_consecutive(docs);
        REQUIRE(pairs.size() == 2);
        CHECK(pairs[0].x == a);
        CHECK(pairs[0].y == b);
        CHECK(pairs[1].x == c);
        CHECK(pairs[1].y == d);
    }
}

TEST_CASE("read_documents: blank lines split documents and empty lines vanish") {
    std::istringstream in("Hello there.\nHow are you?\n\n\n!!!\nFine.\nGood.\n");
    const auto docs = read_documents(in, rules());
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].size() == 2);
    CHECK(docs[1] == Document{words({"fine"}), words({"good"})});
    const auto pairs = pair_consecutive(docs);
    CHECK(pairs.size() == 2);
    // Every pair is two consecutive lines of one document.
    for (const auto& p : pairs) {
        bool found = false;
        for (const auto& doc : docs) {
            for (std::size_t i = 0; i + 1 < doc.size(); ++i) found |= doc[i] == p.x && doc[i + 1] == p.y;
        }
        CHECK(found);
    }
}

TEST_CASE("build_vocab") {
    SUBCASE("frequency and min_count") {
        // the x3, dog x2, cat x1 over the pair sides.
        const auto pairs = pairs_of({{words({"the", "dog"}), words({"the", "cat"})}, {words({"the"}), words({"dog"})}});
        const Vocabulary v = build_vocab(pairs, 7, 2);
        CHECK(v.size() == 7);
        CHECK(v.word(5) == "the");
        CHECK(v.word(6) == "dog");
        CHECK_FALSE(v.contains("cat"));
        CHECK(v.count(5) == 3);
    }
    SUBCASE("empty corpus keeps the reserved block") {
        const Vocabulary v = build_vocab(std::span<const DialoguePair>{}, 100, 1);
        CHECK(v.size() == Vocabulary::kReserved);
        CHECK(v.word(Vocabulary::kPad) == "<pad>");
        CHECK(v.word(Vocabulary::kSos) == "<s>");
        CHECK(v.word(Vocabulary::kEos) == "</s>");
        CHECK(v.word(Vocabulary::kUnk) == "<unk>");
        CHECK(v.word(Vocabulary::kName) == "<name>");
    }
    SUBCASE("ties break lexicographically") {
        const auto pairs = pairs_of({{words({"b", "a"}), words({"a", "b"})}});
        const Vocabulary v = build_vocab(pairs, 6, 1);
        CHECK(v.size() == 6);
        CHECK(v.word(5) == "a");
    }
    SUBCASE("reserved symbols are never counted twice") {
        const auto pairs = pairs_of({{words({"<name>", "hi"}), words({"<name>"})}});
        const Vocabulary v = build_vocab(pairs, 10, 1);
        CHECK(v.size() == 6);
        CHECK(v.id("<name>") == Vocabulary::kName);
    }
    CHECK_THROWS_AS(build_vocab(std::span<const DialoguePair>{}, 5, 1), UsageError);
}

TEST_CASE("vocabulary is a bijection and survives its file format") {
    Rng rng(3);
    std::vector<Document> docs(1);
    for (int i = 0; i < 200; ++i) {
        Sentence s;
        for (int k = 0; k < 6; ++k) s.push_back("w" + std::to_string(rng.below(120)));
        docs[0].push_back(s);
    }
    const Vocabulary v = build_vocab(docs, 64, 1);
    CHECK(v.size() == 64);
    for (std::size_t id = 0; id < v.size(); ++id) {
        CHECK(v.id(v.word(static_cast<TokenId>(id))) == static_cast<TokenId>(id));
    }
    std::stringstream file;
    write_vocab(file, v);
    const Vocabulary back = read_vocab(file);
    REQUIRE(back.size() == v.size());
    for (std::size_t id = 0; id < v.size(); ++id) {
        CHECK(back.word(static_cast<TokenId>(id)) == v.word(static_cast<TokenId>(id)));
        CHECK(back.count(static_cast<TokenId>(id)) == v.count(static_cast<TokenId>(id)));
    }
}

TEST_CASE("encode") {
    const std::vector<std::string> ws{"the", "dog"};
    const std::vector<std::uint64_t> cs{2, 1};
    const Vocabulary v(ws, cs);
    CHECK(encode(words({"the", "dog"}), v, 30) == std::vector<TokenId>{Vocabulary::kSos, 5, 6, Vocabulary::kEos});
    CHECK(encode(words({"zzz"}), v, 30) ==
          std::vector<TokenId>{Vocabulary::kSos, Vocabulary::kUnk, Vocabulary::kEos});
    const Sentence ten(10, "the");
    const auto ids = encode(ten, v, 5);
    CHECK(ids == std::vector<TokenId>{Vocabulary::kSos, 5, 5, 5, Vocabulary::kEos});
    CHECK_THROWS_AS(encode(ten, v, 2), UsageError);
}

TEST_CASE("decode inverts encode up to truncation and unknown words") {
    const std::vector<std::string> ws{"a", "b", "c", "d"};
    const std::vector<std::uint64_t> cs{4, 3, 2, 1};
    const Vocabulary v(ws, cs);
    Rng rng(5);
    const std::vector<std::string> pool{"a", "b", "c", "d", "oov1", "oov2"};
    for (int trial = 0; trial < 300; ++trial) {
        Sentence s;
        const auto n = 1 + rng.below(12);
        for (std::uint64_t i = 0; i < n; ++i) s.push_back(pool[rng.below(pool.size())]);
        const std::size_t max_len = 3 + rng.below(10);
        const Sentence back = decode(encode(s, v, max_len), v);
        REQUIRE(back.size() == std::min(s.size(), max_len - 2));
        for (std::size_t i = 0; i < back.size(); ++i) CHECK(back[i] == (v.contains(s[i]) ? s[i] : "<unk>"));
    }
}

TEST_CASE("pair files round-trip with and without labels") {
    std::vector<DialoguePair> pairs = pairs_of({{words({"hi", "there"}), words({"hello"})}});
    pairs.push_back({words({"i", "love", "it"}), words({"me", "too"}), AffectLabel::Positive});
    std::stringstream file;
    write_pairs(file, pairs);
    CHECK(file.str() == "hi there\thello\ni love it\tme too\tpositive\n");
    CHECK(read_pairs(file) == pairs);
    std::istringstream bad("only one field\n");
    CHECK_THROWS_AS(read_pairs(bad), Error);
}

TEST_CASE("bundled rules are the shipped data files") {
    const auto from_files = load_rules(DMTL_DATA_DIR "/misspellings.txt", DMTL_DATA_DIR "/contractions.txt",
                                       DMTL_DATA_DIR "/common_words.txt");
    CHECK(from_files.misspellings == rules().misspellings);
    CHECK(from_files.contractions == rules().contractions);
    CHECK(from_files.common_words == rules().common_words);
    CHECK_THROWS_AS(load_rules("/nonexistent/missp.txt", "", ""), UsageError);
}
