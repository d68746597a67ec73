#include "doctest.h"

#include "dmtl/affect.hpp"
#include "dmtl/error.hpp"
#include "dmtl/synthetic.hpp"

#include <cmath>
#include <set>
#include <sstream>

using namespace dmtl;

TEST_CASE("synthetic corpus is deterministic per seed") {
    const auto a = generate_synthetic_corpus(1, 10);
    const auto b = generate_synthetic_corpus(1, 10);
    CHECK(a.pairs == b.pairs);
    CHECK(a.pairs.size() == 10);
    CHECK(generate_synthetic_corpus(2, 10).pairs != a.pairs);
    CHECK(generate_synthetic_corpus(1, 0).pairs.empty());
}

TEST_CASE("latent positive share tracks pos_fraction") {
    for (double target : {0.5, 0.3, 0.8}) {
        SyntheticConfig cfg;
        cfg.pos_fraction = target;
        const auto corpus = generate_synthetic_corpus(11, 10000, cfg);
        std::size_t positive = 0;
        for (const auto& t : corpus.truth) positive += t.latent == LatentClass::Positive;
        CHECK(std::abs(static_cast<double>(positive) / 10000.0 - target) <= 0.05);
    }
}

TEST_CASE("lexicon labels agree with the latent class whenever they fire") {
    const auto lex = AffectLexicon::bundled();
    const auto corpus = generate_synthetic_corpus(3, 2000);
    std::size_t labeled = 0;
    for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
        const AffectLabel label = label_sentence(corpus.pairs[i].x, lex);
        if (label == AffectLabel::Unlabeled) continue;
        ++labeled;
        const auto expected =
            corpus.truth[i].latent == LatentClass::Positive ? AffectLabel::Positive : AffectLabel::Negative;
        CHECK(label == expected);
    }
    // Some affect words sit outside the lexicon, so coverage is partial.
    CHECK(labeled > 1000);
    CHECK(labeled < 2000);
}

TEST_CASE("replies depend on the utterance frame only") {
    const auto corpus = generate_synthetic_corpus(5, 500);
    for (std::size_t i = 0; i < corpus.pairs.size(); ++i) {
        const auto& y = corpus.pairs[i].y;
        REQUIRE(y.size() == 4);
        // The topic noun is echoed in the reply and appears in the utterance.
        bool found = false;
        for (const auto& w : corpus.pairs[i].x) found |= w == y[3];
        CHECK(found);
    }
}

TEST_CASE("echo corpus repeats the utterance") {
    for (const auto& p : generate_echo_corpus(9, 50)) CHECK(p.x == p.y);
}

TEST_CASE("synthetic sessions") {
    const auto out = generate_synthetic_sessions(4);
    CHECK(out.sessions.size() == 40);
    std::set<std::string> groups, ids;
    for (std::size_t i = 0; i < out.sessions.size(); ++i) {
        const auto& s = out.sessions[i];
        groups.insert(s.group_id);
        ids.insert(s.session_id);
        CHECK(s.sentences.size() >= 8);
        CHECK(s.sentences.size() <= 16);
        for (const auto& behavior : synthetic_behaviors()) {
            REQUIRE(s.ratings.contains(behavior));
            CHECK(s.ratings.at(behavior) >= 1.0);
            CHECK(s.ratings.at(behavior) <= 9.0);
        }
        CHECK(std::abs(s.ratings.at("positivity") - (1.0 + 8.0 * out.propensity[i])) <= 2.5);
    }
    CHECK(groups.size() == 10);
    CHECK(ids.size() == 40);

    std::stringstream file;
    write_sessions(file, out.sessions);
    CHECK(read_sessions(file) == out.sessions);
}

TEST_CASE("emotion sessions cover four classes across speaker pairs") {
    const auto sessions = generate_emotion_sessions(8);
    CHECK(sessions.size() == 200);
    std::set<std::string> emotions, groups;
    for (const auto& s : sessions) {
        REQUIRE(s.emotion.has_value());
        emotions.insert(*s.emotion);
        groups.insert(s.group_id);
        CHECK(s.sentences.size() == 1);
    }
    CHECK(emotions.size() == 4);
    CHECK(groups.size() == 5);
}

TEST_CASE("session files reject bad ratings and duplicates") {
    std::istringstream bad_rating(R"({"session_id":"a","group_id":"g","sentences":["hi"],"ratings":{"x":12}})");
    CHECK_THROWS_AS(read_sessions(bad_rating), Error);
    std::istringstream dup(R"({"session_id":"a","group_id":"g","sentences":["hi"]}
{"session_id":"a","group_id":"g","sentences":["yo"]})");
    CHECK_THROWS_AS(read_sessions(dup), Error);
    std::istringstream broken("{not json");
    CHECK_THROWS_AS(read_sessions(broken), Error);
}

TEST_CASE("generator config validation") {
    SyntheticConfig cfg;
    cfg.pos_fraction = 1.5;
    CHECK_THROWS_AS(generate_synthetic_corpus(1, 3, cfg), UsageError);
    SessionConfig scfg;
    scfg.min_sentences = 0;
    CHECK_THROWS_AS(generate_synthetic_sessions(1, scfg), UsageError);
}
