#include "dmtl/synthetic.hpp"

#include "dmtl/error.hpp"
#include "dmtl/rng.hpp"

#include <algorithm>
#include <array>
#include <cstdio>

namespace dmtl {

namespace {

struct Topic {
    const char* noun;
    std::array<const char*, 2> verbs;
};

constexpr std::array<Topic, 8> kTopics{{
    {"dog", {"walked", "fed"}},
    {"car", {"drove", "washed"}},
    {"house", {"cleaned", "painted"}},
    {"dinner", {"cooked", "ate"}},
    {"movie", {"watched", "rented"}},
    {"book", {"read", "bought"}},
    {"garden", {"watered", "planted"}},
    {"phone", {"fixed", "dropped"}},
}};

// The reply opener depends on which verb slot the utterance used.
constexpr std::array<std::array<const char*, 2>, 2> kReplyOpeners{{{"how", "is"}, {"what", "about"}}};

constexpr std::array<const char*, 4> kSubjects{"i", "we", "you", "they"};

constexpr std::array<const char*, 12> kFillers{"well",  "really", "just",  "maybe", "actually", "yesterday",
                                               "again", "today",  "still", "also",  "though",   "anyway"};

constexpr std::array<const char*, 8> kPositiveLexicon{"love",  "nice", "sweet",     "happy",
                                                      "great", "good", "wonderful", "lovely"};
constexpr std::array<const char*, 6> kPositiveOther{"sunny", "bright", "cheerful", "warm", "merry", "peachy"};
constexpr std::array<const char*, 8> kNegativeLexicon{"hate", "nasty", "sad",      "awful",
                                                      "terrible", "bad", "horrible", "ugly"};
constexpr std::array<const char*, 6> kNegativeOther{"gloomy", "grim", "bleak", "cold", "dreary", "sour"};

// Emotion pools, indexed like synthetic_emotions(); neutral has none.
constexpr std::array<const char*, 7> kHappy{"happy", "glad", "smile", "laugh", "cheerful", "sunny", "joy"};
constexpr std::array<const char*, 7> kAngry{"angry", "mad", "annoyed", "furious", "fight", "hate", "bitter"};
constexpr std::array<const char*, 7> kSad{"sad", "cry", "lonely", "miserable", "gloomy", "lost", "tired"};

template <std::size_t N>
const char* draw(Rng& rng, const std::array<const char*, N>& pool) {
    return pool[rng.below(N)];
}

std::size_t draw_count(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.below(hi - lo + 1); }

void insert_fillers(Rng& rng, Sentence& s, std::size_t max_fillers) {
    const std::size_t n = draw_count(rng, 0, max_fillers);
    for (std::size_t i = 0; i < n; ++i) {
        const auto pos = rng.below(s.size() + 1);
        s.insert(s.begin() + static_cast<std::ptrdiff_t>(pos), draw(rng, kFillers));
    }
}

struct Utterance {
    Sentence words;
    Sentence reply;
    SyntheticPairInfo info;
};

Utterance make_utterance(Rng& rng, const SyntheticConfig& cfg, bool positive) {
    Utterance u;
    u.info.topic = rng.below(kTopics.size());
    u.info.latent = positive ? LatentClass::Positive : LatentClass::Negative;
    const Topic& topic = kTopics[u.info.topic];
    const std::size_t slot = rng.below(2);
    u.words = {draw(rng, kSubjects), topic.verbs[slot], "the", topic.noun};
    insert_fillers(rng, u.words, cfg.max_fillers);
    u.info.affective = rng.bernoulli(cfg.affect_rate);
    if (u.info.affective) {
        const std::size_t n = draw_count(rng, cfg.min_affect_words, cfg.max_affect_words);
        for (std::size_t i = 0; i < n; ++i) {
            const bool from_lexicon = rng.bernoulli(cfg.lexicon_overlap);
            const char* w = positive ? (from_lexicon ? draw(rng, kPositiveLexicon) : draw(rng, kPositiveOther))
                                     : (from_lexicon ? draw(rng, kNegativeLexicon) : draw(rng, kNegativeOther));
            u.words.push_back("so");
            u.words.push_back(w);
        }
    }
    u.reply = {kReplyOpeners[slot][0], kReplyOpeners[slot][1], "the", topic.noun};
    return u;
}

std::string padded(std::size_t value, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%0*zu", width, value);
    return buf;
}

}  // namespace

void SyntheticConfig::validate() const {
    auto probability = [](double p, const char* name) {
        if (!(p >= 0.0 && p <= 1.0)) throw UsageError(std::string(name) + " must lie in [0, 1]");
    };
    probability(pos_fraction, "pos_fraction");
    probability(affect_rate, "affect_rate");
    probability(lexicon_overlap, "lexicon_overlap");
    if (min_affect_words == 0 || min_affect_words > max_affect_words) {
        throw UsageError("affect word counts need 1 <= min <= max");
    }
}

SyntheticCorpus generate_synthetic_corpus(std::uint64_t seed, std::size_t n_pairs, const SyntheticConfig& config) {
    config.validate();
    Rng rng(seed);
    SyntheticCorpus corpus;
    corpus.pairs.reserve(n_pairs);
    corpus.truth.reserve(n_pairs);
    for (std::size_t i = 0; i < n_pairs; ++i) {
        Utterance u = make_utterance(rng, config, rng.bernoulli(config.pos_fraction));
        corpus.pairs.push_back({std::move(u.words), std::move(u.reply), std::nullopt});
        corpus.truth.push_back(u.info);
    }
    return corpus;
}

std::vector<DialoguePair> generate_echo_corpus(std::uint64_t seed, std::size_t n_pairs, const SyntheticConfig& config) {
    auto corpus = generate_synthetic_corpus(seed, n_pairs, config);
    for (auto& p : corpus.pairs) p.y = p.x;
    return std::move(corpus.pairs);
}

void SessionConfig::validate() const {
    if (groups == 0 || sessions_per_group == 0) throw UsageError("session generator needs at least one group and session");
    if (min_sentences == 0 || min_sentences > max_sentences) throw UsageError("sentence counts need 1 <= min <= max");
    if (!(rating_noise >= 0.0)) throw UsageError("rating_noise must be non-negative");
    sentences.validate();
}

std::vector<std::string> synthetic_behaviors() { return {"negativity", "positivity"}; }

SyntheticSessions generate_synthetic_sessions(std::uint64_t seed, const SessionConfig& config) {
    config.validate();
    Rng rng(seed);
    SyntheticSessions out;
    for (std::size_t g = 0; g < config.groups; ++g) {
        for (std::size_t s = 0; s < config.sessions_per_group; ++s) {
            LabeledSession session;
            session.group_id = "g" + padded(g, 2);
            session.session_id = session.group_id + "-s" + padded(s, 2);
            const double p = rng.uniform();
            const std::size_t n = draw_count(rng, config.min_sentences, config.max_sentences);
            for (std::size_t i = 0; i < n; ++i) {
                session.sentences.push_back(join(make_utterance(rng, config.sentences, rng.bernoulli(p)).words));
            }
            const double positivity = 1.0 + 8.0 * p + rng.normal(0.0, config.rating_noise);
            const double negativity = 9.0 - 8.0 * p + rng.normal(0.0, config.rating_noise);
            session.ratings["positivity"] = std::clamp(positivity, 1.0, 9.0);
            session.ratings["negativity"] = std::clamp(negativity, 1.0, 9.0);
            out.sessions.push_back(std::move(session));
            out.propensity.push_back(p);
        }
    }
    return out;
}

void EmotionConfig::validate() const {
    if (groups == 0 || utterances_per_group == 0) throw UsageError("emotion generator needs groups and utterances");
}

std::vector<std::string> synthetic_emotions() { return {"neutral", "happy", "angry", "sad"}; }

std::vector<LabeledSession> generate_emotion_sessions(std::uint64_t seed, const EmotionConfig& config) {
    config.validate();
    const auto emotions = synthetic_emotions();
    const SyntheticConfig frame{.affect_rate = 0.0};
    Rng rng(seed);
    std::vector<LabeledSession> out;
    for (std::size_t g = 0; g < config.groups; ++g) {
        for (std::size_t u = 0; u < config.utterances_per_group; ++u) {
            const std::size_t label = rng.below(emotions.size());
            Sentence words = make_utterance(rng, frame, true).words;
            const std::size_t n = draw_count(rng, 1, 2);
            for (std::size_t i = 0; label != 0 && i < n; ++i) {
                words.push_back("so");
                words.push_back(label == 1 ? draw(rng, kHappy) : label == 2 ? draw(rng, kAngry) : draw(rng, kSad));
            }
            LabeledSession s;
            s.group_id = "pair" + std::to_string(g);
            s.session_id = s.group_id + "-u" + padded(u, 3);
            s.sentences = {join(words)};
            s.emotion = emotions[label];
            out.push_back(std::move(s));
        }
    }
    return out;
}

}  // namespace dmtl
