#pragma once

#include "dmtl/corpus.hpp"
#include "dmtl/session.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace dmtl {

// Template dialogues over a small closed vocabulary. A topic fixes the
// utterance frame and the reply; a latent class fixes which affect pool the
// utterance draws from. Affect pools mix lexicon words with words the
// lexicon does not know, so the lexicon label is a noisy view of the class.
struct SyntheticConfig {
    double pos_fraction = 0.5;
    // Probability that an utterance carries affect words at all.
    double affect_rate = 1.0;
    // Probability that an affect word is drawn from the lexicon part of its pool.
    double lexicon_overlap = 0.75;
    std::size_t min_affect_words = 1;
    std::size_t max_affect_words = 2;
    std::size_t max_fillers = 2;

    void validate() const;
};

enum class LatentClass : std::uint8_t { Positive, Negative };

struct SyntheticPairInfo {
    LatentClass latent;
    std::size_t topic;
    bool affective;  // false when the utterance carries no affect words
};

struct SyntheticCorpus {
    std::vector<DialoguePair> pairs;
    std::vector<SyntheticPairInfo> truth;
};

SyntheticCorpus generate_synthetic_corpus(std::uint64_t seed, std::size_t n_pairs, const SyntheticConfig& config = {});

// Pairs with y = x.
std::vector<DialoguePair> generate_echo_corpus(std::uint64_t seed, std::size_t n_pairs,
                                               const SyntheticConfig& config = {});

// Sessions whose behavior ratings track the share of positive sentences.
// Each session draws a propensity p ~ U(0, 1); each affective sentence is
// positive with probability p. "positivity" rises with p and "negativity"
// falls with it, both with Gaussian rating noise.
struct SessionConfig {
    std::size_t groups = 10;
    std::size_t sessions_per_group = 4;
    std::size_t min_sentences = 8;
    std::size_t max_sentences = 16;
    double rating_noise = 0.5;
    SyntheticConfig sentences{.affect_rate = 0.6};

    void validate() const;
};

std::vector<std::string> synthetic_behaviors();

struct SyntheticSessions {
    std::vector<LabeledSession> sessions;
    std::vector<double> propensity;  // parallel to sessions
};

SyntheticSessions generate_synthetic_sessions(std::uint64_t seed, const SessionConfig& config = {});

// Single-utterance sessions labeled neutral / happy / angry / sad; group ids
// stand for speaker pairs.
struct EmotionConfig {
    std::size_t groups = 5;
    std::size_t utterances_per_group = 40;

    void validate() const;
};

std::vector<std::string> synthetic_emotions();

std::vector<LabeledSession> generate_emotion_sessions(std::uint64_t seed, const EmotionConfig& config = {});

}  // namespace dmtl
