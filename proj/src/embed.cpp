#include "dmtl/embed.hpp"

#include "dmtl/error.hpp"
#include "dmtl/nn/layers.hpp"

#include <algorithm>
#include <thread>

namespace dmtl {

Embedding embed_sentence(const Seq2SeqModel& model, const Vocabulary& vocab, const Sentence& sentence) {
    if (sentence.empty()) throw UsageError("cannot embed an empty sentence");
    nn::Graph g;
    const auto encoded = model.encode(g, encode(sentence, vocab, model.config().max_len));
    const nn::Tensor& value = encoded.embedding.value();
    if (!value.all_finite()) throw Error("non-finite sentence embedding");
    return nn::to_vector(value);
}

Embedder::Embedder(const Checkpoint& ckpt) : model_(model_from_checkpoint(ckpt)), vocab_(ckpt.vocabulary()) {}

Embedding Embedder::embed(const Sentence& sentence) const { return embed_sentence(*model_, vocab_, sentence); }

std::vector<Embedding> Embedder::embed_batch(std::span<const Sentence> sentences, std::size_t jobs) const {
    std::vector<Embedding> out(sentences.size());
    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, sentences.size()));
    if (jobs == 1) {
        for (std::size_t i = 0; i < sentences.size(); ++i) out[i] = embed(sentences[i]);
        return out;
    }
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w) {
        workers.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < sentences.size(); i += jobs) out[i] = embed(sentences[i]);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : workers) t.join();
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

std::vector<Embedding> Embedder::embed_session(std::span<const Sentence> session) const {
    if (session.empty()) throw UsageError("cannot embed an empty session");
    return embed_batch(session);
}

}  // namespace dmtl
