#pragma once

#include "dmtl/checkpoint.hpp"
#include "dmtl/corpus.hpp"
#include "dmtl/embedding.hpp"
#include "dmtl/model.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace dmtl {

// Concatenated [fwd; bwd] encoder final states over all layers, length 2 L d.
// Runs the encoder only. Throws UsageError on an empty sentence.
Embedding embed_sentence(const Seq2SeqModel& model, const Vocabulary& vocab, const Sentence& sentence);

// Read-only view of a checkpoint for extraction; safe to share across threads.
class Embedder {
public:
    explicit Embedder(const Checkpoint& ckpt);

    std::size_t dim() const { return model_->config().embedding_dim(); }
    const Vocabulary& vocabulary() const { return vocab_; }
    const Seq2SeqModel& model() const { return *model_; }

    Embedding embed(const Sentence& sentence) const;
    // Each sentence is encoded independently; `jobs` > 1 splits the work
    // across threads without changing any value.
    std::vector<Embedding> embed_batch(std::span<const Sentence> sentences, std::size_t jobs = 1) const;
    // Throws UsageError on an empty session.
    std::vector<Embedding> embed_session(std::span<const Sentence> session) const;

private:
    std::unique_ptr<Seq2SeqModel> model_;
    Vocabulary vocab_;
};

}  // namespace dmtl
