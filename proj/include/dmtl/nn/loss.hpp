#pragma once

#include "dmtl/affect_label.hpp"
#include "dmtl/corpus.hpp"
#include "dmtl/nn/graph.hpp"

#include <span>

namespace dmtl::nn {

// Mean negative log-likelihood over positions whose is_pad flag is false.
// An empty `is_pad` means no padding. Returns a constant 0 when every
// position is padding.
Expr seq_cross_entropy(Graph& g, std::span<const Expr> logits, std::span<const TokenId> targets,
                       std::span<const bool> is_pad = {});

// -ln p(label) from two-way logits (Positive = class 0, Negative = class 1).
// Unlabeled yields a constant 0 with no path to any parameter.
Expr label_cross_entropy(Graph& g, Expr logits, AffectLabel label);

// Mean of label_cross_entropy over the labeled items only; a constant 0 when
// nothing in the batch is labeled.
Expr batch_label_cross_entropy(Graph& g, std::span<const Expr> logits, std::span<const AffectLabel> labels);

// J = lambda * L1 + (1 - lambda) * L2. Throws UsageError unless lambda is in [0, 1].
double combined_loss(double l1, double l2, double lambda);
Expr combined_loss(Expr l1, Expr l2, double lambda);

void check_lambda(double lambda);

}  // namespace dmtl::nn
