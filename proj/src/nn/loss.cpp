#include "dmtl/nn/loss.hpp"

#include "dmtl/error.hpp"

#include <string>
#include <vector>

namespace dmtl::nn {

Expr seq_cross_entropy(Graph& g, std::span<const Expr> logits, std::span<const TokenId> targets,
                       std::span<const bool> is_pad) {
    if (logits.size() != targets.size()) throw UsageError("logits and targets differ in length");
    if (!is_pad.empty() && is_pad.size() != targets.size()) throw UsageError("pad mask differs in length");
    std::vector<Expr> terms;
    for (std::size_t t = 0; t < targets.size(); ++t) {
        if (!is_pad.empty() && is_pad[t]) continue;
        terms.push_back(pick_neg_log_softmax(logits[t], static_cast<std::size_t>(targets[t])));
    }
    if (terms.empty()) return g.input(Tensor::scalar(0.0));
    return scale(sum(terms), 1.0 / static_cast<double>(terms.size()));
}

Expr label_cross_entropy(Graph& g, Expr logits, AffectLabel label) {
    const auto index = affect_class_index(label);
    if (!index) return g.input(Tensor::scalar(0.0));
    if (g.value(logits).rows() != 2) throw UsageError("affect head must produce two logits");
    return pick_neg_log_softmax(logits, static_cast<std::size_t>(*index));
}

Expr batch_label_cross_entropy(Graph& g, std::span<const Expr> logits, std::span<const AffectLabel> labels) {
    if (logits.size() != labels.size()) throw UsageError("logits and labels differ in length");
    std::vector<Expr> terms;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == AffectLabel::Unlabeled) continue;
        terms.push_back(label_cross_entropy(g, logits[i], labels[i]));
    }
    if (terms.empty()) return g.input(Tensor::scalar(0.0));
    return scale(sum(terms), 1.0 / static_cast<double>(terms.size()));
}

void check_lambda(double lambda) {
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
        throw UsageError("lambda must lie in [0, 1], got " + std::to_string(lambda));
    }
}

double combined_loss(double l1, double l2, double lambda) {
    check_lambda(lambda);
    return lambda * l1 + (1.0 - lambda) * l2;
}

Expr combined_loss(Expr l1, Expr l2, double lambda) {
    check_lambda(lambda);
    return scale(l1, lambda) + scale(l2, 1.0 - lambda);
}

}  // namespace dmtl::nn
