#include "dmtl/nn/layers.hpp"

#include "dmtl/error.hpp"

#include <cmath>
#include <string>

namespace dmtl::nn {

namespace {

Parameter& weight(ParameterSet& params, const std::string& name, std::size_t rows, std::size_t cols,
                  double gain = 1.0) {
    return params.add(name, rows, cols, InitScheme::fan_in(cols, gain));
}

Parameter& bias(ParameterSet& params, const std::string& name, std::size_t rows, double value = 0.0) {
    return params.add(name, rows, 1, InitScheme::constant(value));
}

void check_rows(const Graph& g, Expr e, std::size_t rows, const char* what) {
    if (g.value(e).rows() != rows || g.value(e).cols() != 1) {
        throw UsageError(std::string(what) + ": expected a vector of size " + std::to_string(rows) + ", got " +
                         std::to_string(g.value(e).rows()));
    }
}

void check_finite(const Tensor& t, const char* what) {
    if (!t.all_finite()) throw Error(std::string(what) + " produced a non-finite value");
}

Expr affine(Graph& g, Parameter* w, Expr x, Parameter* u, Expr h, Parameter* b) {
    return matvec(g.param(*w), x) + matvec(g.param(*u), h) + g.param(*b);
}

}  // namespace

Vector to_vector(const Tensor& t) { return Vector(t.data().begin(), t.data().end()); }

GruCell::GruCell(ParameterSet& params, const std::string& prefix, std::size_t input, std::size_t hidden)
    : input_dim(input),
      hidden_dim(hidden),
      wz(&weight(params, prefix + ".wz", hidden, input)),
      uz(&weight(params, prefix + ".uz", hidden, hidden)),
      bz(&bias(params, prefix + ".bz", hidden)),
      wr(&weight(params, prefix + ".wr", hidden, input)),
      ur(&weight(params, prefix + ".ur", hidden, hidden)),
      br(&bias(params, prefix + ".br", hidden)),
      wh(&weight(params, prefix + ".wh", hidden, input)),
      uh(&weight(params, prefix + ".uh", hidden, hidden)),
      bh(&bias(params, prefix + ".bh", hidden)) {}

Expr GruCell::step(Graph& g, Expr x, Expr h) const {
    check_rows(g, x, input_dim, "gru input");
    check_rows(g, h, hidden_dim, "gru state");
    const Expr z = sigmoid(affine(g, wz, x, uz, h, bz));
    const Expr r = sigmoid(affine(g, wr, x, ur, h, br));
    const Expr candidate = tanh(matvec(g.param(*wh), x) + matvec(g.param(*uh), cmul(r, h)) + g.param(*bh));
    return cmul(one_minus(z), h) + cmul(z, candidate);
}

LstmCell::LstmCell(ParameterSet& params, const std::string& prefix, std::size_t input, std::size_t hidden)
    : input_dim(input),
      hidden_dim(hidden),
      wi(&weight(params, prefix + ".wi", hidden, input)),
      ui(&weight(params, prefix + ".ui", hidden, hidden)),
      bi(&bias(params, prefix + ".bi", hidden)),
      wf(&weight(params, prefix + ".wf", hidden, input)),
      uf(&weight(params, prefix + ".uf", hidden, hidden)),
      bf(&bias(params, prefix + ".bf", hidden, 1.0)),
      wo(&weight(params, prefix + ".wo", hidden, input)),
      uo(&weight(params, prefix + ".uo", hidden, hidden)),
      bo(&bias(params, prefix + ".bo", hidden)),
      wc(&weight(params, prefix + ".wc", hidden, input)),
      uc(&weight(params, prefix + ".uc", hidden, hidden)),
      bc(&bias(params, prefix + ".bc", hidden)) {}

std::pair<Expr, Expr> LstmCell::step(Graph& g, Expr x, Expr h, Expr c) const {
    check_rows(g, x, input_dim, "lstm input");
    check_rows(g, h, hidden_dim, "lstm state");
    check_rows(g, c, hidden_dim, "lstm cell");
    const Expr i = sigmoid(affine(g, wi, x, ui, h, bi));
    const Expr f = sigmoid(affine(g, wf, x, uf, h, bf));
    const Expr o = sigmoid(affine(g, wo, x, uo, h, bo));
    const Expr candidate = tanh(affine(g, wc, x, uc, h, bc));
    const Expr c_next = cmul(f, c) + cmul(i, candidate);
    return {cmul(o, tanh(c_next)), c_next};
}

BiGruStack::BiGruStack(ParameterSet& params, const std::string& prefix, std::size_t input_dim, std::size_t hidden,
                       std::size_t layers)
    : hidden_dim(hidden) {
    if (layers == 0) throw UsageError("encoder needs at least one layer");
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t in = l == 0 ? input_dim : 2 * hidden;
        forward.emplace_back(params, prefix + ".l" + std::to_string(l) + ".fwd", in, hidden);
        backward.emplace_back(params, prefix + ".l" + std::to_string(l) + ".bwd", in, hidden);
    }
}

std::vector<BiGruLayerOutput> BiGruStack::run(Graph& g, std::span<const Expr> inputs) const {
    if (inputs.empty()) throw UsageError("bidirectional encoder needs a non-empty sequence");
    const std::size_t steps = inputs.size();
    std::vector<BiGruLayerOutput> layers;
    std::vector<Expr> current(inputs.begin(), inputs.end());
    for (std::size_t l = 0; l < forward.size(); ++l) {
        std::vector<Expr> fwd(steps), bwd(steps);
        Expr h = g.input(Tensor(hidden_dim, 1));
        for (std::size_t t = 0; t < steps; ++t) fwd[t] = h = forward[l].step(g, current[t], h);
        h = g.input(Tensor(hidden_dim, 1));
        for (std::size_t t = steps; t-- > 0;) bwd[t] = h = backward[l].step(g, current[t], h);

        BiGruLayerOutput out;
        out.forward_final = fwd.back();
        out.backward_final = bwd.front();
        out.outputs.reserve(steps);
        for (std::size_t t = 0; t < steps; ++t) out.outputs.push_back(concat({fwd[t], bwd[t]}));
        current = out.outputs;
        layers.push_back(std::move(out));
    }
    return layers;
}

Attention::Attention(ParameterSet& params, const std::string& prefix, std::size_t query_dim, std::size_t memory_dim)
    : projection(&weight(params, prefix + ".proj", memory_dim, query_dim)) {}

Attention::Result Attention::apply(Graph& g, Expr query, Expr memory) const {
    if (g.value(memory).cols() == 0) throw UsageError("attention over an empty memory");
    const Expr projected = matvec(g.param(*projection), query);
    const Expr scores = tmatvec(memory, projected);
    const Expr weights = softmax(scores);
    return {matvec(memory, weights), weights};
}

Mlp::Mlp(ParameterSet& params, const std::string& prefix, std::size_t input, std::span<const std::size_t> hidden,
         std::size_t output_dim)
    : input_dim(input) {
    std::size_t in = input;
    std::size_t layer = 0;
    // Layers feeding a ReLU get gain sqrt(6) so activations keep their scale with depth.
    auto add_layer = [&](std::size_t out, double gain, double bias_init) {
        const std::string name = prefix + ".l" + std::to_string(layer++);
        weights.push_back(&weight(params, name + ".w", out, in, gain));
        biases.push_back(&bias(params, name + ".b", out, bias_init));
        in = out;
    };
    for (std::size_t width : hidden) add_layer(width, std::sqrt(6.0), 0.1);
    add_layer(output_dim, 1.0, 0.0);
}

Expr Mlp::logits(Graph& g, Expr x) const {
    check_rows(g, x, input_dim, "mlp input");
    Expr a = x;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        a = matvec(g.param(*weights[l]), a) + g.param(*biases[l]);
        if (l + 1 < weights.size()) a = relu(a);
    }
    return a;
}

AttentionDecoder::AttentionDecoder(ParameterSet& params, const std::string& prefix, std::size_t embed_dim,
                                   std::size_t hidden, std::size_t layers, std::size_t vocab_size)
    : hidden_dim(hidden), attention(params, prefix + ".attn", hidden, hidden) {
    for (std::size_t l = 0; l < layers; ++l) {
        const std::string name = prefix + ".bridge" + std::to_string(l);
        bridge_w.push_back(&weight(params, name + ".w", hidden, hidden));
        bridge_b.push_back(&bias(params, name + ".b", hidden));
    }
    for (std::size_t l = 0; l < layers; ++l) {
        cells.emplace_back(params, prefix + ".l" + std::to_string(l), l == 0 ? embed_dim : hidden, hidden);
    }
    combine_w = &weight(params, prefix + ".combine.w", hidden, 2 * hidden);
    combine_b = &bias(params, prefix + ".combine.b", hidden);
    output_w = &weight(params, prefix + ".out.w", vocab_size, hidden);
    output_b = &bias(params, prefix + ".out.b", vocab_size);
}

std::vector<Expr> AttentionDecoder::forward(Graph& g, Parameter& embeddings, std::span<const TokenId> target,
                                            std::span<const Expr> encoder_finals, Expr memory) const {
    if (target.empty()) throw UsageError("decoder target is empty");
    if (encoder_finals.size() != cells.size()) throw UsageError("decoder needs one initial state per layer");
    if (g.value(memory).rows() != hidden_dim) throw UsageError("attention memory width differs from decoder width");

    std::vector<Expr> state;
    for (std::size_t l = 0; l < cells.size(); ++l) {
        check_rows(g, encoder_finals[l], hidden_dim, "decoder bridge");
        state.push_back(matvec(g.param(*bridge_w[l]), encoder_finals[l]) + g.param(*bridge_b[l]));
    }
    std::vector<Expr> logits;
    logits.reserve(target.size());
    for (std::size_t t = 0; t < target.size(); ++t) {
        const TokenId previous = t == 0 ? Vocabulary::kSos : target[t - 1];
        Expr input = g.lookup(embeddings, static_cast<std::size_t>(previous));
        for (std::size_t l = 0; l < cells.size(); ++l) input = state[l] = cells[l].step(g, input, state[l]);
        const auto attended = attention.apply(g, input, memory);
        const Expr combined = tanh(matvec(g.param(*combine_w), concat({input, attended.context})) + g.param(*combine_b));
        logits.push_back(matvec(g.param(*output_w), combined) + g.param(*output_b));
    }
    return logits;
}

Vector gru_cell_forward(const Vector& x, const Vector& h, const GruCell& cell) {
    Graph g;
    const Expr out = cell.step(g, g.input(Tensor::column(x)), g.input(Tensor::column(h)));
    check_finite(out.value(), "gru cell");
    return to_vector(out.value());
}

std::pair<Vector, Vector> lstm_cell_forward(const Vector& x, const Vector& h, const Vector& c, const LstmCell& cell) {
    Graph g;
    const auto [h_next, c_next] =
        cell.step(g, g.input(Tensor::column(x)), g.input(Tensor::column(h)), g.input(Tensor::column(c)));
    check_finite(h_next.value(), "lstm cell");
    check_finite(c_next.value(), "lstm cell");
    return {to_vector(h_next.value()), to_vector(c_next.value())};
}

Vector mlp_forward(const Vector& x, const Mlp& mlp) {
    Graph g;
    const Expr logits = mlp.logits(g, g.input(Tensor::column(x)));
    check_finite(logits.value(), "mlp");
    return softmax_values(logits.value().data());
}

}  // namespace dmtl::nn
