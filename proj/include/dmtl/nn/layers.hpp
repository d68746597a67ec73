#pragma once

#include "dmtl/corpus.hpp"
#include "dmtl/nn/graph.hpp"
#include "dmtl/nn/parameter.hpp"

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dmtl::nn {

using Vector = std::vector<double>;

// z = s(Wz x + Uz h + bz), r = s(Wr x + Ur h + br),
// c = tanh(Wh x + Uh (r*h) + bh), h' = (1-z)*h + z*c
struct GruCell {
    GruCell(ParameterSet& params, const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim);

    Expr step(Graph& g, Expr x, Expr h) const;

    std::size_t input_dim;
    std::size_t hidden_dim;
    Parameter *wz, *uz, *bz;
    Parameter *wr, *ur, *br;
    Parameter *wh, *uh, *bh;
};

// Standard LSTM; the forget-gate bias starts at 1.
struct LstmCell {
    LstmCell(ParameterSet& params, const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim);

    std::pair<Expr, Expr> step(Graph& g, Expr x, Expr h, Expr c) const;

    std::size_t input_dim;
    std::size_t hidden_dim;
    Parameter *wi, *ui, *bi;
    Parameter *wf, *uf, *bf;
    Parameter *wo, *uo, *bo;
    Parameter *wc, *uc, *bc;
};

struct BiGruLayerOutput {
    std::vector<Expr> outputs;  // [fwd_t; bwd_t] per step, width 2d
    Expr forward_final;         // forward state after the last step
    Expr backward_final;        // backward state after consuming step 0
};

// L layers of forward/backward GRUs; layer k > 0 consumes the 2d outputs of layer k-1.
struct BiGruStack {
    BiGruStack(ParameterSet& params, const std::string& prefix, std::size_t input_dim, std::size_t hidden_dim,
               std::size_t layers);

    std::vector<BiGruLayerOutput> run(Graph& g, std::span<const Expr> inputs) const;

    std::size_t hidden_dim;
    std::vector<GruCell> forward;
    std::vector<GruCell> backward;
};

// Multiplicative attention: score_t = (W q) . s_t over the columns s_t of `memory`.
struct Attention {
    Attention(ParameterSet& params, const std::string& prefix, std::size_t query_dim, std::size_t memory_dim);

    struct Result {
        Expr context;
        Expr weights;
    };
    Result apply(Graph& g, Expr query, Expr memory) const;

    Parameter* projection;
};

// Hidden layers use ReLU; the last layer yields logits.
struct Mlp {
    Mlp(ParameterSet& params, const std::string& prefix, std::size_t input_dim, std::span<const std::size_t> hidden,
        std::size_t output_dim);

    Expr logits(Graph& g, Expr x) const;

    std::size_t input_dim;
    std::vector<Parameter*> weights;
    std::vector<Parameter*> biases;
};

// Unidirectional GRU stack of width `hidden_dim` with per-layer linear bridges
// from the encoder final states, attention over the top encoder outputs and a
// tanh combination layer ahead of the vocabulary projection.
struct AttentionDecoder {
    AttentionDecoder(ParameterSet& params, const std::string& prefix, std::size_t embed_dim, std::size_t hidden_dim,
                     std::size_t layers, std::size_t vocab_size);

    // Teacher forcing: step t reads target[t-1] (start symbol at t = 0).
    // `encoder_finals[l]` is the [fwd; bwd] final state of encoder layer l and
    // `memory` holds the top-layer encoder outputs as columns.
    std::vector<Expr> forward(Graph& g, Parameter& embeddings, std::span<const TokenId> target,
                              std::span<const Expr> encoder_finals, Expr memory) const;

    std::size_t hidden_dim;
    Attention attention;
    std::vector<Parameter*> bridge_w;
    std::vector<Parameter*> bridge_b;
    std::vector<GruCell> cells;
    Parameter* combine_w = nullptr;
    Parameter* combine_b = nullptr;
    Parameter* output_w = nullptr;
    Parameter* output_b = nullptr;
};

// Plain-value entry points that build a throwaway graph.
Vector gru_cell_forward(const Vector& x, const Vector& h, const GruCell& cell);
std::pair<Vector, Vector> lstm_cell_forward(const Vector& x, const Vector& h, const Vector& c, const LstmCell& cell);
Vector mlp_forward(const Vector& x, const Mlp& mlp);  // softmax probabilities

Vector to_vector(const Tensor& t);

}  // namespace dmtl::nn
