#include "doctest.h"
#include "gradcheck.hpp"

#include "dmtl/error.hpp"
#include "dmtl/nn/layers.hpp"
#include "dmtl/nn/loss.hpp"
#include "dmtl/nn/optim.hpp"

#include <cmath>
#include <numeric>

using namespace dmtl;
using namespace dmtl::nn;
using dmtl::testing::check_gradients;

namespace {

constexpr double kTol = 1e-4;

Parameter& random_input(ParameterSet& params, const std::string& name, std::size_t rows, std::size_t cols = 1) {
    return params.add(name, rows, cols, InitScheme{InitScheme::Kind::Uniform, 1.0});
}

// Projects a vector onto fixed random weights so every output entry matters.
Expr probe(Graph& g, Expr v, std::uint64_t seed) {
    Rng rng(seed);
    Tensor w(g.value(v).rows(), 1);
    for (double& x : w.data()) x = rng.uniform(-1.0, 1.0);
    return dot(v, g.input(std::move(w)));
}

}  // namespace

TEST_CASE("gru cell: zero input and state stay at zero") {
    ParameterSet params;
    GruCell cell(params, "gru", 3, 4);
    params.initialize(1);
    const auto h = gru_cell_forward(Vector(3, 0.0), Vector(4, 0.0), cell);
    for (double v : h) CHECK(v == 0.0);
}

TEST_CASE("gru cell: zero weights halve the state") {
    ParameterSet params;
    GruCell cell(params, "gru", 1, 1);
    // All parameters zero: z = 0.5, candidate = tanh(0) = 0, h' = 0.5 h.
    const auto h = gru_cell_forward({0.3}, {0.8}, cell);
    CHECK(h[0] == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("gru cell: shape mismatch is rejected") {
    ParameterSet params;
    GruCell cell(params, "gru", 3, 4);
    CHECK_THROWS_AS(gru_cell_forward(Vector(2, 0.0), Vector(4, 0.0), cell), UsageError);
    CHECK_THROWS_AS(gru_cell_forward(Vector(3, 0.0), Vector(5, 0.0), cell), UsageError);
}

TEST_CASE("gru cell: non-finite output is an error") {
    ParameterSet params;
    GruCell cell(params, "gru", 1, 1);
    CHECK_THROWS_AS(gru_cell_forward({0.0}, {std::nan("")}, cell), Error);
}

TEST_CASE("gru cell: gradients match finite differences") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        ParameterSet params;
        GruCell cell(params, "gru", 5, 4);
        Parameter& x = random_input(params, "x", 5);
        Parameter& h = random_input(params, "h", 4);
        params.initialize(seed);
        const auto r = check_gradients(params, [&](Graph& g) {
            return probe(g, cell.step(g, g.param(x), g.param(h)), seed + 100);
        });
        INFO("seed " << seed << " worst " << r.worst);
        CHECK(r.max_rel_error < kTol);
    }
}

TEST_CASE("lstm cell: zero state with unit forget bias stays at zero") {
    ParameterSet params;
    LstmCell cell(params, "lstm", 3, 4);
    params.initialize(3);
    const auto [h, c] = lstm_cell_forward(Vector(3, 0.0), Vector(4, 0.0), Vector(4, 0.0), cell);
    for (double v : h) CHECK(v == 0.0);
    for (double v : c) CHECK(v == 0.0);
    CHECK(params.find("lstm.bf")->value[0] == 1.0);
}

TEST_CASE("lstm cell: new cell state is linear in the old one for fixed gates") {
    ParameterSet params;
    LstmCell cell(params, "lstm", 2, 3);
    params.initialize(5);
    const Vector x{0.2, -0.4};
    const Vector h{0.1, 0.3, -0.2};
    const Vector c1{0.5, -1.0, 0.25};
    const Vector c2{-0.3, 0.7, 1.5};
    Vector mix(3);
    for (std::size_t i = 0; i < 3; ++i) mix[i] = 2.0 * c1[i] - 0.5 * c2[i];
    const auto zero = lstm_cell_forward(x, h, Vector(3, 0.0), cell).second;
    const auto a = lstm_cell_forward(x, h, c1, cell).second;
    const auto b = lstm_cell_forward(x, h, c2, cell).second;
    const auto m = lstm_cell_forward(x, h, mix, cell).second;
    for (std::size_t i = 0; i < 3; ++i) {
        // c' - c'(0) = f * c, so the offset-free part is linear.
        CHECK(m[i] - zero[i] == doctest::Approx(2.0 * (a[i] - zero[i]) - 0.5 * (b[i] - zero[i])).epsilon(1e-12));
    }
}

TEST_CASE("lstm cell: gradients match finite differences") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        ParameterSet params;
        LstmCell cell(params, "lstm", 4, 5);
        Parameter& x = random_input(params, "x", 4);
        Parameter& h = random_input(params, "h", 5);
        Parameter& c = random_input(params, "c", 5);
        params.initialize(seed);
        const auto r = check_gradients(params, [&](Graph& g) {
            const auto [hn, cn] = cell.step(g, g.param(x), g.param(h), g.param(c));
            return probe(g, hn, seed) + probe(g, cn, seed + 7);
        });
        INFO("seed " << seed << " worst " << r.worst);
        CHECK(r.max_rel_error < kTol);
    }
}

TEST_CASE("bi-gru stack: shapes and single-step finals") {
    ParameterSet params;
    BiGruStack stack(params, "enc", 3, 4, 2);
    Parameter& seq = random_input(params, "seq", 1, 3);
    params.initialize(9);
    Graph g;
    const Expr x = g.input(Tensor::column(seq.value.data()));
    const std::vector<Expr> one{x};
    const auto single = stack.run(g, one);
    REQUIRE(single.size() == 2);
    for (const auto& layer : single) {
        REQUIRE(layer.outputs.size() == 1);
        const Tensor& out = layer.outputs[0].value();
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(out[i] == layer.forward_final.value()[i]);
            CHECK(out[4 + i] == layer.backward_final.value()[i]);
        }
    }
    const std::vector<Expr> five(5, x);
    const auto many = stack.run(g, five);
    for (const auto& layer : many) {
        CHECK(layer.outputs.size() == 5);
        CHECK(layer.outputs[0].rows() == 8);
    }
    CHECK_THROWS_AS(stack.run(g, std::span<const Expr>{}), UsageError);
}

TEST_CASE("bi-gru stack: reversing input swaps finals when directions share weights") {
    ParameterSet params;
    BiGruStack stack(params, "enc", 3, 4, 1);
    params.initialize(11);
    // Tie the backward cell to the forward cell.
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter& p = params[k];
        if (p.name.find(".bwd.") == std::string::npos) continue;
        std::string twin = p.name;
        twin.replace(twin.find(".bwd."), 5, ".fwd.");
        p.value = params.find(twin)->value;
    }
    Rng rng(4);
    std::vector<Tensor> steps;
    for (int t = 0; t < 6; ++t) {
        Tensor v(3, 1);
        for (double& x : v.data()) x = rng.uniform(-1, 1);
        steps.push_back(v);
    }
    Graph g;
    std::vector<Expr> fwd_in, rev_in;
    for (const auto& s : steps) fwd_in.push_back(g.input(s));
    for (auto it = steps.rbegin(); it != steps.rend(); ++it) rev_in.push_back(g.input(*it));
    const auto a = stack.run(g, fwd_in);
    const auto b = stack.run(g, rev_in);
    CHECK(a[0].forward_final.value() == b[0].backward_final.value());
    CHECK(a[0].backward_final.value() == b[0].forward_final.value());
}

TEST_CASE("bi-gru stack: gradients match finite differences") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        ParameterSet params;
        BiGruStack stack(params, "enc", 3, 3, 2);
        Parameter& seq = random_input(params, "seq", 4, 3);
        params.initialize(seed);
        const auto r = check_gradients(params, [&](Graph& g) {
            std::vector<Expr> inputs;
            for (std::size_t t = 0; t < 4; ++t) inputs.push_back(g.lookup(seq, t));
            const auto layers = stack.run(g, inputs);
            std::vector<Expr> finals;
            for (const auto& l : layers) {
                finals.push_back(l.forward_final);
                finals.push_back(l.backward_final);
            }
            return probe(g, concat(finals), seed) + probe(g, layers.back().outputs[1], seed + 3);
        });
        INFO("seed " << seed << " worst " << r.worst);
        CHECK(r.max_rel_error < kTol);
    }
}

TEST_CASE("attention: singleton and uniform memories") {
    ParameterSet params;
    Attention attn(params, "attn", 3, 4);
    params.initialize(2);
    Graph g;
    const Expr q = g.input(Tensor::column({0.3, -0.2, 0.9}));
    const Expr s = g.input(Tensor::column({1.0, 2.0, -1.0, 0.5}));
    const std::vector<Expr> one{s};
    const auto single = attn.apply(g, q, columns(one));
    CHECK(single.weights.value()[0] == doctest::Approx(1.0));
    CHECK(single.context.value() == s.value());

    const std::vector<Expr> same(4, s);
    const auto uniform = attn.apply(g, q, columns(same));
    for (std::size_t t = 0; t < 4; ++t) CHECK(uniform.weights.value()[t] == doctest::Approx(0.25));
}

TEST_CASE("attention: weights sum to one and gradients match") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        ParameterSet params;
        Attention attn(params, "attn", 4, 6);
        Parameter& q = random_input(params, "query", 4);
        Parameter& mem = random_input(params, "memory", 5, 6);
        params.initialize(seed);
        {
            Graph g;
            std::vector<Expr> cols;
            for (std::size_t t = 0; t < 5; ++t) cols.push_back(g.lookup(mem, t));
            const auto res = attn.apply(g, g.param(q), columns(cols));
            const auto& w = res.weights.value().data();
            CHECK(std::accumulate(w.begin(), w.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
        }
        const auto r = check_gradients(params, [&](Graph& g) {
            std::vector<Expr> cols;
            for (std::size_t t = 0; t < 5; ++t) cols.push_back(g.lookup(mem, t));
            return probe(g, attn.apply(g, g.param(q), columns(cols)).context, seed);
        });
        INFO("seed " << seed << " worst " << r.worst);
        CHECK(r.max_rel_error < kTol);
    }
}

namespace {

struct TinySeq2Seq {
    static constexpr std::size_t kVocab = 12;
    static constexpr std::size_t kDim = 4;
    static constexpr std::size_t kLayers = 2;

    ParameterSet params;
    Parameter* embeddings;
    BiGruStack encoder;
    AttentionDecoder decoder;

    TinySeq2Seq()
        : embeddings(&params.add("emb", kVocab, kDim, InitScheme{InitScheme::Kind::Uniform, 0.5})),
          encoder(params, "enc", kDim, kDim, kLayers),
          decoder(params, "dec", kDim, 2 * kDim, kLayers, kVocab) {}

    std::vector<Expr> logits(Graph& g, std::span<const TokenId> source, std::span<const TokenId> target) {
        std::vector<Expr> inputs;
        for (TokenId t : source) inputs.push_back(g.lookup(*embeddings, static_cast<std::size_t>(t)));
        const auto layers = encoder.run(g, inputs);
        std::vector<Expr> finals;
        for (const auto& l : layers) finals.push_back(concat({l.forward_final, l.backward_final}));
        return decoder.forward(g, *embeddings, target, finals, columns(layers.back().outputs));
    }
};

}  // namespace

TEST_CASE("decoder: logits shape and zero-parameter uniformity") {
    TinySeq2Seq model;
    const std::vector<TokenId> src{1, 5, 6, 2};
    const std::vector<TokenId> tgt{7, 8, 2};
    Graph g;
    const auto zero_logits = model.logits(g, src, tgt);
    REQUIRE(zero_logits.size() == tgt.size());
    for (Expr e : zero_logits) {
        CHECK(e.rows() == TinySeq2Seq::kVocab);
        for (double v : e.value().data()) CHECK(v == 0.0);
    }
    CHECK_THROWS_AS(model.logits(g, src, std::span<const TokenId>{}), UsageError);
}

TEST_CASE("decoder: end-to-end gradients match (vocab 12, d 4, T 3)") {
    const std::vector<TokenId> src{1, 5, 9, 2};
    const std::vector<TokenId> tgt{7, 3, 2};
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        TinySeq2Seq model;
        model.params.initialize(seed);
        const auto r = check_gradients(model.params, [&](Graph& g) {
            return seq_cross_entropy(g, model.logits(g, src, tgt), tgt);
        });
        INFO("seed " << seed << " worst " << r.worst);
        CHECK(r.max_rel_error < kTol);
    }
}

TEST_CASE("mlp: zero parameters give an even split") {
    ParameterSet params;
    const std::vector<std::size_t> hidden{8, 8, 4, 2};
    Mlp mlp(params, "head", 6, hidden, 2);
    const auto p = mlp_forward(Vector(6, 0.7), mlp);
    CHECK(p[0] == 0.5);
    CHECK(p[1] == 0.5);
}

TEST_CASE("mlp: outputs are distributions and gradients match") {
    const std::vector<std::size_t> hidden{8, 8, 6, 4};
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        ParameterSet params;
        Mlp mlp(params, "head", 6, hidden, 2);
        Parameter& x = random_input(params, "x", 6);
        params.initialize(seed);
        const auto p = mlp_forward(to_vector(x.value), mlp);
        CHECK(p[0] > 0.0);
        CHECK(p[1] > 0.0);
        CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-6));
        const auto r = check_gradients(params, [&](Graph& g) {
            return label_cross_entropy(g, mlp.logits(g, g.param(x)), AffectLabel::Negative);
        });
        INFO("seed " << seed << " worst " << r.worst);
        CHECK(r.max_rel_error < kTol);
    }
}

TEST_CASE("seq_cross_entropy: uniform logits cost ln V") {
    Graph g;
    std::vector<Expr> logits(3, g.input(Tensor(7, 1)));
    const std::vector<TokenId> targets{1, 4, 6};
    CHECK(seq_cross_entropy(g, logits, targets).value()[0] == doctest::Approx(std::log(7.0)));
}

TEST_CASE("seq_cross_entropy: confident correct logits cost nearly nothing") {
    Graph g;
    Tensor peaked(5, 1, -50.0);
    peaked[2] = 50.0;
    std::vector<Expr> logits(2, g.input(peaked));
    const std::vector<TokenId> targets{2, 2};
    CHECK(seq_cross_entropy(g, logits, targets).value()[0] < 1e-30);
}

TEST_CASE("seq_cross_entropy: masking equals the shortened sequence") {
    Rng rng(8);
    Graph g;
    std::vector<Expr> logits;
    for (int t = 0; t < 4; ++t) {
        Tensor z(6, 1);
        for (double& v : z.data()) v = rng.uniform(-2, 2);
        logits.push_back(g.input(z));
    }
    const std::vector<TokenId> targets{0, 3, 5, 1};
    const std::array<bool, 4> mask{false, true, false, false};
    const double masked = seq_cross_entropy(g, logits, targets, mask).value()[0];
    const std::vector<Expr> short_logits{logits[0], logits[2], logits[3]};
    const std::vector<TokenId> short_targets{0, 5, 1};
    CHECK(masked == doctest::Approx(seq_cross_entropy(g, short_logits, short_targets).value()[0]).epsilon(1e-14));
}

TEST_CASE("label_cross_entropy: even split costs ln 2 and unlabeled is inert") {
    ParameterSet params;
    Parameter& z = params.add("z", 2, 1, InitScheme::constant(0.0));
    Graph g;
    CHECK(label_cross_entropy(g, g.param(z), AffectLabel::Positive).value()[0] == doctest::Approx(std::log(2.0)));
    const Expr none = label_cross_entropy(g, g.param(z), AffectLabel::Unlabeled);
    CHECK(none.value()[0] == 0.0);
    g.backward(none);
    CHECK(z.grad[0] == 0.0);
    CHECK(z.grad[1] == 0.0);
}

TEST_CASE("batch_label_cross_entropy: masked items leave the denominator") {
    // Hand computation: logits (0,0) -> p = 1/2; (ln 3, 0) -> p(pos) = 3/4.
    // Items: (0,0) Positive, (ln3,0) Unlabeled, (ln3,0) Negative.
    // Mean over the two labeled items = (ln 2 + ln 4) / 2 = 1.5 ln 2.
    Graph g;
    const Expr even = g.input(Tensor::column({0.0, 0.0}));
    const Expr skew = g.input(Tensor::column({std::log(3.0), 0.0}));
    const std::vector<Expr> logits{even, skew, skew};
    const std::vector<AffectLabel> labels{AffectLabel::Positive, AffectLabel::Unlabeled, AffectLabel::Negative};
    CHECK(batch_label_cross_entropy(g, logits, labels).value()[0] == doctest::Approx(1.5 * std::log(2.0)));
}

TEST_CASE("batch_label_cross_entropy: adding unlabeled items changes nothing") {
    ParameterSet params;
    Parameter& a = random_input(params, "a", 2);
    Parameter& b = random_input(params, "b", 2);
    Parameter& c = random_input(params, "c", 2);
    params.initialize(12);
    auto run = [&](bool with_extra) {
        params.zero_grad();
        Graph g;
        std::vector<Expr> logits{g.param(a), g.param(b)};
        std::vector<AffectLabel> labels{AffectLabel::Positive, AffectLabel::Negative};
        if (with_extra) {
            logits.push_back(g.param(c));
            labels.push_back(AffectLabel::Unlabeled);
        }
        const Expr loss = batch_label_cross_entropy(g, logits, labels);
        g.backward(loss);
        return std::make_pair(loss.value()[0], std::make_pair(a.grad, c.grad));
    };
    const auto base = run(false);
    const auto extra = run(true);
    CHECK(base.first == extra.first);
    CHECK(base.second.first == extra.second.first);
    for (double v : extra.second.second.data()) CHECK(v == 0.0);
}

TEST_CASE("combined_loss: affine weighting and range check") {
    CHECK(combined_loss(2.0, 1.0, 0.5) == 1.5);
    CHECK(combined_loss(2.0, 1.0, 1.0) == 2.0);
    CHECK(combined_loss(2.0, 1.0, 0.0) == 1.0);
    CHECK_THROWS_AS(combined_loss(2.0, 1.0, 1.5), UsageError);
    CHECK_THROWS_AS(combined_loss(2.0, 1.0, -0.1), UsageError);
}

TEST_CASE("sgd with momentum") {
    ParameterSet params;
    Parameter& theta = params.add("theta", 1, 1, InitScheme::constant(0.0));
    SUBCASE("plain step") {
        auto state = OptimizerState::create(params, OptimizerKind::SgdMomentum, 0.1);
        theta.grad[0] = 1.0;
        sgd_momentum_step(params, state, 0.0);
        CHECK(theta.value[0] == doctest::Approx(-0.1));
    }
    SUBCASE("velocity accumulates geometrically") {
        auto state = OptimizerState::create(params, OptimizerKind::SgdMomentum, 0.05);
        theta.grad[0] = 1.0;
        sgd_momentum_step(params, state, 0.9);
        sgd_momentum_step(params, state, 0.9);
        CHECK(state.slots[0][0] == doctest::Approx(1.9));
        CHECK(state.steps == 2);
    }
    SUBCASE("zero gradient moves only by decayed velocity") {
        auto state = OptimizerState::create(params, OptimizerKind::SgdMomentum, 0.1);
        theta.grad[0] = 1.0;
        sgd_momentum_step(params, state, 0.9);
        const double before = theta.value[0];
        theta.grad[0] = 0.0;
        sgd_momentum_step(params, state, 0.9);
        CHECK(theta.value[0] == doctest::Approx(before - 0.1 * 0.9));
    }
    CHECK_THROWS_AS(OptimizerState::create(params, OptimizerKind::SgdMomentum, 0.0), UsageError);
}

TEST_CASE("adagrad") {
    ParameterSet params;
    Parameter& theta = params.add("theta", 1, 1, InitScheme::constant(0.0));
    auto state = OptimizerState::create(params, OptimizerKind::Adagrad, 0.1);
    theta.grad[0] = 1.0;
    adagrad_step(params, state);
    CHECK(theta.value[0] == doctest::Approx(-0.1).epsilon(1e-6));
    double previous_step = 0.1;
    for (int i = 0; i < 5; ++i) {
        const double before = theta.value[0];
        adagrad_step(params, state);
        const double step = before - theta.value[0];
        CHECK(step < previous_step);
        previous_step = step;
    }
    const double before = theta.value[0];
    theta.grad[0] = 0.0;
    adagrad_step(params, state);
    CHECK(theta.value[0] == before);
}

TEST_CASE("clip_global_norm rescales only large gradients") {
    ParameterSet params;
    Parameter& a = params.add("a", 2, 1, InitScheme::constant(0.0));
    a.grad[0] = 3.0;
    a.grad[1] = 4.0;
    CHECK(clip_global_norm(params, 10.0) == doctest::Approx(5.0));
    CHECK(a.grad[0] == 3.0);
    clip_global_norm(params, 1.0);
    CHECK(a.grad[0] == doctest::Approx(0.6));
    CHECK(a.grad[1] == doctest::Approx(0.8));
}
