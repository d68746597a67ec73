#include "dmtl/nn/optim.hpp"

#include "dmtl/error.hpp"

#include <cmath>

namespace dmtl::nn {

std::string_view to_string(OptimizerKind kind) {
    return kind == OptimizerKind::Adagrad ? "adagrad" : "sgd_momentum";
}

OptimizerKind parse_optimizer_kind(std::string_view text) {
    if (text == "sgd_momentum") return OptimizerKind::SgdMomentum;
    if (text == "adagrad") return OptimizerKind::Adagrad;
    throw UsageError("unknown optimizer '" + std::string(text) + "'");
}

OptimizerState OptimizerState::create(const ParameterSet& params, OptimizerKind kind, double learning_rate) {
    if (!(learning_rate > 0.0)) throw UsageError("learning rate must be positive");
    OptimizerState state;
    state.kind = kind;
    state.learning_rate = learning_rate;
    for (const auto& p : params) state.slots.emplace_back(p->value.rows(), p->value.cols());
    return state;
}

namespace {

void check_state(const ParameterSet& params, const OptimizerState& state, OptimizerKind kind) {
    if (state.kind != kind) throw UsageError("optimizer state belongs to " + std::string(to_string(state.kind)));
    if (state.slots.size() != params.size()) throw UsageError("optimizer state does not match the parameter set");
    if (!(state.learning_rate > 0.0)) throw UsageError("learning rate must be positive");
}

}  // namespace

void sgd_momentum_step(ParameterSet& params, OptimizerState& state, double momentum) {
    check_state(params, state, OptimizerKind::SgdMomentum);
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter& p = params[k];
        Tensor& v = state.slots[k];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            v[i] = momentum * v[i] + p.grad[i];
            p.value[i] -= state.learning_rate * v[i];
        }
    }
    ++state.steps;
}

void adagrad_step(ParameterSet& params, OptimizerState& state, double epsilon) {
    check_state(params, state, OptimizerKind::Adagrad);
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter& p = params[k];
        Tensor& accum = state.slots[k];
        for (std::size_t i = 0; i < p.value.size(); ++i) {
            const double g = p.grad[i];
            accum[i] += g * g;
            p.value[i] -= state.learning_rate * g / (std::sqrt(accum[i]) + epsilon);
        }
    }
    ++state.steps;
}

double clip_global_norm(ParameterSet& params, double max_norm) {
    double squared = 0.0;
    for (const auto& p : params) {
        for (double g : p->grad.data()) squared += g * g;
    }
    const double norm = std::sqrt(squared);
    if (norm > max_norm && norm > 0.0) {
        const double factor = max_norm / norm;
        for (auto& p : params) {
            for (double& g : p->grad.data()) g *= factor;
        }
    }
    return norm;
}

}  // namespace dmtl::nn
