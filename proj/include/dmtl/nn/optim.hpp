#pragma once

#include "dmtl/nn/parameter.hpp"
#include "dmtl/nn/tensor.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace dmtl::nn {

enum class OptimizerKind : std::uint8_t { SgdMomentum, Adagrad };

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(std::string_view text);

// One slot per parameter: velocity for momentum SGD, accumulated squared
// gradient for Adagrad.
struct OptimizerState {
    OptimizerKind kind = OptimizerKind::SgdMomentum;
    std::vector<Tensor> slots;
    std::uint64_t steps = 0;
    double learning_rate = 0.0;

    static OptimizerState create(const ParameterSet& params, OptimizerKind kind, double learning_rate);
};

// v <- mu v + g; theta <- theta - lr v
void sgd_momentum_step(ParameterSet& params, OptimizerState& state, double momentum);

// G <- G + g^2; theta <- theta - lr g / (sqrt(G) + eps)
void adagrad_step(ParameterSet& params, OptimizerState& state, double epsilon = 1e-8);

// Rescales all gradients so their joint L2 norm is at most max_norm.
// Returns the norm before clipping.
double clip_global_norm(ParameterSet& params, double max_norm);

}  // namespace dmtl::nn
