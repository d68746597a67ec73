#pragma once

#include "dmtl/nn/tensor.hpp"
#include "dmtl/rng.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace dmtl::nn {

// How a parameter is drawn at initialization.
struct InitScheme {
    enum class Kind { Uniform, Constant } kind = Kind::Uniform;
    double value = 0.0;  // bound for Uniform, fill for Constant

    // Uniform in [-gain/sqrt(fan_in), +gain/sqrt(fan_in)].
    static InitScheme fan_in(std::size_t fan_in, double gain = 1.0);
    static InitScheme constant(double v) { return {Kind::Constant, v}; }
};

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    InitScheme init;
};

// Owns parameters in declaration order; addresses are stable.
class ParameterSet {
public:
    Parameter& add(std::string name, std::size_t rows, std::size_t cols, InitScheme init);

    // Draws every parameter in declaration order from one seeded stream.
    void initialize(std::uint64_t seed);
    void zero_grad();

    std::size_t size() const { return params_.size(); }
    std::size_t scalar_count() const;
    Parameter& operator[](std::size_t i) { return *params_[i]; }
    const Parameter& operator[](std::size_t i) const { return *params_[i]; }
    Parameter* find(std::string_view name);
    const Parameter* find(std::string_view name) const;

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.cbegin(); }
    auto end() const { return params_.cend(); }

private:
    std::vector<std::unique_ptr<Parameter>> params_;
};

}  // namespace dmtl::nn
