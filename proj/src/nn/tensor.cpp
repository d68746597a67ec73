#include "dmtl/nn/tensor.hpp"
#include "dmtl/nn/parameter.hpp"

#include "dmtl/error.hpp"

#include <algorithm>
#include <cmath>

namespace dmtl::nn {

Tensor Tensor::column(std::span<const double> values) {
    Tensor t(values.size(), 1);
    std::copy(values.begin(), values.end(), t.data_.begin());
    return t;
}

Tensor Tensor::column(std::initializer_list<double> values) {
    return column(std::span<const double>(values.begin(), values.size()));
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor::all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

InitScheme InitScheme::fan_in(std::size_t fan_in, double gain) {
    return {Kind::Uniform, gain / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)))};
}

Parameter& ParameterSet::add(std::string name, std::size_t rows, std::size_t cols, InitScheme init) {
    if (find(name) != nullptr) throw UsageError("duplicate parameter name: " + name);
    auto p = std::make_unique<Parameter>();
    p->name = std::move(name);
    p->value = Tensor(rows, cols);
    p->grad = Tensor(rows, cols);
    p->init = init;
    params_.push_back(std::move(p));
    return *params_.back();
}

void ParameterSet::initialize(std::uint64_t seed) {
    Rng rng(seed);
    for (auto& p : params_) {
        if (p->init.kind == InitScheme::Kind::Constant) {
            p->value.fill(p->init.value);
            continue;
        }
        for (double& v : p->value.data()) v = rng.uniform(-p->init.value, p->init.value);
    }
    zero_grad();
}

void ParameterSet::zero_grad() {
    for (auto& p : params_) p->grad.fill(0.0);
}

std::size_t ParameterSet::scalar_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
}

Parameter* ParameterSet::find(std::string_view name) {
    for (auto& p : params_) {
        if (p->name == name) return p.get();
    }
    return nullptr;
}

const Parameter* ParameterSet::find(std::string_view name) const {
    for (const auto& p : params_) {
        if (p->name == name) return p.get();
    }
    return nullptr;
}

}  // namespace dmtl::nn
