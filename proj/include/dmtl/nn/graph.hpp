#pragma once

#include "dmtl/nn/parameter.hpp"
#include "dmtl/nn/tensor.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

namespace dmtl::nn {

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
struct Expr {
    Graph* graph = nullptr;
    std::size_t id = 0;

    const Tensor& value() const;
    std::size_t rows() const { return value().rows(); }
};

// Tape of operations recorded in evaluation order. Values are computed
// eagerly; backward() walks the tape in reverse and accumulates gradients
// into node buffers and into Parameter::grad.
class Graph {
public:
    Graph() = default;
    Graph(const Graph&) = delete;
    Graph& operator=(const Graph&) = delete;

    Expr input(Tensor value);
    // One node per parameter per graph; repeated calls return the same node.
    Expr param(Parameter& p);
    // Row `row` of a (rows x cols) table as a column vector.
    Expr lookup(Parameter& table, std::size_t row);

    const Tensor& value(Expr e) const;
    // Gradient of the last backward() target with respect to e (inputs included).
    const Tensor& grad(Expr e) const;

    // Seeds d(target)/d(target) = seed for a 1x1 target and backpropagates.
    void backward(Expr target, double seed = 1.0);

    std::size_t node_count() const { return nodes_.size(); }

private:
    enum class Op : std::uint8_t {
        Input, Param, Lookup, MatVec, TMatVec, Add, Sub, CMul, Scale, OneMinus, Sigmoid, Tanh, Relu,
        Concat, Columns, Dot, Softmax, PickNegLogSoftmax, Pick, Sum,
    };

    struct Node {
        Op op = Op::Input;
        std::vector<std::size_t> args;
        Tensor value;
        Tensor grad;
        Parameter* param = nullptr;
        double scalar = 0.0;
        std::size_t index = 0;
    };

    Expr push(Node node);
    Node& node(Expr e);
    const Tensor& value_of(std::size_t id) const;
    void backprop_node(std::size_t id);

    std::vector<Node> nodes_;
    std::unordered_map<const Parameter*, std::size_t> param_nodes_;

    friend Expr matvec(Expr w, Expr x);
    friend Expr tmatvec(Expr w, Expr x);
    friend Expr operator+(Expr a, Expr b);
    friend Expr operator-(Expr a, Expr b);
    friend Expr cmul(Expr a, Expr b);
    friend Expr scale(Expr a, double factor);
    friend Expr one_minus(Expr a);
    friend Expr sigmoid(Expr a);
    friend Expr tanh(Expr a);
    friend Expr relu(Expr a);
    friend Expr concat(std::span<const Expr> parts);
    friend Expr columns(std::span<const Expr> parts);
    friend Expr dot(Expr a, Expr b);
    friend Expr softmax(Expr a);
    friend Expr pick_neg_log_softmax(Expr logits, std::size_t index);
    friend Expr pick(Expr a, std::size_t index);
    friend Expr sum(std::span<const Expr> terms);
};

Expr matvec(Expr w, Expr x);   // W x
Expr tmatvec(Expr w, Expr x);  // W^T x
Expr operator+(Expr a, Expr b);
Expr operator-(Expr a, Expr b);
Expr cmul(Expr a, Expr b);  // elementwise product
Expr scale(Expr a, double factor);
Expr one_minus(Expr a);
Expr sigmoid(Expr a);
Expr tanh(Expr a);
Expr relu(Expr a);
Expr concat(std::span<const Expr> parts);
Expr concat(std::initializer_list<Expr> parts);
// Stacks equal-length column vectors side by side into a (rows x n) matrix.
Expr columns(std::span<const Expr> parts);
Expr dot(Expr a, Expr b);
Expr softmax(Expr a);
// -log softmax(logits)[index], computed stably.
Expr pick_neg_log_softmax(Expr logits, std::size_t index);
Expr pick(Expr a, std::size_t index);
// Elementwise sum of same-shaped terms.
Expr sum(std::span<const Expr> terms);

// Plain-value helpers shared by the layers and evaluation code.
std::vector<double> softmax_values(std::span<const double> logits);

}  // namespace dmtl::nn
