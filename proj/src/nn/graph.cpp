#include "dmtl/nn/graph.hpp"

#include "dmtl/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dmtl::nn {

namespace {

void require(bool ok, const char* what) {
    if (!ok) throw UsageError(std::string("shape mismatch in ") + what);
}

Graph& owner(Expr a, Expr b) {
    if (a.graph == nullptr || a.graph != b.graph) throw UsageError("expressions belong to different graphs");
    return *a.graph;
}

}  // namespace

const Tensor& Expr::value() const { return graph->value(*this); }

std::vector<double> softmax_values(std::span<const double> logits) {
    std::vector<double> out(logits.size());
    if (logits.empty()) return out;
    const double max = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - max);
        total += out[i];
    }
    for (double& v : out) v /= total;
    return out;
}

Expr Graph::push(Node node) {
    nodes_.push_back(std::move(node));
    return Expr{this, nodes_.size() - 1};
}

Graph::Node& Graph::node(Expr e) { return nodes_[e.id]; }

const Tensor& Graph::value_of(std::size_t id) const {
    const Node& n = nodes_[id];
    return n.op == Op::Param ? n.param->value : n.value;
}

const Tensor& Graph::value(Expr e) const { return value_of(e.id); }

const Tensor& Graph::grad(Expr e) const { return nodes_.at(e.id).grad; }

Expr Graph::input(Tensor value) {
    Node n;
    n.op = Op::Input;
    n.value = std::move(value);
    return push(std::move(n));
}

Expr Graph::param(Parameter& p) {
    if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Expr{this, it->second};
    Node n;
    n.op = Op::Param;
    n.param = &p;
    Expr e = push(std::move(n));
    param_nodes_.emplace(&p, e.id);
    return e;
}

Expr Graph::lookup(Parameter& table, std::size_t row) {
    if (row >= table.value.rows()) throw UsageError("lookup row out of range");
    Node n;
    n.op = Op::Lookup;
    n.param = &table;
    n.index = row;
    n.value = Tensor(table.value.cols(), 1);
    for (std::size_t c = 0; c < table.value.cols(); ++c) n.value[c] = table.value(row, c);
    return push(std::move(n));
}

Expr matvec(Expr w, Expr x) {
    Graph& g = owner(w, x);
    const Tensor& W = g.value(w);
    const Tensor& X = g.value(x);
    require(X.cols() == 1 && W.cols() == X.rows(), "matvec");
    Graph::Node n;
    n.op = Graph::Op::MatVec;
    n.args = {w.id, x.id};
    n.value = Tensor(W.rows(), 1);
    for (std::size_t r = 0; r < W.rows(); ++r) {
        double acc = 0.0;
        const double* row = &W.data()[r * W.cols()];
        for (std::size_t c = 0; c < W.cols(); ++c) acc += row[c] * X[c];
        n.value[r] = acc;
    }
    return g.push(std::move(n));
}

Expr tmatvec(Expr w, Expr x) {
    Graph& g = owner(w, x);
    const Tensor& W = g.value(w);
    const Tensor& X = g.value(x);
    require(X.cols() == 1 && W.rows() == X.rows(), "tmatvec");
    Graph::Node n;
    n.op = Graph::Op::TMatVec;
    n.args = {w.id, x.id};
    n.value = Tensor(W.cols(), 1);
    for (std::size_t r = 0; r < W.rows(); ++r) {
        const double xr = X[r];
        for (std::size_t c = 0; c < W.cols(); ++c) n.value[c] += W(r, c) * xr;
    }
    return g.push(std::move(n));
}

namespace {

template <class F>
Tensor zip(const Tensor& a, const Tensor& b, F f) {
    Tensor out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i], b[i]);
    return out;
}

template <class F>
Tensor map(const Tensor& a, F f) {
    Tensor out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = f(a[i]);
    return out;
}

}  // namespace

Expr operator+(Expr a, Expr b) {
    Graph& g = owner(a, b);
    require(g.value(a).same_shape(g.value(b)), "add");
    Graph::Node n;
    n.op = Graph::Op::Add;
    n.args = {a.id, b.id};
    n.value = zip(g.value(a), g.value(b), [](double x, double y) { return x + y; });
    return g.push(std::move(n));
}

Expr operator-(Expr a, Expr b) {
    Graph& g = owner(a, b);
    require(g.value(a).same_shape(g.value(b)), "sub");
    Graph::Node n;
    n.op = Graph::Op::Sub;
    n.args = {a.id, b.id};
    n.value = zip(g.value(a), g.value(b), [](double x, double y) { return x - y; });
    return g.push(std::move(n));
}

Expr cmul(Expr a, Expr b) {
    Graph& g = owner(a, b);
    require(g.value(a).same_shape(g.value(b)), "cmul");
    Graph::Node n;
    n.op = Graph::Op::CMul;
    n.args = {a.id, b.id};
    n.value = zip(g.value(a), g.value(b), [](double x, double y) { return x * y; });
    return g.push(std::move(n));
}

Expr scale(Expr a, double factor) {
    Graph& g = *a.graph;
    Graph::Node n;
    n.op = Graph::Op::Scale;
    n.args = {a.id};
    n.scalar = factor;
    n.value = map(g.value(a), [factor](double x) { return x * factor; });
    return g.push(std::move(n));
}

Expr one_minus(Expr a) {
    Graph& g = *a.graph;
    Graph::Node n;
    n.op = Graph::Op::OneMinus;
    n.args = {a.id};
    n.value = map(g.value(a), [](double x) { return 1.0 - x; });
    return g.push(std::move(n));
}

Expr sigmoid(Expr a) {
    Graph& g = *a.graph;
    Graph::Node n;
    n.op = Graph::Op::Sigmoid;
    n.args = {a.id};
    n.value = map(g.value(a), [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
    });
    return g.push(std::move(n));
}

Expr tanh(Expr a) {
    Graph& g = *a.graph;
    Graph::Node n;
    n.op = Graph::Op::Tanh;
    n.args = {a.id};
    n.value = map(g.value(a), [](double x) { return std::tanh(x); });
    return g.push(std::move(n));
}

Expr relu(Expr a) {
    Graph& g = *a.graph;
    Graph::Node n;
    n.op = Graph::Op::Relu;
    n.args = {a.id};
    n.value = map(g.value(a), [](double x) { return x > 0.0 ? x : 0.0; });
    return g.push(std::move(n));
}

Expr concat(std::span<const Expr> parts) {
    if (parts.empty()) throw UsageError("concat of nothing");
    Graph& g = *parts.front().graph;
    std::size_t rows = 0;
    for (Expr p : parts) {
        require(p.graph == &g && g.value(p).cols() == 1, "concat");
        rows += g.value(p).rows();
    }
    Graph::Node n;
    n.op = Graph::Op::Concat;
    n.value = Tensor(rows, 1);
    std::size_t offset = 0;
    for (Expr p : parts) {
        const Tensor& v = g.value(p);
        std::copy(v.data().begin(), v.data().end(), n.value.data().begin() + static_cast<std::ptrdiff_t>(offset));
        offset += v.rows();
        n.args.push_back(p.id);
    }
    return g.push(std::move(n));
}

Expr concat(std::initializer_list<Expr> parts) { return concat(std::span<const Expr>(parts.begin(), parts.size())); }

Expr columns(std::span<const Expr> parts) {
    if (parts.empty()) throw UsageError("columns of nothing");
    Graph& g = *parts.front().graph;
    const std::size_t rows = g.value(parts.front()).rows();
    for (Expr p : parts) require(p.graph == &g && g.value(p).cols() == 1 && g.value(p).rows() == rows, "columns");
    Graph::Node n;
    n.op = Graph::Op::Columns;
    n.value = Tensor(rows, parts.size());
    for (std::size_t c = 0; c < parts.size(); ++c) {
        const Tensor& v = g.value(parts[c]);
        for (std::size_t r = 0; r < rows; ++r) n.value(r, c) = v[r];
        n.args.push_back(parts[c].id);
    }
    return g.push(std::move(n));
}

Expr dot(Expr a, Expr b) {
    Graph& g = owner(a, b);
    require(g.value(a).same_shape(g.value(b)), "dot");
    Graph::Node n;
    n.op = Graph::Op::Dot;
    n.args = {a.id, b.id};
    double acc = 0.0;
    const Tensor& A = g.value(a);
    const Tensor& B = g.value(b);
    for (std::size_t i = 0; i < A.size(); ++i) acc += A[i] * B[i];
    n.value = Tensor::scalar(acc);
    return g.push(std::move(n));
}

Expr softmax(Expr a) {
    Graph& g = *a.graph;
    require(g.value(a).cols() == 1 && g.value(a).rows() > 0, "softmax");
    Graph::Node n;
    n.op = Graph::Op::Softmax;
    n.args = {a.id};
    n.value = Tensor::column(softmax_values(g.value(a).data()));
    return g.push(std::move(n));
}

Expr pick_neg_log_softmax(Expr logits, std::size_t index) {
    Graph& g = *logits.graph;
    const Tensor& z = g.value(logits);
    require(z.cols() == 1 && index < z.rows(), "pick_neg_log_softmax");
    const double max = *std::max_element(z.data().begin(), z.data().end());
    double total = 0.0;
    for (double v : z.data()) total += std::exp(v - max);
    Graph::Node n;
    n.op = Graph::Op::PickNegLogSoftmax;
    n.args = {logits.id};
    n.index = index;
    n.value = Tensor::scalar(max + std::log(total) - z[index]);
    return g.push(std::move(n));
}

Expr pick(Expr a, std::size_t index) {
    Graph& g = *a.graph;
    require(index < g.value(a).size(), "pick");
    Graph::Node n;
    n.op = Graph::Op::Pick;
    n.args = {a.id};
    n.index = index;
    n.value = Tensor::scalar(g.value(a)[index]);
    return g.push(std::move(n));
}

Expr sum(std::span<const Expr> terms) {
    if (terms.empty()) throw UsageError("sum of nothing");
    Graph& g = *terms.front().graph;
    Graph::Node n;
    n.op = Graph::Op::Sum;
    n.value = Tensor(g.value(terms.front()).rows(), g.value(terms.front()).cols());
    for (Expr t : terms) {
        const Tensor& v = g.value(t);
        require(t.graph == &g && v.same_shape(n.value), "sum");
        for (std::size_t i = 0; i < v.size(); ++i) n.value[i] += v[i];
        n.args.push_back(t.id);
    }
    return g.push(std::move(n));
}

void Graph::backward(Expr target, double seed) {
    if (target.graph != this) throw UsageError("backward target belongs to another graph");
    if (value(target).size() != 1) throw UsageError("backward target must be a scalar");
    for (std::size_t i = 0; i <= target.id; ++i) {
        const Tensor& v = value_of(i);
        nodes_[i].grad = Tensor(v.rows(), v.cols());
    }
    nodes_[target.id].grad[0] = seed;
    for (std::size_t i = target.id + 1; i-- > 0;) backprop_node(i);
}

void Graph::backprop_node(std::size_t id) {
    Node& n = nodes_[id];
    const Tensor& dy = n.grad;
    if (std::all_of(dy.data().begin(), dy.data().end(), [](double v) { return v == 0.0; })) return;

    auto arg_value = [&](std::size_t k) -> const Tensor& { return value_of(n.args[k]); };
    auto arg_grad = [&](std::size_t k) -> Tensor& { return nodes_[n.args[k]].grad; };

    switch (n.op) {
        case Op::Input:
            break;
        case Op::Param: {
            Tensor& g = n.param->grad;
            for (std::size_t i = 0; i < dy.size(); ++i) g[i] += dy[i];
            break;
        }
        case Op::Lookup: {
            Tensor& g = n.param->grad;
            for (std::size_t c = 0; c < dy.size(); ++c) g(n.index, c) += dy[c];
            break;
        }
        case Op::MatVec: {
            const Tensor& W = arg_value(0);
            const Tensor& X = arg_value(1);
            Tensor& dW = arg_grad(0);
            Tensor& dX = arg_grad(1);
            for (std::size_t r = 0; r < W.rows(); ++r) {
                const double g = dy[r];
                if (g == 0.0) continue;
                for (std::size_t c = 0; c < W.cols(); ++c) {
                    dW(r, c) += g * X[c];
                    dX[c] += W(r, c) * g;
                }
            }
            break;
        }
        case Op::TMatVec: {
            const Tensor& W = arg_value(0);
            const Tensor& X = arg_value(1);
            Tensor& dW = arg_grad(0);
            Tensor& dX = arg_grad(1);
            for (std::size_t r = 0; r < W.rows(); ++r) {
                double acc = 0.0;
                for (std::size_t c = 0; c < W.cols(); ++c) {
                    dW(r, c) += X[r] * dy[c];
                    acc += W(r, c) * dy[c];
                }
                dX[r] += acc;
            }
            break;
        }
        case Op::Add: {
            Tensor& da = arg_grad(0);
            Tensor& db = arg_grad(1);
            for (std::size_t i = 0; i < dy.size(); ++i) {
                da[i] += dy[i];
                db[i] += dy[i];
            }
            break;
        }
        case Op::Sub: {
            Tensor& da = arg_grad(0);
            Tensor& db = arg_grad(1);
            for (std::size_t i = 0; i < dy.size(); ++i) {
                da[i] += dy[i];
                db[i] -= dy[i];
            }
            break;
        }
        case Op::CMul: {
            const Tensor& a = arg_value(0);
            const Tensor& b = arg_value(1);
            Tensor& da = arg_grad(0);
            Tensor& db = arg_grad(1);
            for (std::size_t i = 0; i < dy.size(); ++i) {
                da[i] += dy[i] * b[i];
                db[i] += dy[i] * a[i];
            }
            break;
        }
        case Op::Scale: {
            Tensor& da = arg_grad(0);
            for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * n.scalar;
            break;
        }
        case Op::OneMinus: {
            Tensor& da = arg_grad(0);
            for (std::size_t i = 0; i < dy.size(); ++i) da[i] -= dy[i];
            break;
        }
        case Op::Sigmoid: {
            Tensor& da = arg_grad(0);
            for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * n.value[i] * (1.0 - n.value[i]);
            break;
        }
        case Op::Tanh: {
            Tensor& da = arg_grad(0);
            for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i] * (1.0 - n.value[i] * n.value[i]);
            break;
        }
        case Op::Relu: {
            const Tensor& a = arg_value(0);
            Tensor& da = arg_grad(0);
            for (std::size_t i = 0; i < dy.size(); ++i) {
                if (a[i] > 0.0) da[i] += dy[i];
            }
            break;
        }
        case Op::Concat: {
            std::size_t offset = 0;
            for (std::size_t k = 0; k < n.args.size(); ++k) {
                Tensor& da = arg_grad(k);
                for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[offset + i];
                offset += da.size();
            }
            break;
        }
        case Op::Columns: {
            for (std::size_t c = 0; c < n.args.size(); ++c) {
                Tensor& da = arg_grad(c);
                for (std::size_t r = 0; r < da.size(); ++r) da[r] += dy(r, c);
            }
            break;
        }
        case Op::Dot: {
            const Tensor& a = arg_value(0);
            const Tensor& b = arg_value(1);
            Tensor& da = arg_grad(0);
            Tensor& db = arg_grad(1);
            const double g = dy[0];
            for (std::size_t i = 0; i < a.size(); ++i) {
                da[i] += g * b[i];
                db[i] += g * a[i];
            }
            break;
        }
        case Op::Softmax: {
            Tensor& da = arg_grad(0);
            double inner = 0.0;
            for (std::size_t i = 0; i < dy.size(); ++i) inner += dy[i] * n.value[i];
            for (std::size_t i = 0; i < dy.size(); ++i) da[i] += n.value[i] * (dy[i] - inner);
            break;
        }
        case Op::PickNegLogSoftmax: {
            const auto probs = softmax_values(arg_value(0).data());
            Tensor& da = arg_grad(0);
            for (std::size_t i = 0; i < probs.size(); ++i) {
                da[i] += dy[0] * (probs[i] - (i == n.index ? 1.0 : 0.0));
            }
            break;
        }
        case Op::Pick: {
            arg_grad(0)[n.index] += dy[0];
            break;
        }
        case Op::Sum: {
            for (std::size_t k = 0; k < n.args.size(); ++k) {
                Tensor& da = arg_grad(k);
                for (std::size_t i = 0; i < dy.size(); ++i) da[i] += dy[i];
            }
            break;
        }
    }
}

}  // namespace dmtl::nn
