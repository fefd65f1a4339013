#include "edit_suggest/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace edit_suggest::ad {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap as_matrix(const Tensor& t)
{
    return ConstMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                    static_cast<Eigen::Index>(t.cols()));
}

MutMap as_matrix(Tensor& t)
{
    return MutMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

Graph& same_graph(Var a, Var b)
{
    if (!a.valid() || !b.valid() || &a.graph() != &b.graph()) {
        throw std::invalid_argument("operands belong to different graphs");
    }
    return a.graph();
}

void require_matrix(const Tensor& t, std::string_view what)
{
    if (t.rank() != 2) {
        throw ShapeError(std::string(what) + ": expected rank-2 operand, got " + t.shape_string());
    }
}

// Broadcast geometry for an elementwise binary op on rank-2 operands.
struct Broadcast {
    std::size_t rows, cols;
    std::size_t ar, ac, br, bc;

    std::size_t a_index(std::size_t i, std::size_t j) const
    {
        return (ar == 1 ? 0 : i) * ac + (ac == 1 ? 0 : j);
    }
    std::size_t b_index(std::size_t i, std::size_t j) const
    {
        return (br == 1 ? 0 : i) * bc + (bc == 1 ? 0 : j);
    }
};

Broadcast broadcast_shape(const Tensor& a, const Tensor& b, std::string_view what)
{
    require_matrix(a, what);
    require_matrix(b, what);
    Broadcast g{0, 0, a.rows(), a.cols(), b.rows(), b.cols()};
    auto join = [&](std::size_t x, std::size_t y) {
        if (x == y || y == 1) {
            return x;
        }
        if (x == 1) {
            return y;
        }
        throw ShapeError(std::string(what) + ": cannot broadcast " + a.shape_string() + " with " +
                         b.shape_string());
    };
    g.rows = join(g.ar, g.br);
    g.cols = join(g.ac, g.bc);
    return g;
}

template <class F>
Tensor unary_map(const Tensor& a, F f)
{
    Tensor out = Tensor::zeros(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) {
        out[i] = f(a[i]);
    }
    return out;
}

// Adjoint of a broadcast operand: sum the incoming adjoint over broadcast axes.
void accumulate_reduced(Graph& g, std::size_t target, const Tensor& full, std::size_t r,
                        std::size_t c)
{
    if (!g.requires_grad(target)) {
        return;
    }
    auto& adj = g.adjoint_of(target);
    const auto rows = full.rows();
    const auto cols = full.cols();
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            adj[(r == 1 ? 0 : i) * c + (c == 1 ? 0 : j)] += full(i, j);
        }
    }
}

void softmax_row(const double* in, double* out, std::size_t n)
{
    const double m = *std::max_element(in, in + n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        out[j] = std::exp(in[j] - m);
        total += out[j];
    }
    for (std::size_t j = 0; j < n; ++j) {
        out[j] /= total;
    }
}

double logsumexp_row(const double* in, std::size_t n)
{
    const double m = *std::max_element(in, in + n);
    if (!std::isfinite(m)) {
        return m;
    }
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        total += std::exp(in[j] - m);
    }
    return m + std::log(total);
}

}  // namespace

std::string_view op_name(Op op)
{
    switch (op) {
    case Op::constant: return "constant";
    case Op::parameter: return "parameter";
    case Op::affine: return "affine";
    case Op::matmul: return "matmul";
    case Op::tanh: return "tanh";
    case Op::relu: return "relu";
    case Op::exp: return "exp";
    case Op::log: return "log";
    case Op::softmax: return "softmax";
    case Op::log_softmax: return "log_softmax";
    case Op::logsumexp: return "logsumexp";
    case Op::add: return "add";
    case Op::sub: return "sub";
    case Op::mul: return "mul";
    case Op::scale: return "scale";
    case Op::shift: return "shift";
    case Op::sum: return "sum";
    case Op::row_sums: return "row_sums";
    case Op::col_sums: return "col_sums";
    case Op::concat: return "concat";
    case Op::slice: return "slice";
    case Op::clamp: return "clamp";
    }
    return "unknown";
}

const Tensor& Var::value() const
{
    return graph_->value(id_);
}

Var Graph::constant(Tensor value)
{
    return push(Op::constant, std::move(value), {}, nullptr);
}

Var Graph::parameter(const Tensor& param)
{
    if (auto it = param_nodes_.find(&param); it != param_nodes_.end()) {
        return Var(this, it->second);
    }
    auto v = push(Op::parameter, param, {}, nullptr);
    nodes_[v.id()].param = &param;
    nodes_[v.id()].requires_grad = true;
    param_nodes_.emplace(&param, v.id());
    return v;
}

Var Graph::push(Op op, Tensor value, std::vector<std::size_t> parents, BackwardFn backward)
{
    if (!value.all_finite()) {
        throw NumericError("non-finite value produced by op '" + std::string(op_name(op)) + "'");
    }
    Node node;
    node.op = op;
    node.value = std::move(value);
    node.requires_grad = std::any_of(parents.begin(), parents.end(),
                                     [&](std::size_t p) { return nodes_[p].requires_grad; });
    node.parents = std::move(parents);
    node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

Tensor& Graph::adjoint_of(std::size_t id)
{
    auto& node = nodes_[id];
    if (node.adjoint.empty() && !node.value.empty()) {
        node.adjoint = Tensor::zeros(node.value.shape());
    }
    return node.adjoint;
}

Gradients Graph::backward(Var root)
{
    if (&root.graph() != this) {
        throw std::invalid_argument("backward: root belongs to another graph");
    }
    if (root.value().size() != 1) {
        throw ShapeError("backward: root must be scalar, got " + root.value().shape_string());
    }
    for (auto& node : nodes_) {
        node.adjoint = Tensor();
    }
    adjoint_of(root.id())[0] = 1.0;

    Gradients grads;
    for (std::size_t i = root.id() + 1; i-- > 0;) {
        auto& node = nodes_[i];
        if (!node.requires_grad || node.adjoint.empty()) {
            continue;
        }
        if (!node.adjoint.all_finite()) {
            throw NumericError("non-finite adjoint at op '" + std::string(op_name(node.op)) + "'");
        }
        if (node.param != nullptr) {
            grads.emplace(node.param, node.adjoint);
        } else if (node.backward) {
            node.backward(*this, i);
        }
    }
    return grads;
}

Var matmul(Var a, Var b)
{
    auto& g = same_graph(a, b);
    const auto& av = a.value();
    const auto& bv = b.value();
    require_matrix(av, "matmul");
    require_matrix(bv, "matmul");
    if (av.cols() != bv.rows()) {
        throw ShapeError("matmul: " + av.shape_string() + " x " + bv.shape_string());
    }
    Tensor out = Tensor::zeros({av.rows(), bv.cols()});
    as_matrix(out).noalias() = as_matrix(av) * as_matrix(bv);
    const auto ia = a.id();
    const auto ib = b.id();
    return g.push(Op::matmul, std::move(out), {ia, ib}, [ia, ib](Graph& gr, std::size_t self) {
        const auto& dout = gr.adjoint(self);
        if (gr.requires_grad(ia)) {
            as_matrix(gr.adjoint_of(ia)).noalias() +=
                as_matrix(dout) * as_matrix(gr.value(ib)).transpose();
        }
        if (gr.requires_grad(ib)) {
            as_matrix(gr.adjoint_of(ib)).noalias() +=
                as_matrix(gr.value(ia)).transpose() * as_matrix(dout);
        }
    });
}

Var affine(Var x, Var w, Var b)
{
    auto& g = same_graph(x, w);
    same_graph(x, b);
    const auto& xv = x.value();
    const auto& wv = w.value();
    const auto& bv = b.value();
    require_matrix(xv, "affine");
    require_matrix(wv, "affine");
    require_matrix(bv, "affine");
    if (xv.cols() != wv.rows() || bv.rows() != 1 || bv.cols() != wv.cols()) {
        throw ShapeError("affine: x " + xv.shape_string() + ", w " + wv.shape_string() + ", b " +
                         bv.shape_string());
    }
    Tensor out = Tensor::zeros({xv.rows(), wv.cols()});
    auto om = as_matrix(out);
    om.noalias() = as_matrix(xv) * as_matrix(wv);
    om.rowwise() += as_matrix(bv).row(0);
    const auto ix = x.id();
    const auto iw = w.id();
    const auto ib = b.id();
    return g.push(Op::affine, std::move(out), {ix, iw, ib},
                  [ix, iw, ib](Graph& gr, std::size_t self) {
                      const auto dout = as_matrix(gr.adjoint(self));
                      if (gr.requires_grad(ix)) {
                          as_matrix(gr.adjoint_of(ix)).noalias() +=
                              dout * as_matrix(gr.value(iw)).transpose();
                      }
                      if (gr.requires_grad(iw)) {
                          as_matrix(gr.adjoint_of(iw)).noalias() +=
                              as_matrix(gr.value(ix)).transpose() * dout;
                      }
                      if (gr.requires_grad(ib)) {
                          as_matrix(gr.adjoint_of(ib)).row(0) += dout.colwise().sum();
                      }
                  });
}

namespace {

enum class BinaryKind { add, sub, mul };

Var binary(Var a, Var b, BinaryKind kind)
{
    auto& g = same_graph(a, b);
    const Op op = kind == BinaryKind::add ? Op::add : kind == BinaryKind::sub ? Op::sub : Op::mul;
    const auto bc = broadcast_shape(a.value(), b.value(), op_name(op));
    const auto& av = a.value();
    const auto& bv = b.value();
    Tensor out = Tensor::zeros({bc.rows, bc.cols});
    for (std::size_t i = 0; i < bc.rows; ++i) {
        for (std::size_t j = 0; j < bc.cols; ++j) {
            const double x = av[bc.a_index(i, j)];
            const double y = bv[bc.b_index(i, j)];
            out(i, j) = kind == BinaryKind::add ? x + y : kind == BinaryKind::sub ? x - y : x * y;
        }
    }
    const auto ia = a.id();
    const auto ib = b.id();
    return g.push(op, std::move(out), {ia, ib}, [ia, ib, bc, kind](Graph& gr, std::size_t self) {
        const auto& dout = gr.adjoint(self);
        const auto& av = gr.value(ia);
        const auto& bv = gr.value(ib);
        if (gr.requires_grad(ia)) {
            Tensor da = dout;
            if (kind == BinaryKind::mul) {
                for (std::size_t i = 0; i < bc.rows; ++i) {
                    for (std::size_t j = 0; j < bc.cols; ++j) {
                        da(i, j) *= bv[bc.b_index(i, j)];
                    }
                }
            }
            accumulate_reduced(gr, ia, da, bc.ar, bc.ac);
        }
        if (gr.requires_grad(ib)) {
            Tensor db = dout;
            for (std::size_t i = 0; i < bc.rows; ++i) {
                for (std::size_t j = 0; j < bc.cols; ++j) {
                    if (kind == BinaryKind::sub) {
                        db(i, j) = -db(i, j);
                    } else if (kind == BinaryKind::mul) {
                        db(i, j) *= av[bc.a_index(i, j)];
                    }
                }
            }
            accumulate_reduced(gr, ib, db, bc.br, bc.bc);
        }
    });
}

// Elementwise op whose local derivative depends on (input, output).
template <class F, class D>
Var elementwise(Var a, Op op, F f, D dfdx)
{
    auto& g = a.graph();
    Tensor out = unary_map(a.value(), f);
    const auto ia = a.id();
    return g.push(op, std::move(out), {ia}, [ia, dfdx](Graph& gr, std::size_t self) {
        const auto& dout = gr.adjoint(self);
        const auto& x = gr.value(ia);
        const auto& y = gr.value(self);
        auto& dx = gr.adjoint_of(ia);
        for (std::size_t i = 0; i < dout.size(); ++i) {
            dx[i] += dout[i] * dfdx(x[i], y[i]);
        }
    });
}

}  // namespace

Var add(Var a, Var b) { return binary(a, b, BinaryKind::add); }
Var sub(Var a, Var b) { return binary(a, b, BinaryKind::sub); }
Var mul(Var a, Var b) { return binary(a, b, BinaryKind::mul); }

Var scale(Var a, double c)
{
    return elementwise(
        a, Op::scale, [c](double x) { return c * x; }, [c](double, double) { return c; });
}

Var shift(Var a, double c)
{
    return elementwise(
        a, Op::shift, [c](double x) { return x + c; }, [](double, double) { return 1.0; });
}

Var neg(Var a) { return scale(a, -1.0); }

Var tanh(Var a)
{
    return elementwise(
        a, Op::tanh, [](double x) { return std::tanh(x); },
        [](double, double y) { return 1.0 - y * y; });
}

Var relu(Var a)
{
    return elementwise(
        a, Op::relu, [](double x) { return x > 0.0 ? x : 0.0; },
        [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var exp(Var a)
{
    return elementwise(
        a, Op::exp, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a)
{
    return elementwise(
        a, Op::log, [](double x) { return std::log(x); },
        [](double x, double) { return 1.0 / x; });
}

Var clamp(Var a, double lo, double hi)
{
    return elementwise(
        a, Op::clamp, [lo, hi](double x) { return std::clamp(x, lo, hi); },
        [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Var softmax_rows(Var a)
{
    auto& g = a.graph();
    const auto& av = a.value();
    require_matrix(av, "softmax");
    const auto rows = av.rows();
    const auto cols = av.cols();
    Tensor out = Tensor::zeros(av.shape());
    for (std::size_t i = 0; i < rows; ++i) {
        softmax_row(&av.data()[i * cols], &out.data()[i * cols], cols);
    }
    const auto ia = a.id();
    return g.push(Op::softmax, std::move(out), {ia}, [ia, rows, cols](Graph& gr, std::size_t self) {
        const auto& dout = gr.adjoint(self);
        const auto& s = gr.value(self);
        auto& dx = gr.adjoint_of(ia);
        for (std::size_t i = 0; i < rows; ++i) {
            double dot = 0.0;
            for (std::size_t j = 0; j < cols; ++j) {
                dot += dout(i, j) * s(i, j);
            }
            for (std::size_t j = 0; j < cols; ++j) {
                dx(i, j) += s(i, j) * (dout(i, j) - dot);
            }
        }
    });
}

Var log_softmax_rows(Var a)
{
    auto& g = a.graph();
    const auto& av = a.value();
    require_matrix(av, "log_softmax");
    const auto rows = av.rows();
    const auto cols = av.cols();
    Tensor out = Tensor::zeros(av.shape());
    for (std::size_t i = 0; i < rows; ++i) {
        const double lse = logsumexp_row(&av.data()[i * cols], cols);
        for (std::size_t j = 0; j < cols; ++j) {
            out(i, j) = av(i, j) - lse;
        }
    }
    const auto ia = a.id();
    return g.push(Op::log_softmax, std::move(out), {ia},
                  [ia, rows, cols](Graph& gr, std::size_t self) {
                      const auto& dout = gr.adjoint(self);
                      const auto& ls = gr.value(self);
                      auto& dx = gr.adjoint_of(ia);
                      for (std::size_t i = 0; i < rows; ++i) {
                          double total = 0.0;
                          for (std::size_t j = 0; j < cols; ++j) {
                              total += dout(i, j);
                          }
                          for (std::size_t j = 0; j < cols; ++j) {
                              dx(i, j) += dout(i, j) - std::exp(ls(i, j)) * total;
                          }
                      }
                  });
}

Var logsumexp_rows(Var a)
{
    auto& g = a.graph();
    const auto& av = a.value();
    require_matrix(av, "logsumexp");
    const auto rows = av.rows();
    const auto cols = av.cols();
    Tensor out = Tensor::zeros({rows, 1});
    for (std::size_t i = 0; i < rows; ++i) {
        out[i] = logsumexp_row(&av.data()[i * cols], cols);
    }
    const auto ia = a.id();
    return g.push(Op::logsumexp, std::move(out), {ia},
                  [ia, rows, cols](Graph& gr, std::size_t self) {
                      const auto& dout = gr.adjoint(self);
                      const auto& lse = gr.value(self);
                      const auto& x = gr.value(ia);
                      auto& dx = gr.adjoint_of(ia);
                      for (std::size_t i = 0; i < rows; ++i) {
                          for (std::size_t j = 0; j < cols; ++j) {
                              dx(i, j) += dout[i] * std::exp(x(i, j) - lse[i]);
                          }
                      }
                  });
}

Var sum(Var a)
{
    auto& g = a.graph();
    const auto& av = a.value();
    double total = 0.0;
    for (double v : av.data()) {
        total += v;
    }
    const auto ia = a.id();
    return g.push(Op::sum, Tensor::scalar(total), {ia}, [ia](Graph& gr, std::size_t self) {
        const double d = gr.adjoint(self)[0];
        auto& dx = gr.adjoint_of(ia);
        for (auto& v : dx.data()) {
            v += d;
        }
    });
}

Var row_sums(Var a)
{
    auto& g = a.graph();
    const auto& av = a.value();
    require_matrix(av, "row_sums");
    const auto rows = av.rows();
    const auto cols = av.cols();
    Tensor out = Tensor::zeros({rows, 1});
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            out[i] += av(i, j);
        }
    }
    const auto ia = a.id();
    return g.push(Op::row_sums, std::move(out), {ia},
                  [ia, rows, cols](Graph& gr, std::size_t self) {
                      const auto& dout = gr.adjoint(self);
                      auto& dx = gr.adjoint_of(ia);
                      for (std::size_t i = 0; i < rows; ++i) {
                          for (std::size_t j = 0; j < cols; ++j) {
                              dx(i, j) += dout[i];
                          }
                      }
                  });
}

Var col_sums(Var a)
{
    auto& g = a.graph();
    const auto& av = a.value();
    require_matrix(av, "col_sums");
    const auto rows = av.rows();
    const auto cols = av.cols();
    Tensor out = Tensor::zeros({1, cols});
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            out[j] += av(i, j);
        }
    }
    const auto ia = a.id();
    return g.push(Op::col_sums, std::move(out), {ia},
                  [ia, rows, cols](Graph& gr, std::size_t self) {
                      const auto& dout = gr.adjoint(self);
                      auto& dx = gr.adjoint_of(ia);
                      for (std::size_t i = 0; i < rows; ++i) {
                          for (std::size_t j = 0; j < cols; ++j) {
                              dx(i, j) += dout[j];
                          }
                      }
                  });
}

Var mean(Var a)
{
    return scale(sum(a), 1.0 / static_cast<double>(a.value().size()));
}

Var concat_cols(std::span<const Var> parts)
{
    if (parts.empty()) {
        throw ShapeError("concat: no operands");
    }
    auto& g = parts.front().graph();
    const auto rows = parts.front().rows();
    std::size_t cols = 0;
    std::vector<std::size_t> ids;
    std::vector<std::size_t> offsets;
    for (const auto& p : parts) {
        same_graph(parts.front(), p);
        if (p.rows() != rows) {
            throw ShapeError("concat: row mismatch " + p.value().shape_string());
        }
        ids.push_back(p.id());
        offsets.push_back(cols);
        cols += p.cols();
    }
    Tensor out = Tensor::zeros({rows, cols});
    for (std::size_t k = 0; k < parts.size(); ++k) {
        const auto& pv = parts[k].value();
        for (std::size_t i = 0; i < rows; ++i) {
            std::copy_n(&pv.data()[i * pv.cols()], pv.cols(), &out.data()[i * cols + offsets[k]]);
        }
    }
    return g.push(Op::concat, std::move(out), ids,
                  [ids, offsets, rows, cols](Graph& gr, std::size_t self) {
                      const auto& dout = gr.adjoint(self);
                      for (std::size_t k = 0; k < ids.size(); ++k) {
                          if (!gr.requires_grad(ids[k])) {
                              continue;
                          }
                          auto& dx = gr.adjoint_of(ids[k]);
                          const auto pc = dx.cols();
                          for (std::size_t i = 0; i < rows; ++i) {
                              for (std::size_t j = 0; j < pc; ++j) {
                                  dx(i, j) += dout(i, offsets[k] + j);
                              }
                          }
                      }
                  });
}

Var concat_cols(std::initializer_list<Var> parts)
{
    return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

namespace {

Var slice(Var a, std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1)
{
    auto& g = a.graph();
    const auto& av = a.value();
    require_matrix(av, "slice");
    if (r0 >= r1 || r1 > av.rows() || c0 >= c1 || c1 > av.cols()) {
        throw ShapeError("slice out of range on " + av.shape_string());
    }
    Tensor out = Tensor::zeros({r1 - r0, c1 - c0});
    for (std::size_t i = r0; i < r1; ++i) {
        for (std::size_t j = c0; j < c1; ++j) {
            out(i - r0, j - c0) = av(i, j);
        }
    }
    const auto ia = a.id();
    return g.push(Op::slice, std::move(out), {ia}, [ia, r0, r1, c0, c1](Graph& gr, std::size_t self) {
        const auto& dout = gr.adjoint(self);
        auto& dx = gr.adjoint_of(ia);
        for (std::size_t i = r0; i < r1; ++i) {
            for (std::size_t j = c0; j < c1; ++j) {
                dx(i, j) += dout(i - r0, j - c0);
            }
        }
    });
}

}  // namespace

Var slice_cols(Var a, std::size_t begin, std::size_t end)
{
    return slice(a, 0, a.rows(), begin, end);
}

Var slice_rows(Var a, std::size_t begin, std::size_t end)
{
    return slice(a, begin, end, 0, a.cols());
}

}  // namespace edit_suggest::ad
