// Reverse-mode gradient tape over DenseMatrix values.
//
// A Tape records one forward pass as a flat list of nodes in creation order,
// which is already a topological order, so backward() is a single reverse
// sweep. The tape is rebuilt for every forward pass; trainable Parameters are
// bound in as leaves and receive accumulated gradients when backward() runs.
// Repeated backward() calls without zeroing parameter grads accumulate, which
// is what mini-batch averaging relies on.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "stgnn/matrix.hpp"

namespace stgnn {

enum class Op {
    leaf,
    matmul,      // a * b
    transpose_m, // a^T
    add_m,       // a + b
    sub_m,       // a - b
    hadamard_m,  // a .* b
    scale_m,     // c * a
    add_const,   // a + aux
    mul_const,   // a .* aux  (masks, dropout)
    add_row,     // a + broadcast row b (1 x C)
    concat_cols, // [a | b]
    relu_m,
    sigmoid_m,
    tanh_m,
    softmax_rows_m,
    sum_all_m,   // 1x1 total
    unit_rows_m, // rows scaled to unit L2 norm (aux holds the norms)
    zero_diag_m,
    row_sums_m,  // N x 1
    rsqrt_m,     // elementwise x^{-1/2}, requires x > 0
    scale_rows_m,// a[i,j] * s[i],  s is N x 1
    scale_cols_m,// a[i,j] * s[j],  s is N x 1 (square a)
    rowwise_dot, // sum_j a[i,j] b[i,j] -> N x 1
    take_col,    // a[:, idx] -> N x 1
};

class Tape;

/// Handle to a node on a Tape.
struct Var {
    Tape* tape = nullptr;
    int id = -1;

    bool valid() const { return tape != nullptr && id >= 0; }
    const DenseMatrix& value() const;
    int rows() const { return value().rows; }
    int cols() const { return value().cols; }
};

class Tape {
public:
    struct Node {
        Op op = Op::leaf;
        int a = -1;
        int b = -1;
        DenseMatrix value;
        DenseMatrix grad;   // allocated during backward
        DenseMatrix aux;    // op-specific constant payload
        double c = 0.0;     // scalar payload (scale) / int payload (take_col)
        Parameter* param = nullptr;
    };

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    size_t size() const { return nodes_.size(); }
    const Node& node(int id) const { return nodes_[static_cast<size_t>(id)]; }
    Node& node(int id) { return nodes_[static_cast<size_t>(id)]; }

    void clear() { nodes_.clear(); }
    void reserve(size_t n) { nodes_.reserve(n); }

    Var constant(DenseMatrix v) {
        return push(Op::leaf, -1, -1, std::move(v));
    }

    /// Bind a trainable parameter as a leaf; backward() accumulates into p.grad.
    Var parameter(Parameter& p) {
        Var v = push(Op::leaf, -1, -1, p.value);
        nodes_.back().param = &p;
        return v;
    }

    /// Reverse sweep from a scalar loss. `seed` is the incoming adjoint of the
    /// loss itself (1/batch_size when averaging a batch sample by sample).
    void backward(Var loss, double seed = 1.0) {
        if (!loss.valid() || loss.tape != this)
            throw std::logic_error("backward: loss is not a node of this tape");
        Node& ln = node(loss.id);
        if (ln.value.rows != 1 || ln.value.cols != 1)
            throw std::logic_error("backward: loss must be scalar (1x1), got " +
                                   ln.value.shape_str());
        for (Node& n : nodes_) {
            n.grad = DenseMatrix(n.value.rows, n.value.cols);
        }
        ln.grad(0, 0) = seed;
        for (int id = static_cast<int>(nodes_.size()) - 1; id >= 0; --id) {
            step_backward(id);
        }
    }

    // ---- recorded operations -------------------------------------------

    Var matmul(Var a, Var b) {
        return push(Op::matmul, a.id, b.id, stgnn::matmul(val(a), val(b)));
    }
    Var transpose(Var a) { return push(Op::transpose_m, a.id, -1, stgnn::transpose(val(a))); }
    Var add(Var a, Var b) { return push(Op::add_m, a.id, b.id, stgnn::add(val(a), val(b))); }
    Var sub(Var a, Var b) { return push(Op::sub_m, a.id, b.id, stgnn::sub(val(a), val(b))); }
    Var hadamard(Var a, Var b) {
        return push(Op::hadamard_m, a.id, b.id, stgnn::hadamard(val(a), val(b)));
    }
    Var scale(Var a, double c) {
        Var v = push(Op::scale_m, a.id, -1, stgnn::scale(val(a), c));
        nodes_.back().c = c;
        return v;
    }
    Var add_const(Var a, DenseMatrix k) {
        Var v = push(Op::add_const, a.id, -1, stgnn::add(val(a), k));
        nodes_.back().aux = std::move(k);
        return v;
    }
    Var mul_const(Var a, DenseMatrix k) {
        Var v = push(Op::mul_const, a.id, -1, stgnn::hadamard(val(a), k));
        nodes_.back().aux = std::move(k);
        return v;
    }
    Var add_row(Var a, Var row) {
        const DenseMatrix& m = val(a);
        const DenseMatrix& r = val(row);
        if (r.rows != 1 || r.cols != m.cols)
            throw std::invalid_argument("add_row: want 1x" + std::to_string(m.cols) + ", got " +
                                        r.shape_str());
        DenseMatrix out = m;
        for (int i = 0; i < m.rows; ++i)
            for (int j = 0; j < m.cols; ++j) out(i, j) += r(0, j);
        return push(Op::add_row, a.id, row.id, std::move(out));
    }
    Var concat_cols(Var a, Var b) {
        const DenseMatrix& ma = val(a);
        const DenseMatrix& mb = val(b);
        if (ma.rows != mb.rows)
            throw std::invalid_argument("concat_cols: row mismatch " + ma.shape_str() + " vs " +
                                        mb.shape_str());
        DenseMatrix out(ma.rows, ma.cols + mb.cols);
        for (int i = 0; i < ma.rows; ++i) {
            double* o = out.row_ptr(i);
            const double* ra = ma.row_ptr(i);
            const double* rb = mb.row_ptr(i);
            for (int j = 0; j < ma.cols; ++j) o[j] = ra[j];
            for (int j = 0; j < mb.cols; ++j) o[ma.cols + j] = rb[j];
        }
        return push(Op::concat_cols, a.id, b.id, std::move(out));
    }
    Var relu(Var a) { return push(Op::relu_m, a.id, -1, activation(Activation::relu, val(a))); }
    Var sigmoid(Var a) {
        return push(Op::sigmoid_m, a.id, -1, activation(Activation::sigmoid, val(a)));
    }
    Var tanh(Var a) { return push(Op::tanh_m, a.id, -1, activation(Activation::tanh, val(a))); }
    Var activation_of(Activation kind, Var a) {
        switch (kind) {
            case Activation::relu: return relu(a);
            case Activation::sigmoid: return sigmoid(a);
            default: return tanh(a);
        }
    }
    Var softmax_rows(Var a) {
        return push(Op::softmax_rows_m, a.id, -1, stgnn::softmax_rows(val(a)));
    }
    Var sum_all(Var a) {
        DenseMatrix s(1, 1);
        s(0, 0) = stgnn::sum_all(val(a));
        return push(Op::sum_all_m, a.id, -1, std::move(s));
    }
    Var unit_rows(Var a) {
        const DenseMatrix& m = val(a);
        DenseMatrix norms(m.rows, 1);
        DenseMatrix out(m.rows, m.cols);
        for (int i = 0; i < m.rows; ++i) {
            double s = 0.0;
            for (int j = 0; j < m.cols; ++j) s += m(i, j) * m(i, j);
            const double nrm = std::sqrt(s);
            if (nrm == 0.0)
                throw std::invalid_argument("unit_rows: zero row " + std::to_string(i));
            norms(i, 0) = nrm;
            for (int j = 0; j < m.cols; ++j) out(i, j) = m(i, j) / nrm;
        }
        Var v = push(Op::unit_rows_m, a.id, -1, std::move(out));
        nodes_.back().aux = std::move(norms);
        return v;
    }
    Var zero_diag(Var a) {
        DenseMatrix out = val(a);
        const int n = std::min(out.rows, out.cols);
        for (int i = 0; i < n; ++i) out(i, i) = 0.0;
        return push(Op::zero_diag_m, a.id, -1, std::move(out));
    }
    Var row_sums(Var a) {
        const DenseMatrix& m = val(a);
        DenseMatrix out(m.rows, 1);
        for (int i = 0; i < m.rows; ++i) {
            double s = 0.0;
            const double* r = m.row_ptr(i);
            for (int j = 0; j < m.cols; ++j) s += r[j];
            out(i, 0) = s;
        }
        return push(Op::row_sums_m, a.id, -1, std::move(out));
    }
    Var rsqrt(Var a) {
        DenseMatrix out = val(a);
        for (double& v : out.data) {
            if (v <= 0.0) throw std::invalid_argument("rsqrt: nonpositive input");
            v = 1.0 / std::sqrt(v);
        }
        return push(Op::rsqrt_m, a.id, -1, std::move(out));
    }
    Var scale_rows(Var a, Var s) {
        const DenseMatrix& m = val(a);
        const DenseMatrix& sm = val(s);
        if (sm.cols != 1 || sm.rows != m.rows)
            throw std::invalid_argument("scale_rows: scaler must be " + std::to_string(m.rows) +
                                        "x1, got " + sm.shape_str());
        DenseMatrix out = m;
        for (int i = 0; i < m.rows; ++i) {
            const double si = sm(i, 0);
            double* r = out.row_ptr(i);
            for (int j = 0; j < m.cols; ++j) r[j] *= si;
        }
        return push(Op::scale_rows_m, a.id, s.id, std::move(out));
    }
    Var scale_cols(Var a, Var s) {
        const DenseMatrix& m = val(a);
        const DenseMatrix& sm = val(s);
        if (sm.cols != 1 || sm.rows != m.cols)
            throw std::invalid_argument("scale_cols: scaler must be " + std::to_string(m.cols) +
                                        "x1, got " + sm.shape_str());
        DenseMatrix out = m;
        for (int i = 0; i < m.rows; ++i) {
            double* r = out.row_ptr(i);
            for (int j = 0; j < m.cols; ++j) r[j] *= sm(j, 0);
        }
        return push(Op::scale_cols_m, a.id, s.id, std::move(out));
    }
    Var rowwise_dot(Var a, Var b) {
        const DenseMatrix& ma = val(a);
        const DenseMatrix& mb = val(b);
        check_same_shape(ma, mb, "rowwise_dot");
        DenseMatrix out(ma.rows, 1);
        for (int i = 0; i < ma.rows; ++i) {
            double s = 0.0;
            const double* ra = ma.row_ptr(i);
            const double* rb = mb.row_ptr(i);
            for (int j = 0; j < ma.cols; ++j) s += ra[j] * rb[j];
            out(i, 0) = s;
        }
        return push(Op::rowwise_dot, a.id, b.id, std::move(out));
    }
    Var take_col(Var a, int idx) {
        const DenseMatrix& m = val(a);
        if (idx < 0 || idx >= m.cols) throw std::invalid_argument("take_col: index out of range");
        DenseMatrix out(m.rows, 1);
        for (int i = 0; i < m.rows; ++i) out(i, 0) = m(i, idx);
        Var v = push(Op::take_col, a.id, -1, std::move(out));
        nodes_.back().c = static_cast<double>(idx);
        return v;
    }

private:
    std::vector<Node> nodes_;

    const DenseMatrix& val(Var v) const {
        if (!v.valid() || v.tape != this)
            throw std::logic_error("tape op: operand from another tape");
        return nodes_[static_cast<size_t>(v.id)].value;
    }

    Var push(Op op, int a, int b, DenseMatrix value) {
        Node n;
        n.op = op;
        n.a = a;
        n.b = b;
        n.value = std::move(value);
        nodes_.push_back(std::move(n));
        return Var{this, static_cast<int>(nodes_.size()) - 1};
    }

    DenseMatrix& grad_of(int id) { return nodes_[static_cast<size_t>(id)].grad; }
    const DenseMatrix& val_of(int id) const { return nodes_[static_cast<size_t>(id)].value; }

    void step_backward(int id) {
        Node& n = nodes_[static_cast<size_t>(id)];
        const DenseMatrix& g = n.grad;
        switch (n.op) {
            case Op::leaf:
                if (n.param != nullptr && n.param->trainable) {
                    DenseMatrix& pg = n.param->grad;
                    if (!pg.same_shape(g)) pg = DenseMatrix(g.rows, g.cols);
                    for (size_t i = 0; i < g.size(); ++i) pg.data[i] += g.data[i];
                }
                break;
            case Op::matmul:
                acc_matmul_nt(grad_of(n.a), g, val_of(n.b));
                acc_matmul_tn(grad_of(n.b), val_of(n.a), g);
                break;
            case Op::transpose_m: {
                DenseMatrix& ga = grad_of(n.a);
                for (int i = 0; i < g.rows; ++i)
                    for (int j = 0; j < g.cols; ++j) ga(j, i) += g(i, j);
                break;
            }
            case Op::add_m: {
                accumulate(grad_of(n.a), g, 1.0);
                accumulate(grad_of(n.b), g, 1.0);
                break;
            }
            case Op::sub_m: {
                accumulate(grad_of(n.a), g, 1.0);
                accumulate(grad_of(n.b), g, -1.0);
                break;
            }
            case Op::hadamard_m: {
                DenseMatrix& ga = grad_of(n.a);
                DenseMatrix& gb = grad_of(n.b);
                const DenseMatrix& va = val_of(n.a);
                const DenseMatrix& vb = val_of(n.b);
                for (size_t i = 0; i < g.size(); ++i) {
                    ga.data[i] += g.data[i] * vb.data[i];
                    gb.data[i] += g.data[i] * va.data[i];
                }
                break;
            }
            case Op::scale_m:
                accumulate(grad_of(n.a), g, n.c);
                break;
            case Op::add_const:
                accumulate(grad_of(n.a), g, 1.0);
                break;
            case Op::mul_const: {
                DenseMatrix& ga = grad_of(n.a);
                for (size_t i = 0; i < g.size(); ++i) ga.data[i] += g.data[i] * n.aux.data[i];
                break;
            }
            case Op::add_row: {
                accumulate(grad_of(n.a), g, 1.0);
                DenseMatrix& gb = grad_of(n.b);
                for (int i = 0; i < g.rows; ++i)
                    for (int j = 0; j < g.cols; ++j) gb(0, j) += g(i, j);
                break;
            }
            case Op::concat_cols: {
                DenseMatrix& ga = grad_of(n.a);
                DenseMatrix& gb = grad_of(n.b);
                const int ca = ga.cols;
                for (int i = 0; i < g.rows; ++i) {
                    const double* gr = g.row_ptr(i);
                    double* ra = ga.row_ptr(i);
                    double* rb = gb.row_ptr(i);
                    for (int j = 0; j < ca; ++j) ra[j] += gr[j];
                    for (int j = 0; j < gb.cols; ++j) rb[j] += gr[ca + j];
                }
                break;
            }
            case Op::relu_m: {
                DenseMatrix& ga = grad_of(n.a);
                const DenseMatrix& va = val_of(n.a);
                for (size_t i = 0; i < g.size(); ++i)
                    if (va.data[i] > 0.0) ga.data[i] += g.data[i];
                break;
            }
            case Op::sigmoid_m: {
                DenseMatrix& ga = grad_of(n.a);
                for (size_t i = 0; i < g.size(); ++i) {
                    const double y = n.value.data[i];
                    ga.data[i] += g.data[i] * y * (1.0 - y);
                }
                break;
            }
            case Op::tanh_m: {
                DenseMatrix& ga = grad_of(n.a);
                for (size_t i = 0; i < g.size(); ++i) {
                    const double y = n.value.data[i];
                    ga.data[i] += g.data[i] * (1.0 - y * y);
                }
                break;
            }
            case Op::softmax_rows_m: {
                // dx_j = y_j * (g_j - sum_k g_k y_k) per row
                DenseMatrix& ga = grad_of(n.a);
                for (int i = 0; i < g.rows; ++i) {
                    const double* yr = n.value.row_ptr(i);
                    const double* gr = g.row_ptr(i);
                    double dot = 0.0;
                    for (int j = 0; j < g.cols; ++j) dot += gr[j] * yr[j];
                    double* gar = ga.row_ptr(i);
                    for (int j = 0; j < g.cols; ++j) gar[j] += yr[j] * (gr[j] - dot);
                }
                break;
            }
            case Op::sum_all_m: {
                DenseMatrix& ga = grad_of(n.a);
                const double gv = g(0, 0);
                for (double& v : ga.data) v += gv;
                break;
            }
            case Op::unit_rows_m: {
                // y = x / |x|;  dx = (g - (g . y) y) / |x|
                DenseMatrix& ga = grad_of(n.a);
                for (int i = 0; i < g.rows; ++i) {
                    const double* yr = n.value.row_ptr(i);
                    const double* gr = g.row_ptr(i);
                    const double nrm = n.aux(i, 0);
                    double dot = 0.0;
                    for (int j = 0; j < g.cols; ++j) dot += gr[j] * yr[j];
                    double* gar = ga.row_ptr(i);
                    for (int j = 0; j < g.cols; ++j) gar[j] += (gr[j] - dot * yr[j]) / nrm;
                }
                break;
            }
            case Op::zero_diag_m: {
                DenseMatrix& ga = grad_of(n.a);
                const int d = std::min(g.rows, g.cols);
                for (int i = 0; i < g.rows; ++i)
                    for (int j = 0; j < g.cols; ++j)
                        if (i != j || i >= d) ga(i, j) += g(i, j);
                break;
            }
            case Op::row_sums_m: {
                DenseMatrix& ga = grad_of(n.a);
                for (int i = 0; i < ga.rows; ++i) {
                    const double gv = g(i, 0);
                    double* r = ga.row_ptr(i);
                    for (int j = 0; j < ga.cols; ++j) r[j] += gv;
                }
                break;
            }
            case Op::rsqrt_m: {
                // y = x^{-1/2};  dy/dx = -y^3 / 2
                DenseMatrix& ga = grad_of(n.a);
                for (size_t i = 0; i < g.size(); ++i) {
                    const double y = n.value.data[i];
                    ga.data[i] += g.data[i] * (-0.5 * y * y * y);
                }
                break;
            }
            case Op::scale_rows_m: {
                DenseMatrix& ga = grad_of(n.a);
                DenseMatrix& gs = grad_of(n.b);
                const DenseMatrix& va = val_of(n.a);
                const DenseMatrix& vs = val_of(n.b);
                for (int i = 0; i < g.rows; ++i) {
                    const double si = vs(i, 0);
                    const double* gr = g.row_ptr(i);
                    const double* ar = va.row_ptr(i);
                    double* gar = ga.row_ptr(i);
                    double acc = 0.0;
                    for (int j = 0; j < g.cols; ++j) {
                        gar[j] += gr[j] * si;
                        acc += gr[j] * ar[j];
                    }
                    gs(i, 0) += acc;
                }
                break;
            }
            case Op::scale_cols_m: {
                DenseMatrix& ga = grad_of(n.a);
                DenseMatrix& gs = grad_of(n.b);
                const DenseMatrix& va = val_of(n.a);
                const DenseMatrix& vs = val_of(n.b);
                for (int i = 0; i < g.rows; ++i) {
                    const double* gr = g.row_ptr(i);
                    const double* ar = va.row_ptr(i);
                    double* gar = ga.row_ptr(i);
                    for (int j = 0; j < g.cols; ++j) {
                        gar[j] += gr[j] * vs(j, 0);
                        gs(j, 0) += gr[j] * ar[j];
                    }
                }
                break;
            }
            case Op::rowwise_dot: {
                DenseMatrix& ga = grad_of(n.a);
                DenseMatrix& gb = grad_of(n.b);
                const DenseMatrix& va = val_of(n.a);
                const DenseMatrix& vb = val_of(n.b);
                for (int i = 0; i < ga.rows; ++i) {
                    const double gv = g(i, 0);
                    const double* ar = va.row_ptr(i);
                    const double* br = vb.row_ptr(i);
                    double* gar = ga.row_ptr(i);
                    double* gbr = gb.row_ptr(i);
                    for (int j = 0; j < ga.cols; ++j) {
                        gar[j] += gv * br[j];
                        gbr[j] += gv * ar[j];
                    }
                }
                break;
            }
            case Op::take_col: {
                DenseMatrix& ga = grad_of(n.a);
                const int idx = static_cast<int>(n.c);
                for (int i = 0; i < g.rows; ++i) ga(i, idx) += g(i, 0);
                break;
            }
        }
    }

    static void accumulate(DenseMatrix& dst, const DenseMatrix& src, double factor) {
        for (size_t i = 0; i < dst.size(); ++i) dst.data[i] += factor * src.data[i];
    }

    friend struct Var;
};

inline const DenseMatrix& Var::value() const {
    return tape->node(id).value;
}

}  // namespace stgnn
