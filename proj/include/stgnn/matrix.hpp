// Dense row-major double-precision matrices and the elementwise/linear-algebra
// kernels everything else is built on. Plain value types, no gradient tracking
// here (see autodiff.hpp for the recorded versions).
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace stgnn {

struct DenseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;  // row-major, size rows*cols

    DenseMatrix() = default;
    DenseMatrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), data(static_cast<size_t>(r) * c, fill) {
        if (r < 0 || c < 0) throw std::invalid_argument("DenseMatrix: negative shape");
    }

    static DenseMatrix identity(int n) {
        DenseMatrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    double& operator()(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }

    double* row_ptr(int i) { return data.data() + static_cast<size_t>(i) * cols; }
    const double* row_ptr(int i) const { return data.data() + static_cast<size_t>(i) * cols; }

    size_t size() const { return data.size(); }
    bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }

    std::string shape_str() const {
        return std::to_string(rows) + "x" + std::to_string(cols);
    }

    bool all_finite() const {
        for (double v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

inline void check_same_shape(const DenseMatrix& a, const DenseMatrix& b, const char* op) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape_str() +
                                    " vs " + b.shape_str());
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument("matmul: dimension mismatch (" + a.shape_str() + ") * (" +
                                    b.shape_str() + ")");
    DenseMatrix out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        double* orow = out.row_ptr(i);
        for (int k = 0; k < a.cols; ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            const double* brow = b.row_ptr(k);
            for (int j = 0; j < b.cols; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

// dst += g * b^T
inline void acc_matmul_nt(DenseMatrix& dst, const DenseMatrix& g, const DenseMatrix& b) {
    for (int i = 0; i < g.rows; ++i) {
        const double* grow = g.row_ptr(i);
        double* drow = dst.row_ptr(i);
        for (int j = 0; j < b.rows; ++j) {
            const double* brow = b.row_ptr(j);
            double acc = 0.0;
            for (int n = 0; n < g.cols; ++n) acc += grow[n] * brow[n];
            drow[j] += acc;
        }
    }
}

// dst += a^T * g
inline void acc_matmul_tn(DenseMatrix& dst, const DenseMatrix& a, const DenseMatrix& g) {
    for (int m = 0; m < a.rows; ++m) {
        const double* arow = a.row_ptr(m);
        const double* grow = g.row_ptr(m);
        for (int i = 0; i < a.cols; ++i) {
            const double ami = arow[i];
            if (ami == 0.0) continue;
            double* drow = dst.row_ptr(i);
            for (int j = 0; j < g.cols; ++j) drow[j] += ami * grow[j];
        }
    }
}

inline DenseMatrix transpose(const DenseMatrix& a) {
    DenseMatrix out(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) out(j, i) = a(i, j);
    return out;
}

inline DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
    check_same_shape(a, b, "add");
    DenseMatrix out = a;
    for (size_t i = 0; i < out.size(); ++i) out.data[i] += b.data[i];
    return out;
}

inline DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b) {
    check_same_shape(a, b, "sub");
    DenseMatrix out = a;
    for (size_t i = 0; i < out.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

inline DenseMatrix hadamard(const DenseMatrix& a, const DenseMatrix& b) {
    check_same_shape(a, b, "hadamard");
    DenseMatrix out = a;
    for (size_t i = 0; i < out.size(); ++i) out.data[i] *= b.data[i];
    return out;
}

inline DenseMatrix scale(const DenseMatrix& a, double c) {
    DenseMatrix out = a;
    for (double& v : out.data) v *= c;
    return out;
}

enum class Activation { relu, sigmoid, tanh };

inline double sigmoid_scalar(double x) {
    // split on sign so exp never overflows
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

inline DenseMatrix activation(Activation kind, const DenseMatrix& x) {
    DenseMatrix out = x;
    switch (kind) {
        case Activation::relu:
            for (double& v : out.data) v = v > 0.0 ? v : 0.0;
            break;
        case Activation::sigmoid:
            for (double& v : out.data) v = sigmoid_scalar(v);
            break;
        case Activation::tanh:
            for (double& v : out.data) v = std::tanh(v);
            break;
    }
    return out;
}

inline DenseMatrix softmax_rows(const DenseMatrix& x) {
    DenseMatrix out(x.rows, x.cols);
    for (int i = 0; i < x.rows; ++i) {
        const double* r = x.row_ptr(i);
        double* o = out.row_ptr(i);
        double mx = r[0];
        for (int j = 1; j < x.cols; ++j) mx = std::max(mx, r[j]);
        double denom = 0.0;
        for (int j = 0; j < x.cols; ++j) {
            o[j] = std::exp(r[j] - mx);
            denom += o[j];
        }
        for (int j = 0; j < x.cols; ++j) o[j] /= denom;
    }
    return out;
}

inline double sum_all(const DenseMatrix& a) {
    double s = 0.0;
    for (double v : a.data) s += v;
    return s;
}

inline double frobenius_norm(const DenseMatrix& a) {
    double s = 0.0;
    for (double v : a.data) s += v * v;
    return std::sqrt(s);
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    check_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

inline DenseMatrix unit_rows(const DenseMatrix& a) {
    DenseMatrix out = a;
    for (int i = 0; i < a.rows; ++i) {
        double norm = 0.0;
        for (int j = 0; j < a.cols; ++j) norm += a(i, j) * a(i, j);
        norm = std::sqrt(norm);
        if (norm > 0.0)
            for (int j = 0; j < a.cols; ++j) out(i, j) /= norm;
    }
    return out;
}

/// A trainable matrix: value plus an accumulated gradient of the same shape.
struct Parameter {
    std::string name;
    DenseMatrix value;
    DenseMatrix grad;
    bool trainable = true;

    Parameter() = default;
    Parameter(std::string n, DenseMatrix v)
        : name(std::move(n)), value(std::move(v)), grad(value.rows, value.cols) {}

    void zero_grad() {
        if (!grad.same_shape(value)) grad = DenseMatrix(value.rows, value.cols);
        std::fill(grad.data.begin(), grad.data.end(), 0.0);
    }
};

}  // namespace stgnn
