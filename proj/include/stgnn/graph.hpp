#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "stgnn/autodiff.hpp"
#include "stgnn/csv.hpp"
#include "stgnn/dataio.hpp"
#include "stgnn/matrix.hpp"
#include "stgnn/rng.hpp"

namespace stgnn {

inline constexpr int kDescriptorDim = 37;  // 24 hourly + 7 weekday + mean/sd + 4 weather means

inline int default_topk(int n) { return std::max(2, (n + 3) / 4); }

// Per-building yearly descriptor rows: mean daily profile (24), mean weekly
// profile (7), load mean and sd (2), mean of each weather feature (4).
inline DenseMatrix descriptor_matrix(const BuildingDataset& ds) {
    DenseMatrix D(ds.N, kDescriptorDim);
    std::vector<int> hour_of(ds.L), wday_of(ds.L);
    for (int t = 0; t < ds.L; ++t) {
        const CalendarFields cf = calendar_at(ds.timestamps[t]);
        hour_of[t] = cf.hour;
        wday_of[t] = weekday_from_days(ds.timestamps[t] / 24);
    }
    for (int n = 0; n < ds.N; ++n) {
        double hsum[24] = {0}, wsum[7] = {0};
        int hcnt[24] = {0}, wcnt[7] = {0};
        double sum = 0.0, sumsq = 0.0;
        double wx[4] = {0, 0, 0, 0};
        for (int t = 0; t < ds.L; ++t) {
            const double v = ds.at(t, n, 0);
            hsum[hour_of[t]] += v;
            ++hcnt[hour_of[t]];
            wsum[wday_of[t]] += v;
            ++wcnt[wday_of[t]];
            sum += v;
            sumsq += v * v;
            for (int f = 0; f < 4; ++f) wx[f] += ds.at(t, n, 2 + f);
        }
        int c = 0;
        for (int h = 0; h < 24; ++h) D(n, c++) = hcnt[h] ? hsum[h] / hcnt[h] : 0.0;
        for (int w = 0; w < 7; ++w) D(n, c++) = wcnt[w] ? wsum[w] / wcnt[w] : 0.0;
        const double mean = sum / ds.L;
        D(n, c++) = mean;
        D(n, c++) = std::sqrt(std::max(0.0, sumsq / ds.L - mean * mean));
        for (int f = 0; f < 4; ++f) D(n, c++) = wx[f] / ds.L;
    }
    return D;
}

// Random matrix with orthonormal columns (Gram-Schmidt on Gaussian draws).
inline DenseMatrix random_orthonormal_columns(int rows, int cols, Rng& rng) {
    if (cols > rows)
        throw std::invalid_argument("random_orthonormal_columns: cols must not exceed rows");
    DenseMatrix Q = gaussian_matrix(rows, cols, 0.0, 1.0, rng);
    for (int c = 0; c < cols; ++c) {
        for (int p = 0; p < c; ++p) {
            double dot = 0.0;
            for (int r = 0; r < rows; ++r) dot += Q(r, c) * Q(r, p);
            for (int r = 0; r < rows; ++r) Q(r, c) -= dot * Q(r, p);
        }
        double norm = 0.0;
        for (int r = 0; r < rows; ++r) norm += Q(r, c) * Q(r, c);
        norm = std::sqrt(norm);
        if (norm < 1e-12)
            throw std::runtime_error("random_orthonormal_columns: degenerate draw");
        for (int r = 0; r < rows; ++r) Q(r, c) /= norm;
    }
    return Q;
}

inline Parameter init_embeddings(const BuildingDataset& ds, int r, uint64_t seed) {
    if (ds.N < 1) throw std::invalid_argument("init_embeddings: empty dataset");
    if (r < 1) throw std::invalid_argument("init_embeddings: embedding width must be >= 1");
    const DenseMatrix D = descriptor_matrix(ds);
    DenseMatrix E(ds.N, r);
    if (r < kDescriptorDim) {
        Rng rng(derive_seed(seed, 0x9e3779b9));
        const DenseMatrix Q = random_orthonormal_columns(kDescriptorDim, r, rng);
        E = matmul(D, Q);
    } else {
        for (int n = 0; n < ds.N; ++n)
            for (int c = 0; c < kDescriptorDim; ++c) E(n, c) = D(n, c);
    }
    for (int n = 0; n < ds.N; ++n) {
        double norm = 0.0;
        for (int c = 0; c < r; ++c) norm += E(n, c) * E(n, c);
        norm = std::sqrt(norm);
        if (norm < 1e-12) {
            const double fill = 1.0 / std::sqrt(static_cast<double>(r));
            for (int c = 0; c < r; ++c) E(n, c) = fill;
        } else {
            for (int c = 0; c < r; ++c) E(n, c) /= norm;
        }
    }
    return Parameter("node_embeddings", std::move(E));
}

inline DenseMatrix similarity_matrix(const DenseMatrix& E) {
    for (int i = 0; i < E.rows; ++i) {
        double norm = 0.0;
        for (int c = 0; c < E.cols; ++c) norm += E(i, c) * E(i, c);
        if (std::sqrt(norm) < 1e-12)
            throw std::invalid_argument("similarity_matrix: embedding row " + std::to_string(i) +
                                        " is zero");
    }
    const DenseMatrix U = unit_rows(E);
    DenseMatrix A = matmul(U, transpose(U));
    for (int i = 0; i < A.rows; ++i)
        for (int j = 0; j < A.cols; ++j) A(i, j) = (i == j) ? 0.0 : std::max(0.0, A(i, j));
    return A;
}

// 0/1 mask keeping the k largest off-diagonal entries per row; ties broken by
// lower column index. The mask is what makes top-k non-differentiable.
inline DenseMatrix topk_mask(const DenseMatrix& A, int k) {
    if (A.rows != A.cols) throw std::invalid_argument("topk_mask: square matrix required");
    if (k < 1) throw std::invalid_argument("topk_mask: k must be >= 1");
    const int n = A.rows;
    DenseMatrix M(n, n, 0.0);
    const int keep = std::min(k, n - 1);
    std::vector<std::pair<double, int>> row;
    for (int i = 0; i < n; ++i) {
        row.clear();
        for (int j = 0; j < n; ++j)
            if (j != i) row.emplace_back(A(i, j), j);
        std::sort(row.begin(), row.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        for (int s = 0; s < keep; ++s) M(i, row[s].second) = 1.0;
    }
    return M;
}

inline DenseMatrix topk_filter(const DenseMatrix& A, int k) {
    return hadamard(A, topk_mask(A, k));
}

inline DenseMatrix normalize_adjacency(const DenseMatrix& A) {
    if (A.rows != A.cols) throw std::invalid_argument("normalize_adjacency: square required");
    const int n = A.rows;
    DenseMatrix At = A;
    for (int i = 0; i < n; ++i) At(i, i) += 1.0;
    std::vector<double> dinv(n);
    for (int i = 0; i < n; ++i) {
        double deg = 0.0;
        for (int j = 0; j < n; ++j) deg += At(i, j);
        dinv[i] = 1.0 / std::sqrt(deg);
    }
    DenseMatrix out(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(i, j) = dinv[i] * At(i, j) * dinv[j];
    return out;
}

struct AdjacencyMatrix {
    DenseMatrix A;       // filtered raw similarities, zero diagonal
    DenseMatrix A_norm;  // D^{-1/2} (A + I) D^{-1/2}
    int k = 0;
};

inline AdjacencyMatrix refresh_graph(const DenseMatrix& E, int k) {
    AdjacencyMatrix adj;
    adj.k = k;
    adj.A = topk_filter(similarity_matrix(E), k);
    adj.A_norm = normalize_adjacency(adj.A);
    return adj;
}

// Tape version used during training: gradients reach E through the retained
// entries, the top-k mask itself is a constant of the forward pass.
inline Var refresh_graph_tape(Tape& tape, Var E, int k, DenseMatrix* raw_out = nullptr) {
    Var U = tape.unit_rows(E);
    Var S = tape.zero_diag(tape.relu(tape.matmul(U, tape.transpose(U))));
    const DenseMatrix mask = topk_mask(S.value(), k);
    Var A = tape.mul_const(S, mask);
    if (raw_out) *raw_out = A.value();
    Var At = tape.add_const(A, DenseMatrix::identity(E.rows()));
    Var dinv = tape.rsqrt(tape.row_sums(At));
    return tape.scale_cols(tape.scale_rows(At, dinv), dinv);
}

inline void write_adjacency_sparse(const std::string& path, const DenseMatrix& A) {
    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < A.rows; ++i)
        for (int j = 0; j < A.cols; ++j)
            if (A(i, j) != 0.0)
                rows.push_back({std::to_string(i), std::to_string(j), format_double(A(i, j))});
    write_csv(path, {"i", "j", "weight"}, rows);
}

inline void write_adjacency_dense(const std::string& path, const DenseMatrix& A) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    for (int i = 0; i < A.rows; ++i) {
        for (int j = 0; j < A.cols; ++j) {
            if (j) out << ',';
            out << format_double(A(i, j));
        }
        out << '\n';
    }
}

}  // namespace stgnn
