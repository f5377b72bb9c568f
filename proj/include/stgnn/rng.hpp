// Seeded randomness helpers. Every random draw in the library goes through an
// explicitly seeded engine so runs are reproducible end to end.
#pragma once

#include <cstdint>
#include <random>

#include "stgnn/matrix.hpp"

namespace stgnn {

using Rng = std::mt19937_64;

// Derive an independent stream from a master seed (splitmix64 finalizer).
inline uint64_t derive_seed(uint64_t master, uint64_t stream) {
    uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline DenseMatrix uniform_matrix(int rows, int cols, double lo, double hi, Rng& rng) {
    DenseMatrix m(rows, cols);
    std::uniform_real_distribution<double> dist(lo, hi);
    for (double& v : m.data) v = dist(rng);
    return m;
}

inline DenseMatrix gaussian_matrix(int rows, int cols, double mean, double sd, Rng& rng) {
    DenseMatrix m(rows, cols);
    std::normal_distribution<double> dist(mean, sd);
    for (double& v : m.data) v = dist(rng);
    return m;
}

// fan-in scaled uniform init, +-1/sqrt(rows); weights are laid out input x output
inline DenseMatrix fanin_uniform(int rows, int cols, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(rows));
    return uniform_matrix(rows, cols, -bound, bound, rng);
}

}  // namespace stgnn
