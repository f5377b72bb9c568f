#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stgnn/dataio.hpp"
#include "stgnn/metrics.hpp"
#include "stgnn/model.hpp"
#include "stgnn/train.hpp"

namespace stgnn {

// ---------------------------------------------------------------------------
// Cluster assignments
// ---------------------------------------------------------------------------

struct ClusterAssignment {
    std::vector<int> labels;  // ids in 0..k-1, every id used
    int k = 0;
    std::string method;
};

// Connected components of the thresholded, symmetrized adjacency. Component
// labels are assigned in order of each component's smallest member index.
inline ClusterAssignment connectivity_clusters(const DenseMatrix& A) {
    if (A.rows != A.cols) throw std::invalid_argument("connectivity: adjacency must be square");
    const int n = A.rows;
    std::vector<int> parent(n);
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    };
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (std::max(A(i, j), A(j, i)) > 0.0) {
                const int ri = find(i), rj = find(j);
                if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
            }

    ClusterAssignment out;
    out.method = "connectivity";
    out.labels.assign(n, -1);
    std::vector<int> root_label(n, -1);
    for (int i = 0; i < n; ++i) {
        const int r = find(i);
        if (root_label[r] < 0) root_label[r] = out.k++;
        out.labels[i] = root_label[r];
    }
    return out;
}

// ---------------------------------------------------------------------------
// K-means with k-means++ seeding and Lloyd iterations
// ---------------------------------------------------------------------------

struct KMeansResult {
    ClusterAssignment assignment;
    DenseMatrix centers;  // k x p
    double inertia = 0.0;
};

namespace detail {

inline double sq_dist_row(const DenseMatrix& a, int i, const DenseMatrix& b, int j) {
    double s = 0.0;
    for (int c = 0; c < a.cols; ++c) {
        const double d = a(i, c) - b(j, c);
        s += d * d;
    }
    return s;
}

inline DenseMatrix kmeanspp_centers(const DenseMatrix& X, int k, Rng& rng) {
    const int n = X.rows;
    DenseMatrix centers(k, X.cols);
    std::vector<int> chosen;
    std::uniform_int_distribution<int> first(0, n - 1);
    chosen.push_back(first(rng));
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    while (static_cast<int>(chosen.size()) < k) {
        const int last = chosen.back();
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], sq_dist_row(X, i, X, last));
            total += d2[i];
        }
        int next = -1;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double r = u(rng);
            for (int i = 0; i < n; ++i) {
                r -= d2[i];
                if (r <= 0.0) {
                    next = i;
                    break;
                }
            }
            if (next < 0) next = n - 1;
        } else {
            next = first(rng);  // all remaining points coincide with a center
        }
        chosen.push_back(next);
    }
    for (int c = 0; c < k; ++c)
        for (int j = 0; j < X.cols; ++j) centers(c, j) = X(chosen[c], j);
    return centers;
}

inline double lloyd(const DenseMatrix& X, DenseMatrix& centers, std::vector<int>& labels,
                    int max_iter = 200) {
    const int n = X.rows;
    const int k = centers.rows;
    labels.assign(n, 0);
    double prev_inertia = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < max_iter; ++iter) {
        // Assign each point to its nearest center (ties -> lower index).
        double inertia = 0.0;
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = sq_dist_row(X, i, centers, 0);
            for (int c = 1; c < k; ++c) {
                const double d = sq_dist_row(X, i, centers, c);
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (labels[i] != best) changed = true;
            labels[i] = best;
            inertia += best_d;
        }
        // Repair empty clusters by stealing the farthest point of a
        // multi-member cluster; its contribution drops to zero.
        std::vector<int> counts(k, 0);
        for (int l : labels) ++counts[l];
        for (int c = 0; c < k; ++c) {
            if (counts[c] > 0) continue;
            int far = -1;
            double far_d = -1.0;
            for (int i = 0; i < n; ++i) {
                if (counts[labels[i]] <= 1) continue;
                const double d = sq_dist_row(X, i, centers, labels[i]);
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far < 0) throw std::logic_error("kmeans: cannot repair empty cluster");
            --counts[labels[far]];
            labels[far] = c;
            counts[c] = 1;
            inertia -= far_d;
            for (int j = 0; j < X.cols; ++j) centers(c, j) = X(far, j);
            changed = true;
        }
        if (inertia > prev_inertia + 1e-9 * (1.0 + prev_inertia))
            throw std::logic_error("kmeans: inertia increased across Lloyd iterations");
        prev_inertia = inertia;
        // Update centers as cluster means.
        DenseMatrix next(k, X.cols, 0.0);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < X.cols; ++j) next(labels[i], j) += X(i, j);
        for (int c = 0; c < k; ++c)
            for (int j = 0; j < X.cols; ++j) next(c, j) /= counts[c];
        centers = std::move(next);
        if (!changed) break;
    }
    // Final inertia against the converged centers.
    double inertia = 0.0;
    for (int i = 0; i < n; ++i) inertia += sq_dist_row(X, i, centers, labels[i]);
    if (inertia > prev_inertia + 1e-9 * (1.0 + prev_inertia))
        throw std::logic_error("kmeans: inertia increased across Lloyd iterations");
    return inertia;
}

}  // namespace detail

inline KMeansResult kmeans(const DenseMatrix& X, int k, uint64_t seed, int restarts = 10) {
    if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
    if (X.rows < k)
        throw std::invalid_argument("kmeans: need at least k points, got " +
                                    std::to_string(X.rows));
    KMeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        Rng rng(derive_seed(seed, 0x4B4D + static_cast<uint64_t>(r)));
        DenseMatrix centers = detail::kmeanspp_centers(X, k, rng);
        std::vector<int> labels;
        const double inertia = detail::lloyd(X, centers, labels);
        if (inertia < best.inertia) {
            best.inertia = inertia;
            best.centers = std::move(centers);
            best.assignment.labels = std::move(labels);
        }
    }
    best.assignment.k = k;
    best.assignment.method = "kmeans";
    return best;
}

// ---------------------------------------------------------------------------
// Silhouette
// ---------------------------------------------------------------------------

inline double silhouette(const DenseMatrix& X, const std::vector<int>& labels) {
    const int n = X.rows;
    if (static_cast<int>(labels.size()) != n)
        throw std::invalid_argument("silhouette: labels length mismatch");
    int k = 0;
    for (int l : labels) {
        if (l < 0) throw std::invalid_argument("silhouette: negative label");
        k = std::max(k, l + 1);
    }
    if (k < 2) throw std::invalid_argument("silhouette: need at least 2 clusters");
    std::vector<int> counts(k, 0);
    for (int l : labels) ++counts[l];
    for (int c = 0; c < k; ++c)
        if (counts[c] == 0) throw std::invalid_argument("silhouette: empty cluster id");

    double total = 0.0;
    for (int i = 0; i < n; ++i) {
        if (counts[labels[i]] == 1) continue;  // singleton contributes 0
        std::vector<double> mean_d(k, 0.0);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            mean_d[labels[j]] += std::sqrt(detail::sq_dist_row(X, i, X, j));
        }
        for (int c = 0; c < k; ++c) {
            const int denom = (c == labels[i]) ? counts[c] - 1 : counts[c];
            mean_d[c] /= denom;
        }
        const double a = mean_d[labels[i]];
        double b = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k; ++c)
            if (c != labels[i]) b = std::min(b, mean_d[c]);
        const double m = std::max(a, b);
        total += (m == 0.0) ? 0.0 : (b - a) / m;
    }
    return total / static_cast<double>(n);
}

struct SilhouetteScan {
    std::vector<std::pair<int, double>> scores;  // (k, mean silhouette)
    int best_k = 0;
    double best_score = -std::numeric_limits<double>::infinity();
};

inline SilhouetteScan select_k_by_silhouette(const DenseMatrix& X, uint64_t seed, int k_lo = 2,
                                             int k_hi = 10) {
    k_hi = std::min(k_hi, X.rows - 1);
    if (k_lo < 2 || k_hi < k_lo)
        throw std::invalid_argument("select_k: need at least 3 points and k range from 2");
    SilhouetteScan scan;
    for (int k = k_lo; k <= k_hi; ++k) {
        const KMeansResult km = kmeans(X, k, derive_seed(seed, 100 + static_cast<uint64_t>(k)));
        const double s = silhouette(X, km.assignment.labels);
        scan.scores.emplace_back(k, s);
        if (s > scan.best_score) {  // strict: ties keep the smaller k
            scan.best_score = s;
            scan.best_k = k;
        }
    }
    return scan;
}

// Per-building clustering features: the normalized full-year load series
// followed by mean and sd of each weather channel.
inline DenseMatrix building_feature_matrix(const BuildingDataset& ds) {
    const int weather_lo = 2;  // channels: load, day_type, then 4 weather
    const int n_weather = ds.d - weather_lo;
    DenseMatrix X(ds.N, ds.L + 2 * n_weather);
    for (int n = 0; n < ds.N; ++n) {
        for (int t = 0; t < ds.L; ++t) X(n, t) = ds.at(t, n, 0);
        for (int f = 0; f < n_weather; ++f) {
            double mean = 0.0;
            for (int t = 0; t < ds.L; ++t) mean += ds.at(t, n, weather_lo + f);
            mean /= ds.L;
            double var = 0.0;
            for (int t = 0; t < ds.L; ++t) {
                const double d = ds.at(t, n, weather_lo + f) - mean;
                var += d * d;
            }
            X(n, ds.L + 2 * f) = mean;
            X(n, ds.L + 2 * f + 1) = std::sqrt(var / ds.L);
        }
    }
    return X;
}

// ---------------------------------------------------------------------------
// Adjusted Rand index
// ---------------------------------------------------------------------------

inline double compare_clusterings(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("compare_clusterings: label lengths differ");
    const size_t n = a.size();
    if (n == 0) throw std::invalid_argument("compare_clusterings: empty labelings");
    int ka = 0, kb = 0;
    for (int l : a) ka = std::max(ka, l + 1);
    for (int l : b) kb = std::max(kb, l + 1);
    std::vector<std::vector<long long>> table(ka, std::vector<long long>(kb, 0));
    for (size_t i = 0; i < n; ++i) ++table[a[i]][b[i]];

    auto choose2 = [](long long m) { return m * (m - 1) / 2; };
    double sum_ij = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (int i = 0; i < ka; ++i) {
        long long row = 0;
        for (int j = 0; j < kb; ++j) {
            sum_ij += choose2(table[i][j]);
            row += table[i][j];
        }
        sum_a += choose2(row);
    }
    for (int j = 0; j < kb; ++j) {
        long long col = 0;
        for (int i = 0; i < ka; ++i) col += table[i][j];
        sum_b += choose2(col);
    }
    const double pairs = choose2(static_cast<long long>(n));
    const double expected = sum_a * sum_b / pairs;
    const double max_index = 0.5 * (sum_a + sum_b);
    const double denom = max_index - expected;
    if (denom == 0.0) return 1.0;  // both partitions degenerate in the same way
    return (sum_ij - expected) / denom;
}

// ---------------------------------------------------------------------------
// Shuffle robustness (inference-time feature-row permutation)
// ---------------------------------------------------------------------------

struct RobustnessRow {
    double ratio;
    double mse;
    double mae;
};

namespace detail {

struct EvalAccumulator {
    double se = 0.0, ae = 0.0;
    size_t count = 0;
    void add(const DenseMatrix& yhat, const DenseMatrix& y) {
        for (size_t i = 0; i < y.size(); ++i) {
            const double d = yhat.data[i] - y.data[i];
            se += d * d;
            ae += std::abs(d);
        }
        count += y.size();
    }
};

}  // namespace detail

inline std::vector<RobustnessRow> shuffle_robustness(AttGcnModel& model,
                                                     const std::vector<SpatioTemporalSample>& test,
                                                     uint64_t seed, int trials = 5) {
    if (test.empty()) throw std::invalid_argument("shuffle_robustness: no test samples");
    if (trials < 1) throw std::invalid_argument("shuffle_robustness: trials must be >= 1");
    const int N = test[0].y.cols;

    std::vector<RobustnessRow> rows;
    for (int ri = 0; ri <= 10; ++ri) {
        const double ratio = ri / 10.0;
        const int m = (ri * N + 9) / 10;  // ceil(ratio * N) in exact arithmetic
        if (m <= 1) {
            // identity permutation: every trial reduces to the plain
            // evaluation, so take that from the shared path once rather than
            // averaging copies (averaging k identical values is not an
            // identity in floating point unless k is a power of two)
            const PooledPredictions pooled = collect_predictions(model, test);
            const MetricsRow r = metrics(pooled.yhat, pooled.y).overall;
            rows.push_back({ratio, r.mse, r.mae});
            continue;
        }
        double mse_acc = 0.0, mae_acc = 0.0;
        for (int trial = 0; trial < trials; ++trial) {
            Rng rng(derive_seed(seed, static_cast<uint64_t>(ri) * 1000 + trial));
            std::vector<int> perm(N);
            std::iota(perm.begin(), perm.end(), 0);
            std::vector<int> all(N), sel;
            std::iota(all.begin(), all.end(), 0);
            std::sample(all.begin(), all.end(), std::back_inserter(sel), m, rng);
            std::vector<int> shuffled = sel;
            std::shuffle(shuffled.begin(), shuffled.end(), rng);
            for (size_t i = 0; i < sel.size(); ++i) perm[sel[i]] = shuffled[i];

            detail::EvalAccumulator acc;
            std::vector<DenseMatrix> xs;
            for (const auto& sm : test) {
                xs = sm.x;
                for (size_t t = 0; t < xs.size(); ++t)
                    for (int n = 0; n < N; ++n)
                        for (int f = 0; f < xs[t].cols; ++f)
                            xs[t](n, f) = sm.x[t](perm[n], f);
                acc.add(model.predict(xs), sm.y);
            }
            mse_acc += acc.se / static_cast<double>(acc.count);
            mae_acc += acc.ae / static_cast<double>(acc.count);
        }
        rows.push_back({ratio, mse_acc / trials, mae_acc / trials});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// CSV writers
// ---------------------------------------------------------------------------

inline void write_robustness_csv(const std::string& path, const std::vector<RobustnessRow>& rows) {
    std::vector<std::vector<std::string>> out;
    for (const auto& r : rows)
        out.push_back({format_double(r.ratio), format_double(r.mse), format_double(r.mae)});
    write_csv(path, {"ratio", "mse", "mae"}, out);
}

inline void write_clusters_csv(const std::string& path, const std::vector<std::string>& ids,
                               const ClusterAssignment& connectivity,
                               const ClusterAssignment& km) {
    if (ids.size() != connectivity.labels.size() || ids.size() != km.labels.size())
        throw std::invalid_argument("write_clusters_csv: length mismatch");
    std::vector<std::vector<std::string>> out;
    for (size_t i = 0; i < ids.size(); ++i)
        out.push_back({ids[i], std::to_string(connectivity.labels[i]),
                       std::to_string(km.labels[i])});
    write_csv(path, {"building_id", "connectivity_label", "kmeans_label"}, out);
}

inline void write_silhouette_csv(const std::string& path, const SilhouetteScan& scan) {
    std::vector<std::vector<std::string>> out;
    for (const auto& [k, s] : scan.scores)
        out.push_back({std::to_string(k), format_double(s)});
    write_csv(path, {"k", "score"}, out);
}

}  // namespace stgnn
