#pragma once

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "stgnn/dataio.hpp"
#include "stgnn/gradcheck.hpp"
#include "stgnn/metrics.hpp"
#include "stgnn/model.hpp"
#include "stgnn/optim.hpp"

namespace stgnn {

struct TrainConfig {
    double lr = 0.001;
    int batch_size = 32;
    int epochs = 100;
    double dropout_p = 0.3;
    uint64_t seed = 0;
    int T = 12;
    int M = 1;
    int k = 0;  // 0 = default_topk(N)
    Variant variant = Variant::att_gcn;
    bool verbose = false;

    void validate() const {
        if (lr < 0.0) throw std::invalid_argument("train config: lr must be >= 0");
        if (batch_size < 1 || epochs < 1 || T < 1 || M < 1)
            throw std::invalid_argument("train config: counts must be positive");
        if (dropout_p < 0.0 || dropout_p >= 1.0)
            throw std::invalid_argument("train config: dropout_p must be in [0,1)");
    }
};

struct EpochStats {
    int epoch;
    double train_loss;
    double val_mse;
};

struct TrainHistory {
    std::vector<EpochStats> epochs;
    int best_epoch = 0;
    double best_val_mse = std::numeric_limits<double>::infinity();
};

inline void write_history_csv(const std::string& path, const TrainHistory& h) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& e : h.epochs)
        rows.push_back({std::to_string(e.epoch), format_double(e.train_loss),
                        format_double(e.val_mse)});
    write_csv(path, {"epoch", "train_loss", "val_mse"}, rows);
}

struct PooledPredictions {
    DenseMatrix yhat;  // (samples * M) x N
    DenseMatrix y;
};

// noinline for the same reason as metrics_row: the robustness sweep promises
// its 0% row equals plain evaluation bit for bit, which holds only if both
// run the one emitted copy of the prediction loop.
[[gnu::noinline]] inline PooledPredictions collect_predictions(
    AttGcnModel& model, const std::vector<SpatioTemporalSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("collect_predictions: no samples");
    const int M = samples[0].y.rows;
    const int N = samples[0].y.cols;
    PooledPredictions out;
    out.yhat = DenseMatrix(static_cast<int>(samples.size()) * M, N);
    out.y = DenseMatrix(static_cast<int>(samples.size()) * M, N);
    for (size_t s = 0; s < samples.size(); ++s) {
        const DenseMatrix p = model.predict(samples[s].x);
        for (int m = 0; m < M; ++m)
            for (int n = 0; n < N; ++n) {
                out.yhat(static_cast<int>(s) * M + m, n) = p(m, n);
                out.y(static_cast<int>(s) * M + m, n) = samples[s].y(m, n);
            }
    }
    return out;
}

inline double pooled_mse(AttGcnModel& model, const std::vector<SpatioTemporalSample>& samples) {
    double s = 0.0;
    size_t count = 0;
    for (const auto& sm : samples) {
        const DenseMatrix p = model.predict(sm.x);
        for (size_t i = 0; i < p.size(); ++i) {
            const double d = p.data[i] - sm.y.data[i];
            s += d * d;
        }
        count += p.size();
    }
    return s / static_cast<double>(count);
}

inline TrainHistory train(AttGcnModel& model, const SampleSplit& data, const TrainConfig& cfg) {
    cfg.validate();
    if (data.train.empty() || data.val.empty())
        throw std::invalid_argument("train: train and validation splits must be nonempty");

    auto params = model.parameters();
    AdamOptimizer opt(params, cfg.lr);
    Rng shuffle_rng(derive_seed(cfg.seed, 11));
    Rng dropout_rng(derive_seed(cfg.seed, 22));

    TrainHistory history;
    std::vector<DenseMatrix> best;
    for (auto* p : params) best.push_back(p->value);

    std::vector<size_t> order(data.train.size());
    std::iota(order.begin(), order.end(), size_t{0});

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        int batch_index = 0;
        for (size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
            const size_t stop = std::min(order.size(), start + cfg.batch_size);
            const int B = static_cast<int>(stop - start);
            opt.zero_grad();
            for (size_t i = start; i < stop; ++i) {
                const SpatioTemporalSample& sm = data.train[order[i]];
                Tape tape;
                Var yhat = model.forward(tape, sm.x, true, &dropout_rng);
                Var loss = mse_loss(tape, yhat, tape.constant(sm.y));
                const double v = loss.value()(0, 0);
                if (!std::isfinite(v))
                    throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                             std::to_string(epoch) + ", batch " +
                                             std::to_string(batch_index));
                tape.backward(loss, 1.0 / B);
                loss_sum += v;
            }
            opt.step();
        }
        const double train_loss = loss_sum / static_cast<double>(order.size());
        const double val_mse = pooled_mse(model, data.val);
        history.epochs.push_back({epoch, train_loss, val_mse});
        if (val_mse < history.best_val_mse) {
            history.best_val_mse = val_mse;
            history.best_epoch = epoch;
            for (size_t p = 0; p < params.size(); ++p) best[p] = params[p]->value;
        }
        if (cfg.verbose)
            std::cerr << "epoch " << epoch << " train_loss " << train_loss << " val_mse "
                      << val_mse << "\n";
    }
    for (size_t p = 0; p < params.size(); ++p) params[p]->value = best[p];
    return history;
}

// ---------------------------------------------------------------------------
// Naive baseline
// ---------------------------------------------------------------------------

inline DenseMatrix naive_forecast(const SpatioTemporalSample& s) {
    const int M = s.y.rows;
    const int N = s.y.cols;
    DenseMatrix out(M, N);
    const DenseMatrix& last = s.x.back();
    for (int m = 0; m < M; ++m)
        for (int n = 0; n < N; ++n) out(m, n) = last(n, 0);
    return out;
}

inline PooledPredictions collect_naive(const std::vector<SpatioTemporalSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("collect_naive: no samples");
    const int M = samples[0].y.rows;
    const int N = samples[0].y.cols;
    PooledPredictions out;
    out.yhat = DenseMatrix(static_cast<int>(samples.size()) * M, N);
    out.y = DenseMatrix(static_cast<int>(samples.size()) * M, N);
    for (size_t s = 0; s < samples.size(); ++s) {
        const DenseMatrix p = naive_forecast(samples[s]);
        for (int m = 0; m < M; ++m)
            for (int n = 0; n < N; ++n) {
                out.yhat(static_cast<int>(s) * M + m, n) = p(m, n);
                out.y(static_cast<int>(s) * M + m, n) = samples[s].y(m, n);
            }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Per-building baselines: GRU-only and FCNN
// ---------------------------------------------------------------------------

class GruOnlyModel {
   public:
    int d, T, M, G, layers;
    std::vector<GruLayerParams> gru;
    Parameter W_head, b_head;

    GruOnlyModel(int d_, int T_, int M_, int G_, int layers_, uint64_t seed)
        : d(d_), T(T_), M(M_), G(G_), layers(layers_) {
        Rng rng(derive_seed(seed, 0x6B0));
        for (int l = 0; l < layers; ++l) {
            const int I = (l == 0) ? d : G;
            gru.push_back(GruLayerParams{
                Parameter("gru" + std::to_string(l) + ".Wz", fanin_uniform(G + I, G, rng)),
                Parameter("gru" + std::to_string(l) + ".Wr", fanin_uniform(G + I, G, rng)),
                Parameter("gru" + std::to_string(l) + ".Wh", fanin_uniform(G + I, G, rng)),
                Parameter("gru" + std::to_string(l) + ".bz", DenseMatrix(1, G, 0.0)),
                Parameter("gru" + std::to_string(l) + ".br", DenseMatrix(1, G, 0.0)),
                Parameter("gru" + std::to_string(l) + ".bh", DenseMatrix(1, G, 0.0))});
        }
        W_head = Parameter("W_head", fanin_uniform(G, M, rng));
        b_head = Parameter("b_head", DenseMatrix(1, M, 0.0));
    }

    std::vector<Parameter*> parameters() {
        std::vector<Parameter*> ps;
        for (auto& g : gru) {
            ps.push_back(&g.Wz);
            ps.push_back(&g.Wr);
            ps.push_back(&g.Wh);
            ps.push_back(&g.bz);
            ps.push_back(&g.br);
            ps.push_back(&g.bh);
        }
        ps.push_back(&W_head);
        ps.push_back(&b_head);
        return ps;
    }

    // x: T matrices, each B x d (a batch of B windows stacked as rows).
    Var forward(Tape& tape, const std::vector<DenseMatrix>& x) {
        const int B = x[0].rows;
        std::vector<Var> seq;
        seq.reserve(x.size());
        for (const auto& xt : x) seq.push_back(tape.constant(xt));
        for (int l = 0; l < layers; ++l) {
            Var wz = tape.parameter(gru[l].Wz);
            Var wr = tape.parameter(gru[l].Wr);
            Var wh = tape.parameter(gru[l].Wh);
            Var bz = tape.parameter(gru[l].bz);
            Var br = tape.parameter(gru[l].br);
            Var bh = tape.parameter(gru[l].bh);
            Var ones = tape.constant(DenseMatrix(B, G, 1.0));
            Var h = tape.constant(DenseMatrix(B, G, 0.0));
            std::vector<Var> next;
            next.reserve(seq.size());
            for (Var xt : seq) {
                Var hx = tape.concat_cols(h, xt);
                Var z = tape.sigmoid(tape.add_row(tape.matmul(hx, wz), bz));
                Var r = tape.sigmoid(tape.add_row(tape.matmul(hx, wr), br));
                Var rhx = tape.concat_cols(tape.hadamard(r, h), xt);
                Var cand = tape.tanh(tape.add_row(tape.matmul(rhx, wh), bh));
                h = tape.add(tape.hadamard(tape.sub(ones, z), h), tape.hadamard(z, cand));
                next.push_back(h);
            }
            seq = std::move(next);
        }
        return tape.add_row(tape.matmul(seq.back(), tape.parameter(W_head)),
                            tape.parameter(b_head));
    }

    DenseMatrix predict(const std::vector<DenseMatrix>& x) {
        Tape tape;
        return forward(tape, x).value();
    }
};

class FcnnModel {
   public:
    int in_dim, M;
    std::vector<Parameter> W;
    std::vector<Parameter> b;

    FcnnModel(int in_dim_, int M_, uint64_t seed, int hidden = 128, int hidden_layers = 4)
        : in_dim(in_dim_), M(M_) {
        Rng rng(derive_seed(seed, 0xFC0));
        int prev = in_dim;
        for (int l = 0; l < hidden_layers; ++l) {
            W.emplace_back("fc" + std::to_string(l) + ".W", fanin_uniform(prev, hidden, rng));
            b.emplace_back("fc" + std::to_string(l) + ".b", DenseMatrix(1, hidden, 0.0));
            prev = hidden;
        }
        W.emplace_back("out.W", fanin_uniform(prev, M, rng));
        b.emplace_back("out.b", DenseMatrix(1, M, 0.0));
    }

    std::vector<Parameter*> parameters() {
        std::vector<Parameter*> ps;
        for (auto& w : W) ps.push_back(&w);
        for (auto& bb : b) ps.push_back(&bb);
        return ps;
    }

    Var forward(Tape& tape, const DenseMatrix& X) {
        Var h = tape.constant(X);
        for (size_t l = 0; l + 1 < W.size(); ++l)
            h = tape.relu(tape.add_row(tape.matmul(h, tape.parameter(W[l])),
                                       tape.parameter(b[l])));
        return tape.add_row(tape.matmul(h, tape.parameter(W.back())),
                            tape.parameter(b.back()));
    }

    DenseMatrix predict(const DenseMatrix& X) {
        Tape tape;
        return forward(tape, X).value();
    }
};

// Per-building views of the shared spatio-temporal samples.
struct BuildingSamples {
    std::vector<DenseMatrix> x_steps;  // T entries, each S x d
    DenseMatrix x_flat;                // S x (T*d)
    DenseMatrix y;                     // S x M
};

inline BuildingSamples building_view(const std::vector<SpatioTemporalSample>& samples, int n) {
    if (samples.empty()) throw std::invalid_argument("building_view: no samples");
    const int S = static_cast<int>(samples.size());
    const int T = static_cast<int>(samples[0].x.size());
    const int d = samples[0].x[0].cols;
    const int M = samples[0].y.rows;
    BuildingSamples out;
    out.x_steps.assign(T, DenseMatrix(S, d));
    out.x_flat = DenseMatrix(S, T * d);
    out.y = DenseMatrix(S, M);
    for (int s = 0; s < S; ++s) {
        for (int t = 0; t < T; ++t)
            for (int f = 0; f < d; ++f) {
                const double v = samples[s].x[t](n, f);
                out.x_steps[t](s, f) = v;
                out.x_flat(s, t * d + f) = v;
            }
        for (int m = 0; m < M; ++m) out.y(s, m) = samples[s].y(m, n);
    }
    return out;
}

enum class BaselineKind { gru_only, fcnn };

struct BaselineResult {
    MetricsReport report;  // pooled test metrics with per-building rows
    std::vector<TrainHistory> histories;
    std::vector<GruOnlyModel> gru_models;  // one per building for the trained kind
    std::vector<FcnnModel> fcnn_models;
};

// Pooled test predictions from per-building baseline models.
inline PooledPredictions baseline_predictions(BaselineKind kind,
                                              std::vector<GruOnlyModel>& gru_models,
                                              std::vector<FcnnModel>& fcnn_models,
                                              const std::vector<SpatioTemporalSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("baseline_predictions: no samples");
    const int N = samples[0].y.cols;
    const int M = samples[0].y.rows;
    const int S = static_cast<int>(samples.size());
    const size_t n_models = kind == BaselineKind::gru_only ? gru_models.size()
                                                           : fcnn_models.size();
    if (n_models != static_cast<size_t>(N))
        throw std::invalid_argument("baseline_predictions: model count does not match buildings");
    PooledPredictions out;
    out.yhat = DenseMatrix(S * M, N);
    out.y = DenseMatrix(S * M, N);
    for (int n = 0; n < N; ++n) {
        const BuildingSamples view = building_view(samples, n);
        const DenseMatrix pred = kind == BaselineKind::gru_only
                                     ? gru_models[n].predict(view.x_steps)
                                     : fcnn_models[n].predict(view.x_flat);
        for (int s = 0; s < S; ++s)
            for (int m = 0; m < M; ++m) {
                out.yhat(s * M + m, n) = pred(s, m);
                out.y(s * M + m, n) = view.y(s, m);
            }
    }
    return out;
}

namespace detail {

inline DenseMatrix take_rows(const DenseMatrix& m, const std::vector<size_t>& idx, size_t start,
                             size_t stop) {
    DenseMatrix out(static_cast<int>(stop - start), m.cols);
    for (size_t i = start; i < stop; ++i)
        for (int j = 0; j < m.cols; ++j)
            out(static_cast<int>(i - start), j) = m(static_cast<int>(idx[i]), j);
    return out;
}

template <typename ForwardFn>
TrainHistory train_supervised(std::vector<Parameter*> params, const ForwardFn& batch_forward,
                              int n_train, int n_val, const TrainConfig& cfg, uint64_t seed) {
    AdamOptimizer opt(params, cfg.lr);
    Rng shuffle_rng(derive_seed(seed, 31));
    TrainHistory history;
    std::vector<DenseMatrix> best;
    for (auto* p : params) best.push_back(p->value);
    std::vector<size_t> order(n_train);
    std::iota(order.begin(), order.end(), size_t{0});

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        int batch_index = 0;
        for (size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
            const size_t stop = std::min(order.size(), start + cfg.batch_size);
            opt.zero_grad();
            Tape tape;
            Var loss = batch_forward(tape, order, start, stop, true);
            const double v = loss.value()(0, 0);
            if (!std::isfinite(v))
                throw std::runtime_error("baseline training diverged at epoch " +
                                         std::to_string(epoch) + ", batch " +
                                         std::to_string(batch_index));
            tape.backward(loss);
            opt.step();
            loss_sum += v * static_cast<double>(stop - start);
        }
        std::vector<size_t> val_idx(n_val);
        std::iota(val_idx.begin(), val_idx.end(), size_t{0});
        Tape vt;
        const double val_mse = batch_forward(vt, val_idx, 0, val_idx.size(), false).value()(0, 0);
        history.epochs.push_back({epoch, loss_sum / n_train, val_mse});
        if (val_mse < history.best_val_mse) {
            history.best_val_mse = val_mse;
            history.best_epoch = epoch;
            for (size_t p = 0; p < params.size(); ++p) best[p] = params[p]->value;
        }
    }
    for (size_t p = 0; p < params.size(); ++p) params[p]->value = best[p];
    return history;
}

}  // namespace detail

inline BaselineResult train_baseline(BaselineKind kind, const SampleSplit& data,
                                     const std::vector<std::string>& building_ids,
                                     const TrainConfig& cfg) {
    cfg.validate();
    if (data.train.empty() || data.val.empty() || data.test.empty())
        throw std::invalid_argument("train_baseline: all splits must be nonempty");
    const int N = data.train[0].y.cols;
    const int T = static_cast<int>(data.train[0].x.size());
    const int d = data.train[0].x[0].cols;
    const int M = data.train[0].y.rows;

    BaselineResult res;
    for (int n = 0; n < N; ++n) {
        const BuildingSamples tr = building_view(data.train, n);
        const BuildingSamples va = building_view(data.val, n);
        const uint64_t bseed = derive_seed(cfg.seed, 5000 + static_cast<uint64_t>(n));

        if (kind == BaselineKind::gru_only) {
            GruOnlyModel model(d, T, M, 16, 2, bseed);
            auto fwd = [&](Tape& tape, const std::vector<size_t>& idx, size_t start, size_t stop,
                           bool training) {
                const BuildingSamples& src = training ? tr : va;
                std::vector<DenseMatrix> xb;
                xb.reserve(T);
                for (int t = 0; t < T; ++t)
                    xb.push_back(detail::take_rows(src.x_steps[t], idx, start, stop));
                Var yhat = model.forward(tape, xb);
                return mse_loss(tape, yhat, tape.constant(detail::take_rows(src.y, idx, start, stop)));
            };
            res.histories.push_back(detail::train_supervised(
                model.parameters(), fwd, static_cast<int>(data.train.size()),
                static_cast<int>(data.val.size()), cfg, bseed));
            res.gru_models.push_back(std::move(model));
        } else {
            FcnnModel model(T * d, M, bseed);
            auto fwd = [&](Tape& tape, const std::vector<size_t>& idx, size_t start, size_t stop,
                           bool training) {
                const BuildingSamples& src = training ? tr : va;
                Var yhat = model.forward(tape, detail::take_rows(src.x_flat, idx, start, stop));
                return mse_loss(tape, yhat, tape.constant(detail::take_rows(src.y, idx, start, stop)));
            };
            res.histories.push_back(detail::train_supervised(
                model.parameters(), fwd, static_cast<int>(data.train.size()),
                static_cast<int>(data.val.size()), cfg, bseed));
            res.fcnn_models.push_back(std::move(model));
        }
    }
    const PooledPredictions pooled =
        baseline_predictions(kind, res.gru_models, res.fcnn_models, data.test);
    res.report = metrics(pooled.yhat, pooled.y, building_ids);
    return res;
}

// The acceptance-sized gradient check: one spatial block, two GRU layers.
// The default seed gives a draw whose ReLU paths all stay live on the probe
// input, so every parameter is checked against a resolvable gradient; other
// seeds may land on draws where parts of the spatial path saturate at zero.
inline GradCheckReport tiny_model_gradcheck(uint64_t seed = 9) {
    ModelConfig cfg;
    cfg.N = 3;
    cfg.d = 2;
    cfg.T = 4;
    cfg.M = 1;
    cfg.conv_channels = 4;
    cfg.gcn_blocks = 1;
    cfg.gcn_depth = 2;
    cfg.gru_layers = 2;
    cfg.gru_dim = 3;
    cfg.att_dim = 4;
    cfg.embed_dim = 5;
    cfg.dropout_p = 0.0;
    AttGcnModel model(cfg, nullptr, seed);
    // Fixed probe data; the seed varies only the parameter draw.
    Rng xr(19);
    std::vector<DenseMatrix> x;
    for (int t = 0; t < cfg.T; ++t) x.push_back(uniform_matrix(cfg.N, cfg.d, 0.0, 1.0, xr));
    Rng yr(27);
    const DenseMatrix y = uniform_matrix(cfg.M, cfg.N, 0.0, 1.0, yr);

    auto params = model.parameters();
    auto fn = [&](bool with_grad) {
        Tape tape;
        Var yhat = model.forward(tape, x, false, nullptr);
        Var loss = mse_loss(tape, yhat, tape.constant(y));
        if (with_grad) {
            for (auto* p : params) p->zero_grad();
            tape.backward(loss);
        }
        return loss.value()(0, 0);
    };
    return gradient_check(fn, params);
}

}  // namespace stgnn
