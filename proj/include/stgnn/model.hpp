#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stgnn/autodiff.hpp"
#include "stgnn/dataio.hpp"
#include "stgnn/graph.hpp"
#include "stgnn/matrix.hpp"
#include "stgnn/rng.hpp"

namespace stgnn {

enum class Variant { att_gcn, plain_gcn, gru, fcnn, naive };

inline Variant variant_from_string(const std::string& s) {
    if (s == "att_gcn") return Variant::att_gcn;
    if (s == "plain_gcn") return Variant::plain_gcn;
    if (s == "gru") return Variant::gru;
    if (s == "fcnn") return Variant::fcnn;
    if (s == "naive") return Variant::naive;
    throw std::invalid_argument("unknown variant '" + s + "'");
}

inline std::string variant_to_string(Variant v) {
    switch (v) {
        case Variant::att_gcn: return "att_gcn";
        case Variant::plain_gcn: return "plain_gcn";
        case Variant::gru: return "gru";
        case Variant::fcnn: return "fcnn";
        case Variant::naive: return "naive";
    }
    return "?";
}

struct ModelConfig {
    int N = 0;              // nodes (buildings)
    int d = kFeatureCount;  // input features per node
    int T = 12;             // input window
    int M = 1;              // forecast horizon
    int conv_channels = 16;
    int gcn_blocks = 4;
    int gcn_depth = 2;
    int gru_layers = 2;
    int gru_dim = 16;
    int att_dim = 32;
    int embed_dim = 16;
    int k = 0;  // 0 = default_topk(N)
    double dropout_p = 0.3;
    Variant variant = Variant::att_gcn;

    int topk() const { return k > 0 ? k : default_topk(N); }

    void validate() const {
        if (N < 1 || d < 1 || T < 1 || M < 1) throw std::invalid_argument("config: bad shape");
        if (conv_channels < 1 || gcn_blocks < 1 || gcn_depth < 1 || gru_layers < 1 ||
            gru_dim < 1 || att_dim < 1 || embed_dim < 1)
            throw std::invalid_argument("config: widths must be positive");
        if (dropout_p < 0.0 || dropout_p >= 1.0)
            throw std::invalid_argument("config: dropout_p must be in [0,1)");
        if (variant != Variant::att_gcn && variant != Variant::plain_gcn)
            throw std::invalid_argument("config: model variant must be att_gcn or plain_gcn");
    }
};

struct GcnBlockParams {
    std::vector<Parameter> W;                 // one C_in x C per propagation step
    std::optional<Parameter> residual_proj;   // only when C_in != C
};

struct DepthAttentionParams {
    Parameter Wq, Wk, Wv;  // C x att_dim
    Parameter Wout;        // att_dim x C
};

struct GruLayerParams {
    Parameter Wz, Wr, Wh;  // (G + I) x G
    Parameter bz, br, bh;  // 1 x G
};

// ---------------------------------------------------------------------------
// Plain (non-tape) building blocks; the tape forward mirrors these exactly.
// ---------------------------------------------------------------------------

inline DenseMatrix gcn_propagate(const DenseMatrix& H, const DenseMatrix& A_norm,
                                 const DenseMatrix& W) {
    return activation(Activation::relu, matmul(matmul(A_norm, H), W));
}

inline DenseMatrix depth_attention(const std::vector<DenseMatrix>& states,
                                   const DepthAttentionParams& p) {
    const int K = static_cast<int>(states.size());
    if (K < 1) throw std::invalid_argument("depth_attention: need at least one state");
    const int N = states[0].rows;
    const int a = p.Wq.value.cols;
    const double scale = 1.0 / std::sqrt(static_cast<double>(a));

    std::vector<DenseMatrix> Q(K), Kp(K), V(K);
    for (int l = 0; l < K; ++l) {
        Q[l] = matmul(states[l], p.Wq.value);
        Kp[l] = matmul(states[l], p.Wk.value);
        V[l] = matmul(states[l], p.Wv.value);
    }
    DenseMatrix mean(N, a, 0.0);
    for (int l = 0; l < K; ++l) {
        DenseMatrix scores(N, K);
        for (int m = 0; m < K; ++m)
            for (int i = 0; i < N; ++i) {
                double dot = 0.0;
                for (int c = 0; c < a; ++c) dot += Q[l](i, c) * Kp[m](i, c);
                scores(i, m) = dot * scale;
            }
        const DenseMatrix w = softmax_rows(scores);
        for (int m = 0; m < K; ++m)
            for (int i = 0; i < N; ++i)
                for (int c = 0; c < a; ++c) mean(i, c) += w(i, m) * V[m](i, c);
    }
    for (double& v : mean.data) v /= K;
    return matmul(mean, p.Wout.value);
}

inline DenseMatrix dropout_mask(int rows, int cols, double p, Rng& rng) {
    DenseMatrix m(rows, cols);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double keep = 1.0 - p;
    for (double& v : m.data) v = (u(rng) < keep) ? 1.0 / keep : 0.0;
    return m;
}

inline DenseMatrix spatial_block(const DenseMatrix& X, const DenseMatrix& A_norm,
                                 const GcnBlockParams& block, const DepthAttentionParams& attn,
                                 bool attention_on, double dropout_p = 0.0, Rng* rng = nullptr) {
    std::vector<DenseMatrix> states;
    states.reserve(block.W.size());
    const DenseMatrix* prev = &X;
    for (const Parameter& w : block.W) {
        states.push_back(gcn_propagate(*prev, A_norm, w.value));
        prev = &states.back();
    }
    DenseMatrix out = attention_on ? depth_attention(states, attn) : states.back();
    const DenseMatrix residual =
        block.residual_proj ? matmul(X, block.residual_proj->value) : X;
    out = add(out, residual);
    if (dropout_p > 0.0 && rng) out = hadamard(out, dropout_mask(out.rows, out.cols, dropout_p, *rng));
    return out;
}

inline DenseMatrix gru_cell(const DenseMatrix& x, const DenseMatrix& h,
                            const GruLayerParams& p) {
    const int n = x.rows;
    const int G = h.cols;
    DenseMatrix hx(n, h.cols + x.cols);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < h.cols; ++j) hx(i, j) = h(i, j);
        for (int j = 0; j < x.cols; ++j) hx(i, h.cols + j) = x(i, j);
    }
    auto affine = [&](const Parameter& W, const Parameter& b, const DenseMatrix& in) {
        DenseMatrix r = matmul(in, W.value);
        for (int i = 0; i < r.rows; ++i)
            for (int j = 0; j < r.cols; ++j) r(i, j) += b.value(0, j);
        return r;
    };
    const DenseMatrix z = activation(Activation::sigmoid, affine(p.Wz, p.bz, hx));
    const DenseMatrix r = activation(Activation::sigmoid, affine(p.Wr, p.br, hx));
    DenseMatrix rhx(n, h.cols + x.cols);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < h.cols; ++j) rhx(i, j) = r(i, j) * h(i, j);
        for (int j = 0; j < x.cols; ++j) rhx(i, h.cols + j) = x(i, j);
    }
    const DenseMatrix cand = activation(Activation::tanh, affine(p.Wh, p.bh, rhx));
    DenseMatrix out(n, G);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < G; ++j)
            out(i, j) = (1.0 - z(i, j)) * h(i, j) + z(i, j) * cand(i, j);
    return out;
}

// ---------------------------------------------------------------------------
// Full model
// ---------------------------------------------------------------------------

class AttGcnModel {
   public:
    ModelConfig cfg;
    Parameter embeddings;  // N x embed_dim
    Parameter W_in, b_in;  // d x C, 1 x C
    std::vector<GcnBlockParams> blocks;
    std::vector<DepthAttentionParams> attn;
    std::vector<GruLayerParams> gru;
    Parameter W_head, b_head;  // G x M, 1 x M

    AttGcnModel(ModelConfig config, const BuildingDataset* ds, uint64_t seed) : cfg(config) {
        cfg.validate();
        const int C = cfg.conv_channels;
        const int G = cfg.gru_dim;
        Rng rng(derive_seed(seed, 0xA77));

        if (ds) {
            if (ds->N != cfg.N) throw std::invalid_argument("model: dataset node count mismatch");
            embeddings = init_embeddings(*ds, cfg.embed_dim, seed);
        } else {
            DenseMatrix e = gaussian_matrix(cfg.N, cfg.embed_dim, 0.0, 1.0, rng);
            embeddings = Parameter("node_embeddings", unit_rows(e));
        }

        W_in = Parameter("W_in", fanin_uniform(cfg.d, C, rng));
        b_in = Parameter("b_in", DenseMatrix(1, C, 0.0));
        for (int b = 0; b < cfg.gcn_blocks; ++b) {
            GcnBlockParams blk;
            for (int l = 0; l < cfg.gcn_depth; ++l)
                blk.W.emplace_back("block" + std::to_string(b) + ".W" + std::to_string(l),
                                   fanin_uniform(C, C, rng));
            blocks.push_back(std::move(blk));
            DepthAttentionParams at{
                Parameter("block" + std::to_string(b) + ".Wq", fanin_uniform(C, cfg.att_dim, rng)),
                Parameter("block" + std::to_string(b) + ".Wk", fanin_uniform(C, cfg.att_dim, rng)),
                Parameter("block" + std::to_string(b) + ".Wv", fanin_uniform(C, cfg.att_dim, rng)),
                Parameter("block" + std::to_string(b) + ".Wout",
                          fanin_uniform(cfg.att_dim, C, rng))};
            attn.push_back(std::move(at));
        }
        for (int l = 0; l < cfg.gru_layers; ++l) {
            const int I = (l == 0) ? C : G;
            gru.push_back(GruLayerParams{
                Parameter("gru" + std::to_string(l) + ".Wz", fanin_uniform(G + I, G, rng)),
                Parameter("gru" + std::to_string(l) + ".Wr", fanin_uniform(G + I, G, rng)),
                Parameter("gru" + std::to_string(l) + ".Wh", fanin_uniform(G + I, G, rng)),
                Parameter("gru" + std::to_string(l) + ".bz", DenseMatrix(1, G, 0.0)),
                Parameter("gru" + std::to_string(l) + ".br", DenseMatrix(1, G, 0.0)),
                Parameter("gru" + std::to_string(l) + ".bh", DenseMatrix(1, G, 0.0))});
        }
        W_head = Parameter("W_head", fanin_uniform(G, cfg.M, rng));
        b_head = Parameter("b_head", DenseMatrix(1, cfg.M, 0.0));
    }

    std::vector<Parameter*> parameters() {
        std::vector<Parameter*> ps{&embeddings, &W_in, &b_in};
        for (auto& blk : blocks) {
            for (auto& w : blk.W) ps.push_back(&w);
            if (blk.residual_proj) ps.push_back(&*blk.residual_proj);
        }
        for (auto& at : attn) {
            ps.push_back(&at.Wq);
            ps.push_back(&at.Wk);
            ps.push_back(&at.Wv);
            ps.push_back(&at.Wout);
        }
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

    AdjacencyMatrix current_graph() const { return refresh_graph(embeddings.value, cfg.topk()); }

    // Tape forward over one sample. x holds T matrices of shape N x d.
    // Returns the M x N prediction. The adjacency is refreshed on every call.
    Var forward(Tape& tape, const std::vector<DenseMatrix>& x, bool training, Rng* dropout_rng,
                DenseMatrix* raw_adj = nullptr) {
        if (static_cast<int>(x.size()) != cfg.T)
            throw std::invalid_argument("forward: expected T=" + std::to_string(cfg.T) +
                                        " timesteps, got " + std::to_string(x.size()));
        for (const auto& xt : x) {
            if (xt.rows != cfg.N || xt.cols != cfg.d)
                throw std::invalid_argument("forward: timestep shape " + xt.shape_str() +
                                            " does not match N x d");
            if (!xt.all_finite()) throw std::invalid_argument("forward: non-finite input");
        }

        Var A_norm = refresh_graph_tape(tape, tape.parameter(embeddings), cfg.topk(), raw_adj);
        Var w_in = tape.parameter(W_in);
        Var bias_in = tape.parameter(b_in);

        std::vector<Var> block_w;
        std::vector<Var> block_r;
        std::vector<std::array<Var, 4>> at;
        for (int b = 0; b < cfg.gcn_blocks; ++b) {
            for (auto& w : blocks[b].W) block_w.push_back(tape.parameter(w));
            block_r.push_back(blocks[b].residual_proj
                                  ? tape.parameter(*blocks[b].residual_proj)
                                  : Var{nullptr, -1});
            at.push_back({tape.parameter(attn[b].Wq), tape.parameter(attn[b].Wk),
                          tape.parameter(attn[b].Wv), tape.parameter(attn[b].Wout)});
        }

        std::vector<Var> spatial;
        spatial.reserve(cfg.T);
        for (int t = 0; t < cfg.T; ++t) {
            Var H = tape.add_row(tape.matmul(tape.constant(x[t]), w_in), bias_in);
            for (int b = 0; b < cfg.gcn_blocks; ++b) {
                Var input = H;
                std::vector<Var> states;
                Var prev = H;
                for (int l = 0; l < cfg.gcn_depth; ++l) {
                    prev = tape.relu(tape.matmul(tape.matmul(A_norm, prev),
                                                 block_w[b * cfg.gcn_depth + l]));
                    states.push_back(prev);
                }
                Var z = (cfg.variant == Variant::att_gcn)
                            ? depth_attention_tape(tape, states, at[b])
                            : states.back();
                Var residual = block_r[b].id >= 0 ? tape.matmul(input, block_r[b]) : input;
                H = tape.add(z, residual);
                if (training && cfg.dropout_p > 0.0 && dropout_rng)
                    H = tape.mul_const(
                        H, dropout_mask(cfg.N, cfg.conv_channels, cfg.dropout_p, *dropout_rng));
            }
            spatial.push_back(H);
        }

        std::vector<Var> seq = std::move(spatial);
        for (int l = 0; l < cfg.gru_layers; ++l) {
            Var wz = tape.parameter(gru[l].Wz);
            Var wr = tape.parameter(gru[l].Wr);
            Var wh = tape.parameter(gru[l].Wh);
            Var bz = tape.parameter(gru[l].bz);
            Var br = tape.parameter(gru[l].br);
            Var bh = tape.parameter(gru[l].bh);
            Var ones = tape.constant(DenseMatrix(cfg.N, cfg.gru_dim, 1.0));
            Var h = tape.constant(DenseMatrix(cfg.N, cfg.gru_dim, 0.0));
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

        Var head = tape.add_row(tape.matmul(seq.back(), tape.parameter(W_head)),
                                tape.parameter(b_head));
        return tape.transpose(head);  // M x N
    }

    DenseMatrix predict(const std::vector<DenseMatrix>& x) {
        Tape tape;
        return forward(tape, x, false, nullptr).value();
    }

   private:
    Var depth_attention_tape(Tape& tape, const std::vector<Var>& states,
                             const std::array<Var, 4>& p) {
        const int K = static_cast<int>(states.size());
        const double scale = 1.0 / std::sqrt(static_cast<double>(cfg.att_dim));
        std::vector<Var> Q, Kp, V;
        for (int l = 0; l < K; ++l) {
            Q.push_back(tape.matmul(states[l], p[0]));
            Kp.push_back(tape.matmul(states[l], p[1]));
            V.push_back(tape.matmul(states[l], p[2]));
        }
        Var mean{nullptr, -1};
        for (int l = 0; l < K; ++l) {
            Var scores{nullptr, -1};
            for (int m = 0; m < K; ++m) {
                Var s = tape.scale(tape.rowwise_dot(Q[l], Kp[m]), scale);
                scores = (m == 0) ? s : tape.concat_cols(scores, s);
            }
            Var w = tape.softmax_rows(scores);
            Var attended{nullptr, -1};
            for (int m = 0; m < K; ++m) {
                Var term = tape.scale_rows(V[m], tape.take_col(w, m));
                attended = (m == 0) ? term : tape.add(attended, term);
            }
            mean = (l == 0) ? attended : tape.add(mean, attended);
        }
        mean = tape.scale(mean, 1.0 / K);
        return tape.matmul(mean, p[3]);
    }
};

}  // namespace stgnn
