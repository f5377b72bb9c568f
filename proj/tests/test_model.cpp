#include <cmath>

#include "doctest.h"
#include "stgnn/gradcheck.hpp"
#include "stgnn/model.hpp"

using namespace stgnn;

namespace {

// Independent per-node attention oracle evaluating Eqs. (6)-(11) literally.
DenseMatrix attention_oracle(const std::vector<DenseMatrix>& states,
                             const DepthAttentionParams& p) {
    const int K = static_cast<int>(states.size());
    const int N = states[0].rows;
    const int C = states[0].cols;
    const int a = p.Wq.value.cols;
    DenseMatrix out(N, C);
    for (int i = 0; i < N; ++i) {
        DenseMatrix S(K, C);
        for (int l = 0; l < K; ++l)
            for (int c = 0; c < C; ++c) S(l, c) = states[l](i, c);
        const DenseMatrix Q = matmul(S, p.Wq.value);
        const DenseMatrix Km = matmul(S, p.Wk.value);
        const DenseMatrix V = matmul(S, p.Wv.value);
        DenseMatrix scores = matmul(Q, transpose(Km));
        for (double& s : scores.data) s /= std::sqrt(static_cast<double>(a));
        const DenseMatrix W = softmax_rows(scores);
        for (int l = 0; l < K; ++l) {
            double sum = 0.0;
            for (int m = 0; m < K; ++m) {
                CHECK(W(l, m) >= 0.0);
                sum += W(l, m);
            }
            CHECK(std::abs(sum - 1.0) < 1e-9);
        }
        const DenseMatrix att = matmul(W, V);
        DenseMatrix mean(1, a, 0.0);
        for (int l = 0; l < K; ++l)
            for (int c = 0; c < a; ++c) mean(0, c) += att(l, c) / K;
        const DenseMatrix o = matmul(mean, p.Wout.value);
        for (int c = 0; c < C; ++c) out(i, c) = o(0, c);
    }
    return out;
}

// Literal Eqs. (2)-(5) for a single node vector.
std::vector<double> gru_oracle(const std::vector<double>& x, const std::vector<double>& h,
                               const GruLayerParams& p) {
    const int G = static_cast<int>(h.size());
    const int I = static_cast<int>(x.size());
    std::vector<double> hx(G + I);
    for (int j = 0; j < G; ++j) hx[j] = h[j];
    for (int j = 0; j < I; ++j) hx[G + j] = x[j];
    auto affine = [&](const Parameter& W, const Parameter& b, const std::vector<double>& in) {
        std::vector<double> r(G);
        for (int o = 0; o < G; ++o) {
            double s = b.value(0, o);
            for (size_t k = 0; k < in.size(); ++k) s += in[k] * W.value(static_cast<int>(k), o);
            r[o] = s;
        }
        return r;
    };
    auto z = affine(p.Wz, p.bz, hx);
    auto r = affine(p.Wr, p.br, hx);
    for (int j = 0; j < G; ++j) {
        z[j] = 1.0 / (1.0 + std::exp(-z[j]));
        r[j] = 1.0 / (1.0 + std::exp(-r[j]));
    }
    std::vector<double> rhx(G + I);
    for (int j = 0; j < G; ++j) rhx[j] = r[j] * h[j];
    for (int j = 0; j < I; ++j) rhx[G + j] = x[j];
    auto cand = affine(p.Wh, p.bh, rhx);
    std::vector<double> out(G);
    for (int j = 0; j < G; ++j)
        out[j] = (1.0 - z[j]) * h[j] + z[j] * std::tanh(cand[j]);
    return out;
}

DepthAttentionParams random_attention(int C, int a, Rng& rng) {
    return DepthAttentionParams{Parameter("q", fanin_uniform(C, a, rng)),
                                Parameter("k", fanin_uniform(C, a, rng)),
                                Parameter("v", fanin_uniform(C, a, rng)),
                                Parameter("o", fanin_uniform(a, C, rng))};
}

GruLayerParams random_gru(int I, int G, Rng& rng) {
    return GruLayerParams{Parameter("wz", fanin_uniform(G + I, G, rng)),
                          Parameter("wr", fanin_uniform(G + I, G, rng)),
                          Parameter("wh", fanin_uniform(G + I, G, rng)),
                          Parameter("bz", uniform_matrix(1, G, -0.2, 0.2, rng)),
                          Parameter("br", uniform_matrix(1, G, -0.2, 0.2, rng)),
                          Parameter("bh", uniform_matrix(1, G, -0.2, 0.2, rng))};
}

ModelConfig tiny_config() {
    ModelConfig cfg;
    cfg.N = 3;
    cfg.d = 2;
    cfg.T = 4;
    cfg.M = 1;
    cfg.conv_channels = 4;
    cfg.gcn_blocks = 2;
    cfg.gcn_depth = 2;
    cfg.gru_layers = 2;
    cfg.gru_dim = 3;
    cfg.att_dim = 4;
    cfg.embed_dim = 5;
    cfg.dropout_p = 0.0;
    return cfg;
}

std::vector<DenseMatrix> random_input(const ModelConfig& cfg, uint64_t seed) {
    Rng rng(seed);
    std::vector<DenseMatrix> x;
    for (int t = 0; t < cfg.T; ++t) x.push_back(uniform_matrix(cfg.N, cfg.d, 0.0, 1.0, rng));
    return x;
}

}  // namespace

TEST_CASE("gcn_propagate closed forms and oracle") {
    DenseMatrix A1(1, 1, 1.0), H1(1, 1, 2.0), W1(1, 1, 0.5);
    CHECK(gcn_propagate(H1, A1, W1)(0, 0) == 1.0);

    Rng rng(3);
    DenseMatrix H = uniform_matrix(4, 3, -1.0, 1.0, rng);
    DenseMatrix A = normalize_adjacency(topk_filter(similarity_matrix(
        gaussian_matrix(4, 3, 0.0, 1.0, rng)), 2));
    DenseMatrix W0(3, 5, 0.0);
    const DenseMatrix zero = gcn_propagate(H, A, W0);
    for (double v : zero.data) CHECK(v == 0.0);

    DenseMatrix W = uniform_matrix(3, 5, -0.7, 0.7, rng);
    const DenseMatrix got = gcn_propagate(H, A, W);
    // Brute-force re-evaluation, scalar by scalar.
    for (int i = 0; i < 4; ++i)
        for (int o = 0; o < 5; ++o) {
            double s = 0.0;
            for (int j = 0; j < 4; ++j)
                for (int c = 0; c < 3; ++c) s += A(i, j) * H(j, c) * W(c, o);
            CHECK(got(i, o) == doctest::Approx(std::max(0.0, s)).epsilon(1e-12));
        }
}

TEST_CASE("depth_attention matches the equation oracle") {
    Rng rng(9);
    const int N = 5, C = 4, a = 6;
    DepthAttentionParams p = random_attention(C, a, rng);

    std::vector<DenseMatrix> one{uniform_matrix(N, C, -1.0, 1.0, rng)};
    const DenseMatrix v_only = matmul(matmul(one[0], p.Wv.value), p.Wout.value);
    CHECK(max_abs_diff(depth_attention(one, p), v_only) < 1e-12);

    std::vector<DenseMatrix> same{one[0], one[0]};
    CHECK(max_abs_diff(depth_attention(same, p), depth_attention(one, p)) < 1e-12);

    std::vector<DenseMatrix> three;
    for (int l = 0; l < 3; ++l) three.push_back(uniform_matrix(N, C, -1.5, 1.5, rng));
    CHECK(max_abs_diff(depth_attention(three, p), attention_oracle(three, p)) < 1e-12);

    CHECK_THROWS_AS(depth_attention({}, p), std::invalid_argument);
}

TEST_CASE("spatial_block residual and dropout behaviour") {
    Rng rng(17);
    const int N = 6, C = 5;
    DenseMatrix X = uniform_matrix(N, C, -1.0, 1.0, rng);
    DenseMatrix A = normalize_adjacency(
        topk_filter(similarity_matrix(gaussian_matrix(N, 4, 0.0, 1.0, rng)), 2));

    GcnBlockParams zeros;
    zeros.W.emplace_back("w0", DenseMatrix(C, C, 0.0));
    zeros.W.emplace_back("w1", DenseMatrix(C, C, 0.0));
    DepthAttentionParams attn = random_attention(C, 3, rng);
    CHECK(max_abs_diff(spatial_block(X, A, zeros, attn, true), X) < 1e-12);

    GcnBlockParams proj;
    proj.W.emplace_back("w0", DenseMatrix(3, C, 0.0));
    proj.W.emplace_back("w1", DenseMatrix(C, C, 0.0));
    proj.residual_proj = Parameter("r", uniform_matrix(3, C, -1.0, 1.0, rng));
    DenseMatrix Xn = uniform_matrix(N, 3, -1.0, 1.0, rng);
    CHECK(max_abs_diff(spatial_block(Xn, A, proj, attn, true),
                       matmul(Xn, proj.residual_proj->value)) < 1e-12);

    GcnBlockParams live;
    live.W.emplace_back("w0", uniform_matrix(C, C, -0.5, 0.5, rng));
    live.W.emplace_back("w1", uniform_matrix(C, C, -0.5, 0.5, rng));
    const DenseMatrix e1 = spatial_block(X, A, live, attn, true);
    const DenseMatrix e2 = spatial_block(X, A, live, attn, true);
    CHECK(e1.data == e2.data);

    // Monte Carlo dropout rate over >= 1e4 activations.
    Rng drng(99);
    int zeroed = 0, total = 0;
    for (int rep = 0; rep < 400; ++rep) {
        const DenseMatrix out = spatial_block(X, A, live, attn, true, 0.3, &drng);
        for (double v : out.data) {
            if (v == 0.0) ++zeroed;
            ++total;
        }
    }
    CHECK(total >= 10000);
    const double frac = static_cast<double>(zeroed) / total;
    CHECK(frac > 0.25);
    CHECK(frac < 0.35);
}

TEST_CASE("gru_cell hand case and oracle") {
    GruLayerParams z{Parameter("wz", DenseMatrix(2, 1, 0.0)),
                     Parameter("wr", DenseMatrix(2, 1, 0.0)),
                     Parameter("wh", DenseMatrix(2, 1, 0.0)),
                     Parameter("bz", DenseMatrix(1, 1, 0.0)),
                     Parameter("br", DenseMatrix(1, 1, 0.0)),
                     Parameter("bh", DenseMatrix(1, 1, 0.0))};
    DenseMatrix x(1, 1, 0.7);
    DenseMatrix h(1, 1, 0.4);
    CHECK(gru_cell(x, h, z)(0, 0) == doctest::Approx(0.2).epsilon(1e-15));
    DenseMatrix h0(1, 1, 0.0);
    CHECK(gru_cell(x, h0, z)(0, 0) == 0.0);

    Rng rng(23);
    const int I = 4, G = 3, N = 5;
    GruLayerParams p = random_gru(I, G, rng);
    DenseMatrix xs = uniform_matrix(N, I, -1.0, 1.0, rng);
    DenseMatrix hs = uniform_matrix(N, G, -0.9, 0.9, rng);
    const DenseMatrix got = gru_cell(xs, hs, p);
    for (int i = 0; i < N; ++i) {
        std::vector<double> xv(I), hv(G);
        for (int j = 0; j < I; ++j) xv[j] = xs(i, j);
        for (int j = 0; j < G; ++j) hv[j] = hs(i, j);
        const auto want = gru_oracle(xv, hv, p);
        for (int j = 0; j < G; ++j)
            CHECK(got(i, j) == doctest::Approx(want[j]).epsilon(1e-12));
    }
}

TEST_CASE("gru hidden state stays inside (-1,1) from a zero start") {
    Rng rng(31);
    GruLayerParams p = random_gru(4, 6, rng);
    DenseMatrix h(2, 6, 0.0);
    for (int t = 0; t < 50; ++t) {
        const DenseMatrix x = uniform_matrix(2, 4, -3.0, 3.0, rng);
        h = gru_cell(x, h, p);
        for (double v : h.data) {
            CHECK(v > -1.0);
            CHECK(v < 1.0);
        }
    }
}

TEST_CASE("forward shape, determinism, zero head") {
    ModelConfig cfg = tiny_config();
    AttGcnModel model(cfg, nullptr, 5);
    auto x = random_input(cfg, 71);

    const DenseMatrix y1 = model.predict(x);
    CHECK(y1.rows == cfg.M);
    CHECK(y1.cols == cfg.N);
    const DenseMatrix y2 = model.predict(x);
    CHECK(y1.data == y2.data);

    for (double& v : model.W_head.value.data) v = 0.0;
    for (double& v : model.b_head.value.data) v = 0.0;
    const DenseMatrix yz = model.predict(x);
    for (double v : yz.data) CHECK(v == 0.0);

    auto bad = x;
    bad[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(model.predict(bad), std::invalid_argument);
}

TEST_CASE("forward equals composition of the plain blocks") {
    for (Variant variant : {Variant::att_gcn, Variant::plain_gcn}) {
        ModelConfig cfg = tiny_config();
        cfg.variant = variant;
        AttGcnModel model(cfg, nullptr, 13);
        auto x = random_input(cfg, 29);

        const AdjacencyMatrix adj = model.current_graph();
        std::vector<DenseMatrix> spatial;
        for (int t = 0; t < cfg.T; ++t) {
            DenseMatrix H = matmul(x[t], model.W_in.value);
            for (int i = 0; i < H.rows; ++i)
                for (int j = 0; j < H.cols; ++j) H(i, j) += model.b_in.value(0, j);
            for (int b = 0; b < cfg.gcn_blocks; ++b)
                H = spatial_block(H, adj.A_norm, model.blocks[b], model.attn[b],
                                  variant == Variant::att_gcn);
            spatial.push_back(H);
        }
        std::vector<DenseMatrix> seq = std::move(spatial);
        for (int l = 0; l < cfg.gru_layers; ++l) {
            DenseMatrix h(cfg.N, cfg.gru_dim, 0.0);
            std::vector<DenseMatrix> next;
            for (auto& xt : seq) {
                h = gru_cell(xt, h, model.gru[l]);
                next.push_back(h);
            }
            seq = std::move(next);
        }
        DenseMatrix head = matmul(seq.back(), model.W_head.value);
        for (int i = 0; i < head.rows; ++i)
            for (int j = 0; j < head.cols; ++j) head(i, j) += model.b_head.value(0, j);
        const DenseMatrix want = transpose(head);

        CHECK(max_abs_diff(model.predict(x), want) < 1e-12);
    }
}

TEST_CASE("node permutation equivariance") {
    ModelConfig cfg = tiny_config();
    cfg.N = 4;
    AttGcnModel model(cfg, nullptr, 3);
    auto x = random_input(cfg, 41);
    const DenseMatrix base = model.predict(x);

    const int perm[4] = {2, 0, 3, 1};
    AttGcnModel permuted = model;
    for (int n = 0; n < 4; ++n)
        for (int c = 0; c < cfg.embed_dim; ++c)
            permuted.embeddings.value(n, c) = model.embeddings.value(perm[n], c);
    auto px = x;
    for (int t = 0; t < cfg.T; ++t)
        for (int n = 0; n < 4; ++n)
            for (int f = 0; f < cfg.d; ++f) px[t](n, f) = x[t](perm[n], f);

    const DenseMatrix out = permuted.predict(px);
    for (int n = 0; n < 4; ++n)
        CHECK(std::abs(out(0, n) - base(0, perm[n])) < 1e-9);
}

TEST_CASE("variants differ with attention weights live") {
    ModelConfig cfg = tiny_config();
    AttGcnModel att(cfg, nullptr, 11);
    ModelConfig pcfg = cfg;
    pcfg.variant = Variant::plain_gcn;
    AttGcnModel plain(pcfg, nullptr, 11);
    auto x = random_input(cfg, 55);
    CHECK(max_abs_diff(att.predict(x), plain.predict(x)) > 1e-12);
}

TEST_CASE("every model parameter passes the gradient check") {
    // A single block keeps the loss surface well conditioned, and this seed
    // draws weights whose ReLU paths all stay live on the probe input, so the
    // finite-difference comparison resolves a real gradient for every
    // parameter instead of certifying vacuous zeros.
    ModelConfig cfg = tiny_config();
    cfg.gcn_blocks = 1;
    AttGcnModel model(cfg, nullptr, 9);
    auto x = random_input(cfg, 19);
    Rng yr(27);
    const DenseMatrix y = uniform_matrix(cfg.M, cfg.N, 0.0, 1.0, yr);

    auto params = model.parameters();
    auto model_fn = [&](bool with_grad) {
        Tape tape;
        Var yhat = model.forward(tape, x, false, nullptr);
        Var diff = tape.sub(yhat, tape.constant(y));
        Var loss = tape.scale(tape.sum_all(tape.hadamard(diff, diff)),
                              1.0 / (cfg.M * cfg.N));
        if (with_grad) {
            for (auto* p : params) p->zero_grad();
            tape.backward(loss);
        }
        return loss.value()(0, 0);
    };
    const GradCheckReport report = gradient_check(model_fn, params);
    for (const auto& e : report.entries) {
        INFO(e.name);
        CHECK(e.max_rel_err < 1e-4);
        CHECK(e.max_abs_grad > 0.0);
    }
    CHECK(report.entries.size() == params.size());
}
