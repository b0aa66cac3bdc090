#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <string>

#include "reso/baselines.hpp"
#include "reso/checkpoint.hpp"
#include "reso/gradcheck.hpp"
#include "reso/model.hpp"

using namespace reso;

namespace {

ModelConfig toy_config() {
    ModelConfig cfg;
    cfg.input_len = 8;
    cfg.horizon = 4;
    cfg.width = 8;
    cfg.heads = 2;
    cfg.kernel = 2;
    cfg.dilations = {1, 2};
    cfg.lstm_hidden = 8;
    cfg.mlp_hidden = 8;
    cfg.dropout = 0.2;
    return cfg;
}

template <typename S>
TensorT<S> rand_window(int L, Rng& rng, double amp = 1.0, bool req = false) {
    std::vector<S> d(L);
    for (auto& v : d) v = static_cast<S>(rng.uniform(-amp, amp));
    return TensorT<S>::from_data({L}, std::move(d), req);
}

// Independent re-assembly of the fusion stack from the model's named
// parameters; `with_skips=false` drops the +X_rnn+X_tcn terms.
template <typename S>
TensorT<S> rebuild_forward(Forecaster<S>& model, const TensorT<S>& x, bool with_skips) {
    const ModelConfig& cfg = model.config();
    std::map<std::string, TensorT<S>> m;
    for (auto& [n, t] : model.params()) m.emplace(n, t);
    const int L = cfg.input_len, w = cfg.width;

    LstmParams<S> lstm{w, cfg.lstm_hidden, m.at("lstm.w_x"), m.at("lstm.w_h"), m.at("lstm.b")};
    TcnParams<S> tcn;
    tcn.in_channels = w;
    tcn.channels = w;
    tcn.kernel = cfg.kernel;
    for (size_t i = 0; i < cfg.dilations.size(); ++i) {
        TcnBlock<S> blk;
        blk.dilation = cfg.dilations[i];
        blk.filters = m.at("tcn.block" + std::to_string(i) + ".filters");
        blk.bias = m.at("tcn.block" + std::to_string(i) + ".bias");
        tcn.blocks.push_back(std::move(blk));
    }
    auto block = [&](const std::string& p) {
        TransformerBlockParams<S> b;
        b.att.width = w;
        b.att.heads = cfg.heads;
        b.att.head_dim = w / cfg.heads;
        b.att.w_q = m.at(p + ".att.w_q");
        b.att.w_k = m.at(p + ".att.w_k");
        b.att.w_v = m.at(p + ".att.w_v");
        b.att.w_o = m.at(p + ".att.w_o");
        b.ff1 = m.at(p + ".ff1");
        b.fb1 = m.at(p + ".fb1");
        b.ff2 = m.at(p + ".ff2");
        b.fb2 = m.at(p + ".fb2");
        b.ln1_gain = m.at(p + ".ln1_gain");
        b.ln1_bias = m.at(p + ".ln1_bias");
        b.ln2_gain = m.at(p + ".ln2_gain");
        b.ln2_bias = m.at(p + ".ln2_bias");
        return b;
    };
    auto glu_params = [&](const std::string& p) {
        return GluParams<S>{m.at(p + ".w1"), m.at(p + ".b1"), m.at(p + ".w2"), m.at(p + ".b2")};
    };

    Rng rng(0); // dropout disabled below, never consumed
    auto pe = positional_encoding<S>(L, w);
    auto e = add(matmul(reshape(x, {L, 1}), m.at("embed.w")), m.at("embed.b"));
    auto x_rnn = add(add(matmul(lstm_forward(e, lstm), m.at("proj_rnn.w")), m.at("proj_rnn.b")), pe);
    auto x_tcn = add(
        add(matmul(tcn_forward(e, tcn, false, 0.0, rng), m.at("proj_tcn.w")), m.at("proj_tcn.b")), pe);
    auto skip = add(x_rnn, x_tcn);
    auto ct = transformer_block(x_rnn, x_tcn, block("ctrans"), false, 0.0, rng);
    auto u = layer_norm(with_skips ? add(ct, skip) : ct, m.at("ln_u.gain"), m.at("ln_u.bias"));
    auto v = layer_norm(add(u, glu(u, glu_params("glu_u"))), m.at("ln_v.gain"), m.at("ln_v.bias"));
    auto st = transformer_block(v, v, block("strans"), false, 0.0, rng);
    auto wr = layer_norm(with_skips ? add(add(st, v), skip) : add(st, v), m.at("ln_w.gain"),
                         m.at("ln_w.bias"));
    auto o = layer_norm(add(wr, glu(wr, glu_params("glu_w"))), m.at("ln_o.gain"), m.at("ln_o.bias"));
    auto hidden = relu(add(matmul(reshape(o, {1, L * w}), m.at("mlp.w1")), m.at("mlp.b1")));
    return reshape(add(matmul(hidden, m.at("mlp.w2")), m.at("mlp.b2")), {cfg.horizon});
}

} // namespace

TEST_CASE("resoformer: output shape [T] for the paper horizons at L=192") {
    for (int T : {96, 192, 336, 720}) {
        ModelConfig cfg;
        cfg.input_len = 192;
        cfg.horizon = T;
        Rng rng(1);
        Resoformer<float> model(cfg, rng);
        auto y = model.forward(rand_window<float>(192, rng), false, rng);
        CHECK(y.shape() == Shape{T});
    }
}

TEST_CASE("resoformer: eval forward is bit-deterministic") {
    Rng rng(2);
    Resoformer<float> model(toy_config(), rng);
    auto x = rand_window<float>(8, rng);
    auto a = model.forward(x, false, rng);
    auto b = model.forward(x, false, rng);
    CHECK(a.data() == b.data());
}

TEST_CASE("resoformer: wrong window length raises") {
    Rng rng(3);
    Resoformer<float> model(toy_config(), rng);
    CHECK_THROWS_AS(model.forward(rand_window<float>(9, rng), false, rng), DimensionError);
}

TEST_CASE("resoformer: same seed gives bit-identical parameters") {
    auto cfg = toy_config();
    Rng a(42), b(42), c(43);
    Resoformer<float> ma(cfg, a), mb(cfg, b), mc(cfg, c);
    auto pa = ma.params(), pb = mb.params(), pc = mc.params();
    REQUIRE(pa.size() == pb.size());
    bool any_diff = false;
    for (size_t i = 0; i < pa.size(); ++i) {
        CHECK(pa[i].second.data() == pb[i].second.data());
        any_diff = any_diff || pa[i].second.data() != pc[i].second.data();
    }
    CHECK(any_diff);
}

TEST_CASE("resoformer: parameter count matches shape arithmetic") {
    ModelConfig cfg; // width 64, h=4, L=192, T=96 defaults
    Rng rng(4);
    Resoformer<float> model(cfg, rng);

    const long w = 64, H = 64, L = 192, T = 96, mh = 128, k = 3, inner = 4 * w;
    long expect = 0;
    expect += 1 * w + w;                              // embed
    expect += w * 4 * H + H * 4 * H + 4 * H;          // lstm
    expect += 4 * (k * w * w + w);                    // tcn blocks (no residual projections)
    expect += 2 * (H * w + w);                        // branch projections
    long trans = 4 * w * w                            // attention projections
                 + w * inner + inner + inner * w + w  // ffn
                 + 4 * w;                             // two layer norms
    expect += 2 * trans;                              // ctrans + strans
    expect += 2 * (2 * (w * w + w));                  // two GLUs
    expect += 4 * 2 * w;                              // four fusion layer norms
    expect += L * w * mh + mh + mh * T + T;           // mlp head

    CHECK(model.param_count() == expect);
}

TEST_CASE("resoformer: initial affine outputs have sane RMS") {
    ModelConfig cfg;
    Rng rng(5);
    Resoformer<float> model(cfg, rng);
    for (auto& [name, t] : model.params()) {
        if (t.ndim() < 2) continue;
        int cols = t.dim(t.ndim() - 1);
        long rows = t.size() / cols;
        // input with unit second moment
        std::vector<float> x(rows);
        for (auto& v : x) v = rng.bernoulli(0.5) ? 1.0f : -1.0f;
        double ss = 0;
        for (int c = 0; c < cols; ++c) {
            double acc = 0;
            for (long r = 0; r < rows; ++r) acc += x[r] * t.data()[r * cols + c];
            ss += acc * acc;
        }
        double rms = std::sqrt(ss / cols);
        INFO(name);
        CHECK(rms > 0.1);
        CHECK(rms < 10.0);
    }
}

TEST_CASE("resoformer: forward stays finite over 100 seeds with |x| <= 10") {
    auto cfg = toy_config();
    for (int seed = 0; seed < 100; ++seed) {
        Rng rng(seed);
        Resoformer<float> model(cfg, rng);
        auto y = model.forward(rand_window<float>(cfg.input_len, rng, 10.0), false, rng);
        for (float v : y.data()) CHECK(std::isfinite(v));
    }
}

TEST_CASE("resoformer: forward matches independent re-assembly; skip terms matter") {
    auto cfg = toy_config();
    Rng rng(6);
    Resoformer<float> model(cfg, rng);
    auto x = rand_window<float>(cfg.input_len, rng);
    auto y = model.forward(x, false, rng);
    auto rebuilt = rebuild_forward(model, x, true);
    for (int i = 0; i < cfg.horizon; ++i)
        CHECK(y.data()[i] == doctest::Approx(rebuilt.data()[i]).epsilon(1e-5));

    auto without = rebuild_forward(model, x, false);
    bool differs = false;
    for (int i = 0; i < cfg.horizon; ++i)
        differs = differs || std::abs(without.data()[i] - y.data()[i]) > 1e-6;
    CHECK(differs);
}

TEST_CASE("resoformer: every parameter group gets gradient") {
    auto cfg = toy_config();
    Rng rng(7);
    Resoformer<float> model(cfg, rng);
    auto x = rand_window<float>(cfg.input_len, rng);
    auto target = rand_window<float>(cfg.horizon, rng);
    auto loss = reduce_mean(abs_val(sub(model.forward(x, true, rng), target)));
    backward(loss);
    for (auto& [name, t] : model.params()) {
        REQUIRE(!t.grad().empty());
        bool nonzero = false;
        for (float g : t.grad()) nonzero = nonzero || g != 0.0f;
        INFO(name);
        CHECK(nonzero);
    }
}

TEST_CASE("resoformer: full-model gradient check at toy scale") {
    auto cfg = toy_config();
    // seed chosen so no ReLU preactivation sits within the finite-difference
    // step of its kink
    Rng rng(21);
    Resoformer<double> model(cfg, rng);
    auto x = rand_window<double>(cfg.input_len, rng, 1.0, true);
    std::vector<Tensor64> inputs = {x};
    for (auto& [n, t] : model.params()) inputs.push_back(t);
    auto probe = rand_window<double>(cfg.horizon, rng);
    auto f = [&](std::vector<Tensor64>& in) {
        return reduce_mean(mul(model.forward(in[0], false, rng), probe));
    };
    CHECK(grad_check<double>(f, inputs, 1e-4) < 1e-3);
}

TEST_CASE("checkpoint: save/load round-trip reproduces predictions bit-exact") {
    auto cfg = toy_config();
    Rng rng(9);
    Resoformer<float> model(cfg, rng);
    NormStats norm{12.5, 3.25, -0.5, 2.0};
    auto x = rand_window<float>(cfg.input_len, rng);
    auto before = model.forward(x, false, rng);

    const std::string path = "/tmp/reso_test_ckpt.bin";
    checkpoint_save(path, snapshot(model, norm));
    auto loaded = checkpoint_load(path);
    CHECK(loaded.model_kind == "resoformer");
    CHECK(loaded.norm.rpm_mean == doctest::Approx(12.5));
    auto restored = model_from_checkpoint(loaded);
    auto after = restored->forward(x, false, rng);
    CHECK(before.data() == after.data());
    std::remove(path.c_str());
}

TEST_CASE("checkpoint: corrupted magic is rejected") {
    auto cfg = toy_config();
    Rng rng(10);
    Resoformer<float> model(cfg, rng);
    const std::string path = "/tmp/reso_test_ckpt_bad.bin";
    checkpoint_save(path, snapshot(model, {}));
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(0);
        f.write("XXXX", 4);
    }
    CHECK_THROWS_AS(checkpoint_load(path), FormatError);
    std::remove(path.c_str());
}

TEST_CASE("checkpoint: truncated blob is rejected") {
    auto cfg = toy_config();
    Rng rng(11);
    Resoformer<float> model(cfg, rng);
    const std::string path = "/tmp/reso_test_ckpt_trunc.bin";
    checkpoint_save(path, snapshot(model, {}));
    // drop the last 64 bytes
    std::ifstream in(path, std::ios::binary);
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(all.data(), static_cast<std::streamsize>(all.size() - 64));
    out.close();
    CHECK_THROWS_AS(checkpoint_load(path), FormatError);
    std::remove(path.c_str());
}
