#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "reso/config.hpp"
#include "reso/layers.hpp"

namespace reso {

// Common forecasting interface: normalized input window [L] in, normalized
// forecast [T] out. Parameter tensors are shared handles, so the optimizer
// and checkpoint code mutate the model's weights through params().
template <typename S>
class Forecaster {
public:
    virtual ~Forecaster() = default;
    virtual std::string kind() const = 0;
    virtual const ModelConfig& config() const = 0;
    virtual TensorT<S> forward(const TensorT<S>& x, bool training, Rng& rng) = 0;
    virtual std::vector<std::pair<std::string, TensorT<S>>> params() = 0;

    long param_count() {
        long n = 0;
        for (auto& [name, t] : params()) n += t.size();
        return n;
    }
};

// Hybrid model: parallel LSTM/TCN branches with positional encoding, fused by
// a co-attention transformer, GLU gating with skip connections, a
// self-attention transformer, and a flattening MLP head.
template <typename S>
class Resoformer : public Forecaster<S> {
public:
    Resoformer(const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
        cfg.validate();
        const int w = cfg.width, L = cfg.input_len;
        embed_w_ = glorot<S>({1, w}, 1, w, rng);
        embed_b_ = TensorT<S>::zeros({w}, true);
        lstm_ = LstmParams<S>::init(w, cfg.lstm_hidden, rng);
        tcn_ = TcnParams<S>::init(w, w, cfg.kernel, cfg.dilations, rng);
        proj_rnn_w_ = glorot<S>({cfg.lstm_hidden, w}, cfg.lstm_hidden, w, rng);
        proj_rnn_b_ = TensorT<S>::zeros({w}, true);
        proj_tcn_w_ = glorot<S>({w, w}, w, w, rng);
        proj_tcn_b_ = TensorT<S>::zeros({w}, true);
        ctrans_ = TransformerBlockParams<S>::init(w, cfg.heads, rng);
        strans_ = TransformerBlockParams<S>::init(w, cfg.heads, rng);
        glu_u_ = GluParams<S>::init(w, rng);
        glu_w_ = GluParams<S>::init(w, rng);
        ln_u_gain_ = TensorT<S>::full({w}, S(1), true);
        ln_u_bias_ = TensorT<S>::zeros({w}, true);
        ln_v_gain_ = TensorT<S>::full({w}, S(1), true);
        ln_v_bias_ = TensorT<S>::zeros({w}, true);
        ln_w_gain_ = TensorT<S>::full({w}, S(1), true);
        ln_w_bias_ = TensorT<S>::zeros({w}, true);
        ln_o_gain_ = TensorT<S>::full({w}, S(1), true);
        ln_o_bias_ = TensorT<S>::zeros({w}, true);
        mlp_w1_ = glorot<S>({L * w, cfg.mlp_hidden}, L * w, cfg.mlp_hidden, rng);
        mlp_b1_ = TensorT<S>::zeros({cfg.mlp_hidden}, true);
        mlp_w2_ = glorot<S>({cfg.mlp_hidden, cfg.horizon}, cfg.mlp_hidden, cfg.horizon, rng);
        mlp_b2_ = TensorT<S>::zeros({cfg.horizon}, true);
        pe_ = positional_encoding<S>(L, w);
    }

    std::string kind() const override { return "resoformer"; }
    const ModelConfig& config() const override { return cfg_; }

    TensorT<S> forward(const TensorT<S>& x, bool training, Rng& rng) override {
        const int L = cfg_.input_len, w = cfg_.width;
        if (x.size() != L)
            throw DimensionError("input window length " + std::to_string(x.size()) +
                                 " does not match configured L=" + std::to_string(L));
        TensorT<S> e = add(matmul(reshape(x, {L, 1}), embed_w_), embed_b_);
        TensorT<S> x_rnn =
            add(add(matmul(lstm_forward(e, lstm_), proj_rnn_w_), proj_rnn_b_), pe_);
        TensorT<S> x_tcn =
            add(add(matmul(tcn_forward(e, tcn_, training, cfg_.dropout, rng), proj_tcn_w_),
                    proj_tcn_b_),
                pe_);
        TensorT<S> skip = add(x_rnn, x_tcn);
        TensorT<S> u = layer_norm(
            add(transformer_block(x_rnn, x_tcn, ctrans_, training, cfg_.dropout, rng), skip),
            ln_u_gain_, ln_u_bias_);
        TensorT<S> v = layer_norm(add(u, glu(u, glu_u_)), ln_v_gain_, ln_v_bias_);
        TensorT<S> wr = layer_norm(
            add(add(transformer_block(v, v, strans_, training, cfg_.dropout, rng), v), skip),
            ln_w_gain_, ln_w_bias_);
        TensorT<S> o = layer_norm(add(wr, glu(wr, glu_w_)), ln_o_gain_, ln_o_bias_);
        TensorT<S> flat = reshape(o, {1, L * w});
        TensorT<S> hidden = relu(add(matmul(flat, mlp_w1_), mlp_b1_));
        TensorT<S> y = add(matmul(hidden, mlp_w2_), mlp_b2_);
        return reshape(y, {cfg_.horizon});
    }

    std::vector<std::pair<std::string, TensorT<S>>> params() override {
        std::vector<std::pair<std::string, TensorT<S>>> out;
        auto reg = [&](const std::string& n, TensorT<S>& t) { out.emplace_back(n, t); };
        reg("embed.w", embed_w_);
        reg("embed.b", embed_b_);
        lstm_.visit("lstm", reg);
        tcn_.visit("tcn", reg);
        reg("proj_rnn.w", proj_rnn_w_);
        reg("proj_rnn.b", proj_rnn_b_);
        reg("proj_tcn.w", proj_tcn_w_);
        reg("proj_tcn.b", proj_tcn_b_);
        ctrans_.visit("ctrans", reg);
        strans_.visit("strans", reg);
        glu_u_.visit("glu_u", reg);
        glu_w_.visit("glu_w", reg);
        reg("ln_u.gain", ln_u_gain_);
        reg("ln_u.bias", ln_u_bias_);
        reg("ln_v.gain", ln_v_gain_);
        reg("ln_v.bias", ln_v_bias_);
        reg("ln_w.gain", ln_w_gain_);
        reg("ln_w.bias", ln_w_bias_);
        reg("ln_o.gain", ln_o_gain_);
        reg("ln_o.bias", ln_o_bias_);
        reg("mlp.w1", mlp_w1_);
        reg("mlp.b1", mlp_b1_);
        reg("mlp.w2", mlp_w2_);
        reg("mlp.b2", mlp_b2_);
        return out;
    }

private:
    ModelConfig cfg_;
    TensorT<S> embed_w_, embed_b_;
    LstmParams<S> lstm_;
    TcnParams<S> tcn_;
    TensorT<S> proj_rnn_w_, proj_rnn_b_, proj_tcn_w_, proj_tcn_b_;
    TransformerBlockParams<S> ctrans_, strans_;
    GluParams<S> glu_u_, glu_w_;
    TensorT<S> ln_u_gain_, ln_u_bias_, ln_v_gain_, ln_v_bias_;
    TensorT<S> ln_w_gain_, ln_w_bias_, ln_o_gain_, ln_o_bias_;
    TensorT<S> mlp_w1_, mlp_b1_, mlp_w2_, mlp_b2_;
    TensorT<S> pe_;
};

} // namespace reso
