#pragma once

#include <memory>
#include <string>

#include "reso/model.hpp"

namespace reso {

enum class BaselineKind { Zero, LstmMlp, TcnHead };

// Parameter-free floor: always predicts zeros, so its MAE equals the mean
// absolute normalized target.
template <typename S>
class ZeroModel : public Forecaster<S> {
public:
    explicit ZeroModel(const ModelConfig& cfg) : cfg_(cfg) { cfg.validate(); }

    std::string kind() const override { return "zero"; }
    const ModelConfig& config() const override { return cfg_; }

    TensorT<S> forward(const TensorT<S>& x, bool, Rng&) override {
        if (x.size() != cfg_.input_len)
            throw DimensionError("input window length " + std::to_string(x.size()) +
                                 " does not match configured L=" + std::to_string(cfg_.input_len));
        return TensorT<S>::zeros({cfg_.horizon});
    }

    std::vector<std::pair<std::string, TensorT<S>>> params() override { return {}; }

private:
    ModelConfig cfg_;
};

// LSTM over the raw window, final hidden state through a two-layer MLP.
template <typename S>
class LstmMlp : public Forecaster<S> {
public:
    LstmMlp(const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
        cfg.validate();
        lstm_ = LstmParams<S>::init(1, cfg.lstm_hidden, rng);
        w1_ = glorot<S>({cfg.lstm_hidden, cfg.mlp_hidden}, cfg.lstm_hidden, cfg.mlp_hidden, rng);
        b1_ = TensorT<S>::zeros({cfg.mlp_hidden}, true);
        w2_ = glorot<S>({cfg.mlp_hidden, cfg.horizon}, cfg.mlp_hidden, cfg.horizon, rng);
        b2_ = TensorT<S>::zeros({cfg.horizon}, true);
    }

    std::string kind() const override { return "lstm"; }
    const ModelConfig& config() const override { return cfg_; }

    TensorT<S> forward(const TensorT<S>& x, bool, Rng&) override {
        const int L = cfg_.input_len;
        if (x.size() != L)
            throw DimensionError("input window length " + std::to_string(x.size()) +
                                 " does not match configured L=" + std::to_string(L));
        TensorT<S> h = lstm_forward(reshape(x, {L, 1}), lstm_);
        TensorT<S> last = narrow(h, 0, L - 1, 1); // [1, hidden]
        TensorT<S> hidden = relu(add(matmul(last, w1_), b1_));
        return reshape(add(matmul(hidden, w2_), b2_), {cfg_.horizon});
    }

    std::vector<std::pair<std::string, TensorT<S>>> params() override {
        std::vector<std::pair<std::string, TensorT<S>>> out;
        auto reg = [&](const std::string& n, TensorT<S>& t) { out.emplace_back(n, t); };
        lstm_.visit("lstm", reg);
        reg("mlp.w1", w1_);
        reg("mlp.b1", b1_);
        reg("mlp.w2", w2_);
        reg("mlp.b2", b2_);
        return out;
    }

private:
    ModelConfig cfg_;
    LstmParams<S> lstm_;
    TensorT<S> w1_, b1_, w2_, b2_;
};

// Embedded input through the causal TCN trunk, affine head on the features
// of the last time step.
template <typename S>
class TcnHead : public Forecaster<S> {
public:
    TcnHead(const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
        cfg.validate();
        embed_w_ = glorot<S>({1, cfg.width}, 1, cfg.width, rng);
        embed_b_ = TensorT<S>::zeros({cfg.width}, true);
        tcn_ = TcnParams<S>::init(cfg.width, cfg.width, cfg.kernel, cfg.dilations, rng);
        head_w_ = glorot<S>({cfg.width, cfg.horizon}, cfg.width, cfg.horizon, rng);
        head_b_ = TensorT<S>::zeros({cfg.horizon}, true);
    }

    std::string kind() const override { return "tcn"; }
    const ModelConfig& config() const override { return cfg_; }

    TensorT<S> forward(const TensorT<S>& x, bool training, Rng& rng) override {
        const int L = cfg_.input_len;
        if (x.size() != L)
            throw DimensionError("input window length " + std::to_string(x.size()) +
                                 " does not match configured L=" + std::to_string(L));
        TensorT<S> e = add(matmul(reshape(x, {L, 1}), embed_w_), embed_b_);
        TensorT<S> u = tcn_forward(e, tcn_, training, cfg_.dropout, rng);
        TensorT<S> last = narrow(u, 0, L - 1, 1);
        return reshape(add(matmul(last, head_w_), head_b_), {cfg_.horizon});
    }

    std::vector<std::pair<std::string, TensorT<S>>> params() override {
        std::vector<std::pair<std::string, TensorT<S>>> out;
        auto reg = [&](const std::string& n, TensorT<S>& t) { out.emplace_back(n, t); };
        reg("embed.w", embed_w_);
        reg("embed.b", embed_b_);
        tcn_.visit("tcn", reg);
        reg("head.w", head_w_);
        reg("head.b", head_b_);
        return out;
    }

private:
    ModelConfig cfg_;
    TensorT<S> embed_w_, embed_b_;
    TcnParams<S> tcn_;
    TensorT<S> head_w_, head_b_;
};

// Model factory keyed by CLI name.
template <typename S>
std::unique_ptr<Forecaster<S>> make_model(const std::string& kind, const ModelConfig& cfg, Rng& rng) {
    if (kind == "zero") return std::make_unique<ZeroModel<S>>(cfg);
    if (kind == "lstm") return std::make_unique<LstmMlp<S>>(cfg, rng);
    if (kind == "tcn") return std::make_unique<TcnHead<S>>(cfg, rng);
    if (kind == "resoformer") return std::make_unique<Resoformer<S>>(cfg, rng);
    throw ConfigError("unknown model kind '" + kind + "' (expected zero, lstm, tcn, resoformer)");
}

} // namespace reso
