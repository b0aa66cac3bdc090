#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "reso/tensor.hpp"

// Layer building blocks: LSTM, dilated-causal TCN, multi-head attention,
// GLU gating, positional encoding, and the post-norm transformer block.
// Parameter structs expose visit(prefix, fn) so models can register every
// trainable tensor under a stable name.

namespace reso {

// Uniform init in +-sqrt(6 / (fan_in + fan_out)); keeps initial activations O(1).
template <typename S>
TensorT<S> glorot(Shape shape, int fan_in, int fan_out, Rng& rng) {
    double bound = std::sqrt(6.0 / (fan_in + fan_out));
    std::vector<S> d(numel(shape));
    for (auto& v : d) v = static_cast<S>(rng.uniform(-bound, bound));
    return TensorT<S>::from_data(std::move(shape), std::move(d), true);
}

// ---------------------------------------------------------------------------
// LSTM
// ---------------------------------------------------------------------------

// Four-gate LSTM weights; gate order along the packed axis is
// input, forget, candidate, output. Forget-gate bias starts at 1.
template <typename S>
struct LstmParams {
    int input_dim = 0;
    int hidden = 0;
    TensorT<S> w_x; // [input_dim, 4*hidden]
    TensorT<S> w_h; // [hidden, 4*hidden]
    TensorT<S> b;   // [4*hidden]

    static LstmParams init(int input_dim, int hidden, Rng& rng) {
        LstmParams p;
        p.input_dim = input_dim;
        p.hidden = hidden;
        p.w_x = glorot<S>({input_dim, 4 * hidden}, input_dim, hidden, rng);
        p.w_h = glorot<S>({hidden, 4 * hidden}, hidden, hidden, rng);
        std::vector<S> bias(4 * hidden, S(0));
        for (int j = hidden; j < 2 * hidden; ++j) bias[j] = S(1);
        p.b = TensorT<S>::from_data({4 * hidden}, std::move(bias), true);
        return p;
    }

    template <typename V>
    void visit(const std::string& prefix, V&& v) {
        v(prefix + ".w_x", w_x);
        v(prefix + ".w_h", w_h);
        v(prefix + ".b", b);
    }
};

// Returns the full hidden-state sequence [L, hidden]; step t sees inputs <= t.
template <typename S>
TensorT<S> lstm_forward(const TensorT<S>& e, const LstmParams<S>& p,
                        TensorT<S> h0 = {}, TensorT<S> c0 = {}) {
    if (e.ndim() != 2 || e.dim(1) != p.input_dim)
        throw DimensionError("lstm_forward input " + shape_str(e.shape()) + " does not match input_dim " +
                             std::to_string(p.input_dim));
    const int L = e.dim(0), H = p.hidden;
    TensorT<S> h = h0.defined() ? reshape(h0, {1, H}) : TensorT<S>::zeros({1, H});
    TensorT<S> c = c0.defined() ? reshape(c0, {1, H}) : TensorT<S>::zeros({1, H});
    TensorT<S> xw = add(matmul(e, p.w_x), p.b); // [L, 4H]
    std::vector<TensorT<S>> outputs;
    outputs.reserve(L);
    for (int t = 0; t < L; ++t) {
        TensorT<S> gates = add(narrow(xw, 0, t, 1), matmul(h, p.w_h));
        TensorT<S> gi = sigmoid(narrow(gates, 1, 0, H));
        TensorT<S> gf = sigmoid(narrow(gates, 1, H, H));
        TensorT<S> gc = tanh_act(narrow(gates, 1, 2 * H, H));
        TensorT<S> go = sigmoid(narrow(gates, 1, 3 * H, H));
        c = add(mul(gf, c), mul(gi, gc));
        h = mul(go, tanh_act(c));
        outputs.push_back(h);
    }
    return concat(outputs, 0);
}

// ---------------------------------------------------------------------------
// TCN
// ---------------------------------------------------------------------------

template <typename S>
struct TcnBlock {
    TensorT<S> filters;  // [k, c_in, c_out]
    TensorT<S> bias;     // [c_out]
    TensorT<S> res_proj; // [c_in, c_out], defined only when channel counts differ
    int dilation = 1;

    template <typename V>
    void visit(const std::string& prefix, V&& v) {
        v(prefix + ".filters", filters);
        v(prefix + ".bias", bias);
        if (res_proj.defined()) v(prefix + ".res_proj", res_proj);
    }
};

template <typename S>
struct TcnParams {
    int in_channels = 0;
    int channels = 0;
    int kernel = 0;
    std::vector<TcnBlock<S>> blocks;

    static TcnParams init(int in_channels, int channels, int kernel,
                          const std::vector<int>& dilations, Rng& rng) {
        if (kernel < 1) throw ConfigError("TCN kernel size must be >= 1");
        int prev = 0;
        for (int d : dilations) {
            if (d < 1 || (d & (d - 1)) != 0 || d <= prev)
                throw ConfigError("TCN dilations must be strictly increasing powers of two");
            prev = d;
        }
        TcnParams p;
        p.in_channels = in_channels;
        p.channels = channels;
        p.kernel = kernel;
        int cin = in_channels;
        for (int d : dilations) {
            TcnBlock<S> blk;
            blk.dilation = d;
            blk.filters = glorot<S>({kernel, cin, channels}, kernel * cin, channels, rng);
            blk.bias = TensorT<S>::zeros({channels}, true);
            if (cin != channels) blk.res_proj = glorot<S>({cin, channels}, cin, channels, rng);
            p.blocks.push_back(std::move(blk));
            cin = channels;
        }
        return p;
    }

    template <typename V>
    void visit(const std::string& prefix, V&& v) {
        for (size_t i = 0; i < blocks.size(); ++i)
            blocks[i].visit(prefix + ".block" + std::to_string(i), v);
    }
};

// Stacked causal blocks: conv -> ReLU -> dropout -> residual add.
template <typename S>
TensorT<S> tcn_forward(const TensorT<S>& e, const TcnParams<S>& p, bool training, double dropout_rate,
                       Rng& rng) {
    TensorT<S> x = e;
    for (const auto& blk : p.blocks) {
        TensorT<S> y = add(causal_dilated_conv1d(x, blk.filters, blk.dilation), blk.bias);
        y = relu(y);
        y = dropout(y, dropout_rate, training, rng);
        TensorT<S> res = blk.res_proj.defined() ? matmul(x, blk.res_proj) : x;
        x = add(res, y);
    }
    return x;
}

// ---------------------------------------------------------------------------
// Positional encoding
// ---------------------------------------------------------------------------

// PE(pos, 2i) = sin(pos / 10000^(2i/width)), PE(pos, 2i+1) = cos(same).
template <typename S>
TensorT<S> positional_encoding(int length, int width) {
    if (width % 2 != 0)
        throw ConfigError("positional_encoding width must be even, got " + std::to_string(width));
    std::vector<S> d(static_cast<size_t>(length) * width);
    for (int pos = 0; pos < length; ++pos)
        for (int i = 0; i < width / 2; ++i) {
            double angle = pos / std::pow(10000.0, 2.0 * i / width);
            d[static_cast<size_t>(pos) * width + 2 * i] = static_cast<S>(std::sin(angle));
            d[static_cast<size_t>(pos) * width + 2 * i + 1] = static_cast<S>(std::cos(angle));
        }
    return TensorT<S>::from_data({length, width}, std::move(d));
}

// ---------------------------------------------------------------------------
// Multi-head scaled dot-product attention
// ---------------------------------------------------------------------------

template <typename S>
struct AttentionParams {
    int width = 0;
    int heads = 0;
    int head_dim = 0;
    TensorT<S> w_q, w_k, w_v; // [width, heads*head_dim]
    TensorT<S> w_o;           // [heads*head_dim, width]

    static AttentionParams init(int width, int heads, Rng& rng) {
        if (heads < 1 || width % heads != 0)
            throw ConfigError("attention width " + std::to_string(width) +
                              " not divisible by heads " + std::to_string(heads));
        AttentionParams p;
        p.width = width;
        p.heads = heads;
        p.head_dim = width / heads;
        p.w_q = glorot<S>({width, width}, width, width, rng);
        p.w_k = glorot<S>({width, width}, width, width, rng);
        p.w_v = glorot<S>({width, width}, width, width, rng);
        p.w_o = glorot<S>({width, width}, width, width, rng);
        return p;
    }

    template <typename V>
    void visit(const std::string& prefix, V&& v) {
        v(prefix + ".w_q", w_q);
        v(prefix + ".w_k", w_k);
        v(prefix + ".w_v", w_v);
        v(prefix + ".w_o", w_o);
    }
};

// q_in: [L_q, width], k_in/v_in: [L_k, width] -> [L_q, width]. No causal mask.
// Per-head softmax weights are exposed through weights_out for inspection.
template <typename S>
TensorT<S> multi_head_attention(const TensorT<S>& q_in, const TensorT<S>& k_in,
                                const TensorT<S>& v_in, const AttentionParams<S>& p,
                                std::vector<TensorT<S>>* weights_out = nullptr) {
    if (q_in.dim(1) != p.width || k_in.dim(1) != p.width || v_in.dim(1) != p.width)
        throw DimensionError("attention inputs must have width " + std::to_string(p.width));
    if (k_in.dim(0) != v_in.dim(0))
        throw DimensionError("attention key/value lengths differ");
    TensorT<S> q = matmul(q_in, p.w_q);
    TensorT<S> k = matmul(k_in, p.w_k);
    TensorT<S> v = matmul(v_in, p.w_v);
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(p.head_dim));
    std::vector<TensorT<S>> heads;
    heads.reserve(p.heads);
    for (int h = 0; h < p.heads; ++h) {
        TensorT<S> qh = narrow(q, 1, h * p.head_dim, p.head_dim);
        TensorT<S> kh = narrow(k, 1, h * p.head_dim, p.head_dim);
        TensorT<S> vh = narrow(v, 1, h * p.head_dim, p.head_dim);
        TensorT<S> scores = scale(matmul(qh, transpose(kh)), inv_scale);
        TensorT<S> weights = softmax(scores, 1);
        if (weights_out) weights_out->push_back(weights);
        heads.push_back(matmul(weights, vh));
    }
    return matmul(concat(heads, 1), p.w_o);
}

// ---------------------------------------------------------------------------
// GLU
// ---------------------------------------------------------------------------

template <typename S>
struct GluParams {
    TensorT<S> w1, b1; // gate affine
    TensorT<S> w2, b2; // value affine

    static GluParams init(int width, Rng& rng) {
        GluParams p;
        p.w1 = glorot<S>({width, width}, width, width, rng);
        p.b1 = TensorT<S>::zeros({width}, true);
        p.w2 = glorot<S>({width, width}, width, width, rng);
        p.b2 = TensorT<S>::zeros({width}, true);
        return p;
    }

    template <typename V>
    void visit(const std::string& prefix, V&& v) {
        v(prefix + ".w1", w1);
        v(prefix + ".b1", b1);
        v(prefix + ".w2", w2);
        v(prefix + ".b2", b2);
    }
};

// sigma(X W1 + b1) (x) (X W2 + b2)
template <typename S>
TensorT<S> glu(const TensorT<S>& x, const GluParams<S>& p) {
    TensorT<S> gate = sigmoid(add(matmul(x, p.w1), p.b1));
    TensorT<S> value = add(matmul(x, p.w2), p.b2);
    return mul(gate, value);
}

// ---------------------------------------------------------------------------
// Post-norm transformer block
// ---------------------------------------------------------------------------

template <typename S>
struct TransformerBlockParams {
    AttentionParams<S> att;
    TensorT<S> ff1, fb1; // width -> 4*width
    TensorT<S> ff2, fb2; // 4*width -> width
    TensorT<S> ln1_gain, ln1_bias;
    TensorT<S> ln2_gain, ln2_bias;

    static TransformerBlockParams init(int width, int heads, Rng& rng) {
        TransformerBlockParams p;
        p.att = AttentionParams<S>::init(width, heads, rng);
        const int inner = 4 * width;
        p.ff1 = glorot<S>({width, inner}, width, inner, rng);
        p.fb1 = TensorT<S>::zeros({inner}, true);
        p.ff2 = glorot<S>({inner, width}, inner, width, rng);
        p.fb2 = TensorT<S>::zeros({width}, true);
        p.ln1_gain = TensorT<S>::full({width}, S(1), true);
        p.ln1_bias = TensorT<S>::zeros({width}, true);
        p.ln2_gain = TensorT<S>::full({width}, S(1), true);
        p.ln2_bias = TensorT<S>::zeros({width}, true);
        return p;
    }

    template <typename V>
    void visit(const std::string& prefix, V&& v) {
        att.visit(prefix + ".att", v);
        v(prefix + ".ff1", ff1);
        v(prefix + ".fb1", fb1);
        v(prefix + ".ff2", ff2);
        v(prefix + ".fb2", fb2);
        v(prefix + ".ln1_gain", ln1_gain);
        v(prefix + ".ln1_bias", ln1_bias);
        v(prefix + ".ln2_gain", ln2_gain);
        v(prefix + ".ln2_bias", ln2_bias);
    }
};

// A = LN(X + Att(Q,K,V)); O = LN(A + FFN(A)). q_src == kv_src gives
// self-attention, distinct sources give co-attention. Output is [L_q, width].
template <typename S>
TensorT<S> transformer_block(const TensorT<S>& q_src, const TensorT<S>& kv_src,
                             const TransformerBlockParams<S>& p, bool training,
                             double dropout_rate, Rng& rng) {
    TensorT<S> att = multi_head_attention(q_src, kv_src, kv_src, p.att);
    att = dropout(att, dropout_rate, training, rng);
    TensorT<S> a = layer_norm(add(q_src, att), p.ln1_gain, p.ln1_bias);
    TensorT<S> hidden = relu(add(matmul(a, p.ff1), p.fb1));
    hidden = dropout(hidden, dropout_rate, training, rng);
    TensorT<S> ffn = add(matmul(hidden, p.ff2), p.fb2);
    return layer_norm(add(a, ffn), p.ln2_gain, p.ln2_bias);
}

} // namespace reso
