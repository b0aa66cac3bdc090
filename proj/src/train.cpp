#include "reso/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace reso {

double cosine_anneal(double lr0, int epoch, int total_epochs) {
    if (total_epochs < 1 || epoch < 0 || epoch > total_epochs)
        throw ConfigError("cosine_anneal needs 0 <= epoch <= total_epochs");
    return lr0 * (1.0 + std::cos(M_PI * epoch / total_epochs)) / 2.0;
}

void Adam::step(std::vector<std::pair<std::string, Tensor>>& params, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
    const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
    for (auto& [name, p] : params) {
        if (p.grad().empty()) p.grad().assign(p.size(), 0.0f);
        auto& [m, v] = moments_[name];
        if (m.empty()) {
            m.assign(p.size(), 0.0f);
            v.assign(p.size(), 0.0f);
        } else if (static_cast<long>(m.size()) != p.size()) {
            throw TrainError("adam state for '" + name + "' has stale size");
        }
        for (long i = 0; i < p.size(); ++i) {
            const double g = p.grad()[i];
            if (!std::isfinite(g))
                throw TrainError("non-finite gradient in '" + name + "' at step " +
                                 std::to_string(t_));
            const double mi = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            const double vi = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            m[i] = static_cast<float>(mi);
            v[i] = static_cast<float>(vi);
            p.data()[i] -= static_cast<float>(lr * (mi / bc1) / (std::sqrt(vi / bc2) + cfg_.epsilon));
        }
    }
}

namespace {

void zero_grads(std::vector<std::pair<std::string, Tensor>>& params) {
    for (auto& [name, p] : params) p.grad().assign(p.size(), 0.0f);
}

void clip_global_norm(std::vector<std::pair<std::string, Tensor>>& params, double max_norm) {
    double ss = 0;
    for (auto& [name, p] : params)
        for (float g : p.grad()) ss += double(g) * double(g);
    const double norm = std::sqrt(ss);
    if (norm <= max_norm || norm == 0.0) return;
    const float s = static_cast<float>(max_norm / norm);
    for (auto& [name, p] : params)
        for (float& g : p.grad()) g *= s;
}

} // namespace

TrainResult train_model(Forecaster<float>& model, const std::vector<WindowPair>& windows,
                        const TrainConfig& cfg, const NormStats& norm) {
    cfg.validate();
    if (windows.empty()) throw TrainError("no training windows");
    const int T = model.config().horizon;
    for (const auto& w : windows)
        if (static_cast<int>(w.x.size()) != model.config().input_len ||
            static_cast<int>(w.y.size()) != T)
            throw DimensionError("window (" + std::to_string(w.x.size()) + "," +
                                 std::to_string(w.y.size()) + ") does not match model (L,T)");

    Adam opt(cfg);
    Rng run_rng(cfg.seed);
    TrainResult result;
    result.checkpoint = snapshot(model, norm);

    std::vector<size_t> order(windows.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t_start = std::chrono::steady_clock::now();
        const double lr = cfg.schedule == LrSchedule::Cosine
                              ? cosine_anneal(cfg.learning_rate, epoch - 1, cfg.epochs)
                              : cfg.learning_rate;
        // seeded Fisher-Yates, independent stream per epoch
        Rng shuffle_rng = run_rng.fork(epoch);
        for (size_t i = order.size() - 1; i > 0; --i) {
            size_t j = shuffle_rng.next_u64() % (i + 1);
            std::swap(order[i], order[j]);
        }
        Rng dropout_rng = run_rng.fork(1000000 + epoch);

        double loss_sum = 0;
        long loss_count = 0;
        bool diverged = false;
        auto params = model.params();
        for (size_t start = 0; start < order.size() && !diverged; start += cfg.batch_size) {
            const size_t stop = std::min(order.size(), start + cfg.batch_size);
            std::vector<Tensor> abs_sums;
            for (size_t i = start; i < stop; ++i) {
                const auto& w = windows[order[i]];
                Tensor x = Tensor::from_data({static_cast<int>(w.x.size())}, w.x);
                Tensor y = Tensor::from_data({T}, w.y);
                Tensor pred = model.forward(x, true, dropout_rng);
                abs_sums.push_back(reduce_sum(abs_val(sub(pred, y))));
            }
            Tensor total = abs_sums[0];
            for (size_t i = 1; i < abs_sums.size(); ++i) total = add(total, abs_sums[i]);
            // equals mae over the concatenated batch predictions
            Tensor loss = scale(total, 1.0 / (double(stop - start) * T));
            const double loss_val = loss.item();
            if (!std::isfinite(loss_val)) {
                diverged = true;
                break;
            }
            loss_sum += loss_val * double(stop - start);
            loss_count += static_cast<long>(stop - start);

            if (!params.empty()) {
                zero_grads(params);
                backward(loss);
                if (cfg.clip_gradients) clip_global_norm(params, cfg.clip_norm);
                opt.step(params, lr);
            }
        }
        if (diverged) {
            result.diverged = true;
            break; // result.checkpoint still holds the last good weights
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
        result.history.push_back({epoch, loss_sum / loss_count, lr, secs});
        result.checkpoint = snapshot(model, norm);
    }
    return result;
}

EvalResult evaluate_model(Forecaster<float>& model, const std::vector<WindowPair>& windows) {
    if (windows.empty()) throw TrainError("no evaluation windows");
    Rng rng(0); // eval forward never consumes randomness
    double abs_sum = 0, sq_sum = 0;
    long n = 0;
    NoGradGuard guard;
    for (const auto& w : windows) {
        Tensor x = Tensor::from_data({static_cast<int>(w.x.size())}, w.x);
        Tensor pred = model.forward(x, false, rng);
        for (size_t i = 0; i < w.y.size(); ++i) {
            const double d = double(w.y[i]) - double(pred.data()[i]);
            abs_sum += std::abs(d);
            sq_sum += d * d;
            ++n;
        }
    }
    return {abs_sum / n, sq_sum / n, static_cast<long>(windows.size())};
}

void write_history_csv(const std::string& path, const std::vector<EpochStats>& history) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write history CSV: " + path);
    os << "epoch,loss,lr,seconds\n";
    char buf[128];
    for (const auto& h : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.10g,%.10g,%.3f\n", h.epoch, h.loss, h.lr, h.seconds);
        os << buf;
    }
}

} // namespace reso
