#include "genreforge/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

#include "genreforge/errors.hpp"

namespace genreforge {

void TrainConfig::validate() const {
    if (lr0 <= 0.0) throw ConfigError("train config: lr0 must be > 0");
    if (decay < 0.0) throw ConfigError("train config: decay must be >= 0");
    if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
    if (l2_lambda < 0.0) throw ConfigError("train config: l2_lambda must be >= 0");
    if (epochs < 0) throw ConfigError("train config: epochs must be >= 0");
}

double lr_at(long step, const TrainConfig& cfg) {
    if (step < 0) throw std::invalid_argument("lr_at: step must be >= 0");
    return cfg.lr0 / (1.0 + cfg.decay * static_cast<double>(step));
}

void sgd_step(Network& net, double lr, double l2) {
    for (auto& p : net.parameters()) {
        for (double g : p.grad->data)
            if (!std::isfinite(g))
                throw std::runtime_error("sgd_step: non-finite gradient in " + p.name);
        double* w = p.value->data.data();
        const double* g = p.grad->data.data();
        const std::size_t n = p.value->numel();
        if (p.weight_decay && l2 != 0.0) {
            for (std::size_t i = 0; i < n; ++i) w[i] -= lr * (g[i] + l2 * w[i]);
        } else {
            for (std::size_t i = 0; i < n; ++i) w[i] -= lr * g[i];
        }
        p.grad->zero();
    }
}

Tensor batch_from_slices(const std::vector<Slice>& slices, const std::vector<std::size_t>& order,
                         std::size_t first, std::size_t count) {
    Tensor batch({count, std::size_t(kSpectrogramBins), std::size_t(kSliceFrames)});
    const std::size_t per = std::size_t(kSpectrogramBins) * kSliceFrames;
    for (std::size_t i = 0; i < count; ++i) {
        const Slice& s = slices[order[first + i]];
        double* dst = batch.data.data() + i * per;
        for (std::size_t j = 0; j < per; ++j) dst[j] = s.values[j];
    }
    return batch;
}

namespace {

int argmax_row(const Tensor& logits, std::size_t row) {
    const std::size_t K = logits.dim(1);
    const double* p = logits.data.data() + row * K;
    int best = 0;
    for (std::size_t k = 1; k < K; ++k)
        if (p[k] > p[best]) best = static_cast<int>(k);  // ties keep the lowest index
    return best;
}

}  // namespace

double evaluate_segments(Network& net, const std::vector<Slice>& slices,
                         const std::vector<int>& labels) {
    if (slices.empty()) throw std::invalid_argument("evaluate_segments: empty slice set");
    if (slices.size() != labels.size())
        throw std::invalid_argument("evaluate_segments: label count mismatch");

    std::vector<std::size_t> order(slices.size());
    std::iota(order.begin(), order.end(), 0);

    constexpr std::size_t kEvalBatch = 128;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < slices.size(); start += kEvalBatch) {
        const std::size_t count = std::min(kEvalBatch, slices.size() - start);
        Tensor logits = net.forward(batch_from_slices(slices, order, start, count), false);
        for (std::size_t i = 0; i < count; ++i)
            if (argmax_row(logits, i) == labels[start + i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(slices.size());
}

TrainReport train(Network& net, const std::vector<Slice>& train_slices,
                  const std::vector<int>& train_labels, const std::vector<Slice>& val_slices,
                  const std::vector<int>& val_labels, const TrainConfig& cfg,
                  std::ostream* progress, NetSnapshot* best_out) {
    cfg.validate();
    if (train_slices.empty()) throw std::invalid_argument("train: empty training set");
    if (train_slices.size() != train_labels.size())
        throw std::invalid_argument("train: label count mismatch");
    const int num_classes = net.config().num_classes;
    for (int y : train_labels)
        if (y < 0 || y >= num_classes)
            throw std::out_of_range("train: label " + std::to_string(y) + " outside [0, " +
                                    std::to_string(num_classes) + ")");

    const bool has_val = !val_slices.empty();
    std::mt19937_64 rng(cfg.seed);
    std::vector<std::size_t> order(train_slices.size());
    std::iota(order.begin(), order.end(), 0);

    TrainReport report;
    const std::size_t n = train_slices.size();
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double loss_sum = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t count = std::min<std::size_t>(cfg.batch_size, n - start);
            Tensor batch = batch_from_slices(train_slices, order, start, count);
            std::vector<int> labels(count);
            for (std::size_t i = 0; i < count; ++i) labels[i] = train_labels[order[start + i]];

            Tensor logits = net.forward(batch, true);
            auto [loss, grad] = softmax_cross_entropy(logits, labels);
            if (!std::isfinite(loss))
                throw std::runtime_error("train: loss diverged at epoch " +
                                         std::to_string(epoch));
            loss_sum += loss * static_cast<double>(count);
            for (std::size_t i = 0; i < count; ++i)
                if (argmax_row(logits, i) == labels[i]) ++correct;

            net.backward(grad);
            sgd_step(net, lr_at(report.steps, cfg), cfg.l2_lambda);
            ++report.steps;
        }

        EpochStats stats;
        stats.loss = loss_sum / static_cast<double>(n);
        stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
        stats.has_val = has_val;
        if (has_val) {
            stats.val_accuracy = evaluate_segments(net, val_slices, val_labels);
            if (report.best_epoch < 0 || stats.val_accuracy > report.best_val_accuracy) {
                report.best_epoch = epoch;
                report.best_val_accuracy = stats.val_accuracy;
                if (best_out) *best_out = snapshot(net);
            }
        }
        report.epochs.push_back(stats);

        if (progress) {
            char line[160];
            if (has_val) {
                std::snprintf(line, sizeof(line),
                              "epoch=%d loss=%.6f train_acc=%.4f val_acc=%.4f lr=%.6f", epoch,
                              stats.loss, stats.train_accuracy, stats.val_accuracy,
                              lr_at(report.steps, cfg));
            } else {
                std::snprintf(line, sizeof(line), "epoch=%d loss=%.6f train_acc=%.4f lr=%.6f",
                              epoch, stats.loss, stats.train_accuracy, lr_at(report.steps, cfg));
            }
            (*progress) << line << "\n";
        }
    }

    if (!has_val && best_out) *best_out = snapshot(net);
    return report;
}

}  // namespace genreforge
