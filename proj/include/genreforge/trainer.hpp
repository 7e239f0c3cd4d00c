#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "genreforge/network.hpp"
#include "genreforge/spectrogram.hpp"

namespace genreforge {

struct TrainConfig {
    double lr0 = 1e-2;
    double decay = 1e-6;
    int batch_size = 128;
    double l2_lambda = 1e-4;
    int epochs = 1;
    std::uint64_t seed = 0;

    void validate() const;
};

struct EpochStats {
    double loss = 0.0;
    double train_accuracy = 0.0;
    double val_accuracy = 0.0;
    bool has_val = false;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    long steps = 0;
    int best_epoch = -1;
    double best_val_accuracy = 0.0;
};

// Inverse-time decay, step counted per parameter update.
double lr_at(long step, const TrainConfig& cfg);

// w <- w - lr * (grad + l2 * w) for weights; biases and batch-norm
// parameters skip the L2 term. Gradients are zeroed afterwards, even
// when lr == 0. Throws on non-finite gradients, naming the layer.
void sgd_step(Network& net, double lr, double l2);

// Assemble [count, 128, 128] input from slices starting at `first`.
Tensor batch_from_slices(const std::vector<Slice>& slices, const std::vector<std::size_t>& order,
                         std::size_t first, std::size_t count);

// Fraction of slices whose argmax logit matches the label (inference mode,
// ties to the lowest class index).
double evaluate_segments(Network& net, const std::vector<Slice>& slices,
                         const std::vector<int>& labels);

// Shuffled mini-batch SGD with the inverse-time schedule; keeps the final
// short batch; retains the best-validation snapshot in *best_out when a
// validation set is provided (final state otherwise). Progress lines go
// to *progress when non-null.
TrainReport train(Network& net, const std::vector<Slice>& train_slices,
                  const std::vector<int>& train_labels, const std::vector<Slice>& val_slices,
                  const std::vector<int>& val_labels, const TrainConfig& cfg,
                  std::ostream* progress = nullptr, NetSnapshot* best_out = nullptr);

}  // namespace genreforge
