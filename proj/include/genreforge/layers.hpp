#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "genreforge/tensor.hpp"

namespace genreforge {

struct LayerParams {
    Tensor weights;
    Tensor bias;
    Tensor grad_weights;
    Tensor grad_bias;
};

struct BatchNormState {
    Tensor gamma, beta;
    Tensor grad_gamma, grad_beta;
    Tensor running_mean, running_var;
    double momentum = 0.9;
    double epsilon = 1e-5;
};

// Optimizer-facing handle: parameter value, its gradient, and whether the
// L2 term applies (conv/dense weights yes, biases and batch-norm no).
struct ParamRef {
    std::string name;
    Tensor* value;
    Tensor* grad;
    bool weight_decay;
};

// backward() consumes the upstream gradient for the most recent forward(),
// returns the input gradient and accumulates parameter gradients (+=).
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, bool training) = 0;
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual void collect_params(std::vector<ParamRef>&) {}
    virtual void collect_buffers(std::vector<Tensor*>&) {}
    virtual const char* kind() const = 0;

    const std::string& name() const { return name_; }
    void set_name(std::string n) { name_ = std::move(n); }

protected:
    std::string name_;
};

// Fills with He-uniform values: uniform in +-sqrt(6 / fan_in).
void he_uniform_fill(Tensor& t, std::size_t fan_in, std::mt19937_64& rng);

// 1D cross-correlation along time with same-length zero padding
// (pad_left = floor((k-1)/2), pad_right = ceil((k-1)/2)).
class Conv1d : public Layer {
public:
    Conv1d(int in_channels, int out_channels, int kernel);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<ParamRef>& out) override;
    const char* kind() const override { return "conv1d"; }

    void init(std::mt19937_64& rng);
    LayerParams& params() { return params_; }
    int in_channels() const { return in_channels_; }
    int out_channels() const { return out_channels_; }
    int kernel() const { return kernel_; }

private:
    int in_channels_, out_channels_, kernel_, pad_left_, pad_right_;
    LayerParams params_;
    Tensor padded_;  // cached padded input from the last forward
};

class Dense : public Layer {
public:
    Dense(int in_features, int out_features);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<ParamRef>& out) override;
    const char* kind() const override { return "dense"; }

    void init(std::mt19937_64& rng);
    LayerParams& params() { return params_; }

private:
    int in_features_, out_features_;
    LayerParams params_;
    Tensor input_;
};

class Relu : public Layer {
public:
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    const char* kind() const override { return "relu"; }

private:
    Tensor input_;
};

// Windowed maximum with stride = pool; trailing remainder frames dropped.
// Gradient routes to the first maximum of each window.
class MaxPool1d : public Layer {
public:
    explicit MaxPool1d(int pool);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    const char* kind() const override { return "maxpool1d"; }

    int pool() const { return pool_; }

private:
    int pool_;
    std::vector<std::size_t> argmax_;
    std::vector<std::size_t> in_shape_;
};

// Maximum over the whole time axis: [b, c, t] -> [b, c].
class GlobalMaxPool1d : public Layer {
public:
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    const char* kind() const override { return "globalmax"; }

private:
    std::vector<std::size_t> argmax_;
    std::vector<std::size_t> in_shape_;
};

// Per-channel batch normalization over [b, c, t] (stats over batch x time)
// or [b, c] (stats over batch).
class BatchNorm1d : public Layer {
public:
    explicit BatchNorm1d(int channels);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<ParamRef>& out) override;
    void collect_buffers(std::vector<Tensor*>& out) override;
    const char* kind() const override { return "batchnorm"; }

    BatchNormState& state() { return state_; }

private:
    int channels_;
    BatchNormState state_;
    Tensor xhat_;
    std::vector<double> inv_std_;
    bool trained_forward_ = false;
};

// Inverted dropout: survivors scaled by 1/(1-rate), inference is identity.
class Dropout : public Layer {
public:
    Dropout(double rate, std::uint64_t seed);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    const char* kind() const override { return "dropout"; }

    double rate() const { return rate_; }

private:
    double rate_;
    std::mt19937_64 rng_;
    std::vector<double> mask_;
    bool masked_ = false;
};

struct LossResult {
    double loss;
    Tensor grad_logits;
};

// Mean negative log softmax probability of the labelled class;
// grad = (softmax - onehot) / batch. Max-subtraction for stability.
LossResult softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

// Row-wise softmax of [b, k] logits.
Tensor softmax_rows(const Tensor& logits);

// Channel-axis concatenation of [b, c1, t] and [b, c2, t].
Tensor concat_channels(const Tensor& a, const Tensor& b);

// Inverse of concat_channels on the gradient side.
std::pair<Tensor, Tensor> split_channels(const Tensor& grad, std::size_t c1);

// Elementwise sum; both operands receive the upstream gradient unchanged.
Tensor add(const Tensor& a, const Tensor& b);

}  // namespace genreforge
