#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "genreforge/layers.hpp"

namespace genreforge {

enum class BlockVariant { kBasic, kResnet, kDensenet };

const char* block_variant_name(BlockVariant v);
BlockVariant block_variant_from_name(const std::string& name);

// Five conv stages. Stage 0 is the entry conv consuming the 128 frequency
// bins as channels; stage 4 is the 1x1 conv standing in for a fully
// connected layer. replace_positions lists the stages (0..4) built from
// block_variant instead of the plain conv block.
struct NetworkConfig {
    int num_classes = 8;
    int kernel_size = 4;
    std::array<int, 5> stage_channels{128, 128, 256, 256, 512};
    std::array<int, 4> pool_sizes{4, 4, 2, 1};
    BlockVariant block_variant = BlockVariant::kBasic;
    std::vector<int> replace_positions;
    int growth_rate = 32;
    double dropout_rate = 0.5;

    void validate() const;  // throws ConfigError
};

inline constexpr int kInputBins = 128;
inline constexpr int kFeatureDim = 1024;

// conv(k) + BN + ReLU.
class BasicBlock : public Layer {
public:
    BasicBlock(int in_channels, int out_channels, int kernel);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<ParamRef>& out) override;
    void collect_buffers(std::vector<Tensor*>& out) override;
    const char* kind() const override { return "basic_block"; }
    void init(std::mt19937_64& rng);
    void set_name(std::string n);

private:
    Conv1d conv_;
    BatchNorm1d bn_;
    Relu relu_;
};

// Two-conv residual branch with identity (or 1x1 projection) skip:
// out = ReLU(BN(conv(ReLU(BN(conv(x))))) + skip(x)).
class ResnetBlock : public Layer {
public:
    ResnetBlock(int in_channels, int out_channels, int kernel);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<ParamRef>& out) override;
    void collect_buffers(std::vector<Tensor*>& out) override;
    const char* kind() const override { return "resnet_block"; }
    void init(std::mt19937_64& rng);
    void set_name(std::string n);

    bool has_projection() const { return projection_ != nullptr; }
    Conv1d& conv1() { return conv1_; }
    Conv1d& conv2() { return conv2_; }

private:
    Conv1d conv1_;
    BatchNorm1d bn1_;
    Relu relu1_;
    Conv1d conv2_;
    BatchNorm1d bn2_;
    std::unique_ptr<Conv1d> projection_;  // only when channel counts differ
    Relu relu_out_;
};

// Two BN+ReLU+conv layers with dense connectivity, then a 1x1 transition
// conv restoring the stage's nominal width. Pre-transition channel count
// is in + 2 * growth.
class DenseNetBlock : public Layer {
public:
    DenseNetBlock(int in_channels, int growth, int kernel, int out_channels);

    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    void collect_params(std::vector<ParamRef>& out) override;
    void collect_buffers(std::vector<Tensor*>& out) override;
    const char* kind() const override { return "densenet_block"; }
    void init(std::mt19937_64& rng);
    void set_name(std::string n);

    int pre_transition_channels() const { return in_channels_ + 2 * growth_; }

private:
    int in_channels_, growth_;
    BatchNorm1d bn1_;
    Relu relu1_;
    Conv1d conv1_;
    BatchNorm1d bn2_;
    Relu relu2_;
    Conv1d conv2_;
    Conv1d transition_;
    BatchNorm1d bn3_;
    Relu relu3_;
};

struct ShapeTraceEntry {
    std::string layer;
    std::vector<std::size_t> shape;
};

class Network {
public:
    Network(NetworkConfig cfg, std::mt19937_64& rng);

    // Input [b, 128, t]; returns logits [b, num_classes] and stores the
    // 1024-d feature tap (post-ReLU, pre-dropout).
    Tensor forward(const Tensor& batch, bool training);
    Tensor backward(const Tensor& grad_logits);

    const Tensor& features() const { return features_; }

    std::vector<ParamRef> parameters();
    std::vector<Tensor*> buffers();
    std::size_t parameter_count();

    const NetworkConfig& config() const { return cfg_; }
    const std::vector<ShapeTraceEntry>& last_trace() const { return trace_; }

private:
    NetworkConfig cfg_;
    std::vector<std::unique_ptr<Layer>> layers_;
    std::size_t feature_tap_index_ = 0;
    Tensor features_;
    std::vector<ShapeTraceEntry> trace_;
};

Network build_network(const NetworkConfig& cfg, std::mt19937_64& rng);

// Deep copy of all trainable parameters and running statistics, used for
// best-validation retention and checkpointing.
struct NetSnapshot {
    std::vector<Tensor> params;
    std::vector<Tensor> buffers;
};

NetSnapshot snapshot(Network& net);
void restore(Network& net, const NetSnapshot& snap);

// (logits, features) convenience wrapper.
std::pair<Tensor, Tensor> network_forward(Network& net, const Tensor& batch, bool training);

}  // namespace genreforge
