#include "genreforge/network.hpp"

#include <algorithm>
#include <stdexcept>

#include "genreforge/errors.hpp"

namespace genreforge {

const char* block_variant_name(BlockVariant v) {
    switch (v) {
        case BlockVariant::kBasic: return "basic";
        case BlockVariant::kResnet: return "resnet";
        case BlockVariant::kDensenet: return "densenet";
    }
    return "?";
}

BlockVariant block_variant_from_name(const std::string& name) {
    if (name == "basic") return BlockVariant::kBasic;
    if (name == "resnet") return BlockVariant::kResnet;
    if (name == "densenet") return BlockVariant::kDensenet;
    throw ConfigError("unknown block variant '" + name + "'");
}

void NetworkConfig::validate() const {
    if (num_classes < 2) throw ConfigError("config: num_classes must be >= 2");
    if (kernel_size != 3 && kernel_size != 4)
        throw ConfigError("config: kernel_size must be 3 or 4");
    for (int c : stage_channels)
        if (c < 1) throw ConfigError("config: stage channels must be >= 1");
    for (int p : pool_sizes)
        if (p < 1) throw ConfigError("config: pool sizes must be >= 1");
    if (block_variant == BlockVariant::kDensenet && growth_rate < 1)
        throw ConfigError("config: growth_rate must be >= 1 for densenet blocks");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw ConfigError("config: dropout_rate must be in [0, 1)");
    for (int p : replace_positions)
        if (p < 0 || p > 4)
            throw ConfigError("config: replace position " + std::to_string(p) +
                              " outside stages 0..4");
}

// ------------------------------------------------------------ BasicBlock

BasicBlock::BasicBlock(int in_channels, int out_channels, int kernel)
    : conv_(in_channels, out_channels, kernel), bn_(out_channels) {}

void BasicBlock::set_name(std::string n) {
    name_ = std::move(n);
    conv_.set_name(name_ + ".conv");
    bn_.set_name(name_ + ".bn");
}

void BasicBlock::init(std::mt19937_64& rng) { conv_.init(rng); }

Tensor BasicBlock::forward(const Tensor& x, bool training) {
    return relu_.forward(bn_.forward(conv_.forward(x, training), training), training);
}

Tensor BasicBlock::backward(const Tensor& grad_out) {
    return conv_.backward(bn_.backward(relu_.backward(grad_out)));
}

void BasicBlock::collect_params(std::vector<ParamRef>& out) {
    conv_.collect_params(out);
    bn_.collect_params(out);
}

void BasicBlock::collect_buffers(std::vector<Tensor*>& out) { bn_.collect_buffers(out); }

// ----------------------------------------------------------- ResnetBlock

ResnetBlock::ResnetBlock(int in_channels, int out_channels, int kernel)
    : conv1_(in_channels, out_channels, kernel),
      bn1_(out_channels),
      conv2_(out_channels, out_channels, kernel),
      bn2_(out_channels) {
    if (in_channels != out_channels)
        projection_ = std::make_unique<Conv1d>(in_channels, out_channels, 1);
}

void ResnetBlock::set_name(std::string n) {
    name_ = std::move(n);
    conv1_.set_name(name_ + ".conv1");
    bn1_.set_name(name_ + ".bn1");
    conv2_.set_name(name_ + ".conv2");
    bn2_.set_name(name_ + ".bn2");
    if (projection_) projection_->set_name(name_ + ".proj");
}

void ResnetBlock::init(std::mt19937_64& rng) {
    conv1_.init(rng);
    conv2_.init(rng);
    if (projection_) projection_->init(rng);
}

Tensor ResnetBlock::forward(const Tensor& x, bool training) {
    Tensor branch = bn2_.forward(
        conv2_.forward(relu1_.forward(bn1_.forward(conv1_.forward(x, training), training),
                                      training),
                       training),
        training);
    Tensor skip = projection_ ? projection_->forward(x, training) : x;
    return relu_out_.forward(add(branch, skip), training);
}

Tensor ResnetBlock::backward(const Tensor& grad_out) {
    Tensor dsum = relu_out_.backward(grad_out);
    Tensor dx = conv1_.backward(bn1_.backward(relu1_.backward(conv2_.backward(
        bn2_.backward(dsum)))));
    Tensor dskip = projection_ ? projection_->backward(dsum) : std::move(dsum);
    return add(dx, dskip);
}

void ResnetBlock::collect_params(std::vector<ParamRef>& out) {
    conv1_.collect_params(out);
    bn1_.collect_params(out);
    conv2_.collect_params(out);
    bn2_.collect_params(out);
    if (projection_) projection_->collect_params(out);
}

void ResnetBlock::collect_buffers(std::vector<Tensor*>& out) {
    bn1_.collect_buffers(out);
    bn2_.collect_buffers(out);
}

// --------------------------------------------------------- DenseNetBlock

DenseNetBlock::DenseNetBlock(int in_channels, int growth, int kernel, int out_channels)
    : in_channels_(in_channels),
      growth_(growth),
      bn1_(in_channels),
      conv1_(in_channels, growth, kernel),
      bn2_(in_channels + growth),
      conv2_(in_channels + growth, growth, kernel),
      transition_(in_channels + 2 * growth, out_channels, 1),
      bn3_(out_channels) {
    if (growth < 1) throw ConfigError("densenet block: growth must be >= 1");
}

void DenseNetBlock::set_name(std::string n) {
    name_ = std::move(n);
    bn1_.set_name(name_ + ".bn1");
    conv1_.set_name(name_ + ".conv1");
    bn2_.set_name(name_ + ".bn2");
    conv2_.set_name(name_ + ".conv2");
    transition_.set_name(name_ + ".transition");
    bn3_.set_name(name_ + ".bn3");
}

void DenseNetBlock::init(std::mt19937_64& rng) {
    conv1_.init(rng);
    conv2_.init(rng);
    transition_.init(rng);
}

Tensor DenseNetBlock::forward(const Tensor& x, bool training) {
    Tensor h1 = conv1_.forward(relu1_.forward(bn1_.forward(x, training), training), training);
    Tensor x01 = concat_channels(x, h1);
    Tensor h2 = conv2_.forward(relu2_.forward(bn2_.forward(x01, training), training), training);
    Tensor x012 = concat_channels(x01, h2);
    return relu3_.forward(bn3_.forward(transition_.forward(x012, training), training), training);
}

Tensor DenseNetBlock::backward(const Tensor& grad_out) {
    Tensor d012 = transition_.backward(bn3_.backward(relu3_.backward(grad_out)));
    auto [dx01_direct, dh2] = split_channels(d012, std::size_t(in_channels_ + growth_));
    Tensor dx01_conv = bn2_.backward(relu2_.backward(conv2_.backward(dh2)));
    Tensor dx01 = add(dx01_direct, dx01_conv);
    auto [dx_direct, dh1] = split_channels(dx01, std::size_t(in_channels_));
    Tensor dx_conv = bn1_.backward(relu1_.backward(conv1_.backward(dh1)));
    return add(dx_direct, dx_conv);
}

void DenseNetBlock::collect_params(std::vector<ParamRef>& out) {
    bn1_.collect_params(out);
    conv1_.collect_params(out);
    bn2_.collect_params(out);
    conv2_.collect_params(out);
    transition_.collect_params(out);
    bn3_.collect_params(out);
}

void DenseNetBlock::collect_buffers(std::vector<Tensor*>& out) {
    bn1_.collect_buffers(out);
    bn2_.collect_buffers(out);
    bn3_.collect_buffers(out);
}

// --------------------------------------------------------------- Network

namespace {

std::unique_ptr<Layer> make_stage(const NetworkConfig& cfg, int stage, int in_channels,
                                  bool replaced, std::mt19937_64& rng) {
    const int out_channels = cfg.stage_channels[stage];
    const std::string name = "stage" + std::to_string(stage);
    // Stage 4's plain conv is the 1x1 FC replacement; variant blocks keep
    // the configured kernel at every position.
    const int plain_kernel = stage == 4 ? 1 : cfg.kernel_size;

    if (replaced && cfg.block_variant == BlockVariant::kResnet) {
        auto block = std::make_unique<ResnetBlock>(in_channels, out_channels, cfg.kernel_size);
        block->set_name(name);
        block->init(rng);
        return block;
    }
    if (replaced && cfg.block_variant == BlockVariant::kDensenet) {
        auto block = std::make_unique<DenseNetBlock>(in_channels, cfg.growth_rate,
                                                     cfg.kernel_size, out_channels);
        block->set_name(name);
        block->init(rng);
        return block;
    }
    auto block = std::make_unique<BasicBlock>(in_channels, out_channels, plain_kernel);
    block->set_name(name);
    block->init(rng);
    return block;
}

}  // namespace

Network::Network(NetworkConfig cfg, std::mt19937_64& rng) : cfg_(std::move(cfg)) {
    cfg_.validate();

    std::vector<int> replaced = cfg_.replace_positions;
    std::sort(replaced.begin(), replaced.end());
    replaced.erase(std::unique(replaced.begin(), replaced.end()), replaced.end());
    cfg_.replace_positions = replaced;

    auto is_replaced = [&](int stage) {
        return cfg_.block_variant != BlockVariant::kBasic &&
               std::binary_search(replaced.begin(), replaced.end(), stage);
    };

    int channels = kInputBins;
    for (int stage = 0; stage < 5; ++stage) {
        layers_.push_back(make_stage(cfg_, stage, channels, is_replaced(stage), rng));
        channels = cfg_.stage_channels[stage];
        if (stage < 4) {
            auto pool = std::make_unique<MaxPool1d>(cfg_.pool_sizes[stage]);
            pool->set_name("pool" + std::to_string(stage));
            layers_.push_back(std::move(pool));
        }
    }

    auto gmax = std::make_unique<GlobalMaxPool1d>();
    gmax->set_name("head.globalmax");
    layers_.push_back(std::move(gmax));

    auto dense1 = std::make_unique<Dense>(cfg_.stage_channels[4], kFeatureDim);
    dense1->set_name("head.dense1024");
    dense1->init(rng);
    layers_.push_back(std::move(dense1));

    auto relu = std::make_unique<Relu>();
    relu->set_name("head.relu");
    layers_.push_back(std::move(relu));
    feature_tap_index_ = layers_.size() - 1;

    layers_.push_back(std::make_unique<Dropout>(cfg_.dropout_rate, rng()));
    layers_.back()->set_name("head.dropout");

    auto dense2 = std::make_unique<Dense>(kFeatureDim, cfg_.num_classes);
    dense2->set_name("head.logits");
    dense2->init(rng);
    layers_.push_back(std::move(dense2));
}

Tensor Network::forward(const Tensor& batch, bool training) {
    if (batch.rank() != 3 || batch.dim(1) != std::size_t(kInputBins))
        throw ShapeError("network: expected input [b, " + std::to_string(kInputBins) +
                         ", t], got " + shape_str(batch.shape));
    trace_.clear();
    Tensor x = batch;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        x = layers_[i]->forward(x, training);
        trace_.push_back({layers_[i]->name(), x.shape});
        if (i == feature_tap_index_) features_ = x;
    }
    return x;
}

Tensor Network::backward(const Tensor& grad_logits) {
    Tensor g = grad_logits;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
}

std::vector<ParamRef> Network::parameters() {
    std::vector<ParamRef> out;
    for (auto& layer : layers_) layer->collect_params(out);
    return out;
}

std::vector<Tensor*> Network::buffers() {
    std::vector<Tensor*> out;
    for (auto& layer : layers_) layer->collect_buffers(out);
    return out;
}

std::size_t Network::parameter_count() {
    std::size_t n = 0;
    for (const auto& p : parameters()) n += p.value->numel();
    return n;
}

Network build_network(const NetworkConfig& cfg, std::mt19937_64& rng) {
    return Network(cfg, rng);
}

NetSnapshot snapshot(Network& net) {
    NetSnapshot snap;
    for (const auto& p : net.parameters()) snap.params.push_back(*p.value);
    for (const Tensor* b : net.buffers()) snap.buffers.push_back(*b);
    return snap;
}

void restore(Network& net, const NetSnapshot& snap) {
    auto params = net.parameters();
    auto buffers = net.buffers();
    if (params.size() != snap.params.size() || buffers.size() != snap.buffers.size())
        throw ShapeError("snapshot restore: layout mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i].value->same_shape(snap.params[i]))
            throw ShapeError("snapshot restore: shape mismatch at " + params[i].name);
        *params[i].value = snap.params[i];
    }
    for (std::size_t i = 0; i < buffers.size(); ++i) *buffers[i] = snap.buffers[i];
}

std::pair<Tensor, Tensor> network_forward(Network& net, const Tensor& batch, bool training) {
    Tensor logits = net.forward(batch, training);
    return {std::move(logits), net.features()};
}

}  // namespace genreforge
