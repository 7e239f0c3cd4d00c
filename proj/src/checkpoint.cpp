#include "genreforge/checkpoint.hpp"

#include <random>

#include "binio.hpp"
#include "genreforge/errors.hpp"

namespace genreforge {

namespace {

void write_config(binio::Writer& w, const NetworkConfig& cfg) {
    w.u32(static_cast<std::uint32_t>(cfg.num_classes));
    w.u32(static_cast<std::uint32_t>(cfg.kernel_size));
    for (int c : cfg.stage_channels) w.u32(static_cast<std::uint32_t>(c));
    for (int p : cfg.pool_sizes) w.u32(static_cast<std::uint32_t>(p));
    w.u8(static_cast<std::uint8_t>(cfg.block_variant));
    w.u8(static_cast<std::uint8_t>(cfg.replace_positions.size()));
    for (int p : cfg.replace_positions) w.u8(static_cast<std::uint8_t>(p));
    w.u32(static_cast<std::uint32_t>(cfg.growth_rate));
    w.f32(static_cast<float>(cfg.dropout_rate));
}

NetworkConfig read_config(binio::Reader& r) {
    NetworkConfig cfg;
    cfg.num_classes = static_cast<int>(r.u32());
    cfg.kernel_size = static_cast<int>(r.u32());
    for (int& c : cfg.stage_channels) c = static_cast<int>(r.u32());
    for (int& p : cfg.pool_sizes) p = static_cast<int>(r.u32());
    const std::uint8_t variant = r.u8();
    if (variant > 2) r.fail("bad block variant code " + std::to_string(variant));
    cfg.block_variant = static_cast<BlockVariant>(variant);
    const std::uint8_t n_replace = r.u8();
    cfg.replace_positions.resize(n_replace);
    for (int& p : cfg.replace_positions) p = static_cast<int>(r.u8());
    cfg.growth_rate = static_cast<int>(r.u32());
    cfg.dropout_rate = static_cast<double>(r.f32());
    return cfg;
}

void write_tensor(binio::Writer& w, const Tensor& t) {
    w.u8(static_cast<std::uint8_t>(t.shape.size()));
    for (std::size_t d : t.shape) w.u32(static_cast<std::uint32_t>(d));
    for (double v : t.data) w.f32(static_cast<float>(v));
}

void read_tensor_into(binio::Reader& r, Tensor& t, const std::string& name) {
    const std::uint8_t rank = r.u8();
    std::vector<std::size_t> shape(rank);
    for (std::size_t& d : shape) d = r.u32();
    if (shape != t.shape) r.fail("shape mismatch for tensor " + name);
    for (double& v : t.data) v = static_cast<double>(r.f32());
}

void write_svm(binio::Writer& w, const SvmModel& svm) {
    w.tag("SVMS");
    w.u32(static_cast<std::uint32_t>(svm.num_classes));
    w.u32(static_cast<std::uint32_t>(svm.dim));
    for (const auto& row : svm.weights) {
        for (double v : row) w.f32(static_cast<float>(v));
    }
    for (double v : svm.biases) w.f32(static_cast<float>(v));
    for (double v : svm.feat_mean) w.f32(static_cast<float>(v));
    for (double v : svm.feat_std) w.f32(static_cast<float>(v));
}

SvmModel read_svm(binio::Reader& r) {
    SvmModel svm;
    svm.num_classes = static_cast<int>(r.u32());
    svm.dim = static_cast<int>(r.u32());
    if (svm.num_classes <= 0 || svm.dim <= 0) r.fail("bad SVM section dimensions");
    svm.weights.assign(svm.num_classes, std::vector<double>(svm.dim));
    for (auto& row : svm.weights) {
        for (double& v : row) v = static_cast<double>(r.f32());
    }
    svm.biases.resize(svm.num_classes);
    for (double& v : svm.biases) v = static_cast<double>(r.f32());
    svm.feat_mean.resize(svm.dim);
    for (double& v : svm.feat_mean) v = static_cast<double>(r.f32());
    svm.feat_std.resize(svm.dim);
    for (double& v : svm.feat_std) v = static_cast<double>(r.f32());
    return svm;
}

}  // namespace

void quantize_params(Network& net) {
    for (const ParamRef& p : net.parameters()) {
        for (double& v : p.value->data) v = static_cast<double>(static_cast<float>(v));
    }
    for (Tensor* b : net.buffers()) {
        for (double& v : b->data) v = static_cast<double>(static_cast<float>(v));
    }
}

void save_checkpoint(const std::filesystem::path& path, Network& net, const SvmModel* svm,
                     const std::vector<std::string>& labels) {
    binio::Writer w;
    w.tag("MGCN");
    w.u16(kCheckpointVersion);
    write_config(w, net.config());

    const std::vector<ParamRef> params = net.parameters();
    w.u32(static_cast<std::uint32_t>(params.size()));
    for (const ParamRef& p : params) write_tensor(w, *p.value);

    const std::vector<Tensor*> buffers = net.buffers();
    w.u32(static_cast<std::uint32_t>(buffers.size()));
    for (const Tensor* b : buffers) write_tensor(w, *b);

    if (svm != nullptr) write_svm(w, *svm);
    if (!labels.empty()) {
        w.tag("LBLS");
        w.u32(static_cast<std::uint32_t>(labels.size()));
        for (const std::string& label : labels) {
            w.u32(static_cast<std::uint32_t>(label.size()));
            w.bytes(label.data(), label.size());
        }
    }
    binio::write_file_atomic(path, w.buf);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    const std::string data = binio::read_file(path);
    binio::Reader r(data, "checkpoint " + path.string());
    if (r.tag() != "MGCN") r.fail("bad magic, expected MGCN");
    const std::uint16_t version = r.u16();
    if (version != kCheckpointVersion) {
        r.fail("unsupported version " + std::to_string(version));
    }
    const NetworkConfig cfg = read_config(r);
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        r.fail(std::string("invalid network config: ") + e.what());
    }

    LoadedCheckpoint out;
    std::mt19937_64 rng(0);  // placeholder init, overwritten below
    out.network = std::make_unique<Network>(cfg, rng);

    const std::vector<ParamRef> params = out.network->parameters();
    if (r.u32() != params.size()) r.fail("parameter tensor count mismatch");
    for (const ParamRef& p : params) read_tensor_into(r, *p.value, p.name);

    const std::vector<Tensor*> buffers = out.network->buffers();
    if (r.u32() != buffers.size()) r.fail("buffer tensor count mismatch");
    for (std::size_t i = 0; i < buffers.size(); ++i) {
        read_tensor_into(r, *buffers[i], "buffer " + std::to_string(i));
    }

    while (!r.at_end()) {
        const std::string section = r.tag();
        if (section == "SVMS") {
            if (out.svm) r.fail("duplicate SVMS section");
            out.svm = read_svm(r);
        } else if (section == "LBLS") {
            if (!out.labels.empty()) r.fail("duplicate LBLS section");
            const std::uint32_t count = r.u32();
            if (count == 0) r.fail("empty LBLS section");
            out.labels.resize(count);
            for (std::string& label : out.labels) {
                label.resize(r.u32());
                r.bytes(label.data(), label.size());
            }
        } else {
            r.fail("unknown section '" + section + "'");
        }
    }
    if (out.svm && out.svm->num_classes != cfg.num_classes) {
        r.fail("SVM class count does not match network config");
    }
    if (!out.labels.empty() && static_cast<int>(out.labels.size()) != cfg.num_classes) {
        r.fail("label count does not match network config");
    }
    return out;
}

}  // namespace genreforge
