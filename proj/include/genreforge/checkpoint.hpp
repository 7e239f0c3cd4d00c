#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "genreforge/ensemble.hpp"
#include "genreforge/network.hpp"

namespace genreforge {

inline constexpr std::uint16_t kCheckpointVersion = 1;

// Round every parameter and running statistic through 32-bit storage
// precision, so the live network matches a save/load round trip exactly.
void quantize_params(Network& net);

// "MGCN" magic, u16 version, serialized NetworkConfig, parameter tensors in
// build order, batch-norm running stats, then optional sections: "SVMS"
// (stacking model) and "LBLS" (class names for human-readable output).
void save_checkpoint(const std::filesystem::path& path, Network& net,
                     const SvmModel* svm = nullptr,
                     const std::vector<std::string>& labels = {});

struct LoadedCheckpoint {
    std::unique_ptr<Network> network;
    std::optional<SvmModel> svm;
    std::vector<std::string> labels;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace genreforge
