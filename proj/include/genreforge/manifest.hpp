#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace genreforge {

enum class Split { kTrain, kVal, kTest };

const char* split_name(Split s);
Split split_from_name(const std::string& name);

struct ManifestEntry {
    std::string path;
    std::string label;
    Split split = Split::kTrain;
};

// CSV with the exact header `path,label,split`. Labels must all come from
// one dataset vocabulary (the 8 FMA-small genres or the 10 GTZAN genres);
// duplicate paths and unknown labels or splits are ParseErrors carrying the
// offending line number.
std::vector<ManifestEntry> parse_manifest(const std::string& text);
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

// Sorted distinct labels; index in this vector is the class index.
std::vector<std::string> label_set(const std::vector<ManifestEntry>& entries);

// Reassign splits stratified per label: roughly 80/10/10 with at least one
// val and one test track per label. Requires >= 3 tracks per label.
void auto_split(std::vector<ManifestEntry>& entries, std::uint64_t seed);

}  // namespace genreforge
