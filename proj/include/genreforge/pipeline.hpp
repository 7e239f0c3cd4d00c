#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "genreforge/ensemble.hpp"
#include "genreforge/manifest.hpp"
#include "genreforge/network.hpp"
#include "genreforge/spectrogram.hpp"
#include "genreforge/trainer.hpp"

namespace genreforge {

struct TrackRef {
    std::string source;  // original audio path, also the track id
    std::string cache;   // cache filename relative to the index directory
    std::string label;
    Split split = Split::kTrain;
};

struct SliceRef {
    int track = 0;  // index into SliceIndex::tracks
    int offset_frames = 0;
    Provenance provenance = Provenance::kOriginal;
};

struct SliceIndex {
    int sample_rate = kCanonicalRate;
    bool augmented = false;
    std::vector<std::string> labels;  // sorted; position is the class index
    std::vector<TrackRef> tracks;
    std::vector<SliceRef> slices;
};

void save_slice_index(const std::filesystem::path& path, const SliceIndex& index);
SliceIndex load_slice_index(const std::filesystem::path& path);

struct PreprocessOptions {
    bool augment = false;
    std::optional<std::uint64_t> auto_split_seed;
    int max_slices_per_track = 10;
};

struct PreprocessSummary {
    int processed = 0;
    int skipped = 0;
    int slices = 0;
};

// Decode, resample, and cache one spectrogram per manifest track, then write
// `index.json` describing every training/evaluation slice. Per-file failures
// are logged to *log and skipped. Parallel across tracks; GENREFORGE_THREADS
// caps the worker count.
PreprocessSummary preprocess_command(const std::filesystem::path& manifest_path,
                                     const std::filesystem::path& out_dir,
                                     const PreprocessOptions& opts,
                                     std::ostream* log = nullptr);

struct StackingConfig {
    double C = 1.0;
    int epochs = 200;
};

// Train on the index's train split, restore the best-validation state, fit
// the stacking SVM on train-track averaged features, and write the
// checkpoint (network + SVM + label names).
TrainReport train_command(const std::filesystem::path& index_path,
                          const NetworkConfig& net_cfg, const TrainConfig& train_cfg,
                          const StackingConfig& stacking,
                          const std::filesystem::path& checkpoint_path,
                          std::ostream* progress = nullptr);

enum class EnsembleMethod { kVote, kSvm };

EnsembleMethod ensemble_method_from_name(const std::string& name);

struct EvalReport {
    double segment_accuracy = 0.0;
    double track_accuracy = 0.0;
    std::vector<std::string> labels;
    std::vector<std::vector<int>> confusion;  // [true][predicted], in tracks

    std::string text() const;
};

EvalReport evaluate_command(const std::filesystem::path& checkpoint_path,
                            const std::filesystem::path& index_path, Split split,
                            EnsembleMethod method);

struct PredictResult {
    int class_index = 0;
    std::string label;
    std::vector<double> scores;  // mean softmax over slices, sums to 1
    std::vector<std::string> labels;
    int slices_used = 0;

    std::string text() const;
};

// Full front end on one audio file with up to 10 slices; fails with a
// duration error when the file cannot fill a single slice.
PredictResult predict_command(const std::filesystem::path& checkpoint_path,
                              const std::filesystem::path& audio_path);

}  // namespace genreforge
