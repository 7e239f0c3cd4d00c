#pragma once

#include <string>
#include <vector>

#include "genreforge/audio.hpp"

namespace genreforge {

inline constexpr int kSpectrogramBins = 128;  // frequency rows, low -> high
inline constexpr int kSliceFrames = 128;      // 2.56 s at 50 frames/s
inline constexpr int kStftWindow = 1024;
inline constexpr int kStftFft = 1024;
inline constexpr int kStftHop = 441;  // 22050 / 50 -> 50 frames per second
inline constexpr double kFramesPerSecond = 50.0;
inline constexpr double kDbFloor = -80.0;

// One-sided STFT magnitudes with the DC row dropped:
// row r holds DFT bin r + 1, so fft_len/2 rows in total.
struct MagnitudeGrid {
    std::vector<double> values;  // rows x frames, row-major
    int rows = 0;
    int frames = 0;

    double at(int r, int f) const { return values[std::size_t(r) * frames + f]; }
};

struct Spectrogram {
    std::vector<float> values;  // kSpectrogramBins x frames, row-major, in [0, 1]
    int frames = 0;
    double frames_per_second = kFramesPerSecond;
    std::string source_id;

    float at(int band, int frame) const { return values[std::size_t(band) * frames + frame]; }
    float& at(int band, int frame) { return values[std::size_t(band) * frames + frame]; }
};

enum class Provenance { kOriginal, kOverlap, kPitchShift, kPitchShiftOverlap };

const char* provenance_name(Provenance p);
Provenance provenance_from_name(const std::string& name);

struct Slice {
    std::vector<float> values;  // kSpectrogramBins x kSliceFrames, row-major
    std::string source_id;
    int offset_frames = 0;
    Provenance provenance = Provenance::kOriginal;

    float at(int band, int frame) const {
        return values[std::size_t(band) * kSliceFrames + frame];
    }
};

// Hann-windowed magnitude STFT; frames = floor((len - window_len) / hop) + 1.
MagnitudeGrid stft_magnitude(const AudioClip& clip, int window_len, int fft_len, int hop);

// 4-to-1 band averaging (512 -> 128 rows), dB relative to the grid maximum,
// clamped to [-80, 0] dB and mapped to [0, 1].
Spectrogram to_grayscale(const MagnitudeGrid& mag);

// Full front end at the canonical rate: window 1024, fft 1024, hop 441.
Spectrogram make_spectrogram(const AudioClip& clip, std::string source_id = {});

// Copy a 128x128 window starting at offset.
Slice extract_slice(const Spectrogram& spec, int offset_frames, Provenance provenance);

// `count` non-overlapping slices at offsets 0, 128, 256, ...
std::vector<Slice> slice_track(const Spectrogram& spec, int count);

int max_slice_count(const Spectrogram& spec);

}  // namespace genreforge
