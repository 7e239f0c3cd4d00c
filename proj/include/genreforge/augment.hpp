#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "genreforge/spectrogram.hpp"

namespace genreforge {

inline constexpr int kOverlapHop = 64;  // 50 % of a 128-frame slice
inline constexpr double kAugmentSemitones = 1.0;

// Frequency ratio of a pitch interval, 2^(semitones/12).
inline double semitone_ratio(double semitones) { return std::exp2(semitones / 12.0); }

// 128-frame windows at hop 64 over the first region_frames columns.
// Offsets that are multiples of 128 keep provenance original; the
// interleaved ones are marked overlap. region < 128 yields an empty list.
std::vector<Slice> overlap_slices(const Spectrogram& spec, int region_frames);

// Frequency-axis remap with ratio r = 2^(semitones/12); output row b reads
// the interpolated value at source row b/r, zero outside [0, 127].
Spectrogram pitch_shift(const Spectrogram& spec, double semitones);

// Offset/provenance plan for one track: overlapped windows over the base
// region plus the base_count pitch-shifted originals (3*base_count - 1 total).
std::vector<std::pair<int, Provenance>> augmented_offsets(int base_count);

// Materialized plan: overlap slices of the original spectrogram plus
// slice_track of the +1 semitone shift.
std::vector<Slice> build_augmented_set(const Spectrogram& spec, int base_count);

}  // namespace genreforge
