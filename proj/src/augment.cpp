#include "genreforge/augment.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <stdexcept>

#include "genreforge/errors.hpp"

namespace genreforge {

std::vector<Slice> overlap_slices(const Spectrogram& spec, int region_frames) {
    if (region_frames > spec.frames)
        throw ShapeError("overlap_slices: region " + std::to_string(region_frames) +
                         " exceeds " + std::to_string(spec.frames) + " frames");
    if (region_frames < kSliceFrames) {
        std::cerr << "overlap_slices: region of " << region_frames
                  << " frames is smaller than one slice, no output\n";
        return {};
    }
    const int count = (region_frames - kSliceFrames) / kOverlapHop + 1;
    std::vector<Slice> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        const int offset = i * kOverlapHop;
        const Provenance prov =
            offset % kSliceFrames == 0 ? Provenance::kOriginal : Provenance::kOverlap;
        out.push_back(extract_slice(spec, offset, prov));
    }
    return out;
}

Spectrogram pitch_shift(const Spectrogram& spec, double semitones) {
    if (std::abs(semitones) > 12.0)
        throw std::invalid_argument("pitch_shift: |semitones| must be <= 12");

    const double ratio = semitone_ratio(semitones);
    Spectrogram out;
    out.frames = spec.frames;
    out.frames_per_second = spec.frames_per_second;
    out.source_id = spec.source_id;
    out.values.assign(spec.values.size(), 0.0f);

    for (int b = 0; b < kSpectrogramBins; ++b) {
        const double pos = b / ratio;
        if (pos < 0.0 || pos > kSpectrogramBins - 1) continue;  // outside -> stays 0
        const int lo = static_cast<int>(pos);
        const double frac = pos - lo;
        for (int f = 0; f < spec.frames; ++f) {
            double v = (1.0 - frac) * spec.at(lo, f);
            if (frac > 0.0 && lo + 1 < kSpectrogramBins) v += frac * spec.at(lo + 1, f);
            out.at(b, f) = static_cast<float>(std::clamp(v, 0.0, 1.0));
        }
    }
    return out;
}

std::vector<std::pair<int, Provenance>> augmented_offsets(int base_count) {
    if (base_count < 1) throw std::invalid_argument("augmented_offsets: base_count must be >= 1");
    std::vector<std::pair<int, Provenance>> plan;
    const int region = base_count * kSliceFrames;
    for (int offset = 0; offset + kSliceFrames <= region; offset += kOverlapHop)
        plan.emplace_back(offset, offset % kSliceFrames == 0 ? Provenance::kOriginal
                                                             : Provenance::kOverlap);
    for (int i = 0; i < base_count; ++i)
        plan.emplace_back(i * kSliceFrames, Provenance::kPitchShift);
    return plan;
}

std::vector<Slice> build_augmented_set(const Spectrogram& spec, int base_count) {
    if (base_count < 1) throw std::invalid_argument("build_augmented_set: base_count must be >= 1");
    if (spec.frames < base_count * kSliceFrames)
        throw std::invalid_argument("build_augmented_set: " + std::to_string(base_count) +
                                    " base slices need " +
                                    std::to_string(base_count * kSliceFrames) +
                                    " frames, have " + std::to_string(spec.frames));

    std::vector<Slice> out = overlap_slices(spec, base_count * kSliceFrames);
    const Spectrogram shifted = pitch_shift(spec, kAugmentSemitones);
    for (int i = 0; i < base_count; ++i)
        out.push_back(extract_slice(shifted, i * kSliceFrames, Provenance::kPitchShift));
    return out;
}

}  // namespace genreforge
