#include "genreforge/spectrogram.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "genreforge/errors.hpp"
#include "genreforge/fft.hpp"

namespace genreforge {

const char* provenance_name(Provenance p) {
    switch (p) {
        case Provenance::kOriginal: return "original";
        case Provenance::kOverlap: return "overlap";
        case Provenance::kPitchShift: return "pitch_shift";
        case Provenance::kPitchShiftOverlap: return "pitch_shift_overlap";
    }
    return "?";
}

Provenance provenance_from_name(const std::string& name) {
    if (name == "original") return Provenance::kOriginal;
    if (name == "overlap") return Provenance::kOverlap;
    if (name == "pitch_shift") return Provenance::kPitchShift;
    if (name == "pitch_shift_overlap") return Provenance::kPitchShiftOverlap;
    throw ParseError("unknown provenance '" + name + "'");
}

MagnitudeGrid stft_magnitude(const AudioClip& clip, int window_len, int fft_len, int hop) {
    if (window_len <= 0 || fft_len < window_len)
        throw std::invalid_argument("stft: need 0 < window_len <= fft_len");
    if (hop < 1) throw std::invalid_argument("stft: hop must be >= 1");
    const auto n = static_cast<long long>(clip.samples.size());
    if (n < window_len)
        throw std::invalid_argument("stft: clip shorter than one analysis window (" +
                                    std::to_string(n) + " < " + std::to_string(window_len) + ")");

    const int frames = static_cast<int>((n - window_len) / hop) + 1;
    const int rows = fft_len / 2;  // DC dropped, bins 1..fft_len/2 kept

    std::vector<double> window(window_len);
    for (int i = 0; i < window_len; ++i)
        window[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / window_len));

    MagnitudeGrid grid;
    grid.rows = rows;
    grid.frames = frames;
    grid.values.assign(std::size_t(rows) * frames, 0.0);

    const Fft fft(static_cast<std::size_t>(fft_len));
    std::vector<std::complex<double>> buf(fft_len);
    for (int f = 0; f < frames; ++f) {
        const std::size_t start = std::size_t(f) * hop;
        for (int i = 0; i < window_len; ++i)
            buf[i] = {clip.samples[start + i] * window[i], 0.0};
        std::fill(buf.begin() + window_len, buf.end(), std::complex<double>{0.0, 0.0});
        fft.forward(buf);
        for (int r = 0; r < rows; ++r)
            grid.values[std::size_t(r) * frames + f] = std::abs(buf[r + 1]);
    }
    return grid;
}

Spectrogram to_grayscale(const MagnitudeGrid& mag) {
    if (mag.rows != 4 * kSpectrogramBins)
        throw ShapeError("to_grayscale: expected " + std::to_string(4 * kSpectrogramBins) +
                         " rows, got " + std::to_string(mag.rows));

    const int frames = mag.frames;
    std::vector<double> bands(std::size_t(kSpectrogramBins) * frames);
    for (int b = 0; b < kSpectrogramBins; ++b) {
        for (int f = 0; f < frames; ++f) {
            double sum = 0.0;
            for (int r = 4 * b; r < 4 * b + 4; ++r) sum += mag.at(r, f);
            bands[std::size_t(b) * frames + f] = 0.25 * sum;
        }
    }

    const double peak = bands.empty() ? 0.0 : *std::max_element(bands.begin(), bands.end());

    Spectrogram spec;
    spec.frames = frames;
    spec.values.assign(bands.size(), 0.0f);
    if (peak <= 0.0) return spec;  // silence

    for (std::size_t i = 0; i < bands.size(); ++i) {
        const double v = bands[i];
        if (v <= 0.0) continue;
        const double db = std::max(kDbFloor, 20.0 * std::log10(v / peak));
        spec.values[i] = static_cast<float>(1.0 + db / 80.0);
    }
    return spec;
}

Spectrogram make_spectrogram(const AudioClip& clip, std::string source_id) {
    if (clip.sample_rate != kCanonicalRate)
        throw std::invalid_argument("make_spectrogram: clip must be at " +
                                    std::to_string(kCanonicalRate) + " Hz, got " +
                                    std::to_string(clip.sample_rate));
    Spectrogram spec = to_grayscale(stft_magnitude(clip, kStftWindow, kStftFft, kStftHop));
    spec.frames_per_second = static_cast<double>(kCanonicalRate) / kStftHop;
    spec.source_id = std::move(source_id);
    return spec;
}

Slice extract_slice(const Spectrogram& spec, int offset_frames, Provenance provenance) {
    if (offset_frames < 0 || offset_frames + kSliceFrames > spec.frames)
        throw ShapeError("slice window [" + std::to_string(offset_frames) + ", " +
                         std::to_string(offset_frames + kSliceFrames) + ") outside " +
                         std::to_string(spec.frames) + " frames");
    Slice s;
    s.source_id = spec.source_id;
    s.offset_frames = offset_frames;
    s.provenance = provenance;
    s.values.resize(std::size_t(kSpectrogramBins) * kSliceFrames);
    for (int b = 0; b < kSpectrogramBins; ++b)
        for (int t = 0; t < kSliceFrames; ++t)
            s.values[std::size_t(b) * kSliceFrames + t] = spec.at(b, offset_frames + t);
    return s;
}

std::vector<Slice> slice_track(const Spectrogram& spec, int count) {
    if (count < 1) throw std::invalid_argument("slice_track: count must be >= 1");
    if (spec.frames < count * kSliceFrames)
        throw std::invalid_argument("slice_track: " + std::to_string(count) + " slices need " +
                                    std::to_string(count * kSliceFrames) + " frames, have " +
                                    std::to_string(spec.frames) + " (max " +
                                    std::to_string(max_slice_count(spec)) + ")");
    std::vector<Slice> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i)
        out.push_back(extract_slice(spec, i * kSliceFrames, Provenance::kOriginal));
    return out;
}

int max_slice_count(const Spectrogram& spec) { return spec.frames / kSliceFrames; }

}  // namespace genreforge
