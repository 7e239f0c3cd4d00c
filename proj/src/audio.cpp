#include "genreforge/audio.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "genreforge/errors.hpp"

namespace genreforge {

namespace {

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t off) {
    return static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8));
}

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t off) {
    return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
           (static_cast<std::uint32_t>(b[off + 2]) << 16) |
           (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t off, const char* tag) {
    return std::memcmp(b.data() + off, tag, 4) == 0;
}

}  // namespace

std::vector<AudioClip> decode_wav(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF"))
        throw FormatError("RIFF: missing or truncated header");
    if (!tag_is(bytes, 8, "WAVE"))
        throw FormatError("WAVE: container is not a WAVE file");

    bool have_fmt = false;
    std::uint16_t channels = 0;
    std::uint32_t sample_rate = 0;
    std::uint16_t bits = 0;
    std::size_t data_off = 0, data_len = 0;
    bool have_data = false;

    std::size_t off = 12;
    while (off + 8 <= bytes.size()) {
        const std::size_t body = off + 8;
        const std::uint32_t len = read_u32(bytes, off + 4);
        if (body + len > bytes.size())
            throw FormatError(std::string(reinterpret_cast<const char*>(bytes.data() + off), 4) +
                              ": chunk overruns file");
        if (tag_is(bytes, off, "fmt ")) {
            if (len < 16) throw FormatError("fmt : chunk too short");
            const std::uint16_t codec = read_u16(bytes, body);
            if (codec != 1) throw FormatError("fmt : non-PCM codec " + std::to_string(codec));
            channels = read_u16(bytes, body + 2);
            sample_rate = read_u32(bytes, body + 4);
            bits = read_u16(bytes, body + 14);
            if (bits != 16)
                throw FormatError("fmt : unsupported bit depth " + std::to_string(bits));
            if (channels != 1 && channels != 2)
                throw FormatError("fmt : unsupported channel count " + std::to_string(channels));
            if (sample_rate == 0) throw FormatError("fmt : zero sample rate");
            have_fmt = true;
        } else if (tag_is(bytes, off, "data")) {
            data_off = body;
            data_len = len;
            have_data = true;
        }
        off = body + len + (len & 1);  // chunks are word-aligned
    }
    if (!have_fmt) throw FormatError("fmt : chunk missing");
    if (!have_data) throw FormatError("data: chunk missing");

    const std::size_t frame_bytes = std::size_t(channels) * 2;
    const std::size_t frames = data_len / frame_bytes;

    std::vector<AudioClip> out(channels);
    for (auto& clip : out) {
        clip.sample_rate = static_cast<int>(sample_rate);
        clip.samples.resize(frames);
    }
    for (std::size_t f = 0; f < frames; ++f) {
        for (std::uint16_t c = 0; c < channels; ++c) {
            const std::size_t p = data_off + f * frame_bytes + c * 2;
            const auto raw = static_cast<std::int16_t>(read_u16(bytes, p));
            out[c].samples[f] = raw / 32768.0;
        }
    }
    return out;
}

AudioClip downmix_mono(const AudioClip& left, const AudioClip& right) {
    if (left.samples.size() != right.samples.size())
        throw ShapeError("downmix: channel lengths differ (" +
                         std::to_string(left.samples.size()) + " vs " +
                         std::to_string(right.samples.size()) + ")");
    if (left.sample_rate != right.sample_rate)
        throw ShapeError("downmix: sample rates differ");
    AudioClip out;
    out.sample_rate = left.sample_rate;
    out.samples.resize(left.samples.size());
    for (std::size_t i = 0; i < out.samples.size(); ++i)
        out.samples[i] = 0.5 * (left.samples[i] + right.samples[i]);
    return out;
}

AudioClip resample(const AudioClip& clip, int target_rate) {
    if (target_rate <= 0) throw std::invalid_argument("resample: target rate must be positive");
    if (clip.sample_rate == target_rate) return clip;

    AudioClip out;
    out.sample_rate = target_rate;
    if (clip.samples.empty()) return out;

    const std::size_t n = clip.samples.size();
    const std::size_t out_n =
        static_cast<std::size_t>(n * static_cast<std::uint64_t>(target_rate) / clip.sample_rate);
    out.samples.resize(out_n);
    const double step = static_cast<double>(clip.sample_rate) / target_rate;
    for (std::size_t i = 0; i < out_n; ++i) {
        const double pos = i * step;
        const auto lo = static_cast<std::size_t>(pos);
        if (lo + 1 >= n) {
            out.samples[i] = clip.samples[n - 1];
            continue;
        }
        const double frac = pos - lo;
        out.samples[i] = (1.0 - frac) * clip.samples[lo] + frac * clip.samples[lo + 1];
    }
    return out;
}

AudioClip load_wav_mono(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    auto channels = decode_wav(bytes);
    AudioClip mono =
        channels.size() == 2 ? downmix_mono(channels[0], channels[1]) : std::move(channels[0]);
    return resample(mono, kCanonicalRate);
}

}  // namespace genreforge
