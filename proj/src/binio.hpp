#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>

#include "genreforge/errors.hpp"

// Little-endian primitives shared by the cache and checkpoint formats.
namespace genreforge::binio {

struct Writer {
    std::string buf;

    void u8(std::uint8_t v) { buf.push_back(static_cast<char>(v)); }
    void u16(std::uint16_t v) {
        u8(static_cast<std::uint8_t>(v & 0xff));
        u8(static_cast<std::uint8_t>(v >> 8));
    }
    void u32(std::uint32_t v) {
        u16(static_cast<std::uint16_t>(v & 0xffff));
        u16(static_cast<std::uint16_t>(v >> 16));
    }
    void f32(float v) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
    }
    void tag(const char* four) { buf.append(four, 4); }
    void bytes(const void* p, std::size_t n) {
        buf.append(static_cast<const char*>(p), n);
    }
};

class Reader {
public:
    Reader(const std::string& data, std::string context)
        : data_(data), context_(std::move(context)) {}

    std::uint8_t u8() {
        need(1);
        return static_cast<std::uint8_t>(data_[pos_++]);
    }
    std::uint16_t u16() {
        const std::uint16_t lo = u8();
        return static_cast<std::uint16_t>(lo | (std::uint16_t(u8()) << 8));
    }
    std::uint32_t u32() {
        const std::uint32_t lo = u16();
        return lo | (std::uint32_t(u16()) << 16);
    }
    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::string tag() {
        need(4);
        std::string t = data_.substr(pos_, 4);
        pos_ += 4;
        return t;
    }
    void bytes(void* p, std::size_t n) {
        need(n);
        std::memcpy(p, data_.data() + pos_, n);
        pos_ += n;
    }
    bool at_end() const { return pos_ == data_.size(); }
    std::size_t remaining() const { return data_.size() - pos_; }

    [[noreturn]] void fail(const std::string& what) const {
        throw FormatError(context_ + ": " + what);
    }

private:
    void need(std::size_t n) {
        if (data_.size() - pos_ < n) fail("truncated file");
    }

    const std::string& data_;
    std::size_t pos_ = 0;
    std::string context_;
};

// Write to `<path>.tmp` then rename, so readers never observe a partial file.
void write_file_atomic(const std::filesystem::path& path, const std::string& data);

std::string read_file(const std::filesystem::path& path);

}  // namespace genreforge::binio
