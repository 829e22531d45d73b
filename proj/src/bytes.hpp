#pragma once

// little-endian byte packing shared by the binary readers and writers

#include <cstdint>
#include <cstring>
#include <string>

#include "jtr/error.hpp"

namespace jtr::bytes {

inline void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; i++) out.push_back(char((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, uint64_t v) {
    for (int i = 0; i < 8; i++) out.push_back(char((v >> (8 * i)) & 0xff));
}

inline void put_i64(std::string& out, int64_t v) { put_u64(out, uint64_t(v)); }

inline void put_f32(std::string& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

// sequential reader that raises TruncatedFile when the payload runs short
class Reader {
public:
    Reader(const std::string& bytes, std::string path)
        : p_(reinterpret_cast<const unsigned char*>(bytes.data())), size_(bytes.size()), path_(std::move(path)) {}

    size_t remaining() const { return size_ - pos_; }
    bool done() const { return pos_ == size_; }
    const std::string& path() const { return path_; }

    void need(size_t n) {
        if (remaining() < n) {
            raise(ErrorCode::TruncatedFile,
                  path_ + " ends early, needed " + std::to_string(n) + " more bytes at offset " + std::to_string(pos_));
        }
    }

    void raw(void* dst, size_t n) {
        need(n);
        std::memcpy(dst, p_ + pos_, n);
        pos_ += n;
    }

    uint32_t u32() {
        need(4);
        uint32_t v = uint32_t(p_[pos_]) | uint32_t(p_[pos_ + 1]) << 8 | uint32_t(p_[pos_ + 2]) << 16 |
                     uint32_t(p_[pos_ + 3]) << 24;
        pos_ += 4;
        return v;
    }

    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 7; i >= 0; i--) v = (v << 8) | p_[pos_ + i];
        pos_ += 8;
        return v;
    }

    int64_t i64() { return int64_t(u64()); }

    float f32() {
        uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

private:
    const unsigned char* p_;
    size_t size_;
    size_t pos_ = 0;
    std::string path_;
};

} // namespace jtr::bytes
