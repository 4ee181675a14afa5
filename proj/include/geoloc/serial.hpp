#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace geoloc {

// Little binary stream helpers for the model container. Little-endian host
// assumed; files are versioned so incompatibilities surface as load errors.
class BinaryWriter {
public:
    explicit BinaryWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot write file: " + path);
    }

    void u8(std::uint8_t v) { raw(&v, 1); }
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void i32(std::int32_t v) { raw(&v, sizeof v); }
    void f32(float v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }

    void str(const std::string& s) {
        u64(s.size());
        raw(s.data(), s.size());
    }

    template <typename T>
    void vec(const std::vector<T>& v) {
        static_assert(std::is_trivially_copyable_v<T>);
        u64(v.size());
        raw(v.data(), v.size() * sizeof(T));
    }

    void raw(const void* data, std::size_t n) { out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n)); }

private:
    std::ofstream out_;
};

class BinaryReader {
public:
    explicit BinaryReader(const std::string& path) : in_(path, std::ios::binary) {
        if (!in_) throw std::runtime_error("cannot open file: " + path);
    }

    std::uint8_t u8() { return get<std::uint8_t>(); }
    std::uint32_t u32() { return get<std::uint32_t>(); }
    std::uint64_t u64() { return get<std::uint64_t>(); }
    std::int32_t i32() { return get<std::int32_t>(); }
    float f32() { return get<float>(); }
    double f64() { return get<double>(); }

    std::string str() {
        std::string s(u64(), '\0');
        raw(s.data(), s.size());
        return s;
    }

    template <typename T>
    std::vector<T> vec() {
        static_assert(std::is_trivially_copyable_v<T>);
        std::vector<T> v(u64());
        raw(v.data(), v.size() * sizeof(T));
        return v;
    }

    void raw(void* data, std::size_t n) {
        in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
        if (!in_) throw std::runtime_error("model file truncated");
    }

private:
    template <typename T>
    T get() {
        T v;
        raw(&v, sizeof v);
        return v;
    }

    std::ifstream in_;
};

}  // namespace geoloc
