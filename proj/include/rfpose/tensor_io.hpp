#pragma once

// Project tensor file format (version 1):
//
//   offset  size        field
//   0       5           magic "PRM3F"
//   5       1           version (1)
//   6       1           axis count R
//   7       8*R         axis lengths, uint64 little-endian
//   7+8R    1           element tag: 1 = real64, 2 = complex128
//   8+8R    ...         row-major payload, IEEE-754 binary64 little-endian;
//                       complex elements are (real, imag) pairs

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <variant>
#include <vector>

#include "rfpose/error.hpp"
#include "rfpose/tensor.hpp"

namespace rfpose {

enum class ElementTag : std::uint8_t { real64 = 1, complex128 = 2 };

inline constexpr std::array<char, 5> kTensorMagic = {'P', 'R', 'M', '3', 'F'};
inline constexpr std::uint8_t kTensorVersion = 1;

using AnyTensor = std::variant<RealTensor, ComplexTensor>;

namespace detail {

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{p[i]} << (8 * i);
    return v;
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) {
    put_u64(out, std::bit_cast<std::uint64_t>(v));
}

inline double get_f64(const std::uint8_t* p) { return std::bit_cast<double>(get_u64(p)); }

inline void encode_header(std::vector<std::uint8_t>& out, const Shape& shape, ElementTag tag) {
    if (shape.size() > 255) throw ContractError("tensor rank exceeds 255");
    out.insert(out.end(), kTensorMagic.begin(), kTensorMagic.end());
    out.push_back(kTensorVersion);
    out.push_back(static_cast<std::uint8_t>(shape.size()));
    for (auto n : shape) put_u64(out, n);
    out.push_back(static_cast<std::uint8_t>(tag));
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_tensor(const RealTensor& t) {
    std::vector<std::uint8_t> out;
    detail::encode_header(out, t.shape(), ElementTag::real64);
    out.reserve(out.size() + 8 * t.size());
    for (double v : t.data()) detail::put_f64(out, v);
    return out;
}

inline std::vector<std::uint8_t> encode_tensor(const ComplexTensor& t) {
    std::vector<std::uint8_t> out;
    detail::encode_header(out, t.shape(), ElementTag::complex128);
    out.reserve(out.size() + 16 * t.size());
    for (const Complex& v : t.data()) {
        detail::put_f64(out, v.real());
        detail::put_f64(out, v.imag());
    }
    return out;
}

inline AnyTensor decode_tensor(std::span<const std::uint8_t> bytes) {
    auto need = [&](std::size_t pos, std::size_t n) {
        if (bytes.size() < pos + n) throw FormatError("tensor file truncated");
    };
    need(0, 7);
    if (!std::equal(kTensorMagic.begin(), kTensorMagic.end(), bytes.begin())) {
        throw FormatError("tensor file: bad magic");
    }
    if (bytes[5] != kTensorVersion) {
        throw FormatError("tensor file: unsupported version " + std::to_string(bytes[5]));
    }
    const std::size_t rank = bytes[6];
    std::size_t pos = 7;
    need(pos, 8 * rank + 1);
    Shape shape(rank);
    for (auto& n : shape) {
        n = detail::get_u64(bytes.data() + pos);
        pos += 8;
    }
    const auto tag = bytes[pos++];
    const std::size_t count = shape_volume(shape);
    if (tag == static_cast<std::uint8_t>(ElementTag::real64)) {
        if (bytes.size() - pos != 8 * count) throw FormatError("tensor file: payload size mismatch");
        std::vector<double> data(count);
        for (std::size_t i = 0; i < count; ++i) data[i] = detail::get_f64(bytes.data() + pos + 8 * i);
        return RealTensor(std::move(shape), std::move(data));
    }
    if (tag == static_cast<std::uint8_t>(ElementTag::complex128)) {
        if (bytes.size() - pos != 16 * count) throw FormatError("tensor file: payload size mismatch");
        std::vector<Complex> data(count);
        for (std::size_t i = 0; i < count; ++i) {
            const auto* p = bytes.data() + pos + 16 * i;
            data[i] = {detail::get_f64(p), detail::get_f64(p + 8)};
        }
        return ComplexTensor(std::move(shape), std::move(data));
    }
    throw FormatError("tensor file: unknown element tag " + std::to_string(tag));
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ConfigError("write failed: " + path.string());
}

template <class T>
void write_tensor(const std::filesystem::path& path, const Tensor<T>& t) {
    write_file_bytes(path, encode_tensor(t));
}

inline AnyTensor read_tensor(const std::filesystem::path& path) {
    return decode_tensor(read_file_bytes(path));
}

/// Reads a tensor that must hold real64 elements.
inline RealTensor read_real_tensor(const std::filesystem::path& path) {
    auto any = read_tensor(path);
    if (auto* r = std::get_if<RealTensor>(&any)) return std::move(*r);
    throw FormatError(path.string() + ": expected real64 tensor");
}

}  // namespace rfpose
