#pragma once

// Unnormalized forward DFT, X[k] = sum_n x[n] exp(-j 2 pi k n / L).
// Power-of-two lengths use an iterative radix-2 transform; other lengths fall
// back to a direct O(L^2) sum with exactly reduced twiddle indices.

#include <bit>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "rfpose/tensor.hpp"

namespace rfpose {

inline std::size_t next_pow2(std::size_t n) { return n <= 1 ? 1 : std::bit_ceil(n); }

namespace detail {

inline Complex twiddle(std::size_t k, std::size_t length) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(length);
    return {std::cos(angle), std::sin(angle)};
}

inline void fft_radix2(std::span<Complex> x) {
    const std::size_t n = x.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    std::vector<Complex> w(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k) w[k] = twiddle(k, n);
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const std::size_t half = len / 2;
        const std::size_t step = n / len;
        for (std::size_t start = 0; start < n; start += len) {
            for (std::size_t k = 0; k < half; ++k) {
                const Complex t = w[k * step] * x[start + k + half];
                x[start + k + half] = x[start + k] - t;
                x[start + k] += t;
            }
        }
    }
}

inline void dft_direct(std::span<Complex> x) {
    const std::size_t n = x.size();
    std::vector<Complex> w(n);
    for (std::size_t k = 0; k < n; ++k) w[k] = twiddle(k, n);
    std::vector<Complex> out(n);
    for (std::size_t k = 0; k < n; ++k) {
        Complex acc{};
        for (std::size_t i = 0; i < n; ++i) acc += x[i] * w[(k * i) % n];
        out[k] = acc;
    }
    std::copy(out.begin(), out.end(), x.begin());
}

}  // namespace detail

/// In-place forward transform of any length.
inline void fft_inplace(std::span<Complex> x) {
    if (x.size() <= 1) return;
    if (std::has_single_bit(x.size())) {
        detail::fft_radix2(x);
    } else {
        detail::dft_direct(x);
    }
}

/// Transforms every line along `axis`, zero-padding that axis to `length`.
inline ComplexTensor fft_along(const ComplexTensor& in, std::size_t axis, std::size_t length) {
    const Shape& shape = in.shape();
    if (axis >= shape.size()) throw ContractError("fft_along: axis out of range");
    if (length < shape[axis]) {
        throw ContractError("fft length " + std::to_string(length) + " shorter than data length " +
                            std::to_string(shape[axis]) + " on axis " + std::to_string(axis));
    }
    Shape out_shape = shape;
    out_shape[axis] = length;
    ComplexTensor out(out_shape);

    std::size_t outer = 1, inner = 1;
    for (std::size_t a = 0; a < axis; ++a) outer *= shape[a];
    for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
    const std::size_t n_in = shape[axis];

    std::vector<Complex> line(length);
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) {
            std::fill(line.begin(), line.end(), Complex{});
            for (std::size_t k = 0; k < n_in; ++k) line[k] = in[(o * n_in + k) * inner + i];
            fft_inplace(line);
            for (std::size_t k = 0; k < length; ++k) out[(o * length + k) * inner + i] = line[k];
        }
    }
    return out;
}

/// Rotates `axis` by floor(L/2) so that bin 0 lands at index L/2.
template <class T>
Tensor<T> fftshift_along(const Tensor<T>& in, std::size_t axis) {
    const Shape& shape = in.shape();
    Tensor<T> out(shape);
    std::size_t outer = 1, inner = 1;
    for (std::size_t a = 0; a < axis; ++a) outer *= shape[a];
    for (std::size_t a = axis + 1; a < shape.size(); ++a) inner *= shape[a];
    const std::size_t n = shape[axis];
    const std::size_t half = n / 2;
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t i = 0; i < inner; ++i)
                out[(o * n + (k + half) % n) * inner + i] = in[(o * n + k) * inner + i];
    return out;
}

}  // namespace rfpose
