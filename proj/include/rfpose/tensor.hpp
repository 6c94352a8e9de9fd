#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rfpose/error.hpp"

namespace rfpose {

using Complex = std::complex<double>;
using Shape = std::vector<std::size_t>;

inline std::size_t shape_volume(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string shape_string(const Shape& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i != 0) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

/// Dense row-major N-d array with value semantics.
template <class T>
class Tensor {
public:
    using value_type = T;

    Tensor() = default;

    explicit Tensor(Shape shape, T fill = T{})
        : shape_(std::move(shape)), data_(shape_volume(shape_), fill) {}

    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != shape_volume(shape_)) {
            throw ContractError("tensor data size " + std::to_string(data_.size()) +
                                " does not match shape " + shape_string(shape_));
        }
    }

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
    bool empty() const noexcept { return data_.empty(); }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    const std::vector<T>& values() const noexcept { return data_; }

    T& operator[](std::size_t flat) { return data_[flat]; }
    const T& operator[](std::size_t flat) const { return data_[flat]; }

    template <class... Idx>
    T& operator()(Idx... idx) {
        return data_[offset(idx...)];
    }
    template <class... Idx>
    const T& operator()(Idx... idx) const {
        return data_[offset(idx...)];
    }

    template <class... Idx>
    std::size_t offset(Idx... idx) const {
        static_assert(sizeof...(Idx) > 0);
        const std::size_t ix[] = {static_cast<std::size_t>(idx)...};
        std::size_t off = 0;
        for (std::size_t a = 0; a < sizeof...(Idx); ++a) off = off * shape_[a] + ix[a];
        return off;
    }

    /// Element stride of each axis.
    Shape strides() const {
        Shape s(shape_.size(), 1);
        for (std::size_t a = shape_.size(); a-- > 1;) s[a - 1] = s[a] * shape_[a];
        return s;
    }

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    std::vector<T> data_;
};

using RealTensor = Tensor<double>;
using ComplexTensor = Tensor<Complex>;

inline RealTensor abs(const ComplexTensor& t) {
    RealTensor out(t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) out[i] = std::abs(t[i]);
    return out;
}

inline void require_same_shape(const Shape& a, const Shape& b, const char* what) {
    if (a != b) {
        throw ContractError(std::string(what) + ": shape mismatch " + shape_string(a) + " vs " +
                            shape_string(b));
    }
}

}  // namespace rfpose
