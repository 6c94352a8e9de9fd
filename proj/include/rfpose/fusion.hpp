#pragma once

// Shape contracts and arithmetic for combining branch features: additive
// fusion of same-layer features and stacking of per-frame features.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rfpose/error.hpp"
#include "rfpose/tensor.hpp"

namespace rfpose {

enum class FeatureSource { fft_branch, probpe_branch, fused };

/// Values indexed (channel, spatial axes...) for one encoder layer of one frame.
struct FeatureTensor {
    RealTensor values;
    int layer_id = 1;  // 1..3
    FeatureSource source = FeatureSource::fft_branch;
    std::int64_t frame_index = 0;

    void validate() const {
        if (layer_id < 1 || layer_id > 3) throw ContractError("feature layer id must be 1, 2 or 3");
        if (values.rank() < 1) throw ContractError("feature tensor needs a channel axis");
        for (double v : values.data()) {
            if (!std::isfinite(v)) throw ContractError("feature tensor holds a non-finite value");
        }
    }
};

/// Values indexed (frame, channel, spatial...), frames in acquisition order.
struct MultiFrameTensor {
    RealTensor values;
    std::vector<std::int64_t> frame_indices;

    std::size_t frames() const { return frame_indices.size(); }
};

inline constexpr std::size_t kDefaultInputFrames = 8;

inline MultiFrameTensor stack_frames(std::span<const FeatureTensor> features,
                                     std::size_t frames = kDefaultInputFrames) {
    if (frames < 1) throw ContractError("stack_frames: frame count must be >= 1");
    if (features.size() != frames) {
        throw ContractError("stack_frames: expected " + std::to_string(frames) + " tensors, got " +
                            std::to_string(features.size()));
    }
    const Shape& shape = features[0].values.shape();
    for (std::size_t t = 0; t < features.size(); ++t) {
        if (features[t].values.shape() != shape) {
            throw ContractError("stack_frames: tensor " + std::to_string(t) + " has shape " +
                                shape_string(features[t].values.shape()) + ", expected " + shape_string(shape));
        }
        if (t > 0 && features[t].frame_index <= features[t - 1].frame_index) {
            throw ContractError("stack_frames: frame index of tensor " + std::to_string(t) +
                                " is not increasing");
        }
    }
    Shape out_shape{frames};
    out_shape.insert(out_shape.end(), shape.begin(), shape.end());
    MultiFrameTensor out{RealTensor(out_shape), {}};
    const std::size_t per = shape_volume(shape);
    for (std::size_t t = 0; t < frames; ++t) {
        std::copy(features[t].values.data().begin(), features[t].values.data().end(),
                  out.values.data().begin() + static_cast<std::ptrdiff_t>(t * per));
        out.frame_indices.push_back(features[t].frame_index);
    }
    return out;
}

inline RealTensor slice_frame(const MultiFrameTensor& stack, std::size_t t) {
    if (t >= stack.frames()) throw ContractError("slice_frame: frame out of range");
    Shape shape(stack.values.shape().begin() + 1, stack.values.shape().end());
    const std::size_t per = shape_volume(shape);
    const auto first = stack.values.data().begin() + static_cast<std::ptrdiff_t>(t * per);
    return RealTensor(std::move(shape), std::vector<double>(first, first + static_cast<std::ptrdiff_t>(per)));
}

/// Element-wise sum of two same-layer features.
inline FeatureTensor fuse_add(const FeatureTensor& f1, const FeatureTensor& f2) {
    require_same_shape(f1.values.shape(), f2.values.shape(), "fuse_add");
    if (f1.layer_id != f2.layer_id) {
        throw ContractError("fuse_add: layer " + std::to_string(f1.layer_id) + " vs " + std::to_string(f2.layer_id));
    }
    FeatureTensor out{RealTensor(f1.values.shape()), f1.layer_id, FeatureSource::fused, f1.frame_index};
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = f1.values[i] + f2.values[i];
    return out;
}

/// Nearest-neighbour resampling of the spatial axes (all but axis 0) to `spatial`.
/// Destination index k reads source index floor(k * src / dst).
inline FeatureTensor resample_nearest(const FeatureTensor& f, const Shape& spatial) {
    const Shape& in = f.values.shape();
    if (spatial.size() + 1 != in.size()) throw ContractError("resample_nearest: spatial rank mismatch");
    Shape out_shape{in[0]};
    out_shape.insert(out_shape.end(), spatial.begin(), spatial.end());
    FeatureTensor out{RealTensor(out_shape), f.layer_id, f.source, f.frame_index};
    const Shape in_strides = f.values.strides();
    const std::size_t rank = in.size();
    std::vector<std::size_t> idx(rank, 0);
    for (std::size_t flat = 0; flat < out.values.size(); ++flat) {
        std::size_t rem = flat, src = 0;
        for (std::size_t a = rank; a-- > 0;) {
            idx[a] = rem % out_shape[a];
            rem /= out_shape[a];
        }
        for (std::size_t a = 0; a < rank; ++a) {
            const std::size_t s = a == 0 ? idx[a] : idx[a] * in[a] / out_shape[a];
            src += s * in_strides[a];
        }
        out.values[flat] = f.values[src];
    }
    return out;
}

}  // namespace rfpose
