#pragma once

// Two-dimensional cell-averaging CFAR over (range, Doppler) maps.
//
// For the cell under test at (r, d) the reference cells form a square ring:
// everything within Chebyshev distance guard + reference of (r, d) but outside
// distance guard. Rings are truncated at map borders and the reference count,
// and with it alpha, is recomputed per cell.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "rfpose/config.hpp"
#include "rfpose/error.hpp"
#include "rfpose/tensor.hpp"

namespace rfpose {

/// How `guard` and `reference` are counted along each axis.
enum class CfarWindow {
    per_side,  // cells on each side of the cell under test
    total,     // full extent across both sides; halved (rounding down) per side
};

struct CfarParams {
    std::size_t guard = 5;
    std::size_t reference = 16;
    double pfa = 1e-3;
    std::optional<double> alpha_override;
    CfarWindow window = CfarWindow::per_side;

    std::size_t guard_per_side() const { return window == CfarWindow::per_side ? guard : guard / 2; }
    std::size_t reference_per_side() const { return window == CfarWindow::per_side ? reference : reference / 2; }

    void validate() const {
        if (reference_per_side() < 1) throw ConfigError("cfar: reference must leave >= 1 cell per side");
        if (!(pfa > 0.0 && pfa < 1.0)) throw ConfigError("cfar: pfa must be in (0, 1)");
        if (alpha_override && !(*alpha_override >= 0.0)) throw ConfigError("cfar: alpha must be >= 0");
    }

    /// Reads `guard`, `reference`, `pfa`, `alpha` and `window` from a config, keeping defaults for absent keys.
    static CfarParams from(const KeyValueConfig& kv) { return from(kv, CfarParams{}); }

    static CfarParams from(const KeyValueConfig& kv, CfarParams base) {
        const auto guard = kv.get_int("guard", static_cast<std::int64_t>(base.guard));
        const auto ref = kv.get_int("reference", static_cast<std::int64_t>(base.reference));
        if (guard < 0 || ref < 1) throw ConfigError(kv.origin() + ": invalid CFAR window");
        base.guard = static_cast<std::size_t>(guard);
        base.reference = static_cast<std::size_t>(ref);
        base.pfa = kv.get_double("pfa", base.pfa);
        if (auto a = kv.find_double("alpha")) base.alpha_override = *a;
        if (kv.has("window")) {
            const auto w = kv.get_string("window");
            if (w != "per_side" && w != "total") throw ConfigError(kv.origin() + ": window must be per_side or total");
            base.window = w == "per_side" ? CfarWindow::per_side : CfarWindow::total;
        }
        base.validate();
        return base;
    }
};

/// Threshold scale for `n_ref` reference cells: n (pfa^(-1/n) - 1), the exact
/// CA-CFAR calibration for exponentially distributed cells.
inline double cfar_alpha(const CfarParams& params, std::size_t n_ref) {
    if (params.alpha_override) return *params.alpha_override;
    if (n_ref < 1) throw ContractError("cfar_alpha: need at least one reference cell");
    const double n = static_cast<double>(n_ref);
    return n * std::expm1(-std::log(params.pfa) / n);
}

struct DetectionMask {
    Tensor<std::uint8_t> mask;  // 1 where value > threshold
    RealTensor threshold;       // +inf where the cell has no reference cells

    std::size_t rows() const { return mask.extent(0); }
    std::size_t cols() const { return mask.extent(1); }
    bool detected(std::size_t r, std::size_t d) const { return mask(r, d) != 0; }
    std::size_t count() const { return static_cast<std::size_t>(std::count(mask.data().begin(), mask.data().end(), 1)); }

    /// Mask as 0/1 doubles, for the tensor file format.
    RealTensor as_real() const {
        RealTensor out(mask.shape());
        for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i];
        return out;
    }
};

inline DetectionMask detect_2d(const RealTensor& map, const CfarParams& params) {
    params.validate();
    if (map.rank() != 2) throw ContractError("detect_2d: expected a (range, Doppler) map");
    const std::size_t R = map.extent(0), D = map.extent(1);
    for (double v : map.data()) {
        if (!std::isfinite(v)) throw ContractError("detect_2d: non-finite map value");
    }

    // Summed-area table with a zero border row and column.
    std::vector<long double> sat((R + 1) * (D + 1), 0.0L);
    auto S = [&](std::size_t r, std::size_t d) -> long double& { return sat[r * (D + 1) + d]; };
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t d = 0; d < D; ++d) S(r + 1, d + 1) = map(r, d) + S(r, d + 1) + S(r + 1, d) - S(r, d);

    struct Box {
        std::size_t r0, r1, d0, d1;  // half-open
        std::size_t area() const { return (r1 - r0) * (d1 - d0); }
    };
    auto clip = [&](std::size_t r, std::size_t d, std::size_t half) {
        return Box{r >= half ? r - half : 0, std::min(R, r + half + 1), d >= half ? d - half : 0,
                   std::min(D, d + half + 1)};
    };
    auto box_sum = [&](const Box& b) { return S(b.r1, b.d1) - S(b.r0, b.d1) - S(b.r1, b.d0) + S(b.r0, b.d0); };

    DetectionMask out{Tensor<std::uint8_t>({R, D}, 0), RealTensor({R, D})};
    const std::size_t guard = params.guard_per_side();
    const std::size_t outer_half = guard + params.reference_per_side();
    bool any_reference = false;
    for (std::size_t r = 0; r < R; ++r) {
        for (std::size_t d = 0; d < D; ++d) {
            const Box outer = clip(r, d, outer_half);
            const Box inner = clip(r, d, guard);
            const std::size_t n_ref = outer.area() - inner.area();
            if (n_ref == 0) {
                out.threshold(r, d) = std::numeric_limits<double>::infinity();
                continue;
            }
            any_reference = true;
            const long double ref_sum = box_sum(outer) - box_sum(inner);
            const double mean = static_cast<double>(std::max(ref_sum, 0.0L) / static_cast<long double>(n_ref));
            const double t = cfar_alpha(params, n_ref) * mean;
            out.threshold(r, d) = t;
            out.mask(r, d) = map(r, d) > t ? 1 : 0;
        }
    }
    if (!any_reference && R * D > 0) {
        throw ContractError("detect_2d: map " + shape_string(map.shape()) +
                            " too small for any reference cell with guard " + std::to_string(guard));
    }
    return out;
}

/// Sorted, duplicate-free range-bin indices.
struct RangeBinSet {
    std::vector<std::size_t> bins;

    bool empty() const { return bins.empty(); }
    std::size_t size() const { return bins.size(); }
    bool contains(std::size_t r) const { return std::binary_search(bins.begin(), bins.end(), r); }

    static RangeBinSet from(std::vector<std::size_t> v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        return {std::move(v)};
    }

    friend RangeBinSet set_union(const RangeBinSet& a, const RangeBinSet& b) {
        RangeBinSet out;
        std::set_union(a.bins.begin(), a.bins.end(), b.bins.begin(), b.bins.end(), std::back_inserter(out.bins));
        return out;
    }

    friend RangeBinSet set_intersection(const RangeBinSet& a, const RangeBinSet& b) {
        RangeBinSet out;
        std::set_intersection(a.bins.begin(), a.bins.end(), b.bins.begin(), b.bins.end(),
                              std::back_inserter(out.bins));
        return out;
    }

    friend bool operator==(const RangeBinSet&, const RangeBinSet&) = default;
};

/// Range rows containing at least one detection.
inline RangeBinSet select_range_bins(const DetectionMask& mask) {
    RangeBinSet out;
    for (std::size_t r = 0; r < mask.rows(); ++r) {
        for (std::size_t d = 0; d < mask.cols(); ++d) {
            if (mask.detected(r, d)) {
                out.bins.push_back(r);
                break;
            }
        }
    }
    return out;
}

}  // namespace rfpose
