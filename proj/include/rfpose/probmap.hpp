#pragma once

// Probability maps over (azimuth, elevation) for CFAR-selected range bins,
// and sinusoidal positional encodings guided by them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rfpose/adc.hpp"
#include "rfpose/cfar.hpp"
#include "rfpose/fft.hpp"
#include "rfpose/spectral.hpp"
#include "rfpose/tensor.hpp"

namespace rfpose {

/// Nonnegative values indexed (selected range bin, angle bin).
struct RangeAngleVector {
    RealTensor values;
    RangeBinSet range_bins;
    AngleKind angle_kind = AngleKind::azimuth;
    bool normalized = false;
    std::vector<std::uint8_t> empty_rows;  // per row; set when the row is all zero

    std::size_t angle_bins() const { return values.extent(1); }
    std::size_t row_of(std::size_t range_bin) const {
        auto it = std::lower_bound(range_bins.bins.begin(), range_bins.bins.end(), range_bin);
        return static_cast<std::size_t>(it - range_bins.bins.begin());
    }
};

/// Arithmetic mean over axis 1 of a (range, Doppler, angle) array.
inline RealTensor average_doppler(const RealTensor& values) {
    if (values.rank() != 3) throw ContractError("average_doppler: expected (range, Doppler, angle)");
    const std::size_t R = values.extent(0), D = values.extent(1), A = values.extent(2);
    RealTensor out({R, A});
    if (D == 0) return out;
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t a = 0; a < A; ++a) {
            double acc = 0;
            for (std::size_t d = 0; d < D; ++d) acc += values(r, d, a);
            out(r, a) = acc / static_cast<double>(D);
        }
    return out;
}

struct AngleSpectrumOptions {
    std::size_t range_len = 0;
    std::size_t doppler_len = 0;
    std::size_t angle_len = 0;
};

/// Angle-FFT magnitudes across the primary array axis for each selected range
/// bin, averaged over the secondary axis and then over Doppler.
inline RangeAngleVector angle_spectrum(const RadarCube& cube, const RangeBinSet& bins, AngleKind axis,
                                       const ArrayGeometry& geometry, const AngleSpectrumOptions& opt = {}) {
    if (axis != primary_angle(cube.radar_id())) {
        throw ContractError(std::string("angle_spectrum: ") + to_string(cube.radar_id()) + " radar resolves " +
                            to_string(primary_angle(cube.radar_id())) + ", not " + to_string(axis));
    }
    ComplexTensor x = reshape_virtual_array(cube, geometry);
    const auto L = FftLengths{opt.range_len, opt.doppler_len, opt.angle_len, 0}.resolved(
        x.extent(0), x.extent(1), x.extent(2), x.extent(3));
    for (auto r : bins.bins) {
        if (r >= L.range) throw ContractError("angle_spectrum: range bin " + std::to_string(r) + " out of range");
    }

    RangeAngleVector out;
    out.range_bins = bins;
    out.angle_kind = axis;
    out.values = RealTensor({bins.size(), L.primary});
    out.empty_rows.assign(bins.size(), 0);
    if (bins.empty()) return out;

    x = fft_along(x, 0, L.range);
    x = fft_along(x, 1, L.doppler);
    const std::size_t M = L.doppler, P = x.extent(2), Q = x.extent(3);

    RealTensor mags({bins.size(), M, L.primary});
    std::vector<Complex> line(L.primary);
    for (std::size_t b = 0; b < bins.size(); ++b) {
        const std::size_t r = bins.bins[b];
        for (std::size_t m = 0; m < M; ++m) {
            for (std::size_t q = 0; q < Q; ++q) {
                std::fill(line.begin(), line.end(), Complex{});
                for (std::size_t p = 0; p < P; ++p) line[p] = x(r, m, p, q);
                fft_inplace(line);
                for (std::size_t a = 0; a < L.primary; ++a) mags(b, m, a) += std::abs(line[a]) / static_cast<double>(Q);
            }
        }
    }
    out.values = average_doppler(mags);
    for (std::size_t b = 0; b < bins.size(); ++b) {
        bool all_zero = true;
        for (std::size_t a = 0; a < L.primary; ++a) all_zero = all_zero && out.values(b, a) == 0.0;
        out.empty_rows[b] = all_zero ? 1 : 0;
    }
    return out;
}

enum class RowNorm { l1, l2 };

/// Scales each range row to unit L1 (default) or L2 norm. All-zero rows stay
/// zero and are flagged empty.
inline RangeAngleVector normalize(const RangeAngleVector& v, RowNorm norm = RowNorm::l1) {
    RangeAngleVector out = v;
    const std::size_t R = v.values.extent(0), A = v.values.extent(1);
    out.empty_rows.assign(R, 0);
    for (std::size_t r = 0; r < R; ++r) {
        double acc = 0;
        for (std::size_t a = 0; a < A; ++a) {
            const double x = v.values(r, a);
            if (!(x >= 0.0) || !std::isfinite(x)) {
                throw ContractError("normalize: negative or non-finite value in range row " + std::to_string(r));
            }
            acc += norm == RowNorm::l1 ? x : x * x;
        }
        if (norm == RowNorm::l2) acc = std::sqrt(acc);
        if (acc == 0.0) {
            out.empty_rows[r] = 1;
            continue;
        }
        for (std::size_t a = 0; a < A; ++a) out.values(r, a) = v.values(r, a) / acc;
    }
    out.normalized = true;
    return out;
}

/// How range bins present in only one radar's vector are handled.
enum class BinMerge {
    union_uniform,  // union of both sets; a missing row is the uniform row
    intersection,   // only bins both radars selected
};

/// P(r, theta, phi) for the selected range bins.
struct ProbabilityMap {
    RealTensor values;  // (R_sel, A, E)
    RangeBinSet range_bins;
    std::vector<std::uint8_t> empty_rows;

    std::size_t azimuth_bins() const { return values.extent(1); }
    std::size_t elevation_bins() const { return values.extent(2); }
};

inline ProbabilityMap probability_map(const RangeAngleVector& v_ra, const RangeAngleVector& v_re,
                                      BinMerge merge = BinMerge::union_uniform) {
    if (v_ra.angle_kind != AngleKind::azimuth || v_re.angle_kind != AngleKind::elevation) {
        throw ContractError("probability_map: expected an azimuth vector and an elevation vector");
    }
    if (!v_ra.normalized || !v_re.normalized) throw ContractError("probability_map: vectors must be normalized");
    if (v_ra.values.rank() != 2 || v_re.values.rank() != 2) throw ContractError("probability_map: bad vector rank");

    const std::size_t A = v_ra.angle_bins(), E = v_re.angle_bins();
    ProbabilityMap out;
    out.range_bins = merge == BinMerge::union_uniform ? set_union(v_ra.range_bins, v_re.range_bins)
                                                      : set_intersection(v_ra.range_bins, v_re.range_bins);
    const std::size_t R = out.range_bins.size();
    out.values = RealTensor({R, A, E});
    out.empty_rows.assign(R, 0);

    std::vector<double> ra(A), re(E);
    for (std::size_t k = 0; k < R; ++k) {
        const std::size_t r = out.range_bins.bins[k];
        bool empty = false;
        if (v_ra.range_bins.contains(r)) {
            const std::size_t row = v_ra.row_of(r);
            for (std::size_t a = 0; a < A; ++a) ra[a] = v_ra.values(row, a);
            empty = empty || v_ra.empty_rows.at(row);
        } else {
            std::fill(ra.begin(), ra.end(), 1.0 / static_cast<double>(A));
        }
        if (v_re.range_bins.contains(r)) {
            const std::size_t row = v_re.row_of(r);
            for (std::size_t e = 0; e < E; ++e) re[e] = v_re.values(row, e);
            empty = empty || v_re.empty_rows.at(row);
        } else {
            std::fill(re.begin(), re.end(), 1.0 / static_cast<double>(E));
        }
        out.empty_rows[k] = empty ? 1 : 0;
        for (std::size_t a = 0; a < A; ++a)
            for (std::size_t e = 0; e < E; ++e) out.values(k, a, e) = ra[a] * re[e];
    }
    return out;
}

/// Sine/cosine channels over an (A, E) grid of integer bin positions.
/// Channels [0, d) encode the azimuth position, [d, 2d) the elevation position;
/// within each block channel 2i is sin(pos / 10000^(2i/d)) and 2i+1 the cosine.
struct PositionalEncoding {
    RealTensor channels;  // (2d, A, E)
    std::size_t depth = 0;
};

/// Frequency-index-i sinusoid argument for an integer position.
inline double encoding_argument(std::size_t pos, std::size_t i, std::size_t depth) {
    return static_cast<double>(pos) /
           std::pow(10000.0, static_cast<double>(2 * i) / static_cast<double>(depth));
}

/// The d-channel code of a single coordinate.
inline std::vector<double> encode_position(std::size_t pos, std::size_t depth) {
    std::vector<double> out(depth);
    for (std::size_t i = 0; 2 * i < depth; ++i) {
        const double arg = encoding_argument(pos, i, depth);
        out[2 * i] = std::sin(arg);
        out[2 * i + 1] = std::cos(arg);
    }
    return out;
}

inline PositionalEncoding positional_encoding(std::size_t azimuth_bins, std::size_t elevation_bins,
                                              std::size_t depth) {
    if (depth < 2 || depth % 2 != 0) {
        throw ConfigError("positional encoding depth must be even and >= 2, got " + std::to_string(depth));
    }
    PositionalEncoding pe;
    pe.depth = depth;
    pe.channels = RealTensor({2 * depth, azimuth_bins, elevation_bins});
    for (std::size_t a = 0; a < azimuth_bins; ++a) {
        const auto code = encode_position(a, depth);
        for (std::size_t c = 0; c < depth; ++c)
            for (std::size_t e = 0; e < elevation_bins; ++e) pe.channels(c, a, e) = code[c];
    }
    for (std::size_t e = 0; e < elevation_bins; ++e) {
        const auto code = encode_position(e, depth);
        for (std::size_t c = 0; c < depth; ++c)
            for (std::size_t a = 0; a < azimuth_bins; ++a) pe.channels(depth + c, a, e) = code[c];
    }
    return pe;
}

/// Per selected range bin: probability broadcast over channels plus the encoding.
struct EncodedFeature {
    RealTensor values;  // (R_sel, 2d, A, E)
    RangeBinSet range_bins;
};

inline EncodedFeature encode_map(const ProbabilityMap& p, const PositionalEncoding& pe) {
    const std::size_t A = p.values.extent(1), E = p.values.extent(2);
    if (pe.channels.extent(1) != A || pe.channels.extent(2) != E) {
        throw ContractError("encode_map: probability map " + shape_string(p.values.shape()) +
                            " does not match encoding " + shape_string(pe.channels.shape()));
    }
    const std::size_t R = p.values.extent(0), C = pe.channels.extent(0);
    EncodedFeature out{RealTensor({R, C, A, E}), p.range_bins};
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t c = 0; c < C; ++c)
            for (std::size_t a = 0; a < A; ++a)
                for (std::size_t e = 0; e < E; ++e) out.values(r, c, a, e) = p.values(r, a, e) + pe.channels(c, a, e);
    return out;
}

}  // namespace rfpose
