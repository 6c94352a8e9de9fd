#pragma once

// Frequency-domain transforms over radar cubes.
//
// Conventions used throughout:
//   * forward transforms are unnormalized (no 1/N factor);
//   * FFT lengths of zero mean "next power of two >= data length";
//   * a shifted Doppler axis of length M holds zero velocity at index M/2
//     (raw bin k lives at (k + M/2) mod M).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "rfpose/adc.hpp"
#include "rfpose/fft.hpp"
#include "rfpose/tensor.hpp"

namespace rfpose {

enum class AngleKind { azimuth, elevation };

inline const char* to_string(AngleKind k) { return k == AngleKind::azimuth ? "azimuth" : "elevation"; }

/// The horizontal radar resolves azimuth along its array; the vertical one, elevation.
inline AngleKind primary_angle(RadarId id) {
    return id == RadarId::horizontal ? AngleKind::azimuth : AngleKind::elevation;
}

struct ArrayGeometry {
    std::size_t primary = 1;    // P
    std::size_t secondary = 1;  // Q

    static ArrayGeometry of(const RadarConfig& c) { return {c.primary_count(), c.secondary_count()}; }
};

/// Per-axis FFT lengths for (range, Doppler, primary angle, secondary angle).
struct FftLengths {
    std::size_t range = 0;
    std::size_t doppler = 0;
    std::size_t primary = 0;
    std::size_t secondary = 0;

    /// Replaces zero entries with the next power of two of the data length.
    FftLengths resolved(std::size_t n, std::size_t m, std::size_t p, std::size_t q) const {
        auto pick = [](std::size_t want, std::size_t len) { return want == 0 ? next_pow2(len) : want; };
        return {pick(range, n), pick(doppler, m), pick(primary, p), pick(secondary, q)};
    }

    static FftLengths defaults_for(const RadarConfig& c) {
        return FftLengths{}.resolved(c.num_adc_samples, c.num_chirps, c.primary_count(), c.secondary_count());
    }
};

/// F(h, i, j, k) over (range, Doppler, primary angle, secondary angle).
struct Spectrum4D {
    ComplexTensor data;
    std::array<std::size_t, 4> input_sizes{};  // data lengths before zero padding
    bool doppler_shifted = false;
    RadarId radar_id = RadarId::horizontal;

    std::array<std::size_t, 4> sizes() const {
        return {data.extent(0), data.extent(1), data.extent(2), data.extent(3)};
    }
};

/// Values indexed (range, Doppler, virtual antenna), Doppler axis shifted.
struct RangeDopplerMap {
    ComplexTensor data;
    bool doppler_shifted = true;
};

/// Values indexed (range, Doppler, angle).
struct RangeDopplerAngleMap {
    ComplexTensor data;
    AngleKind angle_kind = AngleKind::azimuth;
    bool doppler_shifted = false;
};

/// Reshapes a cube (n, m, v) into (n, m, p, q) with v = q * P + p.
inline ComplexTensor reshape_virtual_array(const RadarCube& cube, const ArrayGeometry& g) {
    if (g.primary * g.secondary != cube.antennas()) {
        throw ContractError("array geometry " + std::to_string(g.primary) + "x" + std::to_string(g.secondary) +
                            " does not match " + std::to_string(cube.antennas()) + " virtual antennas");
    }
    const std::size_t N = cube.samples(), M = cube.chirps();
    ComplexTensor out({N, M, g.primary, g.secondary});
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t q = 0; q < g.secondary; ++q)
                for (std::size_t p = 0; p < g.primary; ++p) out(n, m, p, q) = cube(n, m, q * g.primary + p);
    return out;
}

/// Unnormalized 4-D DFT over samples, chirps and both array axes, zero-padded to `lengths`.
inline Spectrum4D fft4d(const RadarCube& cube, const ArrayGeometry& geometry, const FftLengths& lengths = {}) {
    ComplexTensor x = reshape_virtual_array(cube, geometry);
    const auto L = lengths.resolved(x.extent(0), x.extent(1), x.extent(2), x.extent(3));
    Spectrum4D out;
    out.input_sizes = {x.extent(0), x.extent(1), x.extent(2), x.extent(3)};
    out.radar_id = cube.radar_id();
    x = fft_along(x, 0, L.range);
    x = fft_along(x, 1, L.doppler);
    x = fft_along(x, 2, L.primary);
    x = fft_along(x, 3, L.secondary);
    out.data = std::move(x);
    return out;
}

inline Spectrum4D shift_doppler(const Spectrum4D& spec) {
    if (spec.doppler_shifted) return spec;
    Spectrum4D out = spec;
    out.data = fftshift_along(spec.data, 1);
    out.doppler_shifted = true;
    return out;
}

/// Complex mean over the secondary (elevation) axis.
inline RangeDopplerAngleMap average_elevation(const Spectrum4D& spec) {
    const auto [N, M, P, Q] = spec.sizes();
    if (Q < 1) throw ContractError("average_elevation: empty elevation axis");
    RangeDopplerAngleMap out;
    out.data = ComplexTensor({N, M, P});
    out.angle_kind = primary_angle(spec.radar_id);
    out.doppler_shifted = spec.doppler_shifted;
    const double inv_q = 1.0 / static_cast<double>(Q);
    for (std::size_t h = 0; h < N; ++h)
        for (std::size_t i = 0; i < M; ++i)
            for (std::size_t j = 0; j < P; ++j) {
                Complex acc{};
                for (std::size_t k = 0; k < Q; ++k) acc += spec.data(h, i, j, k);
                out.data(h, i, j) = acc * inv_q;
            }
    return out;
}

struct DopplerSampling {
    std::size_t keep = 8;
    double window = 0.5;  // fraction of the Doppler axis, centred on zero velocity
};

/// Shifted-convention indices of `keep` uniformly spaced bins inside a window of
/// round(window * M) bins centred on zero velocity. Each bin is the midpoint of
/// one of `keep` equal sub-intervals of the window.
inline std::vector<std::size_t> doppler_sample_bins(std::size_t M, const DopplerSampling& s) {
    if (M == 0) throw ContractError("sample_doppler: empty Doppler axis");
    if (!(s.window > 0.0 && s.window <= 1.0)) throw ConfigError("sample_doppler: window must be in (0, 1]");
    const auto w = static_cast<std::size_t>(
        std::clamp<long long>(std::llround(s.window * static_cast<double>(M)), 1, static_cast<long long>(M)));
    if (s.keep == 0 || s.keep > w) {
        throw ContractError("sample_doppler: keep " + std::to_string(s.keep) + " exceeds window of " +
                            std::to_string(w) + " bins");
    }
    const std::size_t lo = M / 2 - w / 2;
    std::vector<std::size_t> bins(s.keep);
    for (std::size_t k = 0; k < s.keep; ++k) bins[k] = lo + ((2 * k + 1) * w) / (2 * s.keep);
    return bins;
}

template <class Spec>
struct DopplerSampled {
    Spec value;
    std::vector<std::size_t> bins;  // shifted convention
};

/// Keeps a centred, uniformly spaced subset of Doppler bins (axis 1). The
/// output axis is ordered by velocity, i.e. shifted.
template <class Spec>
DopplerSampled<Spec> sample_doppler(const Spec& spec, const DopplerSampling& s) {
    const Shape& shape = spec.data.shape();
    const std::size_t M = shape.at(1);
    auto bins = doppler_sample_bins(M, s);

    std::size_t inner = 1;
    for (std::size_t a = 2; a < shape.size(); ++a) inner *= shape[a];
    Shape out_shape = shape;
    out_shape[1] = bins.size();
    DopplerSampled<Spec> out{spec, bins};
    out.value.data = ComplexTensor(out_shape);
    out.value.doppler_shifted = true;
    for (std::size_t o = 0; o < shape[0]; ++o)
        for (std::size_t b = 0; b < bins.size(); ++b) {
            const std::size_t src = spec.doppler_shifted ? bins[b] : (bins[b] + M - M / 2) % M;
            for (std::size_t i = 0; i < inner; ++i)
                out.value.data[(o * bins.size() + b) * inner + i] = spec.data[(o * M + src) * inner + i];
        }
    return out;
}

/// Range FFT over fast time, Doppler FFT over slow time (shifted), per virtual antenna.
inline RangeDopplerMap range_doppler_map(const RadarCube& cube, std::size_t range_len = 0,
                                         std::size_t doppler_len = 0) {
    if (range_len == 0) range_len = next_pow2(cube.samples());
    if (doppler_len == 0) doppler_len = next_pow2(cube.chirps());
    ComplexTensor x = fft_along(cube.tensor(), 0, range_len);
    x = fft_along(x, 1, doppler_len);
    return {fftshift_along(x, 1), true};
}

/// Antenna-summed magnitude, indexed (range, Doppler).
inline RealTensor magnitude_map(const RangeDopplerMap& rd) {
    const std::size_t R = rd.data.extent(0), D = rd.data.extent(1), V = rd.data.extent(2);
    RealTensor out({R, D});
    for (std::size_t r = 0; r < R; ++r)
        for (std::size_t d = 0; d < D; ++d) {
            double acc = 0;
            for (std::size_t v = 0; v < V; ++v) acc += std::abs(rd.data(r, d, v));
            out(r, d) = acc;
        }
    return out;
}

}  // namespace rfpose
