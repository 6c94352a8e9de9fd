#pragma once

// End-to-end composition of the two feature branches for one frame.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include "rfpose/adc.hpp"
#include "rfpose/cfar.hpp"
#include "rfpose/config.hpp"
#include "rfpose/fusion.hpp"
#include "rfpose/probmap.hpp"
#include "rfpose/spectral.hpp"

namespace rfpose {

/// Which range-Doppler magnitude CFAR sees.
enum class CfarInput {
    summed,       // one map, |.| summed over virtual antennas
    per_antenna,  // one map per antenna; a cell is detected if any antenna detects it
};

/// Processing parameters shared by the CLI commands. The defaults are the
/// shipped configuration (config/pipeline.cfg).
struct PipelineOptions {
    CfarParams cfar{};  // guard 5, reference 16 per side
    CfarInput cfar_input = CfarInput::summed;
    std::size_t pe_depth = 32;
    std::size_t input_frames = kDefaultInputFrames;
    DopplerSampling doppler{};
    RowNorm norm = RowNorm::l1;
    BinMerge merge = BinMerge::union_uniform;

    void validate() const {
        cfar.validate();
        if (pe_depth < 2 || pe_depth % 2 != 0) throw ConfigError("pe_depth must be even and >= 2");
        if (input_frames < 1) throw ConfigError("input_frames must be >= 1");
    }

    static PipelineOptions from(const KeyValueConfig& kv) {
        PipelineOptions o;
        o.cfar = CfarParams::from(kv);
        const auto depth = kv.get_int("pe_depth", static_cast<std::int64_t>(o.pe_depth));
        const auto frames = kv.get_int("input_frames", static_cast<std::int64_t>(o.input_frames));
        const auto keep = kv.get_int("doppler_keep", static_cast<std::int64_t>(o.doppler.keep));
        if (depth < 0 || frames < 0 || keep < 0) throw ConfigError(kv.origin() + ": negative count");
        o.pe_depth = static_cast<std::size_t>(depth);
        o.input_frames = static_cast<std::size_t>(frames);
        o.doppler.keep = static_cast<std::size_t>(keep);
        o.doppler.window = kv.get_double("doppler_window", o.doppler.window);
        if (kv.has("cfar_input")) {
            const auto c = kv.get_string("cfar_input");
            if (c != "summed" && c != "per_antenna") throw ConfigError(kv.origin() + ": cfar_input must be summed or per_antenna");
            o.cfar_input = c == "summed" ? CfarInput::summed : CfarInput::per_antenna;
        }
        if (kv.has("normalization")) {
            const auto n = kv.get_string("normalization");
            if (n != "l1" && n != "l2") throw ConfigError(kv.origin() + ": normalization must be l1 or l2");
            o.norm = n == "l1" ? RowNorm::l1 : RowNorm::l2;
        }
        if (kv.has("bin_merge")) {
            const auto m = kv.get_string("bin_merge");
            if (m != "union" && m != "intersection") throw ConfigError(kv.origin() + ": bin_merge must be union or intersection");
            o.merge = m == "union" ? BinMerge::union_uniform : BinMerge::intersection;
        }
        o.validate();
        return o;
    }
};

/// FFT branch: 4-D FFT, Doppler shift, elevation average, optional Doppler sampling.
inline RangeDopplerAngleMap fft_branch_map(const RadarCube& cube, const RadarConfig& config,
                                           const std::optional<DopplerSampling>& sampling = std::nullopt) {
    auto spec = shift_doppler(fft4d(cube, ArrayGeometry::of(config)));
    auto map = average_elevation(spec);
    if (sampling) return sample_doppler(map, *sampling).value;
    return map;
}

/// CFAR detections on one radar's range-Doppler magnitude.
inline DetectionMask detect_frame(const RadarCube& cube, const CfarParams& params,
                                  CfarInput input = CfarInput::summed) {
    const auto rd = range_doppler_map(cube);
    if (input == CfarInput::summed) return detect_2d(magnitude_map(rd), params);

    const std::size_t R = rd.data.extent(0), D = rd.data.extent(1), V = rd.data.extent(2);
    DetectionMask out{Tensor<std::uint8_t>({R, D}, 0), RealTensor({R, D}, std::numeric_limits<double>::infinity())};
    RealTensor mag({R, D});
    for (std::size_t v = 0; v < V; ++v) {
        for (std::size_t r = 0; r < R; ++r)
            for (std::size_t d = 0; d < D; ++d) mag(r, d) = std::abs(rd.data(r, d, v));
        const auto m = detect_2d(mag, params);
        for (std::size_t i = 0; i < m.mask.size(); ++i) {
            out.mask[i] |= m.mask[i];
            // lowest per-antenna threshold
            out.threshold[i] = std::min(out.threshold[i], m.threshold[i]);
        }
    }
    return out;
}

struct ProbPeFrame {
    DetectionMask mask_h, mask_v;
    RangeAngleVector azimuth, elevation;  // normalized
    ProbabilityMap map;
    EncodedFeature encoded;
};

/// Probability-map branch for one pair of horizontal/vertical cubes.
inline ProbPeFrame probpe_frame(const RadarCube& horizontal, const RadarCube& vertical, const RadarConfig& config,
                                const PipelineOptions& opt) {
    if (horizontal.radar_id() != RadarId::horizontal || vertical.radar_id() != RadarId::vertical) {
        throw ContractError("probpe_frame: expected a horizontal and a vertical cube");
    }
    ProbPeFrame out;
    const auto geometry = ArrayGeometry::of(config);
    out.mask_h = detect_frame(horizontal, opt.cfar, opt.cfar_input);
    out.mask_v = detect_frame(vertical, opt.cfar, opt.cfar_input);
    out.azimuth = normalize(angle_spectrum(horizontal, select_range_bins(out.mask_h), AngleKind::azimuth, geometry), opt.norm);
    out.elevation =
        normalize(angle_spectrum(vertical, select_range_bins(out.mask_v), AngleKind::elevation, geometry), opt.norm);
    out.map = probability_map(out.azimuth, out.elevation, opt.merge);
    out.encoded = encode_map(out.map, positional_encoding(out.map.azimuth_bins(), out.map.elevation_bins(), opt.pe_depth));
    return out;
}

}  // namespace rfpose
