#pragma once

// Point-scatterer FMCW simulator with known ground truth.
//
// Idealized stop-and-hop model: no range migration within a frame and no
// intra-chirp Doppler. Each target contributes, at fast-time sample n, chirp m
// and virtual antenna v = q * P + p,
//
//   A * exp(j 2 pi [f_b n / f_s + f_d m T_c + s (p sin(primary) + q sin(secondary))])
//
// with beat frequency f_b = 2 S R / c, Doppler f_d = 2 v f_c / c, element
// spacing s in wavelengths, and (primary, secondary) = (azimuth, elevation) for
// the horizontal radar and (elevation, azimuth) for the vertical radar.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rfpose/adc.hpp"
#include "rfpose/spectral.hpp"

namespace rfpose {

inline constexpr double kSpeedOfLight = 299792458.0;

struct Target {
    double range = 1.0;            // m
    double radial_velocity = 0.0;  // m/s, positive = receding
    double azimuth = 0.0;          // rad
    double elevation = 0.0;        // rad
    double rcs_amplitude = 1.0;    // linear, ADC counts

    void validate() const {
        if (!std::isfinite(range) || !std::isfinite(radial_velocity) || !std::isfinite(azimuth) ||
            !std::isfinite(elevation) || !std::isfinite(rcs_amplitude)) {
            throw ConfigError("target: non-finite field");
        }
        if (!(range > 0)) throw ConfigError("target: range must be > 0");
        if (!(std::abs(azimuth) < std::numbers::pi / 2) || !(std::abs(elevation) < std::numbers::pi / 2)) {
            throw ConfigError("target: |azimuth| and |elevation| must be < pi/2");
        }
    }
};

struct SceneSpec {
    std::vector<Target> targets;
    std::optional<double> snr_db;  // absent: noise off
    std::uint64_t noise_seed = 0;
    // Amplitude the SNR is quoted against. Absent: the largest target
    // amplitude, or 1 with no targets.
    std::optional<double> noise_reference;

    /// Per-sample complex noise standard deviation (zero when noise is off).
    double noise_sigma() const {
        if (!snr_db) return 0.0;
        double ref = 1.0;
        if (noise_reference) {
            ref = *noise_reference;
        } else if (!targets.empty()) {
            ref = 0.0;
            for (const auto& t : targets) ref = std::max(ref, std::abs(t.rcs_amplitude));
        }
        return ref * std::pow(10.0, -*snr_db / 20.0);
    }

    void validate() const {
        for (const auto& t : targets) t.validate();
        if (snr_db && !std::isfinite(*snr_db)) throw ConfigError("scene: snr_db must be finite");
        if (noise_reference && !(*noise_reference >= 0)) throw ConfigError("scene: noise_reference must be >= 0");
    }
};

struct SimulatedFrame {
    RadarCube cube;
    std::vector<std::string> warnings;  // aliasing notes; aliasing itself is allowed
};

inline double beat_frequency(const Target& t, const RadarConfig& c) {
    return 2.0 * c.chirp_slope * t.range / kSpeedOfLight;
}

inline double doppler_frequency(const Target& t, const RadarConfig& c) {
    return 2.0 * t.radial_velocity * c.carrier_freq / kSpeedOfLight;
}

/// Seed for one (scene seed, radar, frame) triple; frames and radars draw independent noise.
inline std::mt19937_64 noise_engine(std::uint64_t seed, RadarId radar, std::int64_t frame) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(radar == RadarId::horizontal ? 0 : 1),
                      static_cast<std::uint32_t>(frame), static_cast<std::uint32_t>(static_cast<std::uint64_t>(frame) >> 32)};
    return std::mt19937_64(seq);
}

/// Targets move radially between frames: range advances by v * frame_index / frame_rate.
inline SimulatedFrame synth_frame(const SceneSpec& scene, const RadarConfig& config, RadarId radar_id,
                                  std::int64_t frame_index = 0) {
    config.validate();
    scene.validate();
    const std::size_t N = config.num_adc_samples, M = config.num_chirps;
    const std::size_t P = config.primary_count(), Q = config.secondary_count();
    SimulatedFrame out{RadarCube::zeros(config, frame_index, radar_id), {}};
    const double two_pi = 2.0 * std::numbers::pi;
    const double tc = config.chirp_interval();
    const double elapsed = static_cast<double>(frame_index) / config.frame_rate;

    for (std::size_t ti = 0; ti < scene.targets.size(); ++ti) {
        Target t = scene.targets[ti];
        t.range += t.radial_velocity * elapsed;
        if (!(t.range > 0)) {
            out.warnings.push_back("target " + std::to_string(ti) + " passed through the radar; skipped");
            continue;
        }
        const double fb = beat_frequency(t, config);
        const double fd = doppler_frequency(t, config);
        const double primary = radar_id == RadarId::horizontal ? t.azimuth : t.elevation;
        const double secondary = radar_id == RadarId::horizontal ? t.elevation : t.azimuth;
        const double u = config.antenna_spacing * std::sin(primary);
        const double w = config.antenna_spacing * std::sin(secondary);
        if (fb >= config.sample_rate) out.warnings.push_back("target " + std::to_string(ti) + " beyond unambiguous range");
        if (std::abs(fd * tc) >= 0.5) out.warnings.push_back("target " + std::to_string(ti) + " beyond unambiguous velocity");
        if (std::abs(u) >= 0.5 || std::abs(w) >= 0.5) {
            out.warnings.push_back("target " + std::to_string(ti) + " angle aliases across the array");
        }
        for (std::size_t n = 0; n < N; ++n) {
            const double range_cycles = fb * static_cast<double>(n) / config.sample_rate;
            for (std::size_t m = 0; m < M; ++m) {
                const double doppler_cycles = fd * static_cast<double>(m) * tc;
                for (std::size_t q = 0; q < Q; ++q)
                    for (std::size_t p = 0; p < P; ++p) {
                        const double cycles = range_cycles + doppler_cycles + u * static_cast<double>(p) +
                                              w * static_cast<double>(q);
                        out.cube(n, m, q * P + p) += std::polar(t.rcs_amplitude, two_pi * cycles);
                    }
            }
        }
    }

    const double sigma = scene.noise_sigma();
    if (sigma > 0) {
        auto rng = noise_engine(scene.noise_seed, radar_id, frame_index);
        std::normal_distribution<double> gauss(0.0, sigma / std::numbers::sqrt2);
        for (auto& z : out.cube.tensor().data()) {
            const double re = gauss(rng);
            const double im = gauss(rng);
            z += Complex{re, im};
        }
    }
    return out;
}

struct ExpectedBins {
    std::size_t range = 0;
    std::size_t doppler = 0;  // shifted convention
    std::size_t azimuth = 0;
    std::size_t elevation = 0;
};

inline std::size_t wrap_bin(long long k, std::size_t n) {
    const auto m = static_cast<long long>(n);
    return static_cast<std::size_t>(((k % m) + m) % m);
}

/// Closed-form FFT bins for a target at frame 0. Both radars share `config`,
/// so azimuth and elevation use the same primary-axis FFT length.
inline ExpectedBins expected_bins(const Target& t, const RadarConfig& config, const FftLengths& lengths = {}) {
    const auto L = lengths.resolved(config.num_adc_samples, config.num_chirps, config.primary_count(),
                                    config.secondary_count());
    const double fb = beat_frequency(t, config);
    const double fd = doppler_frequency(t, config);
    ExpectedBins b;
    b.range = wrap_bin(std::llround(fb * static_cast<double>(L.range) / config.sample_rate), L.range);
    const long long raw_doppler = std::llround(fd * config.chirp_interval() * static_cast<double>(L.doppler));
    b.doppler = wrap_bin(raw_doppler + static_cast<long long>(L.doppler / 2), L.doppler);
    const auto angle_bin = [&](double angle) {
        return wrap_bin(std::llround(static_cast<double>(L.primary) * config.antenna_spacing * std::sin(angle)),
                        L.primary);
    };
    b.azimuth = angle_bin(t.azimuth);
    b.elevation = angle_bin(t.elevation);
    return b;
}

}  // namespace rfpose
