#pragma once

// Raw ADC capture ingest.
//
// A capture file holds one radar and any number of frames. Each frame is a
// stream of signed 16-bit little-endian words. The words are consumed in groups
// of `lanes`: the first lanes/2 words of a group are the real parts and the last
// lanes/2 words the imaginary parts of lanes/2 consecutive complex samples.
// With the default of 4 lanes the words {r0, r1, i0, i1} decode to
// {r0 + j*i0, r1 + j*i1}; with 2 lanes the stream is plain I/Q pairs.
//
// The decoded complex stream is in acquisition order:
//
//   for chirp m, for tx, for rx, for fast-time sample n
//
// and channel c = tx * num_rx + rx is the virtual antenna index.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "rfpose/config.hpp"
#include "rfpose/error.hpp"
#include "rfpose/tensor.hpp"

namespace rfpose {

enum class RadarId { horizontal, vertical };

inline const char* to_string(RadarId id) { return id == RadarId::horizontal ? "horizontal" : "vertical"; }

inline RadarId radar_id_from_string(const std::string& s) {
    if (s == "horizontal") return RadarId::horizontal;
    if (s == "vertical") return RadarId::vertical;
    throw ConfigError("unknown radar id `" + s + "` (expected horizontal|vertical)");
}

struct RadarConfig {
    std::size_t num_adc_samples = 0;
    std::size_t num_chirps = 0;
    std::size_t num_tx = 0;
    std::size_t num_rx = 0;
    double sample_rate = 0;   // Hz
    double chirp_slope = 0;   // Hz/s
    double carrier_freq = 0;  // Hz
    double frame_rate = 0;    // frames/s
    double antenna_spacing = 0.5;  // wavelengths

    // Time between successive chirps of the same transmitter. Zero means
    // back-to-back ramps with no idle time: num_tx * num_adc_samples / sample_rate.
    double chirp_period = 0;

    // Virtual array geometry: virtual antenna v sits at (p, q) = (v % P, v / P),
    // p along the radar's primary (angle-resolving) axis. P = 0 means all
    // virtual antennas form one linear array.
    std::size_t array_primary = 0;
    std::size_t array_secondary = 1;

    std::size_t num_virtual() const { return num_tx * num_rx; }
    std::size_t primary_count() const { return array_primary == 0 ? num_virtual() : array_primary; }
    std::size_t secondary_count() const { return array_secondary; }

    double chirp_interval() const {
        return chirp_period > 0 ? chirp_period
                                : static_cast<double>(num_tx * num_adc_samples) / sample_rate;
    }

    void validate() const {
        if (num_adc_samples < 1 || num_chirps < 1 || num_tx < 1 || num_rx < 1) {
            throw ConfigError("radar config: sample, chirp, tx and rx counts must be >= 1");
        }
        if (!(sample_rate > 0) || !(chirp_slope > 0) || !(carrier_freq > 0)) {
            throw ConfigError("radar config: sample_rate, chirp_slope and carrier_freq must be > 0");
        }
        if (!(frame_rate > 0)) throw ConfigError("radar config: frame_rate must be > 0");
        if (!(antenna_spacing > 0)) throw ConfigError("radar config: antenna_spacing must be > 0");
        if (chirp_period < 0) throw ConfigError("radar config: chirp_period must be >= 0");
        if (array_secondary < 1 || primary_count() * secondary_count() != num_virtual()) {
            throw ConfigError("radar config: array geometry " + std::to_string(primary_count()) + "x" +
                              std::to_string(secondary_count()) + " does not cover " +
                              std::to_string(num_virtual()) + " virtual antennas");
        }
    }

    static RadarConfig from(const KeyValueConfig& kv) {
        auto count = [&](const char* key) {
            const auto v = kv.get_int(key);
            if (v < 1) throw ConfigError(kv.origin() + ": `" + key + "` must be >= 1");
            return static_cast<std::size_t>(v);
        };
        RadarConfig c;
        c.num_adc_samples = count("num_adc_samples");
        c.num_chirps = count("num_chirps");
        c.num_tx = count("num_tx");
        c.num_rx = count("num_rx");
        c.sample_rate = kv.get_double("sample_rate");
        c.chirp_slope = kv.get_double("chirp_slope");
        c.carrier_freq = kv.get_double("carrier_freq");
        c.frame_rate = kv.get_double("frame_rate");
        c.antenna_spacing = kv.get_double("antenna_spacing", 0.5);
        c.chirp_period = kv.get_double("chirp_period", 0.0);
        const auto p = kv.get_int("array_primary", 0);
        const auto q = kv.get_int("array_secondary", 1);
        if (p < 0 || q < 1) throw ConfigError(kv.origin() + ": invalid array geometry");
        c.array_primary = static_cast<std::size_t>(p);
        c.array_secondary = static_cast<std::size_t>(q);
        c.validate();
        return c;
    }
};

struct AdcLayout {
    static constexpr std::size_t bytes_per_sample = 2;
    std::size_t lanes = 4;

    void validate() const {
        if (lanes < 2 || lanes % 2 != 0) throw ConfigError("adc layout: lanes must be even and >= 2");
    }

    void validate(const RadarConfig& c) const {
        validate();
        c.validate();
        if (frame_words(c) % lanes != 0) {
            throw ConfigError("adc layout: frame word count is not a multiple of the lane count");
        }
    }

    std::size_t frame_words(const RadarConfig& c) const {
        return 2 * c.num_adc_samples * c.num_chirps * c.num_virtual();
    }
    std::size_t frame_bytes(const RadarConfig& c) const { return frame_words(c) * bytes_per_sample; }

    /// Word position of the real (part = 0) or imaginary (part = 1) component of complex sample s.
    std::size_t word_index(std::size_t s, int part) const {
        const std::size_t half = lanes / 2;
        return (s / half) * lanes + static_cast<std::size_t>(part) * half + s % half;
    }
};

/// One frame of decoded samples: channels[c][m * num_adc_samples + n].
struct ChannelSamples {
    std::vector<std::vector<Complex>> channels;

    std::size_t total() const {
        std::size_t n = 0;
        for (const auto& ch : channels) n += ch.size();
        return n;
    }
};

/// Complex samples indexed (fast-time sample n, chirp m, virtual antenna v).
class RadarCube {
public:
    RadarCube() = default;
    RadarCube(ComplexTensor data, std::int64_t frame_index, RadarId radar_id)
        : data_(std::move(data)), frame_index_(frame_index), radar_id_(radar_id) {
        if (data_.rank() != 3) throw ContractError("radar cube must be rank 3");
    }

    static RadarCube zeros(const RadarConfig& c, std::int64_t frame_index = 0,
                           RadarId id = RadarId::horizontal) {
        return {ComplexTensor({c.num_adc_samples, c.num_chirps, c.num_virtual()}), frame_index, id};
    }

    std::size_t samples() const { return data_.extent(0); }
    std::size_t chirps() const { return data_.extent(1); }
    std::size_t antennas() const { return data_.extent(2); }

    Complex& operator()(std::size_t n, std::size_t m, std::size_t v) { return data_(n, m, v); }
    const Complex& operator()(std::size_t n, std::size_t m, std::size_t v) const { return data_(n, m, v); }

    const ComplexTensor& tensor() const noexcept { return data_; }
    ComplexTensor& tensor() noexcept { return data_; }
    std::int64_t frame_index() const noexcept { return frame_index_; }
    RadarId radar_id() const noexcept { return radar_id_; }

    bool matches(const RadarConfig& c) const {
        return samples() == c.num_adc_samples && chirps() == c.num_chirps && antennas() == c.num_virtual();
    }

private:
    ComplexTensor data_;
    std::int64_t frame_index_ = 0;
    RadarId radar_id_ = RadarId::horizontal;
};

namespace detail {

inline double read_i16(const std::uint8_t* p) {
    return static_cast<double>(static_cast<std::int16_t>(static_cast<std::uint16_t>(p[0] | (p[1] << 8))));
}

inline ChannelSamples decode_frame(const std::uint8_t* frame, const AdcLayout& layout, const RadarConfig& c) {
    const std::size_t n_samples = c.num_adc_samples;
    const std::size_t per_chirp = c.num_virtual() * n_samples;
    ChannelSamples out;
    out.channels.assign(c.num_virtual(), std::vector<Complex>(c.num_chirps * n_samples));
    const std::size_t total = c.num_chirps * per_chirp;
    for (std::size_t s = 0; s < total; ++s) {
        const std::size_t m = s / per_chirp;
        const std::size_t ch = (s % per_chirp) / n_samples;
        const std::size_t n = s % n_samples;
        const double re = read_i16(frame + 2 * layout.word_index(s, 0));
        const double im = read_i16(frame + 2 * layout.word_index(s, 1));
        out.channels[ch][m * n_samples + n] = {re, im};
    }
    return out;
}

inline std::int16_t quantize(double v) {
    if (!std::isfinite(v)) throw ContractError("cannot encode non-finite ADC sample");
    const double r = std::nearbyint(v);
    return static_cast<std::int16_t>(std::clamp(r, -32768.0, 32767.0));
}

}  // namespace detail

/// Decodes a whole capture into per-frame, per-channel complex samples.
inline std::vector<ChannelSamples> parse_raw_adc(std::span<const std::uint8_t> bytes, const AdcLayout& layout,
                                                 const RadarConfig& config) {
    layout.validate(config);
    const std::size_t frame_bytes = layout.frame_bytes(config);
    if (bytes.empty() || bytes.size() % frame_bytes != 0) throw TruncatedInputError(frame_bytes, bytes.size());
    std::vector<ChannelSamples> frames;
    frames.reserve(bytes.size() / frame_bytes);
    for (std::size_t off = 0; off < bytes.size(); off += frame_bytes) {
        frames.push_back(detail::decode_frame(bytes.data() + off, layout, config));
    }
    return frames;
}

/// Inverse of parse_raw_adc. Values are rounded to the nearest integer and
/// saturated to the int16 range.
inline std::vector<std::uint8_t> serialize_raw_adc(std::span<const ChannelSamples> frames, const AdcLayout& layout,
                                                   const RadarConfig& config) {
    layout.validate(config);
    const std::size_t n_samples = config.num_adc_samples;
    const std::size_t per_chirp = config.num_virtual() * n_samples;
    const std::size_t frame_bytes = layout.frame_bytes(config);
    std::vector<std::uint8_t> out(frames.size() * frame_bytes);
    for (std::size_t f = 0; f < frames.size(); ++f) {
        const auto& fr = frames[f];
        if (fr.channels.size() != config.num_virtual() || fr.total() != config.num_chirps * per_chirp) {
            throw ContractError("serialize_raw_adc: frame " + std::to_string(f) + " does not match config");
        }
        std::uint8_t* base = out.data() + f * frame_bytes;
        for (std::size_t s = 0; s < config.num_chirps * per_chirp; ++s) {
            const std::size_t m = s / per_chirp;
            const std::size_t ch = (s % per_chirp) / n_samples;
            const std::size_t n = s % n_samples;
            const Complex v = fr.channels[ch].at(m * n_samples + n);
            for (int part = 0; part < 2; ++part) {
                const auto q = static_cast<std::uint16_t>(detail::quantize(part == 0 ? v.real() : v.imag()));
                std::uint8_t* p = base + 2 * layout.word_index(s, part);
                p[0] = static_cast<std::uint8_t>(q & 0xff);
                p[1] = static_cast<std::uint8_t>(q >> 8);
            }
        }
    }
    return out;
}

/// Re-indexes one frame of channel samples into a (sample, chirp, virtual antenna) cube.
inline RadarCube build_radar_cube(const ChannelSamples& samples, const RadarConfig& config,
                                  std::int64_t frame_index, RadarId radar_id) {
    const std::size_t N = config.num_adc_samples, M = config.num_chirps, V = config.num_virtual();
    const std::size_t expected = N * M * V;
    if (samples.total() != expected || samples.channels.size() != V) {
        throw ContractError("build_radar_cube: expected " + std::to_string(expected) + " samples over " +
                            std::to_string(V) + " channels, got " + std::to_string(samples.total()) +
                            " over " + std::to_string(samples.channels.size()));
    }
    ComplexTensor data({N, M, V});
    for (std::size_t v = 0; v < V; ++v) {
        const auto& ch = samples.channels[v];
        if (ch.size() != N * M) throw ContractError("build_radar_cube: channel length mismatch");
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t n = 0; n < N; ++n) data(n, m, v) = ch[m * N + n];
    }
    return {std::move(data), frame_index, radar_id};
}

inline ChannelSamples cube_to_channels(const RadarCube& cube) {
    const std::size_t N = cube.samples(), M = cube.chirps(), V = cube.antennas();
    ChannelSamples out;
    out.channels.assign(V, std::vector<Complex>(N * M));
    for (std::size_t v = 0; v < V; ++v)
        for (std::size_t m = 0; m < M; ++m)
            for (std::size_t n = 0; n < N; ++n) out.channels[v][m * N + n] = cube(n, m, v);
    return out;
}

/// Parses a capture into cubes, numbering frames from zero.
inline std::vector<RadarCube> load_cubes(std::span<const std::uint8_t> bytes, const AdcLayout& layout,
                                         const RadarConfig& config, RadarId radar_id) {
    auto frames = parse_raw_adc(bytes, layout, config);
    std::vector<RadarCube> cubes;
    cubes.reserve(frames.size());
    for (std::size_t f = 0; f < frames.size(); ++f) {
        cubes.push_back(build_radar_cube(frames[f], config, static_cast<std::int64_t>(f), radar_id));
    }
    return cubes;
}

/// Incremental parser: accepts a capture in arbitrary chunks and emits frames
/// as soon as they are complete.
class AdcStreamParser {
public:
    AdcStreamParser(AdcLayout layout, RadarConfig config)
        : layout_(layout), config_(config), frame_bytes_(layout.frame_bytes(config)) {
        layout_.validate(config_);
    }

    std::vector<ChannelSamples> push(std::span<const std::uint8_t> chunk) {
        total_ += chunk.size();
        pending_.insert(pending_.end(), chunk.begin(), chunk.end());
        std::vector<ChannelSamples> out;
        std::size_t off = 0;
        for (; pending_.size() - off >= frame_bytes_; off += frame_bytes_) {
            out.push_back(detail::decode_frame(pending_.data() + off, layout_, config_));
        }
        pending_.erase(pending_.begin(), pending_.begin() + static_cast<std::ptrdiff_t>(off));
        return out;
    }

    /// Throws TruncatedInputError if the stream ended mid-frame or was empty.
    void finish() const {
        if (total_ == 0 || !pending_.empty()) throw TruncatedInputError(frame_bytes_, total_);
    }

private:
    AdcLayout layout_;
    RadarConfig config_;
    std::size_t frame_bytes_;
    std::size_t total_ = 0;
    std::vector<std::uint8_t> pending_;
};

}  // namespace rfpose
