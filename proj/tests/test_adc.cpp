#include <gtest/gtest.h>

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "rfpose/adc.hpp"

using namespace rfpose;

namespace {

RadarConfig small_config(std::size_t samples, std::size_t chirps, std::size_t tx, std::size_t rx) {
    RadarConfig c;
    c.num_adc_samples = samples;
    c.num_chirps = chirps;
    c.num_tx = tx;
    c.num_rx = rx;
    c.sample_rate = 1e7;
    c.chirp_slope = 3e13;
    c.carrier_freq = 77e9;
    c.frame_rate = 10;
    return c;
}

std::vector<std::uint8_t> words_to_bytes(const std::vector<std::int16_t>& words) {
    std::vector<std::uint8_t> out;
    for (auto w : words) {
        const auto u = static_cast<std::uint16_t>(w);
        out.push_back(static_cast<std::uint8_t>(u & 0xff));
        out.push_back(static_cast<std::uint8_t>(u >> 8));
    }
    return out;
}

}  // namespace

TEST(ParseRawAdc, EmptyInputIsTruncated) {
    const auto cfg = small_config(2, 1, 1, 2);
    try {
        parse_raw_adc({}, AdcLayout{}, cfg);
        FAIL() << "expected TruncatedInputError";
    } catch (const TruncatedInputError& e) {
        EXPECT_EQ(e.frame_bytes(), 16u);
        EXPECT_EQ(e.actual_bytes(), 0u);
        EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
    }
}

TEST(ParseRawAdc, PartialFrameNamesExpectedAndActual) {
    const auto cfg = small_config(2, 1, 1, 2);
    std::vector<std::uint8_t> bytes(24, 0);
    try {
        parse_raw_adc(bytes, AdcLayout{}, cfg);
        FAIL();
    } catch (const TruncatedInputError& e) {
        EXPECT_NE(std::string(e.what()).find("16"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("24"), std::string::npos);
    }
}

TEST(ParseRawAdc, SixteenByteHandTrace) {
    // Words {1..8}, four lanes: {1,2 | 3,4} -> 1+3i, 2+4i; {5,6 | 7,8} -> 5+7i, 6+8i.
    // Two channels of two samples each, channel-major within the chirp.
    const auto cfg = small_config(2, 1, 1, 2);
    const auto bytes = words_to_bytes({1, 2, 3, 4, 5, 6, 7, 8});
    const auto frames = parse_raw_adc(bytes, AdcLayout{}, cfg);
    ASSERT_EQ(frames.size(), 1u);
    const auto& ch = frames[0].channels;
    ASSERT_EQ(ch.size(), 2u);
    EXPECT_EQ(ch[0][0], Complex(1, 3));
    EXPECT_EQ(ch[0][1], Complex(2, 4));
    EXPECT_EQ(ch[1][0], Complex(5, 7));
    EXPECT_EQ(ch[1][1], Complex(6, 8));
}

TEST(ParseRawAdc, TwoLaneLayoutIsPlainIqPairs) {
    const auto cfg = small_config(2, 1, 1, 2);
    const auto bytes = words_to_bytes({1, 2, 3, 4, 5, 6, 7, 8});
    const auto frames = parse_raw_adc(bytes, AdcLayout{2}, cfg);
    EXPECT_EQ(frames[0].channels[0][0], Complex(1, 2));
    EXPECT_EQ(frames[0].channels[1][1], Complex(7, 8));
}

TEST(ParseRawAdc, NegativeWordsAreSignExtended) {
    const auto cfg = small_config(2, 1, 1, 1);
    const auto frames = parse_raw_adc(words_to_bytes({-1, -32768, 32767, 0}), AdcLayout{}, cfg);
    EXPECT_EQ(frames[0].channels[0][0], Complex(-1, 32767));
    EXPECT_EQ(frames[0].channels[0][1], Complex(-32768, 0));
}

TEST(ParseRawAdc, ZeroBytesGiveZeroSamples) {
    const auto cfg = small_config(4, 2, 2, 2);
    std::vector<std::uint8_t> bytes(3 * AdcLayout{}.frame_bytes(cfg), 0);
    const auto frames = parse_raw_adc(bytes, AdcLayout{}, cfg);
    ASSERT_EQ(frames.size(), 3u);
    for (const auto& f : frames)
        for (const auto& ch : f.channels)
            for (const auto& z : ch) EXPECT_EQ(z, Complex(0, 0));
}

TEST(ParseRawAdc, RejectsOddLaneCount) {
    const auto cfg = small_config(2, 1, 1, 2);
    EXPECT_THROW(parse_raw_adc(std::vector<std::uint8_t>(16), AdcLayout{3}, cfg), ConfigError);
}

TEST(BuildRadarCube, ShapeFollowsConfig) {
    const auto cfg = small_config(4, 2, 2, 2);
    const auto frames = parse_raw_adc(std::vector<std::uint8_t>(AdcLayout{}.frame_bytes(cfg)), AdcLayout{}, cfg);
    const auto cube = build_radar_cube(frames[0], cfg, 7, RadarId::vertical);
    EXPECT_EQ(cube.samples(), 4u);
    EXPECT_EQ(cube.chirps(), 2u);
    EXPECT_EQ(cube.antennas(), 4u);
    EXPECT_EQ(cube.frame_index(), 7);
    EXPECT_EQ(cube.radar_id(), RadarId::vertical);
}

TEST(BuildRadarCube, ConstantInputGivesConstantCube) {
    const auto cfg = small_config(4, 2, 2, 2);
    ChannelSamples s;
    s.channels.assign(4, std::vector<Complex>(8, Complex(3, -2)));
    const auto cube = build_radar_cube(s, cfg, 0, RadarId::horizontal);
    for (const auto& z : cube.tensor().data()) EXPECT_EQ(z, Complex(3, -2));
}

TEST(BuildRadarCube, RampMatchesIndependentReindexer) {
    // Words 0..63 for samples=4, chirps=2, tx=2, rx=2. The expected cube is
    // computed straight from the documented byte layout.
    const std::size_t N = 4, M = 2, TX = 2, RX = 2;
    const auto cfg = small_config(N, M, TX, RX);
    std::vector<std::int16_t> words(64);
    for (int i = 0; i < 64; ++i) words[i] = static_cast<std::int16_t>(i);
    const auto frames = parse_raw_adc(words_to_bytes(words), AdcLayout{}, cfg);
    const auto cube = build_radar_cube(frames[0], cfg, 0, RadarId::horizontal);

    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t tx = 0; tx < TX; ++tx)
            for (std::size_t rx = 0; rx < RX; ++rx)
                for (std::size_t n = 0; n < N; ++n) {
                    const std::size_t s = ((m * TX + tx) * RX + rx) * N + n;
                    const std::size_t re_word = (s / 2) * 4 + s % 2;
                    const Complex expected(words[re_word], words[re_word + 2]);
                    EXPECT_EQ(cube(n, m, tx * RX + rx), expected) << "n=" << n << " m=" << m << " tx=" << tx << " rx=" << rx;
                }
}

TEST(BuildRadarCube, SampleCountMismatchReportsBothCounts) {
    const auto cfg = small_config(4, 2, 2, 2);
    ChannelSamples s;
    s.channels.assign(4, std::vector<Complex>(7));
    try {
        build_radar_cube(s, cfg, 0, RadarId::horizontal);
        FAIL();
    } catch (const ContractError& e) {
        EXPECT_NE(std::string(e.what()).find("32"), std::string::npos);
        EXPECT_NE(std::string(e.what()).find("28"), std::string::npos);
    }
}

TEST(AdcProperties, SerializeParseRoundTripIsByteExact) {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> byte(0, 255);
    for (int trial = 0; trial < 20; ++trial) {
        const auto cfg = small_config(1 + trial % 5, 1 + trial % 3, 1 + trial % 2, 2);
        const AdcLayout layout{trial % 2 == 0 ? 4u : 2u};
        std::vector<std::uint8_t> bytes((1 + trial % 3) * layout.frame_bytes(cfg));
        for (auto& b : bytes) b = static_cast<std::uint8_t>(byte(rng));
        const auto frames = parse_raw_adc(bytes, layout, cfg);
        EXPECT_EQ(serialize_raw_adc(frames, layout, cfg), bytes) << "trial " << trial;
    }
}

TEST(AdcProperties, CubeIsAPermutationOfTheSamples) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> word(-2000, 2000);
    const auto cfg = small_config(8, 4, 3, 4);
    ChannelSamples s;
    s.channels.assign(cfg.num_virtual(), std::vector<Complex>(cfg.num_adc_samples * cfg.num_chirps));
    std::vector<std::pair<double, double>> before;
    for (auto& ch : s.channels)
        for (auto& z : ch) {
            z = {double(word(rng)), double(word(rng))};
            before.emplace_back(z.real(), z.imag());
        }
    const auto cube = build_radar_cube(s, cfg, 0, RadarId::horizontal);
    std::vector<std::pair<double, double>> after;
    for (const auto& z : cube.tensor().data()) after.emplace_back(z.real(), z.imag());
    std::sort(before.begin(), before.end());
    std::sort(after.begin(), after.end());
    EXPECT_EQ(before, after);
    EXPECT_EQ(cube_to_channels(cube).channels, s.channels);
}

TEST(AdcProperties, StreamingIsChunkIndependent) {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> byte(0, 255);
    const auto cfg = small_config(4, 2, 2, 2);
    const AdcLayout layout;
    std::vector<std::uint8_t> bytes(5 * layout.frame_bytes(cfg));
    for (auto& b : bytes) b = static_cast<std::uint8_t>(byte(rng));
    const auto whole = parse_raw_adc(bytes, layout, cfg);

    for (std::size_t chunk : {1u, 3u, 7u, 64u, 129u, 1000u}) {
        AdcStreamParser parser(layout, cfg);
        std::vector<ChannelSamples> streamed;
        for (std::size_t off = 0; off < bytes.size(); off += chunk) {
            const auto n = std::min(chunk, bytes.size() - off);
            for (auto& f : parser.push(std::span(bytes).subspan(off, n))) streamed.push_back(std::move(f));
        }
        parser.finish();
        ASSERT_EQ(streamed.size(), whole.size());
        for (std::size_t f = 0; f < whole.size(); ++f) EXPECT_EQ(streamed[f].channels, whole[f].channels) << chunk;
    }
}

TEST(AdcProperties, StreamEndingMidFrameIsTruncated) {
    const auto cfg = small_config(4, 2, 2, 2);
    AdcStreamParser parser(AdcLayout{}, cfg);
    parser.push(std::vector<std::uint8_t>(AdcLayout{}.frame_bytes(cfg) + 2));
    EXPECT_THROW(parser.finish(), TruncatedInputError);
}

TEST(RadarConfigFile, ParsesEveryField) {
    const auto kv = KeyValueConfig::parse(R"(
        # test radar
        num_adc_samples = 64
        num_chirps = 32
        num_tx = 2
        num_rx = 4
        sample_rate = 5e6
        chirp_slope = 6e13
        carrier_freq = 77e9
        frame_rate = 10
        antenna_spacing = 0.5
        array_primary = 4
        array_secondary = 2
    )");
    const auto cfg = RadarConfig::from(kv);
    EXPECT_EQ(cfg.num_virtual(), 8u);
    EXPECT_EQ(cfg.primary_count(), 4u);
    EXPECT_DOUBLE_EQ(cfg.chirp_interval(), 2 * 64 / 5e6);
}

TEST(RadarConfigFile, RejectsMissingAndInvalidValues) {
    EXPECT_THROW(RadarConfig::from(KeyValueConfig::parse("num_adc_samples = 4")), ConfigError);
    EXPECT_THROW(RadarConfig::from(KeyValueConfig::parse(
                     "num_adc_samples=4\nnum_chirps=0\nnum_tx=1\nnum_rx=1\nsample_rate=1\nchirp_slope=1\n"
                     "carrier_freq=1\nframe_rate=1")),
                 ConfigError);
    EXPECT_THROW(RadarConfig::from(KeyValueConfig::parse(
                     "num_adc_samples=4\nnum_chirps=2\nnum_tx=1\nnum_rx=4\nsample_rate=1\nchirp_slope=1\n"
                     "carrier_freq=1\nframe_rate=1\narray_primary=3")),
                 ConfigError);
    EXPECT_THROW(KeyValueConfig::parse("a = 1\na = 2"), ConfigError);
    EXPECT_THROW(KeyValueConfig::parse("just words"), ConfigError);
}
