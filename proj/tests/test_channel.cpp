#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

namespace sr = swarmrelay;
using testsupport::point;
using testsupport::rel_err;

namespace {

const sr::ChannelParams params{};

sr::SwarmPlacement random_placement(sr::RandomStream& rng, std::size_t n) {
    sr::SwarmPlacement p;
    p.swarm = 0;
    for (std::size_t u = 0; u < n; ++u) {
        p.positions.push_back({rng.uniform(1950, 2050), rng.uniform(4450, 4550), rng.uniform(100, 120)});
        p.currents.push_back(rng.uniform());
    }
    return p;
}

}  // namespace

TEST(NoisePower, DefaultValue) {
    const double expected = testsupport::fixture("channel.json").at("noise_power_w").get<double>();
    EXPECT_LT(rel_err(sr::noise_power(-157.0, 2e6), expected), 1e-12);
    EXPECT_NEAR(sr::noise_power(-157.0, 2e6), 3.99e-13, 0.01e-13);
}

TEST(NoisePower, ZeroBandwidth) { EXPECT_EQ(sr::noise_power(-120.0, 0.0), 0.0); }

TEST(NoisePower, ThreeDecibelsDoubles) {
    EXPECT_NEAR(sr::noise_power(-157.0 + 10 * std::log10(2.0), 2e6) / sr::noise_power(-157.0, 2e6), 2.0, 1e-12);
    EXPECT_NEAR(sr::noise_power(-157.0 + 3.0103, 2e6) / sr::noise_power(-157.0, 2e6), 2.0, 1e-5);
}

TEST(LosProbability, VerticalLink) {
    const double p = sr::los_probability({{0, 0, 0}, {0, 0, 1000}}, 4.88, 0.43);
    EXPECT_NEAR(p, 1.0, 1e-10);
    EXPECT_LT(rel_err(p, testsupport::fixture("channel.json").at("p_los_vertical").get<double>()), 1e-12);
}

TEST(LosProbability, HorizontalLink) {
    const double p = sr::los_probability({{0, 0, 100}, {500, 0, 100}}, 4.88, 0.43);
    EXPECT_LT(rel_err(p, testsupport::fixture("channel.json").at("p_los_horizontal").get<double>()), 1e-12);
    EXPECT_NEAR(p, 1.0 / (1.0 + 4.88 * std::exp(0.43 * 4.88)), 1e-15);
    EXPECT_NEAR(p, 0.0245, 1e-4);
}

TEST(LosProbability, IncreasingInElevation) {
    double prev = -1.0;
    for (int deg = 0; deg <= 90; ++deg) {
        const double a = deg * sr::pi / 180.0;
        const double p = sr::los_probability({{0, 0, 0}, {1000 * std::cos(a), 0, 1000 * std::sin(a)}}, 4.88, 0.43);
        EXPECT_GT(p, prev);
        prev = p;
    }
}

TEST(LosProbability, ZeroDistanceIsDegenerate) {
    EXPECT_THROW(sr::los_probability({{1, 2, 3}, {1, 2, 3}}, 4.88, 0.43), sr::DegenerateError);
}

TEST(ChannelGain, FullLosLimit) {
    sr::ChannelParams c = params;
    c.env_m = 0.0;
    c.env_n = 1.0;
    const sr::LinkEndpoints e{{0, 0, 0}, {300, 400, 100}};
    ASSERT_EQ(sr::los_probability(e, c.env_m, c.env_n), 1.0);
    EXPECT_DOUBLE_EQ(sr::expected_channel_gain(e, c),
                     std::pow(sr::path_loss_constant(c) * e.distance(), -c.path_loss_exponent) / c.atten_los);
}

TEST(ChannelGain, DecreasingInDistance) {
    double prev = INFINITY;
    for (double d = 100; d <= 10000; d += 100) {
        const double h = sr::expected_channel_gain({{0, 0, 0}, {d * 0.8, 0, d * 0.6}}, params);
        EXPECT_LT(h, prev);
        prev = h;
    }
}

TEST(ChannelGain, VerticalThousandMetresMatchesOracle) {
    const double h = sr::expected_channel_gain({{0, 0, 0}, {0, 0, 1000}}, params);
    EXPECT_LT(rel_err(h, testsupport::fixture("channel.json").at("h_vertical_1000m").get<double>()), 1e-12);
}

TEST(LinkRate, DeviceLinkMatchesOracle) {
    const auto b = sr::device_link_budget({0, 0, 0}, {0, 0, 1000}, params);
    EXPECT_LT(rel_err(b.rate_bps, testsupport::fixture("channel.json").at("device_rate_vertical_1000m").get<double>()),
              1e-9);
}

TEST(LinkRate, RandomLinksMatchOracle) {
    const auto links = testsupport::fixture("channel.json").at("links");
    ASSERT_EQ(links.size(), 100u);
    for (const auto& l : links) {
        const sr::LinkEndpoints e{point(l.at("tx")), point(l.at("rx"))};
        EXPECT_LT(rel_err(sr::los_probability(e, params.env_m, params.env_n), l.at("p_los").get<double>()), 1e-9);
        sr::LinkBudget b;
        b.channel_gain = sr::expected_channel_gain(e, params);
        b.tx_power_w = l.at("power_w").get<double>();
        b.antenna_gain = l.at("antenna_gain").get<double>();
        b.noise_power_w = sr::noise_power(params);
        EXPECT_LT(rel_err(b.channel_gain, l.at("h").get<double>()), 1e-9);
        EXPECT_LT(rel_err(sr::shannon_rate(params.bandwidth_hz, b.snr()), l.at("rate_bps").get<double>()), 1e-9);
    }
}

TEST(LinkRate, ZeroCurrentsGiveZeroRate) {
    sr::ArrayState a{{{0, 0, 100}, {1, 0, 100}}, {0.0, 0.0}, params.wavelength_m()};
    const auto b = sr::swarm_link_budget(a, {1000, 0, 0}, params, sr::ClosedFormIntegral{});
    EXPECT_EQ(b.tx_power_w, 0.0);
    EXPECT_EQ(b.rate_bps, 0.0);
}

TEST(LinkRate, EightUnitCurrentsRadiateEightTimesPt) {
    std::vector<sr::Position3> pos;
    for (int u = 0; u < 8; ++u) pos.push_back({static_cast<double>(u), 0, 100});
    sr::ArrayState a{pos, std::vector<double>(8, 1.0), params.wavelength_m()};
    const auto b = sr::swarm_link_budget(a, {1000, 0, 0}, params, sr::ClosedFormIntegral{});
    EXPECT_DOUBLE_EQ(b.tx_power_w, 0.8);
}

TEST(CapacityBound, SingleUavEqualsShannonRate) {
    const sr::Position3 tx{0, 0, 100}, rx{1500, 200, 0};
    EXPECT_DOUBLE_EQ(sr::link_capacity_bound(1, tx, rx, params),
                     sr::device_link_budget(tx, rx, params).rate_bps);
}

TEST(CapacityBound, EightUavsGiveSixtyFourTimesSnr) {
    const sr::Position3 tx{0, 0, 100}, rx{1500, 200, 0};
    const double rho = params.tx_power_w * sr::expected_channel_gain({tx, rx}, params) / sr::noise_power(params);
    const double bound = sr::link_capacity_bound(8, tx, rx, params);
    EXPECT_LT(rel_err(std::exp2(bound / params.bandwidth_hz) - 1.0, 64.0 * rho), 1e-12);
}

TEST(CapacityBound, ZeroUavsIsRangeError) {
    EXPECT_THROW(sr::link_capacity_bound(0, {0, 0, 100}, {1, 0, 0}, params), sr::RangeError);
}

TEST(CapacityBound, RandomCandidatesNeverExceedBound) {
    sr::RandomStream rng(2024);
    const sr::Position3 rx{6000, 4500, 0};
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = random_placement(rng, 8);
        const double rate =
            sr::swarm_link_budget(p.array(params.wavelength_m()), rx, params, sr::ClosedFormIntegral{}).rate_bps;
        EXPECT_LE(rate, sr::link_capacity_bound(8, p.centroid(), rx, params));
    }
}

TEST(CapacityBound, QuantizeFloors) {
    EXPECT_EQ(sr::quantize_capacity(12.99), 12u);
    EXPECT_EQ(sr::quantize_capacity(-1.0), 0u);
    EXPECT_EQ(sr::quantize_capacity(0.0), 0u);
}
