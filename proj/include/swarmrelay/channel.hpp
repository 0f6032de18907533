#pragma once

#include <cmath>
#include <cstdint>

#include "swarmrelay/beamforming.hpp"
#include "swarmrelay/core.hpp"
#include "swarmrelay/scenario.hpp"

namespace swarmrelay {

/// Noise power in watts for a PSD in dBm/Hz over `bandwidth_hz`.
inline double noise_power(double psd_dbm_per_hz, double bandwidth_hz) {
    if (bandwidth_hz < 0.0) throw RangeError("noise_power: bandwidth must be >= 0");
    return std::pow(10.0, (psd_dbm_per_hz - 30.0) / 10.0) * bandwidth_hz;
}

inline double noise_power(const ChannelParams& c) { return noise_power(c.noise_psd_dbm_per_hz, c.bandwidth_hz); }

/// Free-space path loss constant K_o = 4 pi f_c / c.
inline double path_loss_constant(const ChannelParams& c) { return 4.0 * pi * c.carrier_frequency_hz / speed_of_light_mps; }

/// Transmit and receive points of one link.
struct LinkEndpoints {
    Position3 tx_point;
    Position3 rx_point;

    [[nodiscard]] double distance() const { return swarmrelay::distance(tx_point, rx_point); }
    [[nodiscard]] double vertical_distance() const { return std::abs(tx_point.z - rx_point.z); }
};

/// Elevation-dependent LoS probability 1 / (1 + m exp(-n (elevation_deg - m))).
inline double los_probability(const LinkEndpoints& e, double env_m, double env_n) {
    const double d = e.distance();
    if (!(d > 0.0)) throw DegenerateError("los_probability: zero link distance");
    const double ratio = std::min(1.0, e.vertical_distance() / d);
    const double elevation_deg = 180.0 / pi * std::asin(ratio);
    return 1.0 / (1.0 + env_m * std::exp(-env_n * (elevation_deg - env_m)));
}

/// Expected channel power gain (K_o d)^-alpha / (P_los eta_los + P_nlos eta_nlos).
inline double expected_channel_gain(const LinkEndpoints& e, const ChannelParams& c) {
    const double d = e.distance();
    if (!(d > 0.0)) throw DegenerateError("expected_channel_gain: zero link distance");
    const double p_los = los_probability(e, c.env_m, c.env_n);
    const double attenuation = p_los * c.atten_los + (1.0 - p_los) * c.atten_nlos;
    return std::pow(path_loss_constant(c) * d, -c.path_loss_exponent) / attenuation;
}

/// Shannon rate B log2(1 + snr).
inline double shannon_rate(double bandwidth_hz, double snr) { return bandwidth_hz * std::log2(1.0 + snr); }

struct LinkBudget {
    double channel_gain = 0.0;
    double tx_power_w = 0.0;
    double antenna_gain = 0.0;
    double noise_power_w = 0.0;
    double rate_bps = 0.0;

    [[nodiscard]] double snr() const { return tx_power_w * antenna_gain * channel_gain / noise_power_w; }
};

/// Ground device transmitter: unit antenna gain, power p_t.
inline LinkBudget device_link_budget(const Position3& device, const Position3& rx_point, const ChannelParams& c) {
    LinkBudget b;
    b.channel_gain = expected_channel_gain({device, rx_point}, c);
    b.tx_power_w = c.tx_power_w;
    b.antenna_gain = 1.0;
    b.noise_power_w = noise_power(c);
    b.rate_bps = shannon_rate(c.bandwidth_hz, b.snr());
    return b;
}

/// Swarm transmitter: the array radiates sum(I_u^2) p_t from its centroid
/// with directional gain toward `rx_point`.
inline LinkBudget swarm_link_budget(const ArrayState& array, const Position3& rx_point, const ChannelParams& c,
                                    const GainIntegration& integration) {
    if (!array.valid()) throw RangeError("swarm_link_budget: invalid array state");
    const Position3 tx = centroid(array.positions);
    LinkBudget b;
    b.channel_gain = expected_channel_gain({tx, rx_point}, c);
    b.tx_power_w = array.power_weight() * c.tx_power_w;
    b.noise_power_w = noise_power(c);
    if (b.tx_power_w == 0.0) {
        b.antenna_gain = 0.0;
        b.rate_bps = 0.0;
        return b;
    }
    b.antenna_gain = antenna_gain(array, direction_between(tx, rx_point), integration, c.array_efficiency);
    b.rate_bps = shannon_rate(c.bandwidth_hz, b.snr());
    return b;
}

/// Ideal-beamforming rate bound B log2(1 + N^2 p_t h / sigma^2). The ground
/// device counts as a single element (N = 1).
inline double link_capacity_bound(std::size_t n_uavs, const Position3& tx_point, const Position3& rx_point,
                                  const ChannelParams& c) {
    if (n_uavs == 0) throw RangeError("link_capacity_bound: transmitter needs at least one element");
    const double n = static_cast<double>(n_uavs);
    const double h = expected_channel_gain({tx_point, rx_point}, c);
    return shannon_rate(c.bandwidth_hz, n * n * c.tx_power_w * h / noise_power(c));
}

/// Capacities enter the flow problem as whole bits per second.
inline std::uint64_t quantize_capacity(double rate_bps) {
    if (!(rate_bps > 0.0)) return 0;
    return static_cast<std::uint64_t>(std::floor(rate_bps));
}

}  // namespace swarmrelay
