#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "swarmrelay/core.hpp"

namespace swarmrelay {

using AdjacencyMatrix = std::vector<std::vector<bool>>;

/// Axis-aligned box a swarm may occupy.
struct SwarmRegion {
    Interval x;
    Interval y;
    Interval z;

    friend bool operator==(const SwarmRegion&, const SwarmRegion&) = default;

    [[nodiscard]] Position3 centroid() const { return {x.mid(), y.mid(), z.mid()}; }
    [[nodiscard]] bool contains(const Position3& p) const {
        return x.contains(p.x) && y.contains(p.y) && z.contains(p.z);
    }
    [[nodiscard]] Position3 clamp(const Position3& p) const {
        return {x.clamp(p.x), y.clamp(p.y), z.clamp(p.z)};
    }
};

/// Air-to-ground link and transmitter parameters. Defaults are the values used
/// for the reference scenarios (0.9 GHz carrier, 2 MHz bandwidth, -157 dBm/Hz
/// noise, 0.1 W per transmitter).
struct ChannelParams {
    double carrier_frequency_hz = 0.9e9;
    double path_loss_exponent = 2.0;
    double bandwidth_hz = 2.0e6;
    double noise_psd_dbm_per_hz = -157.0;
    double env_m = 4.88;
    double env_n = 0.43;
    double atten_los = 0.977;
    double atten_nlos = 0.00974;
    double tx_power_w = 0.1;
    double array_efficiency = 1.0;

    friend bool operator==(const ChannelParams&, const ChannelParams&) = default;

    /// Derived from the carrier frequency, c / f_c.
    [[nodiscard]] double wavelength_m() const { return speed_of_light_mps / carrier_frequency_hz; }
};

/// Rotary-wing propulsion parameters. The defaults are generic small-quadrotor
/// configuration values, not measured constants. `energy_budget_j` has no
/// default and must be supplied by every scenario.
struct EnergyParams {
    double blade_profile_power_w = 79.86;
    double induced_power_w = 88.63;
    double tip_speed_mps = 120.0;
    double mean_induced_velocity_mps = 4.03;
    double fuselage_drag_ratio = 0.6;
    double air_density = 1.225;
    double rotor_solidity = 0.05;
    double rotor_disc_area_m2 = 0.503;
    double uav_mass_kg = 2.0;
    double gravity_mps2 = 9.80665;
    double energy_budget_j = 0.0;
    double cruise_speed_mps = 10.0;

    friend bool operator==(const EnergyParams&, const EnergyParams&) = default;
};

/// Weights of the four objective parts (rate gap, RMS gap, congestion, energy).
struct PenaltyWeights {
    double alpha1 = 1.0;
    double alpha2 = 1.0;
    double alpha3 = 2.0e7;
    double alpha4 = 2.0e7;

    friend bool operator==(const PenaltyWeights&, const PenaltyWeights&) = default;
};

struct SwarmSpec {
    SwarmRegion region;
    std::size_t uav_count = 0;
    std::vector<Position3> initial_positions;

    friend bool operator==(const SwarmSpec&, const SwarmSpec&) = default;

    [[nodiscard]] Position3 reference_point() const {
        return initial_positions.empty() ? region.centroid() : swarmrelay::centroid(initial_positions);
    }
};

/// Full world description. Node indices: device 0, swarms 1..N_S, access
/// point N_S + 1.
struct Scenario {
    Position3 device;
    Position3 access_point;
    std::vector<SwarmSpec> swarms;
    AdjacencyMatrix adjacency;
    ChannelParams channel;
    EnergyParams energy;
    double min_separation_m = 0.5;
    PenaltyWeights penalties;
    std::uint64_t seed = 0;

    friend bool operator==(const Scenario&, const Scenario&) = default;

    [[nodiscard]] std::size_t swarm_count() const { return swarms.size(); }
    [[nodiscard]] std::size_t node_count() const { return swarms.size() + 2; }
    [[nodiscard]] std::size_t sink() const { return swarms.size() + 1; }

    /// Pairwise UAV spacing required inside a swarm: max(D_min, lambda / 2).
    [[nodiscard]] double required_separation_m() const {
        return std::max(min_separation_m, 0.5 * channel.wavelength_m());
    }

    /// Reference point of a graph node (device, swarm centroid, access point).
    [[nodiscard]] Position3 node_position(std::size_t node) const {
        if (node == 0) return device;
        if (node == sink()) return access_point;
        return swarms.at(node - 1).reference_point();
    }
};

struct Violation {
    std::string entity;
    std::string message;

    friend bool operator==(const Violation&, const Violation&) = default;
};

using ValidationReport = std::vector<Violation>;

namespace detail {

// Relative slack on separation checks so that positions placed exactly at the
// required spacing by floating-point arithmetic still count as feasible.
inline constexpr double separation_tolerance = 1e-9;

inline bool separation_ok(double dist, double required) {
    return dist >= required * (1.0 - separation_tolerance);
}

inline std::string swarm_name(std::size_t s) { return "swarm[" + std::to_string(s) + "]"; }

}  // namespace detail

/// Default formation: UAVs evenly spaced on a horizontal circle around the
/// region centroid with neighbor chord twice the required separation, so the
/// formation centroid coincides with the region centroid.
inline std::vector<Position3> default_formation(const SwarmRegion& region, std::size_t uav_count,
                                                double separation) {
    std::vector<Position3> out;
    const Position3 c = region.centroid();
    if (uav_count == 1) {
        out.push_back(c);
        return out;
    }
    const double radius =
        uav_count == 2 ? separation : separation / std::sin(pi / static_cast<double>(uav_count));
    for (std::size_t u = 0; u < uav_count; ++u) {
        const double a = 2.0 * pi * static_cast<double>(u) / static_cast<double>(uav_count);
        out.push_back({c.x + radius * std::cos(a), c.y + radius * std::sin(a), c.z});
    }
    return out;
}

/// Lists every violated scenario invariant. Empty iff the scenario is valid.
inline ValidationReport validate_scenario(const Scenario& s) {
    ValidationReport report;
    auto add = [&](std::string entity, std::string msg) {
        report.push_back({std::move(entity), std::move(msg)});
    };

    if (!s.device.finite()) add("device", "position is not finite");
    if (!s.access_point.finite()) add("access_point", "position is not finite");

    const auto& ch = s.channel;
    if (!(ch.carrier_frequency_hz > 0.0) || !std::isfinite(ch.carrier_frequency_hz))
        add("channel.carrier_frequency_hz", "must be > 0");
    if (!(ch.bandwidth_hz > 0.0) || !std::isfinite(ch.bandwidth_hz)) add("channel.bandwidth_hz", "must be > 0");
    if (!(ch.path_loss_exponent >= 1.0) || !std::isfinite(ch.path_loss_exponent))
        add("channel.path_loss_exponent", "must be >= 1");
    if (!std::isfinite(ch.noise_psd_dbm_per_hz)) add("channel.noise_psd_dbm_per_hz", "must be finite");
    if (!std::isfinite(ch.env_m) || !std::isfinite(ch.env_n)) add("channel.los_env", "must be finite");
    if (!(ch.atten_los > 0.0) || !std::isfinite(ch.atten_los)) add("channel.atten_los", "must be > 0");
    if (!(ch.atten_nlos > 0.0) || !std::isfinite(ch.atten_nlos)) add("channel.atten_nlos", "must be > 0");
    if (!(ch.tx_power_w > 0.0) || !std::isfinite(ch.tx_power_w)) add("channel.tx_power_w", "must be > 0");
    if (!(ch.array_efficiency > 0.0 && ch.array_efficiency <= 1.0))
        add("channel.array_efficiency", "must lie in (0, 1]");

    const auto& e = s.energy;
    const std::pair<const char*, double> energy_fields[] = {
        {"blade_profile_power_w", e.blade_profile_power_w},
        {"induced_power_w", e.induced_power_w},
        {"tip_speed_mps", e.tip_speed_mps},
        {"mean_induced_velocity_mps", e.mean_induced_velocity_mps},
        {"fuselage_drag_ratio", e.fuselage_drag_ratio},
        {"air_density", e.air_density},
        {"rotor_solidity", e.rotor_solidity},
        {"rotor_disc_area_m2", e.rotor_disc_area_m2},
        {"uav_mass_kg", e.uav_mass_kg},
        {"gravity_mps2", e.gravity_mps2},
        {"energy_budget_j", e.energy_budget_j},
        {"cruise_speed_mps", e.cruise_speed_mps},
    };
    for (const auto& [name, value] : energy_fields)
        if (!(value > 0.0) || !std::isfinite(value)) add(std::string("energy.") + name, "must be > 0");

    if (!(s.min_separation_m >= 0.0) || !std::isfinite(s.min_separation_m))
        add("min_separation_m", "must be >= 0");
    const auto& w = s.penalties;
    for (double a : {w.alpha1, w.alpha2, w.alpha3, w.alpha4})
        if (!(a >= 0.0) || !std::isfinite(a)) {
            add("penalties", "weights must be finite and >= 0");
            break;
        }

    const double sep = s.required_separation_m();
    for (std::size_t si = 0; si < s.swarms.size(); ++si) {
        const auto& sw = s.swarms[si];
        const auto name = detail::swarm_name(si);
        if (sw.uav_count == 0) add(name, "swarm has no UAVs");
        const auto& r = sw.region;
        if (!r.x.valid()) add(name + ".region.x", "interval is empty or not finite");
        if (!r.y.valid()) add(name + ".region.y", "interval is empty or not finite");
        if (!r.z.valid()) add(name + ".region.z", "interval is empty or not finite");
        else if (!(r.z.min > 0.0)) add(name + ".region.z", "altitude lower bound must be > 0");
        if (sw.initial_positions.size() != sw.uav_count) {
            add(name + ".initial_positions", "expected " + std::to_string(sw.uav_count) + " positions, got " +
                                                 std::to_string(sw.initial_positions.size()));
        }
        for (std::size_t u = 0; u < sw.initial_positions.size(); ++u) {
            const auto& p = sw.initial_positions[u];
            const auto uav = name + ".uav[" + std::to_string(u) + "]";
            if (!p.finite()) add(uav, "position is not finite");
            else if (!r.contains(p)) add(uav, "position outside swarm region");
        }
        for (std::size_t a = 0; a < sw.initial_positions.size(); ++a)
            for (std::size_t b = a + 1; b < sw.initial_positions.size(); ++b) {
                const double d = distance(sw.initial_positions[a], sw.initial_positions[b]);
                if (!detail::separation_ok(d, sep)) {
                    std::ostringstream msg;
                    msg.precision(17);
                    msg << "separation " << d << " m below required " << sep << " m";
                    add(name + ".uav[" + std::to_string(a) + "]-uav[" + std::to_string(b) + "]", msg.str());
                }
            }
    }

    const std::size_t n = s.node_count();
    if (s.adjacency.size() != n) {
        add("adjacency", "expected " + std::to_string(n) + " rows, got " + std::to_string(s.adjacency.size()));
    } else {
        bool shape_ok = true;
        for (std::size_t i = 0; i < n; ++i)
            if (s.adjacency[i].size() != n) {
                add("adjacency[" + std::to_string(i) + "]", "row length must be " + std::to_string(n));
                shape_ok = false;
            }
        if (shape_ok) {
            for (std::size_t i = 0; i < n; ++i) {
                if (s.adjacency[i][i]) add("adjacency[" + std::to_string(i) + "]", "diagonal must be zero");
                for (std::size_t j = i + 1; j < n; ++j)
                    if (s.adjacency[i][j] != s.adjacency[j][i])
                        add("adjacency[" + std::to_string(i) + "][" + std::to_string(j) + "]",
                            "matrix is not symmetric");
            }
        }
    }
    return report;
}

/// Range-based connectivity: nodes i != j are linked iff their reference
/// points lie within `max_range_m` of each other. Swarm reference points are
/// the centroids of their initial formations.
inline AdjacencyMatrix build_adjacency(const Scenario& s, double max_range_m) {
    if (!(max_range_m > 0.0)) throw RangeError("build_adjacency: max_range_m must be > 0");
    const std::size_t n = s.node_count();
    AdjacencyMatrix adj(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool linked = distance(s.node_position(i), s.node_position(j)) <= max_range_m;
            adj[i][j] = adj[j][i] = linked;
        }
    return adj;
}

// ---------------------------------------------------------------------------
// Scenario documents
// ---------------------------------------------------------------------------

namespace detail {

using nlohmann::json;

class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw SchemaError(path_ + ": expected an object");
    }

    [[nodiscard]] bool has(const char* key) const { return j_.contains(key); }

    const json& required(const char* key) {
        seen_.insert(key);
        if (!j_.contains(key)) throw SchemaError(path_ + ": missing required field '" + key + "'");
        return j_.at(key);
    }

    const json* optional(const char* key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    double number(const char* key, double fallback) {
        const json* v = optional(key);
        return v ? as_number(*v, child(key)) : fallback;
    }

    double required_number(const char* key) { return as_number(required(key), child(key)); }

    [[nodiscard]] std::string child(const char* key) const { return path_ + "." + key; }

    void reject_unknown() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw SchemaError(path_ + ": unknown field '" + it.key() + "'");
    }

    static double as_number(const json& v, const std::string& path) {
        if (!v.is_number()) throw SchemaError(path + ": expected a number");
        return v.get<double>();
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline Position3 read_position(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 3) throw SchemaError(path + ": expected [x, y, z]");
    Position3 p{ObjectReader::as_number(v[0], path + "[0]"), ObjectReader::as_number(v[1], path + "[1]"),
                ObjectReader::as_number(v[2], path + "[2]")};
    if (!p.finite()) throw RangeError(path + ": position must be finite");
    return p;
}

inline Interval read_interval(const json& v, const std::string& path) {
    if (!v.is_array() || v.size() != 2) throw SchemaError(path + ": expected [min, max]");
    return {ObjectReader::as_number(v[0], path + "[0]"), ObjectReader::as_number(v[1], path + "[1]")};
}

inline json write_position(const Position3& p) { return json::array({p.x, p.y, p.z}); }
inline json write_interval(const Interval& i) { return json::array({i.min, i.max}); }

}  // namespace detail

/// Parses a scenario document (JSON data model). Throws ParseError for
/// malformed text, SchemaError for missing/unknown/mistyped fields and
/// RangeError when a value violates a scenario invariant.
inline Scenario load_scenario(const std::string& text) {
    using detail::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("scenario: ") + e.what());
    }

    detail::ObjectReader root(doc, "scenario");
    Scenario s;
    s.device = detail::read_position(root.required("device"), "scenario.device");
    s.access_point = detail::read_position(root.required("access_point"), "scenario.access_point");
    s.min_separation_m = root.number("min_separation_m", s.min_separation_m);

    if (const json* ch = root.optional("channel")) {
        detail::ObjectReader r(*ch, "scenario.channel");
        auto& c = s.channel;
        c.carrier_frequency_hz = r.number("carrier_frequency_hz", c.carrier_frequency_hz);
        c.path_loss_exponent = r.number("path_loss_exponent", c.path_loss_exponent);
        c.bandwidth_hz = r.number("bandwidth_hz", c.bandwidth_hz);
        c.noise_psd_dbm_per_hz = r.number("noise_psd_dbm_per_hz", c.noise_psd_dbm_per_hz);
        c.env_m = r.number("los_env_m", c.env_m);
        c.env_n = r.number("los_env_n", c.env_n);
        c.atten_los = r.number("atten_los", c.atten_los);
        c.atten_nlos = r.number("atten_nlos", c.atten_nlos);
        c.tx_power_w = r.number("tx_power_w", c.tx_power_w);
        c.array_efficiency = r.number("array_efficiency", c.array_efficiency);
        r.reject_unknown();
    }

    {
        detail::ObjectReader r(root.required("energy"), "scenario.energy");
        auto& e = s.energy;
        e.blade_profile_power_w = r.number("blade_profile_power_w", e.blade_profile_power_w);
        e.induced_power_w = r.number("induced_power_w", e.induced_power_w);
        e.tip_speed_mps = r.number("tip_speed_mps", e.tip_speed_mps);
        e.mean_induced_velocity_mps = r.number("mean_induced_velocity_mps", e.mean_induced_velocity_mps);
        e.fuselage_drag_ratio = r.number("fuselage_drag_ratio", e.fuselage_drag_ratio);
        e.air_density = r.number("air_density", e.air_density);
        e.rotor_solidity = r.number("rotor_solidity", e.rotor_solidity);
        e.rotor_disc_area_m2 = r.number("rotor_disc_area_m2", e.rotor_disc_area_m2);
        e.uav_mass_kg = r.number("uav_mass_kg", e.uav_mass_kg);
        e.gravity_mps2 = r.number("gravity_mps2", e.gravity_mps2);
        e.cruise_speed_mps = r.number("cruise_speed_mps", e.cruise_speed_mps);
        e.energy_budget_j = r.required_number("energy_budget_j");
        r.reject_unknown();
    }

    if (const json* pw = root.optional("penalties")) {
        detail::ObjectReader r(*pw, "scenario.penalties");
        auto& p = s.penalties;
        p.alpha1 = r.number("alpha1", p.alpha1);
        p.alpha2 = r.number("alpha2", p.alpha2);
        p.alpha3 = r.number("alpha3", p.alpha3);
        p.alpha4 = r.number("alpha4", p.alpha4);
        r.reject_unknown();
    }

    if (const json* sd = root.optional("seed")) {
        if (!sd->is_number_unsigned() && !(sd->is_number_integer() && sd->get<std::int64_t>() >= 0))
            throw SchemaError("scenario.seed: expected a non-negative integer");
        s.seed = sd->get<std::uint64_t>();
    }

    const json& swarms = root.required("swarms");
    if (!swarms.is_array()) throw SchemaError("scenario.swarms: expected an array");
    const double sep = s.required_separation_m();
    for (std::size_t i = 0; i < swarms.size(); ++i) {
        const std::string path = "scenario.swarms[" + std::to_string(i) + "]";
        detail::ObjectReader r(swarms[i], path);
        SwarmSpec sw;
        {
            detail::ObjectReader rr(r.required("region"), path + ".region");
            sw.region.x = detail::read_interval(rr.required("x"), path + ".region.x");
            sw.region.y = detail::read_interval(rr.required("y"), path + ".region.y");
            sw.region.z = detail::read_interval(rr.required("z"), path + ".region.z");
            rr.reject_unknown();
        }
        const json& count = r.required("uav_count");
        if (!count.is_number_integer() || count.get<std::int64_t>() < 0)
            throw SchemaError(path + ".uav_count: expected a non-negative integer");
        sw.uav_count = count.get<std::size_t>();
        if (const json* ip = r.optional("initial_positions")) {
            if (!ip->is_array()) throw SchemaError(path + ".initial_positions: expected an array");
            for (std::size_t u = 0; u < ip->size(); ++u)
                sw.initial_positions.push_back(
                    detail::read_position((*ip)[u], path + ".initial_positions[" + std::to_string(u) + "]"));
        } else if (sw.region.x.valid() && sw.region.y.valid() && sw.region.z.valid()) {
            sw.initial_positions = default_formation(sw.region, sw.uav_count, sep);
        }
        r.reject_unknown();
        s.swarms.push_back(std::move(sw));
    }

    const json* adj = root.optional("adjacency");
    const json* range = root.optional("auto_adjacency_range_m");
    if (adj && range) throw SchemaError("scenario: give either 'adjacency' or 'auto_adjacency_range_m', not both");
    if (!adj && !range) throw SchemaError("scenario: missing required field 'adjacency' (or 'auto_adjacency_range_m')");
    if (adj) {
        if (!adj->is_array()) throw SchemaError("scenario.adjacency: expected a matrix");
        for (std::size_t i = 0; i < adj->size(); ++i) {
            const json& row = (*adj)[i];
            if (!row.is_array()) throw SchemaError("scenario.adjacency: expected rows of 0/1");
            std::vector<bool> out;
            for (const auto& v : row) {
                if (!v.is_number_integer() || (v.get<int>() != 0 && v.get<int>() != 1))
                    throw SchemaError("scenario.adjacency: entries must be 0 or 1");
                out.push_back(v.get<int>() == 1);
            }
            s.adjacency.push_back(std::move(out));
        }
    }
    root.reject_unknown();

    if (range) {
        const double r = detail::ObjectReader::as_number(*range, "scenario.auto_adjacency_range_m");
        s.adjacency = build_adjacency(s, r);
    }

    const auto report = validate_scenario(s);
    if (!report.empty()) {
        std::string msg = "scenario: " + report.front().entity + ": " + report.front().message;
        if (report.size() > 1) msg += " (+" + std::to_string(report.size() - 1) + " more)";
        throw RangeError(msg);
    }
    return s;
}

inline Scenario load_scenario_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open scenario file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_scenario(buf.str());
}

/// Canonical document for a scenario; every optional field is written out.
inline nlohmann::json scenario_to_json(const Scenario& s) {
    using nlohmann::json;
    json j;
    j["device"] = detail::write_position(s.device);
    j["access_point"] = detail::write_position(s.access_point);
    json swarms = json::array();
    for (const auto& sw : s.swarms) {
        json js;
        js["region"] = {{"x", detail::write_interval(sw.region.x)},
                        {"y", detail::write_interval(sw.region.y)},
                        {"z", detail::write_interval(sw.region.z)}};
        js["uav_count"] = sw.uav_count;
        json pos = json::array();
        for (const auto& p : sw.initial_positions) pos.push_back(detail::write_position(p));
        js["initial_positions"] = pos;
        swarms.push_back(js);
    }
    j["swarms"] = swarms;
    json adj = json::array();
    for (const auto& row : s.adjacency) {
        json r = json::array();
        for (bool b : row) r.push_back(b ? 1 : 0);
        adj.push_back(r);
    }
    j["adjacency"] = adj;
    const auto& c = s.channel;
    j["channel"] = {{"carrier_frequency_hz", c.carrier_frequency_hz},
                    {"path_loss_exponent", c.path_loss_exponent},
                    {"bandwidth_hz", c.bandwidth_hz},
                    {"noise_psd_dbm_per_hz", c.noise_psd_dbm_per_hz},
                    {"los_env_m", c.env_m},
                    {"los_env_n", c.env_n},
                    {"atten_los", c.atten_los},
                    {"atten_nlos", c.atten_nlos},
                    {"tx_power_w", c.tx_power_w},
                    {"array_efficiency", c.array_efficiency}};
    const auto& e = s.energy;
    j["energy"] = {{"blade_profile_power_w", e.blade_profile_power_w},
                   {"induced_power_w", e.induced_power_w},
                   {"tip_speed_mps", e.tip_speed_mps},
                   {"mean_induced_velocity_mps", e.mean_induced_velocity_mps},
                   {"fuselage_drag_ratio", e.fuselage_drag_ratio},
                   {"air_density", e.air_density},
                   {"rotor_solidity", e.rotor_solidity},
                   {"rotor_disc_area_m2", e.rotor_disc_area_m2},
                   {"uav_mass_kg", e.uav_mass_kg},
                   {"gravity_mps2", e.gravity_mps2},
                   {"energy_budget_j", e.energy_budget_j},
                   {"cruise_speed_mps", e.cruise_speed_mps}};
    j["min_separation_m"] = s.min_separation_m;
    j["penalties"] = {{"alpha1", s.penalties.alpha1},
                      {"alpha2", s.penalties.alpha2},
                      {"alpha3", s.penalties.alpha3},
                      {"alpha4", s.penalties.alpha4}};
    j["seed"] = s.seed;
    return j;
}

inline std::string serialize_scenario(const Scenario& s) { return scenario_to_json(s).dump(2) + "\n"; }

}  // namespace swarmrelay
