#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "swarmrelay/configuration.hpp"
#include "swarmrelay/core.hpp"
#include "swarmrelay/scenario.hpp"

namespace swarmrelay {

/// Rotary-wing propulsion power at horizontal speed v:
/// blade profile + induced + parasite terms.
inline double propulsion_power(double v, const EnergyParams& p) {
    if (!(v >= 0.0)) throw RangeError("propulsion_power: speed must be >= 0");
    const double v2 = v * v;
    const double vm2 = p.mean_induced_velocity_mps * p.mean_induced_velocity_mps;
    const double profile = p.blade_profile_power_w * (1.0 + 3.0 * v2 / (p.tip_speed_mps * p.tip_speed_mps));
    const double induced = p.induced_power_w * std::sqrt(std::sqrt(1.0 + v2 * v2 / (4.0 * vm2 * vm2)) - v2 / (2.0 * vm2));
    const double parasite = 0.5 * p.fuselage_drag_ratio * p.air_density * p.rotor_solidity * p.rotor_disc_area_m2 * v2 * v;
    return profile + induced + parasite;
}

struct Waypoint {
    Position3 position;
    double time_s = 0.0;
};

struct Trajectory {
    std::vector<Waypoint> waypoints;
    double start_speed_mps = 0.0;
    double end_speed_mps = 0.0;

    [[nodiscard]] bool valid() const {
        if (waypoints.size() < 2) return false;
        for (std::size_t i = 1; i < waypoints.size(); ++i)
            if (!(waypoints[i].time_s > waypoints[i - 1].time_s)) return false;
        return true;
    }
};

/// Flight energy along a trajectory: power integral with constant speed per
/// segment, plus kinetic and potential energy differences.
inline double trajectory_energy(const Trajectory& t, const EnergyParams& p) {
    if (!t.valid()) throw RangeError("trajectory_energy: need >= 2 waypoints with increasing times");
    double e = 0.0;
    for (std::size_t i = 1; i < t.waypoints.size(); ++i) {
        const auto& a = t.waypoints[i - 1];
        const auto& b = t.waypoints[i];
        const double dt = b.time_s - a.time_s;
        e += propulsion_power(distance(a.position, b.position) / dt, p) * dt;
    }
    const double m = p.uav_mass_kg;
    e += 0.5 * m * (t.end_speed_mps * t.end_speed_mps - t.start_speed_mps * t.start_speed_mps);
    e += m * p.gravity_mps2 * (t.waypoints.back().position.z - t.waypoints.front().position.z);
    return e;
}

/// Energy of a straight rest-to-rest relocation at cruise speed. A zero
/// displacement costs nothing.
inline double relocation_energy(const Position3& from, const Position3& to, const EnergyParams& p) {
    const double d = distance(from, to);
    if (d == 0.0) return 0.0;
    return trajectory_energy({{{from, 0.0}, {to, d / p.cruise_speed_mps}}, 0.0, 0.0}, p);
}

/// Total relocation energy of every UAV from `initial` to `target`.
inline double system_energy(const SwarmConfiguration& initial, const SwarmConfiguration& target, const EnergyParams& p) {
    if (initial.swarms.size() != target.swarms.size())
        throw DimensionError("system_energy: swarm count mismatch");
    double e = 0.0;
    for (std::size_t k = 0; k < target.swarms.size(); ++k) {
        const auto& a = initial.swarms[k];
        const auto& b = target.swarms[k];
        if (a.swarm != b.swarm || a.size() != b.size()) throw DimensionError("system_energy: UAV count mismatch");
        for (std::size_t u = 0; u < b.size(); ++u) e += relocation_energy(a.positions[u], b.positions[u], p);
    }
    return e;
}

}  // namespace swarmrelay
