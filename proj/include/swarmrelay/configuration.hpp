#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "swarmrelay/beamforming.hpp"
#include "swarmrelay/core.hpp"
#include "swarmrelay/scenario.hpp"

namespace swarmrelay {

/// Placement and excitation of one swarm. `swarm` indexes Scenario::swarms
/// (zero-based; the graph node is swarm + 1).
struct SwarmPlacement {
    std::size_t swarm = 0;
    std::vector<Position3> positions;
    std::vector<double> currents;

    friend bool operator==(const SwarmPlacement&, const SwarmPlacement&) = default;

    [[nodiscard]] std::size_t size() const { return positions.size(); }
    [[nodiscard]] std::size_t node() const { return swarm + 1; }
    [[nodiscard]] Position3 centroid() const { return swarmrelay::centroid(positions); }

    [[nodiscard]] ArrayState array(double wavelength_m) const { return {positions, currents, wavelength_m}; }
};

/// Decision variables: placements of the participating swarms, ordered by
/// swarm index.
struct SwarmConfiguration {
    std::vector<SwarmPlacement> swarms;

    friend bool operator==(const SwarmConfiguration&, const SwarmConfiguration&) = default;

    [[nodiscard]] const SwarmPlacement* find(std::size_t swarm) const {
        for (const auto& p : swarms)
            if (p.swarm == swarm) return &p;
        return nullptr;
    }

    [[nodiscard]] std::size_t uav_count() const {
        std::size_t n = 0;
        for (const auto& p : swarms) n += p.size();
        return n;
    }
};

/// Initial positions of the given swarms with all currents at 1.
inline SwarmConfiguration initial_configuration(const Scenario& s, const std::vector<std::size_t>& swarm_indices) {
    SwarmConfiguration c;
    for (std::size_t k : swarm_indices) {
        const auto& spec = s.swarms.at(k);
        c.swarms.push_back({k, spec.initial_positions, std::vector<double>(spec.initial_positions.size(), 1.0)});
    }
    return c;
}

inline SwarmConfiguration initial_configuration(const Scenario& s) {
    std::vector<std::size_t> all(s.swarms.size());
    for (std::size_t k = 0; k < all.size(); ++k) all[k] = k;
    return initial_configuration(s, all);
}

/// Constraint check on one configuration: currents in [0, 1], positions in
/// their region, pairwise spacing at least the required separation.
inline ValidationReport check_configuration(const SwarmConfiguration& c, const Scenario& s) {
    ValidationReport out;
    const double sep = s.required_separation_m();
    for (const auto& p : c.swarms) {
        const std::string name = "config.swarm[" + std::to_string(p.swarm) + "]";
        if (p.swarm >= s.swarms.size()) {
            out.push_back({name, "unknown swarm index"});
            continue;
        }
        const auto& spec = s.swarms[p.swarm];
        if (p.positions.size() != spec.uav_count || p.currents.size() != spec.uav_count) {
            out.push_back({name, "UAV count mismatch"});
            continue;
        }
        for (std::size_t u = 0; u < p.size(); ++u) {
            if (!(p.currents[u] >= 0.0 && p.currents[u] <= 1.0)) out.push_back({name, "current out of [0, 1]"});
            if (!spec.region.contains(p.positions[u])) out.push_back({name, "position outside region"});
            for (std::size_t v = u + 1; v < p.size(); ++v)
                if (!detail::separation_ok(distance(p.positions[u], p.positions[v]), sep))
                    out.push_back({name, "separation below minimum"});
        }
    }
    return out;
}

}  // namespace swarmrelay
