#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "json.hpp"
#include "swarmrelay/beamforming.hpp"
#include "swarmrelay/channel.hpp"
#include "swarmrelay/configuration.hpp"
#include "swarmrelay/core.hpp"
#include "swarmrelay/energy.hpp"
#include "swarmrelay/netflow.hpp"
#include "swarmrelay/random.hpp"
#include "swarmrelay/scenario.hpp"

namespace swarmrelay {

using CandidateVector = std::vector<double>;

// ---------------------------------------------------------------------------
// Objective

struct ObjectiveBreakdown {
    double part1 = 0.0;
    double part2 = 0.0;
    double part3 = 0.0;
    double part4 = 0.0;
    double total = 0.0;
    std::vector<double> link_rates;  // same order as OptimizedNetwork::links
    std::size_t congested_links = 0;
    double energy_j = 0.0;

    friend bool operator==(const ObjectiveBreakdown&, const ObjectiveBreakdown&) = default;
};

/// Combines per-link achieved rates with the expected rates of the plan.
inline ObjectiveBreakdown combine_objective(const std::vector<double>& rates, const std::vector<double>& expected,
                                            double energy_j, double energy_budget_j, const PenaltyWeights& w) {
    if (rates.size() != expected.size()) throw DimensionError("objective: one rate per link");
    ObjectiveBreakdown b;
    b.link_rates = rates;
    b.energy_j = energy_j;
    double abs_sum = 0.0, sq_sum = 0.0;
    for (std::size_t l = 0; l < rates.size(); ++l) {
        const double d = rates[l] - expected[l];
        abs_sum += std::abs(d);
        sq_sum += d * d;
        if (rates[l] < expected[l]) ++b.congested_links;
    }
    b.part1 = w.alpha1 * abs_sum;
    b.part2 = rates.empty() ? 0.0 : w.alpha2 * std::sqrt(sq_sum / static_cast<double>(rates.size()));
    b.part3 = w.alpha3 * static_cast<double>(b.congested_links);
    b.part4 = energy_j > energy_budget_j ? w.alpha4 : 0.0;
    b.total = b.part1 + b.part2 + b.part3 + b.part4;
    return b;
}

/// Reference point of a graph node under a candidate configuration: the
/// candidate centroid for configured swarms, the scenario point otherwise.
inline Position3 node_point(const Scenario& s, const SwarmConfiguration& c, std::size_t node) {
    if (node != 0 && node != s.sink())
        if (const auto* p = c.find(node - 1)) return p->centroid();
    return s.node_position(node);
}

/// Achieved rate of every link of `net` under configuration `c`.
inline std::vector<double> achieved_link_rates(const SwarmConfiguration& c, const OptimizedNetwork& net,
                                               const Scenario& s, const GainIntegration& integration) {
    std::vector<double> rates;
    rates.reserve(net.links.size());
    for (const auto& l : net.links) {
        const Position3 rx = node_point(s, c, l.to);
        if (l.from == 0) {
            rates.push_back(device_link_budget(s.device, rx, s.channel).rate_bps);
            continue;
        }
        const auto* p = c.find(l.from - 1);
        if (!p) throw DimensionError("objective: configuration lacks swarm " + std::to_string(l.from - 1));
        rates.push_back(swarm_link_budget(p->array(s.channel.wavelength_m()), rx, s.channel, integration).rate_bps);
    }
    return rates;
}

/// Four-part penalty objective of one candidate.
inline ObjectiveBreakdown evaluate_objective(const SwarmConfiguration& cand, const OptimizedNetwork& net,
                                             const Scenario& s, const SwarmConfiguration& initial,
                                             const GainIntegration& integration = ClosedFormIntegral{}) {
    const auto participating = net.participating_swarms();
    if (cand.swarms.size() != participating.size()) throw DimensionError("objective: configuration/network swarm mismatch");
    for (std::size_t k = 0; k < participating.size(); ++k)
        if (cand.swarms[k].swarm != participating[k]) throw DimensionError("objective: configuration/network swarm mismatch");
    std::vector<double> expected;
    for (const auto& l : net.links) expected.push_back(static_cast<double>(l.expected_rate));
    const auto rates = achieved_link_rates(cand, net, s, integration);
    return combine_objective(rates, expected, system_energy(initial, cand, s.energy), s.energy.energy_budget_j,
                             s.penalties);
}

// ---------------------------------------------------------------------------
// Encoding and repair

/// Coordinate layout: swarm-major, UAV-minor, (x, y, z, I) per UAV.
struct CandidateLayout {
    std::vector<std::size_t> swarms;
    std::vector<std::size_t> uav_counts;

    static CandidateLayout for_swarms(const Scenario& s, const std::vector<std::size_t>& swarm_indices) {
        CandidateLayout l;
        for (std::size_t k : swarm_indices) {
            l.swarms.push_back(k);
            l.uav_counts.push_back(s.swarms.at(k).uav_count);
        }
        return l;
    }

    [[nodiscard]] std::size_t dimension() const {
        return 4 * std::accumulate(uav_counts.begin(), uav_counts.end(), std::size_t{0});
    }
};

inline CandidateVector encode(const SwarmConfiguration& c) {
    CandidateVector v;
    for (const auto& p : c.swarms) {
        if (p.currents.size() != p.positions.size()) throw DimensionError("encode: one current per UAV");
        for (std::size_t u = 0; u < p.size(); ++u) {
            v.push_back(p.positions[u].x);
            v.push_back(p.positions[u].y);
            v.push_back(p.positions[u].z);
            v.push_back(p.currents[u]);
        }
    }
    return v;
}

inline SwarmConfiguration decode(std::span<const double> v, const CandidateLayout& layout) {
    if (v.size() != layout.dimension()) throw DimensionError("decode: vector length does not match layout");
    SwarmConfiguration c;
    std::size_t i = 0;
    for (std::size_t k = 0; k < layout.swarms.size(); ++k) {
        SwarmPlacement p{layout.swarms[k], {}, {}};
        for (std::size_t u = 0; u < layout.uav_counts[k]; ++u, i += 4) {
            p.positions.push_back({v[i], v[i + 1], v[i + 2]});
            p.currents.push_back(v[i + 3]);
        }
        c.swarms.push_back(std::move(p));
    }
    return c;
}

struct Bounds {
    std::vector<double> lower;
    std::vector<double> upper;
};

inline Bounds candidate_bounds(const Scenario& s, const CandidateLayout& layout) {
    Bounds b;
    for (std::size_t k = 0; k < layout.swarms.size(); ++k) {
        const auto& r = s.swarms.at(layout.swarms[k]).region;
        for (std::size_t u = 0; u < layout.uav_counts[k]; ++u) {
            b.lower.insert(b.lower.end(), {r.x.min, r.y.min, r.z.min, 0.0});
            b.upper.insert(b.upper.end(), {r.x.max, r.y.max, r.z.max, 1.0});
        }
    }
    return b;
}

inline constexpr int repair_sweeps = 50;

namespace detail {

inline bool clears(const Position3& p, const std::vector<Position3>& placed, double sep) {
    for (const auto& q : placed)
        if (!separation_ok(distance(p, q), sep)) return false;
    return true;
}

// Nearest point of the lattice with the given spacing anchored at the
// region's lower corner that keeps `sep` from every placed point. Searches
// cube shells of growing radius around p; empty when the region has no
// such point.
inline std::optional<Position3> nearest_free_site(const SwarmRegion& region, const Position3& p,
                                                  const std::vector<Position3>& placed, double sep, double spacing) {
    const auto count = [&](const Interval& i) { return static_cast<long>(std::floor(i.width() / spacing)) + 1; };
    const long nx = count(region.x), ny = count(region.y), nz = count(region.z);
    const auto index = [&](double v, const Interval& i, long n) {
        return std::clamp(static_cast<long>(std::lround((v - i.min) / spacing)), 0L, n - 1);
    };
    const long cx = index(p.x, region.x, nx), cy = index(p.y, region.y, ny), cz = index(p.z, region.z, nz);
    const long max_r = std::max({nx, ny, nz});
    for (long r = 0; r <= max_r; ++r) {
        std::optional<Position3> best;
        double best_d = std::numeric_limits<double>::infinity();
        for (long i = std::max(0L, cx - r); i <= std::min(nx - 1, cx + r); ++i)
            for (long j = std::max(0L, cy - r); j <= std::min(ny - 1, cy + r); ++j)
                for (long l = std::max(0L, cz - r); l <= std::min(nz - 1, cz + r); ++l) {
                    if (std::max({std::abs(i - cx), std::abs(j - cy), std::abs(l - cz)}) != r) continue;
                    const Position3 q{region.x.min + spacing * static_cast<double>(i),
                                      region.y.min + spacing * static_cast<double>(j),
                                      region.z.min + spacing * static_cast<double>(l)};
                    const double d = distance(p, q);
                    if (d < best_d && clears(q, placed, sep)) {
                        best_d = d;
                        best = q;
                    }
                }
        if (best) return best;
    }
    return std::nullopt;
}

}  // namespace detail

/// Clamps currents and positions, then pushes apart UAV pairs closer than
/// the required separation along their joining axis. If 50 sweeps leave a
/// conflict, conflicting UAVs move to the nearest free lattice site of the
/// region. Throws FeasibilityError when the region cannot hold the swarm.
inline void repair(CandidateVector& v, const Scenario& s, const CandidateLayout& layout) {
    if (v.size() != layout.dimension()) throw DimensionError("repair: vector length does not match layout");
    const double sep = s.required_separation_m();
    const double target = sep * (1.0 + 1e-7);
    std::size_t base = 0;
    for (std::size_t k = 0; k < layout.swarms.size(); ++k) {
        const auto& region = s.swarms.at(layout.swarms[k]).region;
        const std::size_t n = layout.uav_counts[k];
        auto pos = [&](std::size_t u) { return Position3{v[base + 4 * u], v[base + 4 * u + 1], v[base + 4 * u + 2]}; };
        auto set = [&](std::size_t u, const Position3& p) {
            const Position3 q = region.clamp(p);
            v[base + 4 * u] = q.x;
            v[base + 4 * u + 1] = q.y;
            v[base + 4 * u + 2] = q.z;
        };
        for (std::size_t u = 0; u < n; ++u) {
            set(u, pos(u));
            double& i = v[base + 4 * u + 3];
            i = std::isfinite(i) ? std::clamp(i, 0.0, 1.0) : 0.0;
        }
        bool feasible = false;
        for (int sweep = 0; sweep <= repair_sweeps && !feasible; ++sweep) {
            feasible = true;
            for (std::size_t a = 0; a < n; ++a)
                for (std::size_t b = a + 1; b < n; ++b) {
                    const Position3 pa = pos(a), pb = pos(b);
                    const Position3 d = pb - pa;
                    const double dist = d.norm();
                    if (detail::separation_ok(dist, sep)) continue;
                    feasible = false;
                    if (sweep == repair_sweeps) continue;
                    Position3 dir;
                    if (dist > 1e-12) {
                        dir = d * (1.0 / dist);
                    } else {
                        const std::size_t axis = (a + b + static_cast<std::size_t>(sweep)) % 3;
                        dir = {axis == 0 ? 1.0 : 0.0, axis == 1 ? 1.0 : 0.0, axis == 2 ? 1.0 : 0.0};
                    }
                    const double push = 0.5 * (target - dist);
                    Position3 na = region.clamp(pa - dir * push);
                    Position3 nb = region.clamp(pb + dir * push);
                    // A UAV held back by the region boundary hands its share to the other.
                    nb = region.clamp(nb + dir * std::max(0.0, target - (nb - na).dot(dir)));
                    na = region.clamp(na - dir * std::max(0.0, target - (nb - na).dot(dir)));
                    set(a, na);
                    set(b, nb);
                }
        }
        if (!feasible) {
            std::vector<Position3> placed;
            for (std::size_t u = 0; u < n; ++u) {
                const Position3 p = pos(u);
                if (detail::clears(p, placed, sep)) {
                    placed.push_back(p);
                    continue;
                }
                const auto q = detail::nearest_free_site(region, p, placed, sep, target);
                if (!q)
                    throw FeasibilityError("repair: cannot separate UAVs of swarm " +
                                           std::to_string(layout.swarms[k]) + " inside its region");
                set(u, *q);
                placed.push_back(*q);
            }
        }
        base += 4 * n;
    }
}

// ---------------------------------------------------------------------------
// Optimizer configuration

enum class Algorithm { DMPSO, PSO, DE, GA, ABC, SSA };

/// Coordinate frame of the diffusion step. BestCentered: origin at the global
/// best, unit = population standard deviation per coordinate. MeanCentered:
/// origin at the population mean, same unit. UnitBox: each coordinate mapped
/// to [0, 1] by its bounds.
enum class DiffusionFrame { BestCentered, MeanCentered, UnitBox };

inline std::string_view to_string(DiffusionFrame f) {
    switch (f) {
        case DiffusionFrame::BestCentered: return "best-centered";
        case DiffusionFrame::MeanCentered: return "mean-centered";
        case DiffusionFrame::UnitBox: return "unit-box";
    }
    return "?";
}

inline constexpr Algorithm all_algorithms[] = {Algorithm::DMPSO, Algorithm::PSO, Algorithm::DE,
                                               Algorithm::GA,    Algorithm::ABC, Algorithm::SSA};

inline std::string_view to_string(Algorithm a) {
    switch (a) {
        case Algorithm::DMPSO: return "DM-PSO";
        case Algorithm::PSO: return "PSO";
        case Algorithm::DE: return "DE";
        case Algorithm::GA: return "GA";
        case Algorithm::ABC: return "ABC";
        case Algorithm::SSA: return "SSA";
    }
    return "?";
}

inline Algorithm parse_algorithm(std::string_view name) {
    for (auto a : all_algorithms)
        if (to_string(a) == name) return a;
    if (name == "DMPSO") return Algorithm::DMPSO;
    throw ParseError("unknown algorithm: " + std::string(name));
}

struct OptimizerConfig {
    std::size_t population = 100;
    std::size_t iterations = 500;
    double inertia = 1.0;
    double c1 = 1.5;
    double c2 = 2.0;
    std::size_t neighbors = 10;
    double p_max = 0.3;
    double p_min = 0.1;
    double alpha_s = 0.9;
    DiffusionFrame diffusion_frame = DiffusionFrame::MeanCentered;
    std::uint64_t seed = 0;
    Algorithm algorithm = Algorithm::DMPSO;
    /// Per-coordinate velocity limit as a fraction of the coordinate range,
    /// decaying geometrically from start to end over the run. start <= 0
    /// disables the limit.
    double velocity_limit_start = 0.2;
    double velocity_limit_end = 1e-4;
    /// DE
    double de_f = 0.5;
    double de_cr = 0.9;
    /// GA
    double ga_crossover = 0.9;
    double ga_mutation_scale = 0.1;
    /// ABC
    std::size_t abc_limit = 50;
    unsigned threads = 1;

    void validate() const {
        if (population < 2) throw RangeError("optimizer: population must be >= 2");
        if (!(p_min >= 0.0 && p_min <= p_max && p_max <= 1.0)) throw RangeError("optimizer: need 0 <= p_min <= p_max <= 1");
        if (neighbors >= population) throw RangeError("optimizer: neighbor count must be below the population");
        if (!(alpha_s >= 0.0 && alpha_s <= 1.0)) throw RangeError("optimizer: alpha_s must lie in [0, 1]");
        if (algorithm == Algorithm::DE && population < 4) throw RangeError("optimizer: DE needs population >= 4");
        if (threads == 0) throw RangeError("optimizer: threads must be >= 1");
    }
};

inline nlohmann::json to_json(const OptimizerConfig& c) {
    return {{"algorithm", std::string(to_string(c.algorithm))},
            {"population", c.population},
            {"iterations", c.iterations},
            {"inertia", c.inertia},
            {"c1", c.c1},
            {"c2", c.c2},
            {"neighbors", c.neighbors},
            {"p_max", c.p_max},
            {"p_min", c.p_min},
            {"alpha_s", c.alpha_s},
            {"diffusion_frame", std::string(to_string(c.diffusion_frame))},
            {"seed", c.seed},
            {"velocity_limit_start", c.velocity_limit_start},
            {"velocity_limit_end", c.velocity_limit_end}};
}

// ---------------------------------------------------------------------------
// Search problems

/// A bounded minimization problem. `evaluate` must be safe to call
/// concurrently; `repair` maps any vector onto the feasible set.
template <class P>
concept SearchProblem = requires(const P& p, std::span<const double> x, CandidateVector& v) {
    { p.dimension() } -> std::convertible_to<std::size_t>;
    { p.bounds() } -> std::convertible_to<const Bounds&>;
    { p.evaluate(x) } -> std::convertible_to<double>;
    p.repair(v);
};

/// Sum of squares on [-5, 5]^dimension, used as a self-test.
struct SphereProblem {
    Bounds box;

    explicit SphereProblem(std::size_t dimension = 16, double half_width = 5.0)
        : box{std::vector<double>(dimension, -half_width), std::vector<double>(dimension, half_width)} {}

    [[nodiscard]] std::size_t dimension() const { return box.lower.size(); }
    [[nodiscard]] const Bounds& bounds() const { return box; }
    [[nodiscard]] double evaluate(std::span<const double> x) const {
        double s = 0.0;
        for (double v : x) s += v * v;
        return s;
    }
    void repair(CandidateVector& v) const {
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::clamp(v[i], box.lower[i], box.upper[i]);
    }
};

/// Stage-two placement problem over the participating swarms of a plan.
class PlacementProblem {
public:
    PlacementProblem(const Scenario& s, const OptimizedNetwork& net, GainIntegration integration = ClosedFormIntegral{})
        : scenario_(&s),
          network_(&net),
          integration_(integration),
          layout_(CandidateLayout::for_swarms(s, net.participating_swarms())),
          bounds_(candidate_bounds(s, layout_)),
          initial_(initial_configuration(s, net.participating_swarms())) {}

    [[nodiscard]] std::size_t dimension() const { return layout_.dimension(); }
    [[nodiscard]] const Bounds& bounds() const { return bounds_; }
    [[nodiscard]] const CandidateLayout& layout() const { return layout_; }
    [[nodiscard]] const SwarmConfiguration& initial() const { return initial_; }
    [[nodiscard]] const Scenario& scenario() const { return *scenario_; }
    [[nodiscard]] const OptimizedNetwork& network() const { return *network_; }
    [[nodiscard]] const GainIntegration& integration() const { return integration_; }

    [[nodiscard]] ObjectiveBreakdown breakdown(std::span<const double> x) const {
        return evaluate_objective(decode(x, layout_), *network_, *scenario_, initial_, integration_);
    }
    [[nodiscard]] double evaluate(std::span<const double> x) const { return breakdown(x).total; }
    void repair(CandidateVector& v) const { swarmrelay::repair(v, *scenario_, layout_); }

private:
    const Scenario* scenario_;
    const OptimizedNetwork* network_;
    GainIntegration integration_;
    CandidateLayout layout_;
    Bounds bounds_;
    SwarmConfiguration initial_;
};

// ---------------------------------------------------------------------------
// PSO building blocks

struct AgentState {
    CandidateVector position;
    CandidateVector velocity;
    CandidateVector best_position;
    double best_value = std::numeric_limits<double>::infinity();
};

/// Velocity and position update of one agent with given r1, r2; no repair.
inline void update_agent(AgentState& a, std::span<const double> gbest, double inertia, double c1, double c2, double r1,
                         double r2) {
    for (std::size_t d = 0; d < a.position.size(); ++d) {
        a.velocity[d] = inertia * a.velocity[d] + c1 * r1 * (a.best_position[d] - a.position[d]) +
                        c2 * r2 * (gbest[d] - a.position[d]);
        a.position[d] += a.velocity[d];
    }
}

/// Random stream phases.
enum class StreamPhase : std::uint64_t { Init = 1, Velocity = 2, Diffusion = 3, Variation = 4, Selection = 5, Scout = 6 };

inline RandomStream phase_stream(std::uint64_t seed, StreamPhase phase, std::uint64_t iteration, std::uint64_t agent) {
    return RandomStream::derived(seed, {static_cast<std::uint64_t>(phase), iteration, agent});
}

/// Velocity limit per coordinate at iteration t (1-based); empty when off.
inline std::vector<double> velocity_limit(const Bounds& b, const OptimizerConfig& cfg, std::size_t t) {
    if (!(cfg.velocity_limit_start > 0.0)) return {};
    const double frac = cfg.iterations == 0 ? 0.0 : static_cast<double>(t - 1) / static_cast<double>(cfg.iterations);
    const double scale =
        cfg.velocity_limit_start * std::pow(cfg.velocity_limit_end / cfg.velocity_limit_start, frac);
    std::vector<double> out(b.lower.size());
    for (std::size_t d = 0; d < out.size(); ++d) out[d] = scale * (b.upper[d] - b.lower[d]);
    return out;
}

/// One PSO move for every agent at iteration t: fresh scalar r1, r2 per
/// agent, velocity limit, bound handling (velocity zeroed on coordinates
/// that leave the box) and repair.
template <SearchProblem P>
void pso_step(std::vector<AgentState>& agents, std::span<const double> gbest, const OptimizerConfig& cfg,
              const P& problem, std::size_t t) {
    const auto& b = problem.bounds();
    const auto vmax = velocity_limit(b, cfg, t);
    for (std::size_t i = 0; i < agents.size(); ++i) {
        auto rng = phase_stream(cfg.seed, StreamPhase::Velocity, t, i);
        const double r1 = rng.uniform(), r2 = rng.uniform();
        auto& a = agents[i];
        if (vmax.empty()) {
            update_agent(a, gbest, cfg.inertia, cfg.c1, cfg.c2, r1, r2);
        } else {
            for (std::size_t d = 0; d < a.position.size(); ++d) {
                double v = cfg.inertia * a.velocity[d] + cfg.c1 * r1 * (a.best_position[d] - a.position[d]) +
                           cfg.c2 * r2 * (gbest[d] - a.position[d]);
                a.velocity[d] = std::clamp(v, -vmax[d], vmax[d]);
                a.position[d] += a.velocity[d];
            }
        }
        for (std::size_t d = 0; d < a.position.size(); ++d)
            if (a.position[d] < b.lower[d] || a.position[d] > b.upper[d]) a.velocity[d] = 0.0;
        problem.repair(a.position);
    }
}

/// Mean distance from each point to its `neighbors` nearest other points.
inline std::vector<double> crowding_distances(const std::vector<CandidateVector>& positions, std::size_t neighbors) {
    const std::size_t n = positions.size();
    if (neighbors >= n) throw RangeError("crowding_distances: neighbor count must be below the population");
    std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t d = 0; d < positions[i].size(); ++d) {
                const double x = positions[i][d] - positions[j][d];
                s += x * x;
            }
            dist[i][j] = dist[j][i] = std::sqrt(s);
        }
    std::vector<double> cd(n, 0.0);
    std::vector<double> row;
    for (std::size_t i = 0; i < n; ++i) {
        row.clear();
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) row.push_back(dist[i][j]);
        std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(neighbors), row.end());
        double s = 0.0;
        for (std::size_t k = 0; k < neighbors; ++k) s += row[k];
        cd[i] = neighbors == 0 ? 0.0 : s / static_cast<double>(neighbors);
    }
    return cd;
}

/// Number of agents to perturb at iteration t.
inline std::size_t perturb_count(std::size_t t, const OptimizerConfig& cfg) {
    const double frac = cfg.iterations == 0 ? 0.0 : static_cast<double>(t) / static_cast<double>(cfg.iterations);
    const double p = cfg.p_max - (cfg.p_max - cfg.p_min) * frac;
    return static_cast<std::size_t>(std::floor(static_cast<double>(cfg.population) * p + 1e-9));
}

/// Indices of the `count` smallest crowding distances, ties by index.
inline std::vector<std::size_t> select_crowded(const std::vector<double>& cd, std::size_t count) {
    std::vector<std::size_t> idx(cd.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return cd[a] < cd[b]; });
    idx.resize(std::min(count, idx.size()));
    return idx;
}

/// One forward diffusion step x <- sqrt(alpha) x + sqrt(1 - alpha) z with
/// z standard normal per coordinate.
inline void diffuse(std::span<double> x, double alpha, RandomStream& rng) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw RangeError("diffuse: alpha must lie in [0, 1]");
    if (alpha == 1.0) return;
    const double a = std::sqrt(alpha), b = std::sqrt(1.0 - alpha);
    for (double& v : x) v = a * v + b * rng.normal();
}

/// Diffusion of the selected agents: coordinates are mapped into the
/// configured frame, diffused, mapped back and repaired.
template <SearchProblem P>
void diffuse_positions(std::vector<AgentState>& agents, const std::vector<std::size_t>& selected,
                       std::span<const double> gbest, const OptimizerConfig& cfg, const P& problem, std::size_t t) {
    if (selected.empty() || cfg.alpha_s == 1.0) return;
    const std::size_t dim = problem.dimension();
    const auto& b = problem.bounds();
    std::vector<double> origin(dim, 0.0), scale(dim, 0.0);
    for (std::size_t d = 0; d < dim; ++d) {
        if (cfg.diffusion_frame == DiffusionFrame::UnitBox) {
            origin[d] = b.lower[d];
            scale[d] = b.upper[d] - b.lower[d];
            continue;
        }
        double mean = 0.0;
        for (const auto& a : agents) mean += a.position[d];
        mean /= static_cast<double>(agents.size());
        double var = 0.0;
        for (const auto& a : agents) var += (a.position[d] - mean) * (a.position[d] - mean);
        scale[d] = std::sqrt(var / static_cast<double>(agents.size()));
        origin[d] = cfg.diffusion_frame == DiffusionFrame::BestCentered ? gbest[d] : mean;
    }
    std::vector<double> u(dim);
    for (std::size_t i : selected) {
        auto rng = phase_stream(cfg.seed, StreamPhase::Diffusion, t, i);
        auto& x = agents[i].position;
        for (std::size_t d = 0; d < dim; ++d) u[d] = scale[d] > 0.0 ? (x[d] - origin[d]) / scale[d] : 0.0;
        diffuse(u, cfg.alpha_s, rng);
        for (std::size_t d = 0; d < dim; ++d)
            if (scale[d] > 0.0) x[d] = origin[d] + u[d] * scale[d];
        problem.repair(x);
    }
}

// ---------------------------------------------------------------------------
// Driver

struct SearchResult {
    CandidateVector best_position;
    double best_value = std::numeric_limits<double>::infinity();
    std::vector<double> trace;  // best value after initialization and after each iteration
    std::size_t evaluations = 0;
};

namespace detail {

template <SearchProblem P>
std::vector<double> evaluate_all(const P& problem, const std::vector<CandidateVector>& xs, unsigned threads) {
    std::vector<double> out(xs.size());
    const std::size_t n = xs.size();
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) out[i] = problem.evaluate(xs[i]);
        return out;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) out[i] = problem.evaluate(xs[i]);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return out;
}

template <SearchProblem P>
CandidateVector random_point(const P& problem, RandomStream& rng) {
    const auto& b = problem.bounds();
    CandidateVector x(problem.dimension());
    for (std::size_t d = 0; d < x.size(); ++d) x[d] = rng.uniform(b.lower[d], b.upper[d]);
    problem.repair(x);
    return x;
}

template <SearchProblem P>
std::vector<CandidateVector> initial_population(const P& problem, const OptimizerConfig& cfg, std::size_t count) {
    std::vector<CandidateVector> xs;
    for (std::size_t i = 0; i < count; ++i) {
        auto rng = phase_stream(cfg.seed, StreamPhase::Init, 0, i);
        xs.push_back(random_point(problem, rng));
    }
    return xs;
}

// Tracks the best point seen; strict improvement only, earliest index wins.
struct Incumbent {
    CandidateVector position;
    double value = std::numeric_limits<double>::infinity();

    void offer(const std::vector<CandidateVector>& xs, const std::vector<double>& fs) {
        for (std::size_t i = 0; i < xs.size(); ++i)
            if (fs[i] < value) {
                value = fs[i];
                position = xs[i];
            }
    }
};

template <SearchProblem P>
SearchResult run_pso(const P& problem, const OptimizerConfig& cfg, bool diffusion) {
    SearchResult res;
    std::vector<AgentState> agents(cfg.population);
    auto xs = initial_population(problem, cfg, cfg.population);
    auto fs = evaluate_all(problem, xs, cfg.threads);
    res.evaluations += xs.size();
    Incumbent g;
    for (std::size_t i = 0; i < agents.size(); ++i) {
        agents[i] = {xs[i], CandidateVector(xs[i].size(), 0.0), xs[i], fs[i]};
    }
    g.offer(xs, fs);
    res.trace.push_back(g.value);
    for (std::size_t t = 1; t <= cfg.iterations; ++t) {
        pso_step(agents, g.position, cfg, problem, t);
        for (std::size_t i = 0; i < agents.size(); ++i) xs[i] = agents[i].position;
        fs = evaluate_all(problem, xs, cfg.threads);
        res.evaluations += xs.size();
        for (std::size_t i = 0; i < agents.size(); ++i)
            if (fs[i] < agents[i].best_value) {
                agents[i].best_value = fs[i];
                agents[i].best_position = xs[i];
            }
        g.offer(xs, fs);
        if (diffusion) {
            const std::size_t np = perturb_count(t, cfg);
            if (np > 0) {
                const auto cd = crowding_distances(xs, cfg.neighbors);
                diffuse_positions(agents, select_crowded(cd, np), g.position, cfg, problem, t);
            }
        }
        res.trace.push_back(g.value);
    }
    res.best_position = g.position;
    res.best_value = g.value;
    return res;
}

// DE/rand/1/bin with greedy replacement.
template <SearchProblem P>
SearchResult run_de(const P& problem, const OptimizerConfig& cfg) {
    SearchResult res;
    const std::size_t n = cfg.population, dim = problem.dimension();
    auto xs = initial_population(problem, cfg, n);
    auto fs = evaluate_all(problem, xs, cfg.threads);
    res.evaluations += n;
    Incumbent g;
    g.offer(xs, fs);
    res.trace.push_back(g.value);
    std::vector<CandidateVector> trials(n);
    for (std::size_t t = 1; t <= cfg.iterations; ++t) {
        for (std::size_t i = 0; i < n; ++i) {
            auto rng = phase_stream(cfg.seed, StreamPhase::Variation, t, i);
            std::size_t r[3];
            for (int k = 0; k < 3; ++k) {
                do {
                    r[k] = rng.index(n);
                } while (r[k] == i || (k > 0 && r[k] == r[0]) || (k > 1 && r[k] == r[1]));
            }
            const std::size_t jrand = dim == 0 ? 0 : rng.index(dim);
            trials[i] = xs[i];
            for (std::size_t d = 0; d < dim; ++d)
                if (rng.uniform() < cfg.de_cr || d == jrand)
                    trials[i][d] = xs[r[0]][d] + cfg.de_f * (xs[r[1]][d] - xs[r[2]][d]);
            problem.repair(trials[i]);
        }
        const auto tf = evaluate_all(problem, trials, cfg.threads);
        res.evaluations += n;
        for (std::size_t i = 0; i < n; ++i)
            if (tf[i] <= fs[i]) {
                xs[i] = trials[i];
                fs[i] = tf[i];
            }
        g.offer(xs, fs);
        res.trace.push_back(g.value);
    }
    res.best_position = g.position;
    res.best_value = g.value;
    return res;
}

// Generational GA: one elite, binary tournaments, blend crossover, Gaussian
// mutation with per-gene rate 1/dim.
template <SearchProblem P>
SearchResult run_ga(const P& problem, const OptimizerConfig& cfg) {
    SearchResult res;
    const std::size_t n = cfg.population, dim = problem.dimension();
    const auto& b = problem.bounds();
    auto xs = initial_population(problem, cfg, n);
    auto fs = evaluate_all(problem, xs, cfg.threads);
    res.evaluations += n;
    Incumbent g;
    g.offer(xs, fs);
    res.trace.push_back(g.value);
    for (std::size_t t = 1; t <= cfg.iterations; ++t) {
        std::size_t elite = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (fs[i] < fs[elite]) elite = i;
        std::vector<CandidateVector> next{xs[elite]};
        for (std::size_t i = 1; i < n; ++i) {
            auto rng = phase_stream(cfg.seed, StreamPhase::Variation, t, i);
            auto tournament = [&] {
                const std::size_t a = rng.index(n), c = rng.index(n);
                return fs[c] < fs[a] ? c : a;
            };
            const auto& p1 = xs[tournament()];
            const auto& p2 = xs[tournament()];
            CandidateVector child = p1;
            if (rng.uniform() < cfg.ga_crossover)
                for (std::size_t d = 0; d < dim; ++d) {
                    const double lo = std::min(p1[d], p2[d]), hi = std::max(p1[d], p2[d]), span = hi - lo;
                    child[d] = rng.uniform(lo - 0.5 * span, hi + 0.5 * span);
                }
            for (std::size_t d = 0; d < dim; ++d)
                if (rng.uniform() < 1.0 / static_cast<double>(dim))
                    child[d] += rng.normal(0.0, cfg.ga_mutation_scale * (b.upper[d] - b.lower[d]));
            problem.repair(child);
            next.push_back(std::move(child));
        }
        std::vector<CandidateVector> offspring(next.begin() + 1, next.end());
        const auto of = evaluate_all(problem, offspring, cfg.threads);
        res.evaluations += offspring.size();
        const double elite_value = fs[elite];
        xs = std::move(next);
        fs.assign(1, elite_value);
        fs.insert(fs.end(), of.begin(), of.end());
        g.offer(xs, fs);
        res.trace.push_back(g.value);
    }
    res.best_position = g.position;
    res.best_value = g.value;
    return res;
}

inline double abc_fitness(double f) { return f >= 0.0 ? 1.0 / (1.0 + f) : 1.0 + std::abs(f); }

// Artificial bee colony: population/2 food sources, employed, onlooker and
// scout phases with an abandonment limit.
template <SearchProblem P>
SearchResult run_abc(const P& problem, const OptimizerConfig& cfg) {
    SearchResult res;
    const std::size_t sn = std::max<std::size_t>(2, cfg.population / 2), dim = problem.dimension();
    auto xs = initial_population(problem, cfg, sn);
    auto fs = evaluate_all(problem, xs, cfg.threads);
    res.evaluations += sn;
    std::vector<std::size_t> trials(sn, 0);
    Incumbent g;
    g.offer(xs, fs);
    res.trace.push_back(g.value);
    auto neighbor = [&](std::size_t i, RandomStream& rng) {
        std::size_t k;
        do {
            k = rng.index(sn);
        } while (k == i);
        CandidateVector v = xs[i];
        if (dim > 0) {
            const std::size_t j = rng.index(dim);
            v[j] = xs[i][j] + rng.uniform(-1.0, 1.0) * (xs[i][j] - xs[k][j]);
        }
        problem.repair(v);
        return v;
    };
    auto greedy = [&](const std::vector<std::size_t>& who, const std::vector<CandidateVector>& cand) {
        const auto cf = evaluate_all(problem, cand, cfg.threads);
        res.evaluations += cand.size();
        for (std::size_t m = 0; m < who.size(); ++m) {
            const std::size_t i = who[m];
            if (cf[m] < fs[i]) {
                xs[i] = cand[m];
                fs[i] = cf[m];
                trials[i] = 0;
            } else {
                ++trials[i];
            }
        }
    };
    for (std::size_t t = 1; t <= cfg.iterations; ++t) {
        std::vector<std::size_t> who(sn);
        std::vector<CandidateVector> cand(sn);
        for (std::size_t i = 0; i < sn; ++i) {
            auto rng = phase_stream(cfg.seed, StreamPhase::Variation, t, i);
            who[i] = i;
            cand[i] = neighbor(i, rng);
        }
        greedy(who, cand);
        std::vector<double> fit(sn);
        double total = 0.0;
        for (std::size_t i = 0; i < sn; ++i) total += fit[i] = abc_fitness(fs[i]);
        for (std::size_t m = 0; m < sn; ++m) {
            auto rng = phase_stream(cfg.seed, StreamPhase::Selection, t, m);
            double r = rng.uniform() * total;
            std::size_t i = 0;
            while (i + 1 < sn && r >= fit[i]) r -= fit[i++];
            who[m] = i;
            cand[m] = neighbor(i, rng);
        }
        greedy(who, cand);
        g.offer(xs, fs);
        std::size_t worst = 0;
        for (std::size_t i = 1; i < sn; ++i)
            if (trials[i] > trials[worst]) worst = i;
        if (trials[worst] > cfg.abc_limit) {
            auto rng = phase_stream(cfg.seed, StreamPhase::Scout, t, worst);
            xs[worst] = random_point(problem, rng);
            fs[worst] = problem.evaluate(xs[worst]);
            ++res.evaluations;
            trials[worst] = 0;
            g.offer(xs, fs);
        }
        res.trace.push_back(g.value);
    }
    res.best_position = g.position;
    res.best_value = g.value;
    return res;
}

// Salp swarm: leader moves around the food source with a decaying step,
// followers average with their predecessor.
template <SearchProblem P>
SearchResult run_ssa(const P& problem, const OptimizerConfig& cfg) {
    SearchResult res;
    const std::size_t n = cfg.population, dim = problem.dimension();
    const auto& b = problem.bounds();
    auto xs = initial_population(problem, cfg, n);
    auto fs = evaluate_all(problem, xs, cfg.threads);
    res.evaluations += n;
    Incumbent g;
    g.offer(xs, fs);
    res.trace.push_back(g.value);
    for (std::size_t t = 1; t <= cfg.iterations; ++t) {
        const double ratio = 4.0 * static_cast<double>(t) / static_cast<double>(cfg.iterations);
        const double c1 = 2.0 * std::exp(-ratio * ratio);
        auto rng = phase_stream(cfg.seed, StreamPhase::Variation, t, 0);
        for (std::size_t d = 0; d < dim; ++d) {
            const double c2 = rng.uniform(), c3 = rng.uniform();
            const double step = c1 * ((b.upper[d] - b.lower[d]) * c2 + b.lower[d]);
            xs[0][d] = c3 >= 0.5 ? g.position[d] + step : g.position[d] - step;
        }
        problem.repair(xs[0]);
        for (std::size_t i = 1; i < n; ++i) {
            for (std::size_t d = 0; d < dim; ++d) xs[i][d] = 0.5 * (xs[i][d] + xs[i - 1][d]);
            problem.repair(xs[i]);
        }
        fs = evaluate_all(problem, xs, cfg.threads);
        res.evaluations += n;
        g.offer(xs, fs);
        res.trace.push_back(g.value);
    }
    res.best_position = g.position;
    res.best_value = g.value;
    return res;
}

}  // namespace detail

/// Minimizes `problem` with the configured algorithm. Deterministic in
/// cfg.seed for any thread count.
template <SearchProblem P>
SearchResult minimize(const P& problem, const OptimizerConfig& cfg) {
    cfg.validate();
    switch (cfg.algorithm) {
        case Algorithm::DMPSO: return detail::run_pso(problem, cfg, true);
        case Algorithm::PSO: return detail::run_pso(problem, cfg, false);
        case Algorithm::DE: return detail::run_de(problem, cfg);
        case Algorithm::GA: return detail::run_ga(problem, cfg);
        case Algorithm::ABC: return detail::run_abc(problem, cfg);
        case Algorithm::SSA: return detail::run_ssa(problem, cfg);
    }
    throw RangeError("minimize: unknown algorithm");
}

struct OptimizationResult {
    SwarmConfiguration configuration;
    ObjectiveBreakdown breakdown;
    std::vector<double> trace;
    std::size_t evaluations = 0;
    OptimizerConfig config;
};

/// Stage two: places the participating swarms of `net`.
inline OptimizationResult run_optimizer(const OptimizedNetwork& net, const Scenario& s, const OptimizerConfig& cfg,
                                        const GainIntegration& integration = ClosedFormIntegral{}) {
    cfg.validate();
    if (net.links.empty()) throw RangeError("run_optimizer: network has no links");
    PlacementProblem problem(s, net, integration);
    OptimizationResult out;
    out.config = cfg;
    if (problem.dimension() == 0) {
        out.breakdown = problem.breakdown({});
        out.trace.assign(cfg.iterations + 1, out.breakdown.total);
        out.evaluations = 1;
        return out;
    }
    const auto r = minimize(problem, cfg);
    out.configuration = decode(r.best_position, problem.layout());
    out.breakdown = problem.breakdown(r.best_position);
    out.trace = r.trace;
    out.evaluations = r.evaluations;
    return out;
}

inline nlohmann::json to_json(const SwarmConfiguration& c) {
    nlohmann::json swarms = nlohmann::json::array();
    for (const auto& p : c.swarms) {
        nlohmann::json pos = nlohmann::json::array();
        for (const auto& q : p.positions) pos.push_back({q.x, q.y, q.z});
        swarms.push_back({{"swarm", p.swarm}, {"positions", pos}, {"currents", p.currents}});
    }
    return swarms;
}

inline SwarmConfiguration configuration_from_json(const nlohmann::json& j) {
    SwarmConfiguration c;
    try {
        for (const auto& s : j) {
            SwarmPlacement p;
            p.swarm = s.at("swarm").get<std::size_t>();
            for (const auto& q : s.at("positions"))
                p.positions.push_back({q.at(0).get<double>(), q.at(1).get<double>(), q.at(2).get<double>()});
            p.currents = s.at("currents").get<std::vector<double>>();
            if (p.currents.size() != p.positions.size()) throw SchemaError("configuration: one current per UAV");
            c.swarms.push_back(std::move(p));
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("configuration: ") + e.what());
    }
    return c;
}

inline nlohmann::json to_json(const ObjectiveBreakdown& b) {
    return {{"part1", b.part1},   {"part2", b.part2}, {"part3", b.part3},
            {"part4", b.part4},   {"total", b.total}, {"link_rates_bps", b.link_rates},
            {"congested_links", b.congested_links}, {"energy_j", b.energy_j}};
}

inline ObjectiveBreakdown breakdown_from_json(const nlohmann::json& j) {
    ObjectiveBreakdown b;
    b.part1 = j.at("part1").get<double>();
    b.part2 = j.at("part2").get<double>();
    b.part3 = j.at("part3").get<double>();
    b.part4 = j.at("part4").get<double>();
    b.total = j.at("total").get<double>();
    b.link_rates = j.at("link_rates_bps").get<std::vector<double>>();
    b.congested_links = j.at("congested_links").get<std::size_t>();
    b.energy_j = j.at("energy_j").get<double>();
    return b;
}

}  // namespace swarmrelay
