#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "swarmrelay/beamforming.hpp"
#include "swarmrelay/channel.hpp"
#include "swarmrelay/configuration.hpp"
#include "swarmrelay/netflow.hpp"
#include "swarmrelay/optimizer.hpp"
#include "swarmrelay/random.hpp"
#include "swarmrelay/scenario.hpp"

namespace swarmrelay {

// ---------------------------------------------------------------------------
// Stage one

struct Plan {
    FlowGraph graph;
    FlowSolution flow;
    OptimizedNetwork network;

    [[nodiscard]] std::uint64_t bound() const { return flow.total; }
};

inline Plan plan_network(const FlowGraph& g) {
    Plan p{g, max_flow_ford_fulkerson(g), {}};
    p.network = extract_optimized_network(p.graph, p.flow);
    return p;
}

inline Plan plan_network(const Scenario& s) { return plan_network(build_flow_graph(s)); }

// ---------------------------------------------------------------------------
// Achieved network rate

/// Max flow over the links of `net` with the given per-link capacities
/// (quantized down to whole bps).
inline std::uint64_t network_rate(const OptimizedNetwork& net, const std::vector<double>& link_capacities) {
    if (link_capacities.size() != net.links.size()) throw DimensionError("network_rate: one rate per link");
    FlowGraph g{net.original_node_count, {}};
    for (std::size_t l = 0; l < net.links.size(); ++l)
        g.edges.push_back({net.links[l].from, net.links[l].to, quantize_capacity(link_capacities[l])});
    return max_flow_ford_fulkerson(g).total;
}

/// Achieved rate of the planned routing: each link carries at most its
/// achieved rate and at most its planned rate.
inline std::uint64_t routed_network_rate(const OptimizedNetwork& net, const std::vector<double>& rates) {
    std::vector<double> caps(rates.size());
    for (std::size_t l = 0; l < rates.size(); ++l)
        caps[l] = std::min(rates[l], static_cast<double>(net.links.at(l).expected_rate));
    return network_rate(net, caps);
}

// ---------------------------------------------------------------------------
// Robustness perturbations

enum class JitterDistribution { TruncatedGaussian, Uniform };

/// Offset in [-1, 1] scaled by the jitter maximum. Truncated Gaussian draws
/// use sigma = 1/3 of the maximum and rejection outside it.
inline double unit_jitter(RandomStream& rng, JitterDistribution dist) {
    if (dist == JitterDistribution::Uniform) return rng.uniform(-1.0, 1.0);
    for (;;) {
        const double z = rng.normal() / 3.0;
        if (std::abs(z) <= 1.0) return z;
    }
}

/// Involuntary per-axis displacement of every UAV. Currents are untouched
/// and no repair is applied.
inline SwarmConfiguration apply_position_jitter(const SwarmConfiguration& c, double jitter_max_m, RandomStream& rng,
                                                JitterDistribution dist = JitterDistribution::TruncatedGaussian) {
    if (!(jitter_max_m >= 0.0)) throw RangeError("apply_position_jitter: jitter maximum must be >= 0");
    SwarmConfiguration out = c;
    for (auto& p : out.swarms)
        for (auto& q : p.positions) {
            const double dx = unit_jitter(rng, dist), dy = unit_jitter(rng, dist), dz = unit_jitter(rng, dist);
            if (jitter_max_m == 0.0) continue;
            q = q + Position3{dx, dy, dz} * jitter_max_m;
        }
    return out;
}

/// Swarm link gain with per-element phase errors: the error-free pattern is
/// scaled by sum(I e^{i zeta}) / sum(I) toward the receiver while the
/// pattern integral stays that of the error-free array.
inline double gain_with_phase_errors(const ArrayState& a, const SphericalDirection& dir, std::span<const double> zeta,
                                     const GainIntegration& integration, double efficiency) {
    const auto f = array_factor_with_phase_error(a, zeta, true);
    const double denom = pattern_integral(a, integration);
    if (!(denom > 0.0)) throw DegenerateError("gain_with_phase_errors: pattern integral is not positive");
    return 4.0 * pi * std::norm(f(dir)) * efficiency / denom;
}

/// Achieved link rates with freshly drawn Tikhonov phase errors per swarm
/// link. An infinite kappa means perfect synchronization.
inline std::vector<double> phase_error_link_rates(const SwarmConfiguration& c, const OptimizedNetwork& net,
                                                  const Scenario& s, double kappa, RandomStream& rng,
                                                  const GainIntegration& integration = ClosedFormIntegral{}) {
    if (!(kappa >= 0.0)) throw RangeError("phase errors: kappa must be >= 0");
    std::vector<double> rates;
    for (const auto& l : net.links) {
        const Position3 rx = node_point(s, c, l.to);
        if (l.from == 0) {
            rates.push_back(device_link_budget(s.device, rx, s.channel).rate_bps);
            continue;
        }
        const auto* p = c.find(l.from - 1);
        if (!p) throw DimensionError("phase errors: configuration lacks swarm " + std::to_string(l.from - 1));
        const ArrayState a = p->array(s.channel.wavelength_m());
        std::vector<double> zeta(a.size(), 0.0);
        if (std::isfinite(kappa))
            for (double& z : zeta) z = sample_tikhonov(kappa, rng);
        LinkBudget b;
        const Position3 tx = p->centroid();
        b.channel_gain = expected_channel_gain({tx, rx}, s.channel);
        b.tx_power_w = a.power_weight() * s.channel.tx_power_w;
        b.noise_power_w = noise_power(s.channel);
        b.antenna_gain = b.tx_power_w > 0.0 ? gain_with_phase_errors(a, direction_between(tx, rx), zeta, integration,
                                                                      s.channel.array_efficiency)
                                            : 0.0;
        rates.push_back(shannon_rate(s.channel.bandwidth_hz, b.snr()));
    }
    return rates;
}

inline std::uint64_t evaluate_with_phase_errors(const SwarmConfiguration& c, const OptimizedNetwork& net,
                                                const Scenario& s, double kappa, RandomStream& rng,
                                                const GainIntegration& integration = ClosedFormIntegral{}) {
    return routed_network_rate(net, phase_error_link_rates(c, net, s, kappa, rng, integration));
}

// ---------------------------------------------------------------------------
// Reports

struct TrialRecord {
    std::uint64_t seed = 0;
    std::uint64_t achieved_rate_bps = 0;
    std::uint64_t unrouted_rate_bps = 0;
    ObjectiveBreakdown breakdown;
    std::vector<double> trace;
    SwarmConfiguration configuration;

    friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

struct Summary {
    double mean = 0.0;
    double median = 0.0;
    double min = 0.0;
    double max = 0.0;

    friend bool operator==(const Summary&, const Summary&) = default;
};

inline Summary summarize(std::vector<double> v) {
    if (v.empty()) return {};
    std::sort(v.begin(), v.end());
    Summary s;
    double total = 0.0;
    for (double x : v) total += x;
    s.mean = total / static_cast<double>(v.size());
    const std::size_t n = v.size();
    s.median = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    s.min = v.front();
    s.max = v.back();
    return s;
}

inline std::vector<double> cdf_samples(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v;
}

/// Mean achieved rate per perturbation level.
struct RobustnessCurve {
    std::string parameter;
    std::vector<double> levels;
    std::vector<double> mean_rate_bps;
    std::vector<std::vector<std::uint64_t>> trial_rates_bps;

    friend bool operator==(const RobustnessCurve&, const RobustnessCurve&) = default;
};

struct RoutingRecord {
    std::string protocol;
    std::vector<std::size_t> path;
    std::uint64_t bottleneck_bps = 0;
    std::string error;

    friend bool operator==(const RoutingRecord&, const RoutingRecord&) = default;
};

struct ExperimentReport {
    std::string mode;
    std::uint64_t seed = 0;
    std::uint64_t bound_bps = 0;
    nlohmann::json plan;
    std::vector<std::pair<std::string, std::vector<TrialRecord>>> runs;  // per algorithm label
    std::vector<RoutingRecord> routing;
    std::vector<RobustnessCurve> curves;

    friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

inline nlohmann::json to_json(const TrialRecord& t) {
    return {{"seed", t.seed},
            {"achieved_rate_bps", t.achieved_rate_bps},
            {"unrouted_rate_bps", t.unrouted_rate_bps},
            {"breakdown", to_json(t.breakdown)},
            {"trace", t.trace},
            {"configuration", to_json(t.configuration)}};
}

inline TrialRecord trial_from_json(const nlohmann::json& j) {
    return {j.at("seed").get<std::uint64_t>(),
            j.at("achieved_rate_bps").get<std::uint64_t>(),
            j.at("unrouted_rate_bps").get<std::uint64_t>(),
            breakdown_from_json(j.at("breakdown")),
            j.at("trace").get<std::vector<double>>(),
            configuration_from_json(j.at("configuration"))};
}

inline nlohmann::json to_json(const Summary& s) {
    return {{"mean", s.mean}, {"median", s.median}, {"min", s.min}, {"max", s.max}};
}

namespace detail {

// JSON has no infinity; unbounded levels are written as the string "inf".
inline nlohmann::json level_to_json(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

inline double level_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw SchemaError("report: bad level " + s);
    }
    return j.get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const ExperimentReport& r) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& [label, trials] : r.runs) {
        nlohmann::json ts = nlohmann::json::array();
        std::vector<double> totals, p1, p2, rates;
        for (const auto& t : trials) {
            ts.push_back(to_json(t));
            totals.push_back(t.breakdown.total);
            p1.push_back(t.breakdown.part1);
            p2.push_back(t.breakdown.part2);
            rates.push_back(static_cast<double>(t.achieved_rate_bps));
        }
        runs.push_back({{"label", label},
                        {"trials", ts},
                        {"summary",
                         {{"objective", to_json(summarize(totals))},
                          {"achieved_rate_bps", to_json(summarize(rates))},
                          {"cdf_part1", cdf_samples(p1)},
                          {"cdf_part2", cdf_samples(p2)}}}});
    }
    nlohmann::json routing = nlohmann::json::array();
    for (const auto& rr : r.routing)
        routing.push_back(
            {{"protocol", rr.protocol}, {"path", rr.path}, {"bottleneck_bps", rr.bottleneck_bps}, {"error", rr.error}});
    nlohmann::json curves = nlohmann::json::array();
    for (const auto& c : r.curves) {
        nlohmann::json levels = nlohmann::json::array();
        for (double v : c.levels) levels.push_back(detail::level_to_json(v));
        curves.push_back({{"parameter", c.parameter},
                          {"levels", levels},
                          {"mean_rate_bps", c.mean_rate_bps},
                          {"trial_rates_bps", c.trial_rates_bps}});
    }
    return {{"mode", r.mode},     {"seed", r.seed},       {"bound_bps", r.bound_bps}, {"plan", r.plan},
            {"runs", runs},       {"routing", routing},   {"curves", curves}};
}

inline ExperimentReport report_from_json(const nlohmann::json& j) {
    ExperimentReport r;
    try {
        r.mode = j.at("mode").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.bound_bps = j.at("bound_bps").get<std::uint64_t>();
        r.plan = j.at("plan");
        for (const auto& run : j.at("runs")) {
            std::vector<TrialRecord> trials;
            for (const auto& t : run.at("trials")) trials.push_back(trial_from_json(t));
            r.runs.emplace_back(run.at("label").get<std::string>(), std::move(trials));
        }
        for (const auto& rr : j.at("routing"))
            r.routing.push_back({rr.at("protocol").get<std::string>(), rr.at("path").get<std::vector<std::size_t>>(),
                                 rr.at("bottleneck_bps").get<std::uint64_t>(), rr.at("error").get<std::string>()});
        for (const auto& c : j.at("curves")) {
            std::vector<double> levels;
            for (const auto& v : c.at("levels")) levels.push_back(detail::level_from_json(v));
            r.curves.push_back({c.at("parameter").get<std::string>(), std::move(levels),
                                c.at("mean_rate_bps").get<std::vector<double>>(),
                                c.at("trial_rates_bps").get<std::vector<std::vector<std::uint64_t>>>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("report: ") + e.what());
    }
    return r;
}

// ---------------------------------------------------------------------------
// Experiments

/// Seed of trial t below a base seed.
inline std::uint64_t trial_seed(std::uint64_t base_seed, std::uint64_t trial) { return derive_seed(base_seed, {trial}); }

/// Stage two for one seed, with the achieved rate of the result.
inline TrialRecord optimize_trial(const Plan& plan, const Scenario& s, OptimizerConfig cfg, std::uint64_t seed) {
    cfg.seed = seed;
    const auto r = run_optimizer(plan.network, s, cfg);
    TrialRecord t;
    t.seed = seed;
    t.breakdown = r.breakdown;
    t.trace = r.trace;
    t.configuration = r.configuration;
    t.achieved_rate_bps = routed_network_rate(plan.network, r.breakdown.link_rates);
    t.unrouted_rate_bps = network_rate(plan.network, r.breakdown.link_rates);
    return t;
}

/// Independent trials; trial t runs with trial_seed(base_seed, t).
inline std::vector<TrialRecord> replicate(const Plan& plan, const Scenario& s, const OptimizerConfig& cfg,
                                          std::size_t trials, std::uint64_t base_seed) {
    if (trials == 0) throw RangeError("replicate: need at least one trial");
    std::vector<TrialRecord> out;
    for (std::size_t t = 0; t < trials; ++t) out.push_back(optimize_trial(plan, s, cfg, trial_seed(base_seed, t)));
    return out;
}

inline std::vector<RoutingRecord> compare_routing(const Plan& plan, const std::vector<Position3>& positions) {
    std::vector<RoutingRecord> out;
    for (auto p : all_protocols) {
        RoutingRecord r{std::string(to_string(p)), {}, 0, ""};
        try {
            const auto sol = route_single_path(plan.graph, positions, p);
            r.path = sol.path;
            r.bottleneck_bps = sol.bottleneck;
        } catch (const Error& e) {
            r.error = e.what();
        }
        out.push_back(std::move(r));
    }
    return out;
}

/// Mean achieved rate of `c` under position jitter at each level. Trial k
/// uses the same random stream at every level, so the levels differ only
/// in displacement scale.
inline RobustnessCurve jitter_curve(const SwarmConfiguration& c, const Plan& plan, const Scenario& s,
                                    const std::vector<double>& levels, std::size_t trials, std::uint64_t seed,
                                    JitterDistribution dist = JitterDistribution::TruncatedGaussian) {
    RobustnessCurve curve{"jitter_max_m", levels, {}, {}};
    for (double level : levels) {
        std::vector<std::uint64_t> rates;
        double total = 0.0;
        for (std::size_t k = 0; k < trials; ++k) {
            auto rng = RandomStream::derived(seed, {0x6a17, k});
            const auto moved = apply_position_jitter(c, level, rng, dist);
            const auto link_rates = achieved_link_rates(moved, plan.network, s, ClosedFormIntegral{});
            rates.push_back(routed_network_rate(plan.network, link_rates));
            total += static_cast<double>(rates.back());
        }
        curve.mean_rate_bps.push_back(trials ? total / static_cast<double>(trials) : 0.0);
        curve.trial_rates_bps.push_back(std::move(rates));
    }
    return curve;
}

/// Mean achieved rate of `c` under Tikhonov phase errors at each kappa.
inline RobustnessCurve phase_error_curve(const SwarmConfiguration& c, const Plan& plan, const Scenario& s,
                                         const std::vector<double>& kappas, std::size_t trials, std::uint64_t seed) {
    RobustnessCurve curve{"tikhonov_kappa", kappas, {}, {}};
    for (double kappa : kappas) {
        std::vector<std::uint64_t> rates;
        double total = 0.0;
        for (std::size_t k = 0; k < trials; ++k) {
            auto rng = RandomStream::derived(seed, {0x7e7a, k});
            rates.push_back(evaluate_with_phase_errors(c, plan.network, s, kappa, rng));
            total += static_cast<double>(rates.back());
        }
        curve.mean_rate_bps.push_back(trials ? total / static_cast<double>(trials) : 0.0);
        curve.trial_rates_bps.push_back(std::move(rates));
    }
    return curve;
}

// ---------------------------------------------------------------------------
// Export

/// Shortest decimal text that reads back to the same double.
inline std::string format_number(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

inline std::string format_number(std::uint64_t v) { return std::to_string(v); }

class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : columns_(header.size()) { row(header); }

    void row(const std::vector<std::string>& cells) {
        if (cells.size() != columns_) throw DimensionError("csv: wrong number of cells");
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text_ += ',';
            text_ += quote(cells[i]);
        }
        text_ += '\n';
    }

    [[nodiscard]] const std::string& text() const { return text_; }

private:
    static std::string quote(const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string out = "\"";
        for (char c : s) {
            if (c == '"') out += '"';
            out += c;
        }
        return out + "\"";
    }

    std::size_t columns_;
    std::string text_;
};

inline std::string join_path(const std::vector<std::size_t>& path) {
    std::string s;
    for (std::size_t i = 0; i < path.size(); ++i) s += (i ? "-" : "") + std::to_string(path[i]);
    return s;
}

/// CSV tables of a report, keyed by file name.
inline std::vector<std::pair<std::string, std::string>> report_tables(const ExperimentReport& r) {
    std::vector<std::pair<std::string, std::string>> files;
    CsvWriter trials({"label", "trial", "seed", "total", "part1", "part2", "part3", "part4", "energy_j",
                      "achieved_rate_bps", "unrouted_rate_bps", "bound_bps"});
    CsvWriter conv({"label", "trial", "iteration", "best_objective"});
    bool any_trace = false;
    for (const auto& [label, ts] : r.runs)
        for (std::size_t k = 0; k < ts.size(); ++k) {
            const auto& t = ts[k];
            trials.row({label, std::to_string(k), std::to_string(t.seed), format_number(t.breakdown.total),
                        format_number(t.breakdown.part1), format_number(t.breakdown.part2),
                        format_number(t.breakdown.part3), format_number(t.breakdown.part4),
                        format_number(t.breakdown.energy_j), format_number(t.achieved_rate_bps),
                        format_number(t.unrouted_rate_bps), format_number(r.bound_bps)});
            for (std::size_t i = 0; i < t.trace.size(); ++i) {
                conv.row({label, std::to_string(k), std::to_string(i), format_number(t.trace[i])});
                any_trace = true;
            }
        }
    files.emplace_back("trials.csv", trials.text());
    if (any_trace) files.emplace_back("convergence.csv", conv.text());
    if (!r.routing.empty()) {
        CsvWriter routing({"protocol", "path", "bottleneck_bps", "max_flow_bps", "error"});
        for (const auto& rr : r.routing)
            routing.row({rr.protocol, join_path(rr.path), format_number(rr.bottleneck_bps), format_number(r.bound_bps),
                         rr.error});
        files.emplace_back("routing.csv", routing.text());
    }
    if (!r.curves.empty()) {
        CsvWriter curves({"parameter", "level", "mean_rate_bps", "bound_bps"});
        for (const auto& c : r.curves)
            for (std::size_t i = 0; i < c.levels.size(); ++i)
                curves.row({c.parameter, format_number(c.levels[i]), format_number(c.mean_rate_bps[i]),
                            format_number(r.bound_bps)});
        files.emplace_back("robustness.csv", curves.text());
    }
    return files;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error("write failed: " + path.string());
}

/// Writes report.json plus the CSV tables into `dir`. Returns the file names.
inline std::vector<std::string> export_results(const ExperimentReport& r, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());
    std::vector<std::string> names{"report.json"};
    write_text_file(dir / "report.json", to_json(r).dump(2) + "\n");
    for (const auto& [name, text] : report_tables(r)) {
        write_text_file(dir / name, text);
        names.push_back(name);
    }
    return names;
}

}  // namespace swarmrelay
