// Command-line front end: stage-one planning, stage-two placement and the
// comparison / robustness experiments. Every subcommand writes report.json
// plus CSV tables into --out.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "swarmrelay/swarmrelay.hpp"

namespace sr = swarmrelay;

namespace {

struct Options {
    std::string scenario;
    std::string graph;
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> trials;
    std::string out = "out";
    std::string algo = "DM-PSO";
    std::size_t iters = 500;
    std::size_t pop = 100;
    std::vector<std::string> jitter_max{"0.2", "0.4", "0.6", "0.8", "1.0"};
    std::vector<std::string> kappa{"inf", "16", "8", "4", "2", "1", "0"};
    unsigned threads = 1;
    bool quadrature = false;
};

std::vector<double> parse_list(const std::vector<std::string>& items, const char* what) {
    std::vector<double> out;
    for (const auto& s : items) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            out.push_back(v);
        } catch (const std::exception&) {
            throw sr::ParseError(std::string(what) + ": not a number: " + s);
        }
    }
    return out;
}

const char* error_kind(const std::exception& e) {
    if (dynamic_cast<const sr::ParseError*>(&e)) return "parse";
    if (dynamic_cast<const sr::SchemaError*>(&e)) return "schema";
    if (dynamic_cast<const sr::RangeError*>(&e)) return "range";
    if (dynamic_cast<const sr::DegenerateError*>(&e)) return "degenerate";
    if (dynamic_cast<const sr::FeasibilityError*>(&e)) return "feasibility";
    if (dynamic_cast<const sr::DimensionError*>(&e)) return "dimension";
    if (dynamic_cast<const sr::UnreachableError*>(&e)) return "unreachable";
    if (dynamic_cast<const sr::DeadEndError*>(&e)) return "dead_end";
    return "error";
}

sr::OptimizerConfig optimizer_config(const Options& o, sr::Algorithm algo, std::uint64_t seed) {
    sr::OptimizerConfig cfg;
    cfg.algorithm = algo;
    cfg.iterations = o.iters;
    cfg.population = o.pop;
    cfg.seed = seed;
    cfg.threads = o.threads;
    if (cfg.neighbors >= cfg.population) cfg.neighbors = cfg.population - 1;
    return cfg;
}

std::vector<sr::Position3> node_positions(const sr::Scenario& s) {
    std::vector<sr::Position3> pos(s.node_count());
    for (std::size_t v = 0; v < pos.size(); ++v) pos[v] = s.node_position(v);
    return pos;
}

sr::ExperimentReport run_mode(const std::string& mode, const Options& o) {
    sr::ExperimentReport r;
    r.mode = mode;

    if (mode == "plan" && !o.graph.empty()) {
        std::ifstream in(o.graph);
        if (!in) throw sr::Error("cannot open " + o.graph);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw sr::ParseError(std::string("graph: ") + e.what());
        }
        const auto plan = sr::plan_network(sr::flow_graph_from_json(j));
        r.seed = o.seed.value_or(0);
        r.bound_bps = plan.bound();
        r.plan = sr::flow_report(plan.graph, plan.flow, plan.network);
        return r;
    }
    if (o.scenario.empty()) throw sr::SchemaError("--scenario is required");

    const sr::Scenario s = sr::load_scenario_file(o.scenario);
    const std::uint64_t seed = o.seed.value_or(s.seed);
    const auto plan = sr::plan_network(s);
    r.seed = seed;
    r.bound_bps = plan.bound();
    r.plan = sr::flow_report(plan.graph, plan.flow, plan.network);
    const auto algo = sr::parse_algorithm(o.algo);

    if (mode == "plan") return r;
    if (mode == "optimize") {
        const auto cfg = optimizer_config(o, algo, seed);
        const std::size_t trials = o.trials.value_or(1);
        r.runs.emplace_back(o.algo, trials == 1 ? std::vector<sr::TrialRecord>{sr::optimize_trial(plan, s, cfg, seed)}
                                                : sr::replicate(plan, s, cfg, trials, seed));
        return r;
    }
    if (mode == "evaluate") {
        const auto participating = plan.network.participating_swarms();
        sr::SwarmConfiguration cand = sr::initial_configuration(s, participating);
        if (!o.config.empty()) {
            std::ifstream in(o.config);
            if (!in) throw sr::Error("cannot open " + o.config);
            nlohmann::json j;
            try {
                in >> j;
            } catch (const nlohmann::json::exception& e) {
                throw sr::ParseError(std::string("configuration: ") + e.what());
            }
            cand = sr::configuration_from_json(j.contains("configuration") ? j.at("configuration") : j);
        }
        const sr::GainIntegration integration =
            o.quadrature ? sr::GainIntegration{sr::QuadratureSpec{}} : sr::GainIntegration{sr::ClosedFormIntegral{}};
        sr::TrialRecord t;
        t.seed = seed;
        t.configuration = cand;
        t.breakdown = sr::evaluate_objective(cand, plan.network, s, sr::initial_configuration(s, participating),
                                             integration);
        t.achieved_rate_bps = sr::routed_network_rate(plan.network, t.breakdown.link_rates);
        t.unrouted_rate_bps = sr::network_rate(plan.network, t.breakdown.link_rates);
        r.runs.emplace_back("evaluate", std::vector<sr::TrialRecord>{t});
        return r;
    }
    if (mode == "compare-routing") {
        r.routing = sr::compare_routing(plan, node_positions(s));
        return r;
    }
    if (mode == "compare-optimizers") {
        const std::size_t trials = o.trials.value_or(10);
        for (auto a : sr::all_algorithms)
            r.runs.emplace_back(std::string(sr::to_string(a)),
                                sr::replicate(plan, s, optimizer_config(o, a, seed), trials, seed));
        return r;
    }
    if (mode == "stability") {
        r.runs.emplace_back(o.algo, sr::replicate(plan, s, optimizer_config(o, algo, seed), o.trials.value_or(30), seed));
        return r;
    }
    if (mode == "robustness") {
        const std::size_t trials = o.trials.value_or(30);
        const auto best = sr::optimize_trial(plan, s, optimizer_config(o, algo, seed), seed);
        r.runs.emplace_back(o.algo, std::vector<sr::TrialRecord>{best});
        auto levels = parse_list(o.jitter_max, "--jitter-max");
        for (double v : levels)
            if (!(v >= 0.0)) throw sr::RangeError("--jitter-max values must be >= 0");
        r.curves.push_back(sr::jitter_curve(best.configuration, plan, s, levels, trials, seed));
        auto kappas = parse_list(o.kappa, "--tikhonov-kappa");
        for (double v : kappas)
            if (!(v >= 0.0)) throw sr::RangeError("--tikhonov-kappa values must be >= 0");
        r.curves.push_back(sr::phase_error_curve(best.configuration, plan, s, kappas, trials, seed));
        return r;
    }
    throw sr::SchemaError("unknown mode " + mode);
}

void print_summary(const sr::ExperimentReport& r, const std::vector<std::string>& files, const std::string& out) {
    std::cout << "mode " << r.mode << "\n";
    std::cout << "bound_bps " << r.bound_bps << "\n";
    for (const auto& [label, trials] : r.runs) {
        std::vector<double> totals, rates;
        for (const auto& t : trials) {
            totals.push_back(t.breakdown.total);
            rates.push_back(static_cast<double>(t.achieved_rate_bps));
        }
        const auto f = sr::summarize(totals), rate = sr::summarize(rates);
        std::cout << label << " trials " << trials.size() << " median_objective " << sr::format_number(f.median)
                  << " median_rate_bps " << sr::format_number(rate.median) << "\n";
    }
    for (const auto& rr : r.routing)
        std::cout << rr.protocol << " path " << sr::join_path(rr.path) << " bottleneck_bps " << rr.bottleneck_bps
                  << (rr.error.empty() ? "" : " error " + rr.error) << "\n";
    for (const auto& c : r.curves)
        for (std::size_t i = 0; i < c.levels.size(); ++i)
            std::cout << c.parameter << " " << sr::format_number(c.levels[i]) << " mean_rate_bps "
                      << sr::format_number(c.mean_rate_bps[i]) << "\n";
    for (const auto& f : files) std::cout << "wrote " << out << "/" << f << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Two-stage relay planning for UAV swarm virtual antenna arrays"};
    app.require_subcommand(1);
    Options o;
    const std::vector<std::pair<std::string, std::string>> modes{
        {"plan", "Stage one: capacities, max-flow bound and routing plan"},
        {"optimize", "Stage two: place the relaying swarms"},
        {"evaluate", "Score a given configuration (default: initial positions)"},
        {"compare-routing", "Max-flow bound against single-path routing protocols"},
        {"compare-optimizers", "Run every optimizer over replicated trials"},
        {"robustness", "Achieved rate under position jitter and phase errors"},
        {"stability", "Replicated trials of one optimizer with objective CDFs"}};
    std::string chosen;
    for (const auto& [name, help] : modes) {
        auto* sub = app.add_subcommand(name, help);
        sub->add_option("--scenario", o.scenario, "Scenario file (JSON)");
        sub->add_option("--seed", o.seed, "Master seed (default: scenario seed)");
        sub->add_option("--trials", o.trials, "Number of trials")->check(CLI::PositiveNumber);
        sub->add_option("--out", o.out, "Output directory");
        sub->add_option("--algo", o.algo, "DM-PSO, PSO, DE, GA, ABC or SSA");
        sub->add_option("--iters", o.iters, "Iterations");
        sub->add_option("--pop", o.pop, "Population size");
        sub->add_option("--threads", o.threads, "Worker threads for objective evaluation")->check(CLI::PositiveNumber);
        if (name == "plan") sub->add_option("--graph", o.graph, "Explicit-capacity flow graph (JSON) instead of a scenario");
        if (name == "evaluate") {
            sub->add_option("--config", o.config, "Configuration JSON (report.json trial or bare configuration)");
            sub->add_flag("--quadrature", o.quadrature, "Use the 181 x 360 quadrature for the pattern integral");
        }
        if (name == "robustness") {
            sub->add_option("--jitter-max", o.jitter_max, "Jitter maxima in metres")->delimiter(',');
            sub->add_option("--tikhonov-kappa", o.kappa, "Tikhonov concentrations (inf allowed)")->delimiter(',');
        }
        sub->callback([&chosen, name = name] { chosen = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        nlohmann::json line{{"error", "usage"}, {"message", e.what()}};
        std::cerr << line.dump() << "\n";
        return 2;
    }
    try {
        const auto report = run_mode(chosen, o);
        const auto files = sr::export_results(report, o.out);
        print_summary(report, files, o.out);
    } catch (const std::exception& e) {
        nlohmann::json line{{"error", error_kind(e)}, {"message", e.what()}};
        std::cerr << line.dump() << "\n";
        return 1;
    }
    return 0;
}
