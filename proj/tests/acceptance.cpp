#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "test_support.hpp"

namespace sr = swarmrelay;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances and limits.
constexpr double ac1_seconds = 5.0;
constexpr double ac2_multiplier_fraction = 0.99;
constexpr double ac2_seconds = 60.0;
constexpr std::size_t ac2_configs = 1000;
constexpr double ac3_rel_tol = 1e-9;
constexpr double ac4_gap = 0.02;
constexpr std::size_t ac4_seeds = 10;
constexpr std::size_t ac4_required = 8;
constexpr double ac4_seconds = 600.0;
constexpr double ac5_diamond_ratio = 1.8;
constexpr double ac5_seconds = 10.0;
constexpr std::size_t ac6_seeds = 10;
constexpr std::size_t ac8_trials = 30;
constexpr std::size_t ac8_max_inversions = 1;
constexpr double ac8_seconds = 300.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::size_t inversions(const std::vector<double>& v) {
    std::size_t n = 0;
    for (std::size_t i = 1; i < v.size(); ++i) n += v[i] > v[i - 1];
    return n;
}

double median(std::vector<double> v) { return sr::summarize(std::move(v)).median; }

std::string join(const std::vector<double>& v) {
    std::string out;
    for (double x : v) out += (out.empty() ? "" : " ") + fmt("%.0f", x);
    return out;
}

Outcome ac1() {
    const auto t0 = Clock::now();
    std::size_t ok = 0;
    const auto graphs = testsupport::fixture("netflow.json").at("max_flow_graphs");
    for (const auto& j : graphs) {
        const auto g = sr::flow_graph_from_json(j);
        const auto f = sr::max_flow_ford_fulkerson(g);
        ok += f.total == j.at("max_flow").get<std::uint64_t>() && f.total == j.at("min_cut").get<std::uint64_t>() &&
              sr::is_valid_flow(g, f.flow);
    }
    std::ifstream in(testsupport::scenario_path("worked_flow_graph.json"));
    const auto worked = sr::plan_network(sr::flow_graph_from_json(nlohmann::json::parse(in)));
    std::set<std::vector<std::size_t>> paths;
    for (const auto& l : worked.network.links) {
        if (l.from != worked.network.source()) continue;
        std::vector<std::size_t> path{l.from, l.to};
        while (path.back() != worked.network.sink() && path.size() <= worked.network.links.size() + 1) {
            for (const auto& m : worked.network.links)
                if (m.from == path.back()) {
                    path.push_back(m.to);
                    break;
                }
        }
        paths.insert(path);
    }
    const bool worked_ok = worked.bound() == 2 &&
                           paths == std::set<std::vector<std::size_t>>{{0, 1, 4}, {0, 3, 4}};
    const double secs = seconds_since(t0);
    return {ok == graphs.size() && worked_ok && secs < ac1_seconds,
            fmt("%zu/%zu graphs match oracle, worked example total %llu paths %s, %.2fs", ok, graphs.size(),
                static_cast<unsigned long long>(worked.bound()), worked_ok ? "ok" : "wrong", secs)};
}

Outcome ac2() {
    const auto t0 = Clock::now();
    const sr::ChannelParams c{};
    const double lambda = c.wavelength_m();
    const sr::SphericalDirection broadside{sr::pi / 2, sr::pi / 2};
    bool multiplier_ok = true;
    std::string detail;
    for (std::size_t n : {2, 4, 8}) {
        std::vector<sr::Position3> ula, stacked;
        for (std::size_t u = 0; u < n; ++u) {
            ula.push_back({2.0 * lambda * static_cast<double>(u), 0, 0});
            stacked.push_back({1e-6 * static_cast<double>(u), 0, 0});
        }
        const sr::ArrayState a{ula, std::vector<double>(n, 1.0), lambda};
        const sr::ArrayState b{stacked, std::vector<double>(n, 1.0), lambda};
        const double m = a.power_weight() * sr::antenna_gain(a, broadside, sr::QuadratureSpec{}, c.array_efficiency);
        const double mc = b.power_weight() * sr::antenna_gain(b, broadside, sr::QuadratureSpec{}, c.array_efficiency);
        multiplier_ok &= m >= ac2_multiplier_fraction * static_cast<double>(n * n);
        detail += fmt("N=%zu ULA %.3f (co-located %.3f); ", n, m, mc);
    }
    // Random configurations: co-located scale, wavelength scale, swarm-region scale.
    sr::RandomStream rng(20240);
    std::size_t violations = 0, total = 0;
    for (double extent : {0.1 * lambda, lambda, 100.0}) {
        for (std::size_t n : {2, 4, 8}) {
            for (std::size_t k = 0; k < ac2_configs; ++k) {
                const sr::Position3 base{rng.uniform(1000, 3000), rng.uniform(3000, 5000), rng.uniform(50, 150)};
                std::vector<sr::Position3> pos;
                std::vector<double> currents;
                for (std::size_t u = 0; u < n; ++u) {
                    pos.push_back(base + sr::Position3{rng.uniform(0, extent), rng.uniform(0, extent),
                                                       rng.uniform(0, std::min(extent, 20.0))});
                    currents.push_back(rng.uniform());
                }
                const sr::Position3 rx{rng.uniform(0, 8000), rng.uniform(0, 8000), rng.uniform(0, 200)};
                const sr::ArrayState a{pos, currents, lambda};
                const double rate = sr::swarm_link_budget(a, rx, c, sr::ClosedFormIntegral{}).rate_bps;
                const double cap = sr::link_capacity_bound(n, sr::centroid(pos), rx, c);
                violations += rate > cap;
                ++total;
            }
        }
    }
    const double secs = seconds_since(t0);
    return {multiplier_ok && violations == 0 && secs < ac2_seconds,
            detail + fmt("%zu/%zu random configurations exceed the bound, %.2fs", violations, total, secs)};
}

Outcome ac3() {
    const sr::ChannelParams params{};
    const auto links = testsupport::fixture("channel.json").at("links");
    std::size_t ok = 0;
    double worst = 0.0;
    for (const auto& l : links) {
        const sr::LinkEndpoints e{testsupport::point(l.at("tx")), testsupport::point(l.at("rx"))};
        sr::LinkBudget b;
        b.channel_gain = sr::expected_channel_gain(e, params);
        b.tx_power_w = l.at("power_w").get<double>();
        b.antenna_gain = l.at("antenna_gain").get<double>();
        b.noise_power_w = sr::noise_power(params);
        const double errs[] = {
            testsupport::rel_err(sr::los_probability(e, params.env_m, params.env_n), l.at("p_los").get<double>()),
            testsupport::rel_err(b.channel_gain, l.at("h").get<double>()),
            testsupport::rel_err(sr::shannon_rate(params.bandwidth_hz, b.snr()), l.at("rate_bps").get<double>())};
        const double e_max = *std::max_element(std::begin(errs), std::end(errs));
        worst = std::max(worst, e_max);
        ok += e_max <= ac3_rel_tol;
    }
    return {ok == links.size() && links.size() == 100,
            fmt("%zu/%zu links within %.0e, worst %.2e", ok, links.size(), ac3_rel_tol, worst)};
}

struct Desk {
    sr::Scenario s = testsupport::scenario("desk.json");
    sr::Plan plan = sr::plan_network(s);
};

const Desk& desk() {
    static const Desk d;
    return d;
}

Outcome ac4() {
    const auto t0 = Clock::now();
    const auto& d = desk();
    std::size_t ok = 0;
    std::string rates;
    const double bound = static_cast<double>(d.plan.bound());
    for (std::size_t k = 0; k < ac4_seeds; ++k) {
        const auto t = sr::optimize_trial(d.plan, d.s, sr::OptimizerConfig{}, sr::trial_seed(d.s.seed, k));
        const double rate = static_cast<double>(t.achieved_rate_bps);
        ok += rate >= (1.0 - ac4_gap) * bound && rate <= bound && t.breakdown.part3 == 0.0 && t.breakdown.part4 == 0.0;
        rates += fmt("%s%.4f", rates.empty() ? "" : " ", rate / bound);
    }
    const double secs = seconds_since(t0);
    return {ok >= ac4_required && secs < ac4_seconds,
            fmt("%zu/%zu seeds within %.0f%% of bound %.0f with parts III/IV = 0 (rate/bound: %s), %.1fs", ok,
                ac4_seeds, 100 * ac4_gap, bound, rates.c_str(), secs)};
}

Outcome ac5() {
    const auto t0 = Clock::now();
    std::size_t ok = 0, dead_ends = 0;
    const auto graphs = testsupport::fixture("netflow.json").at("routing_graphs");
    for (const auto& j : graphs) {
        const auto g = sr::flow_graph_from_json(j);
        std::vector<sr::Position3> pos;
        for (const auto& p : j.at("positions")) pos.push_back(testsupport::point(p));
        const auto total = sr::max_flow_ford_fulkerson(g).total;
        bool dominated = true;
        for (auto p : sr::all_protocols) {
            try {
                dominated &= sr::route_single_path(g, pos, p).bottleneck <= total;
            } catch (const sr::DeadEndError&) {
                ++dead_ends;
            }
        }
        ok += dominated;
    }
    std::ifstream in(testsupport::scenario_path("diamond_graph.json"));
    const auto diamond = sr::flow_graph_from_json(nlohmann::json::parse(in));
    const std::vector<sr::Position3> diamond_pos{{0, 0, 0}, {500, 300, 100}, {300, -300, 100}, {700, -300, 100}, {1000, 0, 0}};
    const auto rip = sr::route_single_path(diamond, diamond_pos, sr::RoutingProtocol::RIP);
    const double ratio = static_cast<double>(sr::max_flow_ford_fulkerson(diamond).total) /
                         static_cast<double>(rip.bottleneck);
    const double secs = seconds_since(t0);
    return {ok == graphs.size() && ratio >= ac5_diamond_ratio && secs < ac5_seconds,
            fmt("%zu/%zu instances dominated (%zu GPSR dead ends), diamond max-flow/RIP %.2f, %.2fs", ok,
                graphs.size(), dead_ends, ratio, secs)};
}

Outcome ac6() {
    const auto& d = desk();
    std::vector<double> dm, pso;
    for (std::size_t k = 0; k < ac6_seeds; ++k) {
        sr::OptimizerConfig cfg;
        cfg.seed = sr::trial_seed(d.s.seed, k);
        dm.push_back(sr::run_optimizer(d.plan.network, d.s, cfg).breakdown.total);
        cfg.algorithm = sr::Algorithm::PSO;
        pso.push_back(sr::run_optimizer(d.plan.network, d.s, cfg).breakdown.total);
    }
    sr::OptimizerConfig a, b;
    a.seed = b.seed = d.s.seed;
    a.p_max = a.p_min = 0.0;
    b.algorithm = sr::Algorithm::PSO;
    const auto ra = sr::run_optimizer(d.plan.network, d.s, a);
    const auto rb = sr::run_optimizer(d.plan.network, d.s, b);
    const bool identical = ra.trace == rb.trace && ra.configuration == rb.configuration;
    const double m_dm = median(dm), m_pso = median(pso);
    return {m_dm <= m_pso && identical,
            fmt("median f DM-PSO %.1f vs PSO %.1f; p=0 trace %s", m_dm, m_pso,
                identical ? "bit-identical" : "differs")};
}

Outcome ac7() {
    std::size_t ok = 0, total = 0;
    std::string failed;
    for (const char* bin : {TEST_SCENARIO, TEST_BEAMFORMING, TEST_CHANNEL, TEST_ENERGY, TEST_NETFLOW, TEST_OPTIMIZER,
                            TEST_HARNESS}) {
        ++total;
        const std::string cmd = std::string("\"") + bin + "\" --gtest_brief=1 > /dev/null 2>&1";
        if (std::system(cmd.c_str()) == 0)
            ++ok;
        else
            failed += " " + fs::path(bin).filename().string();
    }
    return {ok == total, fmt("%zu/%zu equation suites pass%s", ok, total, failed.empty() ? "" : (";" + failed).c_str())};
}

Outcome ac8() {
    const auto t0 = Clock::now();
    const auto& d = desk();
    const auto best = sr::optimize_trial(d.plan, d.s, sr::OptimizerConfig{}, d.s.seed);
    const auto jitter = sr::jitter_curve(best.configuration, d.plan, d.s, {0.2, 0.4, 0.6, 0.8, 1.0}, ac8_trials, d.s.seed);
    const auto phase =
        sr::phase_error_curve(best.configuration, d.plan, d.s, {INFINITY, 16, 8, 4, 2, 1, 0}, ac8_trials, d.s.seed);
    const auto ji = inversions(jitter.mean_rate_bps), pi = inversions(phase.mean_rate_bps);
    const double secs = seconds_since(t0);
    return {ji <= ac8_max_inversions && pi <= ac8_max_inversions && secs < ac8_seconds,
            fmt("jitter means [%s] (%zu inversions); kappa means [%s] (%zu inversions); %.1fs",
                join(jitter.mean_rate_bps).c_str(), ji, join(phase.mean_rate_bps).c_str(), pi, secs)};
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (!e.is_regular_file()) continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        out[fs::relative(e.path(), dir).string()] = ss.str();
    }
    return out;
}

Outcome ac9() {
    const fs::path root = fs::temp_directory_path() / "swarmrelay_ac9";
    fs::remove_all(root);
    fs::create_directories(root);
    const std::string desk_path = testsupport::scenario_path("desk.json");
    const std::vector<std::string> invocations = {
        "plan --scenario " + desk_path,
        "optimize --scenario " + desk_path + " --iters 60 --pop 30",
        "compare-routing --scenario " + desk_path,
        "compare-optimizers --scenario " + desk_path + " --trials 2 --iters 30 --pop 20",
        "robustness --scenario " + desk_path + " --trials 5 --iters 60 --pop 30 --jitter-max 0.2,0.6 --tikhonov-kappa inf,4,0",
        "stability --scenario " + desk_path + " --trials 3 --iters 40 --pop 20 --seed 11",
    };
    std::size_t ok = 0;
    std::string failed;
    for (std::size_t i = 0; i < invocations.size(); ++i) {
        std::vector<std::map<std::string, std::string>> outputs;
        bool ran = true;
        for (const char* threads : {"1", "1", "2", "4"}) {
            const fs::path out = root / fmt("run%zu_%zu", i, outputs.size());
            const std::string cmd = std::string("\"") + CLI_PATH + "\" " + invocations[i] + " --threads " + threads +
                                    " --out " + out.string() + " > " + (out.string() + ".stdout") + " 2>&1";
            ran &= std::system(cmd.c_str()) == 0;
            outputs.push_back(ran ? read_tree(out) : std::map<std::string, std::string>{});
        }
        bool same = ran && !outputs[0].empty();
        for (const auto& o : outputs) same &= o == outputs[0];
        if (same)
            ++ok;
        else
            failed += " " + invocations[i].substr(0, invocations[i].find(' '));
    }
    fs::remove_all(root);
    return {ok == invocations.size(),
            fmt("%zu/%zu invocations byte-identical across repeats and threads 1/2/4%s", ok, invocations.size(),
                failed.empty() ? "" : (";" + failed).c_str())};
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"AC1", ac1}, {"AC2", ac2}, {"AC3", ac3}, {"AC4", ac4}, {"AC5", ac5},
        {"AC6", ac6}, {"AC7", ac7}, {"AC8", ac8}, {"AC9", ac9}};
    bool all = true;
    for (const auto& [name, run] : criteria) {
        Outcome o{false, ""};
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        all &= o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
    }
    return all ? 0 : 1;
}
