#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "test_support.hpp"

namespace sr = swarmrelay;

namespace {

const double lambda = sr::ChannelParams{}.wavelength_m();

std::size_t inversions(const std::vector<double>& v) {
    std::size_t n = 0;
    for (std::size_t i = 1; i < v.size(); ++i) n += v[i] > v[i - 1];
    return n;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("swarmrelay_test_" + name);
    std::filesystem::remove_all(p);
    return p;
}

struct DeskFixture {
    sr::Scenario s = testsupport::scenario("desk.json");
    sr::Plan plan = sr::plan_network(s);
    sr::TrialRecord best = sr::optimize_trial(plan, s, sr::OptimizerConfig{}, s.seed);
};

const DeskFixture& desk() {
    static const DeskFixture f;
    return f;
}

}  // namespace

TEST(Pipeline, WorkedExampleBoundIsTwo) {
    std::ifstream in(testsupport::scenario_path("worked_flow_graph.json"));
    const auto plan = sr::plan_network(sr::flow_graph_from_json(nlohmann::json::parse(in)));
    EXPECT_EQ(plan.bound(), 2u);
}

TEST(Pipeline, PlanOnlyReportHasNoTrials) {
    const auto s = testsupport::scenario("desk.json");
    const auto plan = sr::plan_network(s);
    sr::ExperimentReport r{"plan", s.seed, plan.bound(), sr::flow_report(plan.graph, plan.flow, plan.network), {}, {}, {}};
    const auto j = sr::to_json(r);
    EXPECT_EQ(j.at("bound_bps").get<std::uint64_t>(), plan.bound());
    EXPECT_FALSE(j.at("plan").at("optimized_network").at("links").empty());
    EXPECT_TRUE(j.at("runs").empty());
}

TEST(Pipeline, ChainGapWithinTwoPercent) {
    const auto s = testsupport::scenario("chain.json");
    const auto plan = sr::plan_network(s);
    const auto t = sr::optimize_trial(plan, s, sr::OptimizerConfig{}, s.seed);
    EXPECT_LE(t.achieved_rate_bps, plan.bound());
    EXPECT_GE(static_cast<double>(t.achieved_rate_bps), 0.98 * static_cast<double>(plan.bound()));
}

TEST(Pipeline, AchievedRateNeverExceedsBound) {
    const auto& d = desk();
    EXPECT_LE(d.best.achieved_rate_bps, d.plan.bound());
    EXPECT_LE(d.best.achieved_rate_bps, d.best.unrouted_rate_bps);
}

TEST(Jitter, ZeroJitterUnchanged) {
    const auto& d = desk();
    sr::RandomStream rng(1);
    EXPECT_EQ(sr::apply_position_jitter(d.best.configuration, 0.0, rng), d.best.configuration);
}

TEST(Jitter, DisplacementBoundedAndCurrentsKept) {
    const auto& d = desk();
    sr::RandomStream rng(2);
    for (double m : {0.2, 1.0}) {
        const auto moved = sr::apply_position_jitter(d.best.configuration, m, rng);
        for (std::size_t k = 0; k < moved.swarms.size(); ++k) {
            EXPECT_EQ(moved.swarms[k].currents, d.best.configuration.swarms[k].currents);
            for (std::size_t u = 0; u < moved.swarms[k].size(); ++u) {
                const auto delta = moved.swarms[k].positions[u] - d.best.configuration.swarms[k].positions[u];
                EXPECT_LE(std::abs(delta.x), m);
                EXPECT_LE(std::abs(delta.y), m);
                EXPECT_LE(std::abs(delta.z), m);
            }
        }
    }
    EXPECT_THROW(sr::apply_position_jitter(d.best.configuration, -1.0, rng), sr::RangeError);
}

TEST(Jitter, TruncatedGaussianSpread) {
    sr::RandomStream rng(3);
    double s2 = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double z = sr::unit_jitter(rng, sr::JitterDistribution::TruncatedGaussian);
        ASSERT_LE(std::abs(z), 1.0);
        s2 += z * z;
    }
    // Variance of N(0, 1/9) truncated at 3 sigma.
    EXPECT_NEAR(s2 / n, (1.0 / 9.0) * 0.97334, 0.003);
}

TEST(Jitter, SmallJitterDegradesRate) {
    const auto& d = desk();
    const auto curve = sr::jitter_curve(d.best.configuration, d.plan, d.s, {0.0, 0.05, 0.2}, 30, 99);
    EXPECT_EQ(curve.mean_rate_bps[0], static_cast<double>(d.best.achieved_rate_bps));
    EXPECT_EQ(inversions(curve.mean_rate_bps), 0u);
    EXPECT_LT(curve.mean_rate_bps[2], curve.mean_rate_bps[0]);
}

TEST(PhaseErrors, InfiniteKappaMatchesErrorFree) {
    const auto& d = desk();
    sr::RandomStream rng(4);
    const auto rates = sr::phase_error_link_rates(d.best.configuration, d.plan.network, d.s, INFINITY, rng);
    EXPECT_EQ(rates, d.best.breakdown.link_rates);
    EXPECT_EQ(sr::evaluate_with_phase_errors(d.best.configuration, d.plan.network, d.s, INFINITY, rng),
              d.best.achieved_rate_bps);
}

TEST(PhaseErrors, MeanRateDecreasesWithKappa) {
    const auto& d = desk();
    const auto curve = sr::phase_error_curve(d.best.configuration, d.plan, d.s, {INFINITY, 16, 8, 4, 2, 1, 0}, 30, 5);
    EXPECT_LE(inversions(curve.mean_rate_bps), 1u);
    EXPECT_LT(curve.mean_rate_bps.back(), curve.mean_rate_bps.front());
}

TEST(PhaseErrors, CoherenceMatchesCircularStatistics) {
    const auto fx = testsupport::fixture("stats.json").at("expected_coherence");
    for (const auto& [n_text, by_kappa] : fx.items()) {
        const std::size_t n = std::stoul(n_text);
        std::vector<sr::Position3> pos;
        for (std::size_t u = 0; u < n; ++u) pos.push_back({2.0 * lambda * static_cast<double>(u), 0, 0});
        const sr::ArrayState a{pos, std::vector<double>(n, 1.0), lambda};
        const sr::SphericalDirection broadside{sr::pi / 2, sr::pi / 2};
        for (const auto& [k_text, expected] : by_kappa.items()) {
            const double kappa = std::stod(k_text);
            sr::RandomStream rng(sr::derive_seed(6, {n, static_cast<std::uint64_t>(kappa)}));
            const int trials = 20000;
            double multiplier = 0.0;
            std::vector<double> zeta(n);
            for (int t = 0; t < trials; ++t) {
                for (auto& z : zeta) z = sr::sample_tikhonov(kappa, rng);
                multiplier += a.power_weight() * sr::gain_with_phase_errors(a, broadside, zeta, sr::ClosedFormIntegral{}, 1.0);
            }
            EXPECT_NEAR(multiplier / trials / expected.get<double>(), 1.0, 0.03) << n << " " << kappa;
        }
    }
}

TEST(Replicate, SingleTrialAndDeterminism) {
    const auto s = testsupport::scenario("chain.json");
    const auto plan = sr::plan_network(s);
    sr::OptimizerConfig cfg;
    cfg.population = 20;
    cfg.iterations = 20;
    cfg.neighbors = 5;
    const auto one = sr::replicate(plan, s, cfg, 1, 77);
    ASSERT_EQ(one.size(), 1u);
    EXPECT_EQ(one[0].seed, sr::trial_seed(77, 0));
    sr::ExperimentReport r{"stability", 77, plan.bound(), {}, {{"DM-PSO", one}}, {}, {}};
    EXPECT_EQ(sr::to_json(r).at("runs").at(0).at("summary").at("cdf_part1").size(), 1u);
    EXPECT_EQ(sr::replicate(plan, s, cfg, 3, 77), sr::replicate(plan, s, cfg, 3, 77));
    EXPECT_THROW(sr::replicate(plan, s, cfg, 0, 77), sr::RangeError);
}

TEST(Summary, Statistics) {
    const auto s = sr::summarize({4, 1, 3, 2});
    EXPECT_EQ(s.mean, 2.5);
    EXPECT_EQ(s.median, 2.5);
    EXPECT_EQ(s.min, 1.0);
    EXPECT_EQ(s.max, 4.0);
    EXPECT_EQ(sr::cdf_samples({3, 1, 2}), (std::vector<double>{1, 2, 3}));
}

TEST(Export, EmptyReportGivesHeaderOnlyCsv) {
    const auto dir = scratch("empty");
    const auto files = sr::export_results(sr::ExperimentReport{}, dir);
    EXPECT_EQ(files, (std::vector<std::string>{"report.json", "trials.csv"}));
    EXPECT_EQ(line_count(read_file(dir / "trials.csv")), 1u);
}

TEST(Export, ReportRoundTrip) {
    const auto& d = desk();
    sr::ExperimentReport r{"robustness", 1, d.plan.bound(), sr::flow_report(d.plan.graph, d.plan.flow, d.plan.network),
                           {{"DM-PSO", {d.best}}}, sr::compare_routing(d.plan, {}), {}};
    r.curves.push_back(sr::phase_error_curve(d.best.configuration, d.plan, d.s, {INFINITY, 1}, 3, 5));
    const auto dir = scratch("roundtrip");
    sr::export_results(r, dir);
    const auto back = sr::report_from_json(nlohmann::json::parse(read_file(dir / "report.json")));
    EXPECT_EQ(back, r);
}

TEST(Export, ConvergenceRowsMatchIterations) {
    const auto& d = desk();
    sr::ExperimentReport r{"optimize", 1, d.plan.bound(), {}, {{"DM-PSO", {d.best}}}, {}, {}};
    const auto dir = scratch("convergence");
    sr::export_results(r, dir);
    EXPECT_EQ(line_count(read_file(dir / "convergence.csv")), 1 + sr::OptimizerConfig{}.iterations + 1);
}

TEST(Export, NumbersRoundTrip) {
    for (double v : {0.1, 1.0 / 3.0, 4.48e6, 1e-300})
        EXPECT_EQ(std::stod(sr::format_number(v)), v);
    EXPECT_EQ(sr::format_number(std::uint64_t{32544070}), "32544070");
}

TEST(Routing, CompareRoutingDominance) {
    const auto s = testsupport::scenario("case2.json");
    const auto plan = sr::plan_network(s);
    std::vector<sr::Position3> pos;
    for (std::size_t v = 0; v < s.node_count(); ++v) pos.push_back(s.node_position(v));
    for (const auto& r : sr::compare_routing(plan, pos))
        if (r.error.empty()) { EXPECT_LE(r.bottleneck_bps, plan.bound()) << r.protocol; }
}
