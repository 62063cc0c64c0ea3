#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "arbreach/experiment.hpp"

using namespace arbreach;

namespace {

const char* kBase = R"(battery.e_min = 0
battery.e_max = 10
battery.rate = 2
battery.e0 = 5
battery.horizon = 24
bands = 5:7, 3:8
e0_sweep = 1, 5, 9
start_steps = 8, 6, 4, 2
data.synthetic_days = 60
kappa.n_sims = 20
cqr.epochs = 60
)";

std::map<std::pair<double, double>, double> csv_mass_by_t(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    std::map<std::pair<double, double>, double> out;
    while (std::getline(in, line)) {
        double t, e, m;
        char c1, c2;
        std::istringstream row(line);
        row >> t >> c1 >> e >> c2 >> m;
        out[{t, e}] = m;
    }
    return out;
}

} // namespace

TEST(Config, Defaults) {
    auto c = parse_experiment_config("data.synthetic_days = 10\n");
    EXPECT_EQ(c.battery.e_max, 10.0);
    EXPECT_EQ(c.bands.size(), 2u);
    EXPECT_EQ(c.start_steps, (std::vector<int>{8, 6, 4, 2}));
    EXPECT_TRUE(c.k_grid.empty());
    EXPECT_EQ(c.post_stop, PostStop::full_control);
}

TEST(Config, ListsAndModes) {
    auto c = parse_experiment_config(std::string(kBase) +
                                     "k_grid = 1:1, 2:3\npolicy.threshold_mode = static\npolicy.alpha = 2.5\n");
    ASSERT_EQ(c.k_grid.size(), 2u);
    EXPECT_EQ(c.k_grid[1], (BudgetPair{2, 3}));
    EXPECT_EQ(c.threshold_mode, ThresholdMode::static_schedule);
    EXPECT_EQ(c.ratios.alpha, 2.5);
    EXPECT_FALSE(c.ratios.omega);
}

TEST(Config, RejectsUnknownKey) {
    try {
        parse_experiment_config("battery.rate = 2\nbatery.e_max = 3\n");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("batery.e_max"), std::string::npos);
    }
}

TEST(Config, RejectsInvalidValues) {
    EXPECT_THROW(parse_experiment_config("e0_sweep = 1, 12\n"), ValidationError);
    EXPECT_THROW(parse_experiment_config("start_steps = 30\n"), ValidationError);
    EXPECT_THROW(parse_experiment_config("epsilon = 1\n"), ValidationError);
    EXPECT_THROW(parse_experiment_config("battery.rate = -1\n"), ValidationError);
    EXPECT_THROW(parse_experiment_config("k_grid = 1.5:1\n"), ValidationError);
    EXPECT_THROW(parse_experiment_config("seed = x\n"), ValidationError);
    EXPECT_THROW(parse_experiment_config("epsilon = 0.1\nepsilon = 0.2\n"), ValidationError);
    EXPECT_THROW(parse_experiment_config("no equals sign\n"), ValidationError);
}

TEST(Config, MissingFile) { EXPECT_THROW(load_experiment_config("/nonexistent/x.cfg"), DataError); }

TEST(Config, NoDataSource) {
    auto c = parse_experiment_config("battery.rate = 2\n");
    EXPECT_THROW(run_experiment(c), DataError);
}

TEST(Experiment, CountingReportMatchesDp) {
    auto c = parse_experiment_config(kBase);
    auto r = run_experiment(c);
    const auto& rows = r["counting"];
    ASSERT_EQ(rows.size(), 24u);
    for (const auto& row : rows) {
        auto band = TargetBand::from_range(row["band"][0].get<double>(), row["band"][1].get<double>());
        auto ref = count_feasible_trajectories(c.battery.with_e0(row["e0"].get<double>()), row["steps"].get<int>(), band);
        EXPECT_EQ(row["in_band"].get<std::uint64_t>(), ref.in_band);
        EXPECT_EQ(row["total"].get<std::uint64_t>(), ref.total);
    }
    EXPECT_NEAR(rows[0]["pct"].get<double>(), 46.66, 0.01);
}

TEST(Experiment, EmptyGridHasOnlyCountingAndCqr) {
    auto r = run_experiment(parse_experiment_config(kBase));
    EXPECT_FALSE(r.contains("cells"));
    EXPECT_TRUE(r.contains("counting"));
    EXPECT_TRUE(r.contains("cqr"));
}

TEST(Experiment, EveryCellPresent) {
    auto r = run_experiment(parse_experiment_config(std::string(kBase) + "k_grid = 1:1, 2:2\n"));
    ASSERT_EQ(r["cells"].size(), 24u);
    for (const auto& cell : r["cells"]) {
        ASSERT_FALSE(cell.contains("error")) << cell.dump();
        ASSERT_EQ(cell["budgets"].size(), 2u);
        const double p = cell["p_band"].get<double>();
        EXPECT_GE(p, -1e-12);
        EXPECT_LE(p, 1.0 + 1e-12);
    }
}

TEST(Experiment, DeterministicModuloTimestamp) {
    auto c = parse_experiment_config(std::string(kBase) + "k_grid = 1:1, 2:2\nworkers = 4\n");
    auto a = without_timestamp(run_experiment(c)).dump();
    c.workers = 1;
    auto b = without_timestamp(run_experiment(c)).dump();
    EXPECT_EQ(a, b);
}

TEST(Experiment, ConfigHashMatchesText) {
    const std::string text = std::string(kBase) + "# comment\n";
    auto r = run_experiment(parse_experiment_config(text));
    EXPECT_EQ(r["provenance"]["config_sha256"].get<std::string>(), sha256_hex(text));
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Experiment, RevalidatesBeforeRunning) {
    auto c = parse_experiment_config(std::string(kBase) + "k_grid = 1:1\n");
    c.kappa_sims = 0;
    EXPECT_THROW(run_experiment(c), ValidationError);
}

TEST(Experiment, SingleCell) {
    auto c = parse_experiment_config(std::string(kBase) + "k_grid = 0:0, 1:1\n");
    ExperimentData data = prepare_data(c);
    auto cell = run_cell(c, data, 5.0, TargetBand::from_range(5, 7), 4, 1);
    EXPECT_EQ(cell["start_step"].get<int>(), 21);
    // The idle pair never leaves e0.
    EXPECT_DOUBLE_EQ(cell["budgets"][0]["p_band"].get<double>(), 1.0);
    EXPECT_DOUBLE_EQ(cell["budgets"][0]["profit"]["max"].get<double>(), 0.0);
    EXPECT_EQ(cell["budgets"][1]["Q"].size(), 4u);
}

TEST(PlotData, HeatmapOfUniformTwoStepExample) {
    BatteryParams p{0, 10, 2, 5, 2};
    auto dist = propagate(p, {{1.0 / 3, 1.0 / 3, 1.0 / 3}, {1.0 / 3, 1.0 / 3, 1.0 / 3}}, 2, 2);
    nlohmann::ordered_json report;
    report["cells"] = nlohmann::ordered_json::array({{{"budgets", nlohmann::ordered_json::array({{{"dist", to_json(dist)}}})}}});
    std::ostringstream os;
    emit_plot_data(report, "soc-heatmap", os);
    auto rows = csv_mass_by_t(os.str());
    std::map<double, int> count;
    std::map<double, double> total;
    for (const auto& [key, m] : rows) {
        count[key.first] += 1;
        total[key.first] += m;
    }
    EXPECT_EQ(count[1], 3);
    EXPECT_EQ(count[2], 5);
    EXPECT_NEAR(total[1], 1.0, 1e-9);
    EXPECT_NEAR(total[2], 1.0, 1e-9);
    EXPECT_NEAR((rows[{2.0, 5.0}]), 1.0 / 3, 1e-12);
    EXPECT_NEAR((rows[{2.0, 1.0}]), 1.0 / 9, 1e-12);
}

TEST(PlotData, ReportCurves) {
    auto r = run_experiment(parse_experiment_config(std::string(kBase) + "k_grid = 1:1, 2:2\n"));
    std::ostringstream q;
    emit_plot_data(r, "Qt-curve", q, {0, 1});
    std::size_t lines = 0;
    for (char ch : q.str()) lines += ch == '\n';
    EXPECT_EQ(lines, 1u + 8u);  // header plus one row per step of the 8-step cell

    std::ostringstream heat;
    emit_plot_data(r, "soc-heatmap", heat, {5, 0});
    std::map<double, double> total;
    for (const auto& [key, m] : csv_mass_by_t(heat.str())) total[key.first] += m;
    for (const auto& [t, s] : total) EXPECT_NEAR(s, 1.0, 1e-9) << "t=" << t;

    std::ostringstream profit, coverage;
    emit_plot_data(r, "profit-curve", profit);
    emit_plot_data(r, "coverage-curve", coverage);
    EXPECT_EQ(profit.str().rfind("e0,band_lo", 0), 0u);
    EXPECT_EQ(coverage.str().rfind("e0,marginal_coverage", 0), 0u);
}

TEST(PlotData, Errors) {
    nlohmann::ordered_json empty = nlohmann::ordered_json::object();
    std::ostringstream os;
    try {
        emit_plot_data(empty, "histogram", os);
        FAIL();
    } catch (const ValidationError& e) {
        for (const auto& k : plot_kinds()) EXPECT_NE(std::string(e.what()).find(k), std::string::npos) << k;
    }
    EXPECT_THROW(emit_plot_data(empty, "soc-heatmap", os), DataError);
    EXPECT_THROW(emit_plot_data(empty, "coverage-curve", os), DataError);
}

TEST(ParallelFor, VisitsEachIndexOnce) {
    std::vector<int> hits(1000, 0);
    parallel_for(hits.size(), 8, [&](std::size_t i) { hits[i] += 1; });
    for (int h : hits) EXPECT_EQ(h, 1);
}
