// Command-line front end: ingestion, thresholds, simulation, reachability,
// stopping times, trajectory counts, CQR and full backtests.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "arbreach/arbreach.hpp"

using namespace arbreach;
using json = nlohmann::ordered_json;

namespace {

/// stdout unless a path was given.
class Output {
public:
    explicit Output(const std::string& path) {
        if (path.empty()) return;
        file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
        if (!*file_) throw DataError("cannot open output file '" + path + "'");
    }
    std::ostream& stream() { return file_ ? *file_ : std::cout; }

private:
    std::unique_ptr<std::ofstream> file_;
};

void write_summary(const json& j, const std::string& path) {
    if (path.empty()) {
        std::cerr << j.dump() << '\n';
        return;
    }
    std::ofstream os(path);
    if (!os) throw DataError("cannot open summary file '" + path + "'");
    os << j.dump(2) << '\n';
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw DataError("'" + path + "' is not valid JSON: " + e.what());
    }
}

/// "lo,hi" or "lo:hi".
std::pair<double, double> parse_two(const std::string& what, std::string s) {
    for (auto& c : s)
        if (c == ':') c = ',';
    auto items = KeyValues::split_list(s);
    if (items.size() != 2) throw ValidationError(what + ": expected 'a,b', got '" + s + "'");
    auto a = detail::parse_double(items[0]);
    auto b = detail::parse_double(items[1]);
    if (!a || !b) throw ValidationError(what + ": not a number pair: '" + s + "'");
    return {*a, *b};
}

TargetBand parse_band(const std::string& s) {
    auto [lo, hi] = parse_two("--band", s);
    return TargetBand::from_range(lo, hi);
}

/// Config file plus command-line overrides. Without a file every key takes its default.
struct ConfigArgs {
    std::string path;
    std::optional<std::size_t> synthetic;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> workers;

    void add_to(CLI::App* app, bool with_workers = false) {
        app->add_option("--config,--params", path, "key = value experiment config");
        app->add_option("--synthetic", synthetic, "use N seeded synthetic lognormal days instead of the configured data");
        app->add_option("--seed", seed, "override the config seed");
        if (with_workers) app->add_option("--workers", workers, "worker threads (0: available parallelism)");
    }

    ExperimentConfig load() const {
        std::string text;
        KeyValues kv;
        if (!path.empty()) {
            text = read_file(path);
            std::istringstream in(text);
            kv = KeyValues::parse(in, path);
        }
        if (synthetic) {
            kv.set("data.synthetic_days", std::to_string(*synthetic));
            kv.set("data.prices", "");
            kv.set("data.days", "");
        }
        if (seed) kv.set("seed", std::to_string(*seed));
        if (workers) kv.set("workers", std::to_string(*workers));
        return experiment_config_from(kv, text);
    }
};

struct BudgetArgs {
    int k_ch = 1;
    int k_dis = 1;
    void add_to(CLI::App* app) {
        app->add_option("--kch", k_ch, "charge budget")->capture_default_str();
        app->add_option("--kdis", k_dis, "discharge budget")->capture_default_str();
    }
};

/// Price-driven action probabilities, or constant ones from --probs.
struct ReachInputs {
    ConfigArgs config;
    BudgetArgs k;
    int steps = 0;
    std::optional<double> e0;
    std::string probs;
    std::string band = "5,7";

    void add_to(CLI::App* app) {
        config.add_to(app);
        k.add_to(app);
        app->add_option("--steps", steps, "decision steps (last n hours of the horizon; default: whole horizon)");
        app->add_option("--e0", e0, "initial SoC (default: battery.e0)");
        app->add_option("--probs", probs, "constant 'p_charge,p_discharge' instead of prices");
        app->add_option("--band", band, "target band 'lo,hi'")->capture_default_str();
    }

    struct Resolved {
        ExperimentConfig cfg;
        BatteryParams params;
        int steps = 0;
        int first = 1;
        std::optional<ExperimentData> data;
        std::optional<ThresholdRule> rule;
        std::optional<ActionProbs> constant;

        BranchProbs branch_probs() const {
            if (constant) {
                auto p = *constant;
                return [p](int, int, int, double) { return p; };
            }
            return policy_branch_probs(*rule, data->distribution, first);
        }
    };

    Resolved resolve() const {
        Resolved r;
        r.cfg = config.load();
        r.params = r.cfg.battery;
        if (e0) r.params = r.params.with_e0(*e0);
        r.params.validate();
        r.steps = steps > 0 ? steps : r.params.horizon;
        if (!probs.empty()) {
            auto [a, b] = parse_two("--probs", probs);
            detail::require(a >= 0 && b >= 0 && a + b <= 1.0 + 1e-12, "--probs: need p_charge, p_discharge >= 0 with sum <= 1");
            r.constant = ActionProbs{a, b, std::max(0.0, 1.0 - a - b)};
        } else {
            detail::require(r.steps <= r.params.horizon, "--steps exceeds the horizon");
            r.first = r.params.horizon - r.steps + 1;
            r.data = prepare_data(r.cfg);
            r.rule.emplace(policy_config(r.cfg, {k.k_ch, k.k_dis}), r.data->envelope, r.params);
        }
        return r;
    }
};

void cmd_ingest(const std::string& prices, int horizon, std::optional<std::size_t> synthetic, std::uint64_t seed,
                const std::string& out, const std::string& summary) {
    WarningLog warnings;
    std::vector<DayPrices> days;
    std::size_t points = 0;
    if (synthetic) {
        days = synthetic_days(*synthetic, horizon, seed);
        points = *synthetic * static_cast<std::size_t>(horizon);
    } else {
        if (prices.empty()) throw ValidationError("ingest: give --prices <csv> or --synthetic <N>");
        auto series = load_price_csv(prices);
        points = series.size();
        days = slice_days(series, horizon, &warnings);
    }
    Output o(out);
    write_day_matrix(o.stream(), days);
    write_summary({{"n_points", points}, {"n_days", days.size()}, {"horizon", horizon}, {"warnings", warnings}}, summary);
}

void cmd_thresholds(double lmin, double lmax, int kch, int kdis, std::optional<double> alpha,
                    std::optional<double> omega, const std::string& mode_name, int horizon, double e0,
                    const std::string& out) {
    const ThresholdMode mode = parse_threshold_mode(mode_name);
    const RatioOverride ratios{alpha, omega};
    Output o(out);
    auto& os = o.stream();
    os << std::setprecision(17) << "index,side,value\n";
    if (mode == ThresholdMode::static_schedule) {
        auto s = make_static_schedule(lmin, lmax, kch, kdis, ratios);
        for (std::size_t j = 0; j < s.charge.size(); ++j) os << j + 1 << ",charge," << s.charge[j] << '\n';
        for (std::size_t i = 0; i < s.discharge.size(); ++i) os << i + 1 << ",discharge," << s.discharge[i] << '\n';
        return;
    }
    // Thresholds met when each side activates one after another at the first step.
    BatteryParams p{0.0, 2.0 * std::max(kch, kdis) + 2.0, 1.0, e0 < 0 ? std::max(kch, kdis) + 1.0 : e0, horizon};
    ThresholdRule rule({kch, kdis, mode, ratios}, PriceEnvelope::constant(lmin, lmax, horizon), p);
    PolicyState st = PolicyState::initial(p, kch, kdis);
    for (int j = 0; j < kch; ++j) {
        auto th = rule.next(st).charge;
        if (!th) break;
        os << j + 1 << ",charge," << *th << '\n';
        st.ch.history.push_back({1, *th, *th});
    }
    st = PolicyState::initial(p, kch, kdis);
    for (int i = 0; i < kdis; ++i) {
        auto th = rule.next(st).discharge;
        if (!th) break;
        os << i + 1 << ",discharge," << *th << '\n';
        st.dis.history.push_back({1, *th, *th});
    }
}

void cmd_simulate(const ConfigArgs& config, const BudgetArgs& k, const std::string& day_path,
                  std::optional<double> e0, int start, const std::string& out, const std::string& summary) {
    auto cfg = config.load();
    BatteryParams params = e0 ? cfg.battery.with_e0(*e0) : cfg.battery;
    params.validate();
    auto series = load_price_csv(day_path);
    if (static_cast<int>(series.size()) != params.horizon)
        throw DataError("simulate: day file holds " + std::to_string(series.size()) + " prices, horizon is " +
                        std::to_string(params.horizon));
    DayPrices day{day_path, series.prices};
    auto data = prepare_data(cfg);
    auto traj = run_policy(day, params, policy_config(cfg, {k.k_ch, k.k_dis}), data.envelope, start);
    Output o(out);
    auto& os = o.stream();
    os << std::setprecision(17) << "t,price,action,soc,cashflow\n";
    for (std::size_t i = 0; i < traj.steps(); ++i)
        os << traj.start_step + static_cast<int>(i) << ',' << traj.prices[i] << ',' << traj.actions[i] << ','
           << traj.soc_path[i] << ',' << traj.cash_flows[i] << '\n';
    write_summary({{"profit", traj.profit}, {"charges", traj.charges()}, {"discharges", traj.discharges()}}, summary);
}

void cmd_reach(const ReachInputs& in, const std::string& mode_name, const std::string& out,
               const std::string& summary) {
    const auto mode = parse_propagation_mode(mode_name);
    const TargetBand band = parse_band(in.band);
    auto r = in.resolve();
    band.validate(r.params);
    std::optional<SocDistribution> dist;
    if (mode == PropagationMode::augmented) {
        dist = propagate_branches(r.params, r.steps, in.k.k_ch, in.k.k_dis, r.branch_probs());
    } else {
        std::vector<ActionProbs> probs = r.constant ? std::vector<ActionProbs>(static_cast<std::size_t>(r.steps), *r.constant)
                                                    : expected_order_probs(*r.rule, r.data->distribution, r.first);
        dist = propagate(r.params, probs, in.k.k_ch, in.k.k_dis, PropagationMode::marginal);
    }
    Output o(out);
    auto& os = o.stream();
    os << std::setprecision(17) << "t,e,mass\n";
    const auto grid = dist->grid();
    for (int t = 0; t <= dist->steps(); ++t)
        for (std::size_t i = 0; i < grid.size(); ++i)
            if (dist->at(t)[i] != 0.0) os << t << ',' << grid[i] << ',' << dist->at(t)[i] << '\n';
    write_summary({{"p_band", terminal_band_probability(*dist, band)}, {"grid", grid}, {"mode", to_string(mode)}},
                  summary);
}

void cmd_stop_time(const ReachInputs& in, double epsilon, const std::string& post_stop, const std::string& out,
                   const std::string& summary) {
    const TargetBand band = parse_band(in.band);
    auto r = in.resolve();
    auto res = stopping_time(r.params, r.steps, in.k.k_ch, in.k.k_dis, r.branch_probs(), band, epsilon,
                             parse_post_stop(post_stop));
    Output o(out);
    auto& os = o.stream();
    os << std::setprecision(17) << "t,Q\n";
    for (std::size_t t = 0; t < res.Q.size(); ++t) os << t + 1 << ',' << res.Q[t] << '\n';
    write_summary({{"tau_star", res.tau_star ? json(*res.tau_star) : json(nullptr)},
                   {"epsilon", epsilon},
                   {"p_band", terminal_band_probability(res.dist, band)}},
                  summary);
}

void cmd_table1(const ConfigArgs& config, std::vector<double> e0s, const std::vector<std::string>& bands,
                std::vector<int> steps, const std::string& out) {
    auto cfg = config.load();
    if (!e0s.empty()) cfg.e0_sweep = e0s;
    if (!bands.empty()) {
        cfg.bands.clear();
        for (const auto& b : bands) cfg.bands.push_back(parse_band(b));
    }
    if (!steps.empty()) cfg.start_steps = steps;
    cfg.validate();
    Output o(out);
    auto& os = o.stream();
    os << std::setprecision(17) << "e0,band_lo,band_hi,steps,in_band,total,pct\n";
    for (const auto& row : counting_block(cfg))
        os << row["e0"].get<double>() << ',' << row["band"][0].get<double>() << ',' << row["band"][1].get<double>()
           << ',' << row["steps"].get<int>() << ',' << row["in_band"].get<std::uint64_t>() << ','
           << row["total"].get<std::uint64_t>() << ',' << row["pct"].get<double>() << '\n';
}

/// Training, calibration and test rows of the configured data, pooled over e0_sweep.
struct CqrData {
    ExperimentConfig cfg;
    ExperimentData data;
    std::vector<LabeledDay> rows(const std::vector<DayPrices>& days) const { return label_sweep(days, cfg, data.envelope); }
};

CqrData cqr_data(const ConfigArgs& config, std::optional<double> epsilon, const std::string& split) {
    CqrData d;
    d.cfg = config.load();
    if (epsilon) d.cfg.cqr.epsilon = *epsilon;
    if (!split.empty()) {
        auto r = KeyValues::split_list(split);
        if (r.size() != 3) throw ValidationError("--split: expected 'train,calib,test'");
        d.cfg.split = {std::stod(r[0]), std::stod(r[1]), std::stod(r[2])};
    }
    d.cfg.validate();
    d.data = prepare_data(d.cfg);
    return d;
}

ConformalModel load_model(const std::string& path) { return conformal_model_from_json(read_json(path)); }

int run(int argc, char** argv) {
    CLI::App app{"Battery arbitrage thresholds, SoC reachability and conformal terminal-SoC intervals.\n"
                 "Every setting comes from flags or the --config file; no environment variables are read."};
    app.require_subcommand(1);
    std::string out, summary;
    auto add_out = [&](CLI::App* c) {
        c->add_option("--out", out, "output path (default: stdout)");
        c->add_option("--summary", summary, "JSON summary path (default: stderr)");
    };

    // ingest
    auto* ingest = app.add_subcommand("ingest", "timestamp,price CSV to a day matrix");
    std::string prices;
    int horizon = 24;
    std::optional<std::size_t> ingest_synth;
    std::uint64_t ingest_seed = 7;
    ingest->add_option("--prices", prices, "hourly timestamp,price CSV");
    ingest->add_option("--horizon", horizon, "hours per day")->capture_default_str();
    ingest->add_option("--synthetic", ingest_synth, "generate N seeded lognormal days instead");
    ingest->add_option("--seed", ingest_seed, "synthetic seed")->capture_default_str();
    add_out(ingest);
    ingest->callback([&] { cmd_ingest(prices, horizon, ingest_synth, ingest_seed, out, summary); });

    // thresholds
    auto* thr = app.add_subcommand("thresholds", "threshold schedule as CSV (index, side, value)");
    double lmin = 0, lmax = 0, thr_e0 = -1;
    int kch = 1, kdis = 1, thr_horizon = 24;
    std::optional<double> alpha, omega;
    std::string thr_mode = "static";
    thr->add_option("--lmin", lmin, "lowest price")->required();
    thr->add_option("--lmax", lmax, "highest price")->required();
    thr->add_option("--kch", kch, "charge budget")->capture_default_str();
    thr->add_option("--kdis", kdis, "discharge budget")->capture_default_str();
    thr->add_option("--alpha", alpha, "charge-side ratio override");
    thr->add_option("--omega", omega, "discharge-side ratio override");
    thr->add_option("--mode", thr_mode, "static|timedep|feas")->capture_default_str();
    thr->add_option("--horizon", thr_horizon, "horizon for timedep/feas")->capture_default_str();
    thr->add_option("--e0", thr_e0, "initial SoC for feas (battery rate 1, capacity 2k+2)");
    add_out(thr);
    thr->callback([&] { cmd_thresholds(lmin, lmax, kch, kdis, alpha, omega, thr_mode, thr_horizon, thr_e0, out); });

    // simulate
    auto* sim = app.add_subcommand("simulate", "run the policy on one day; trajectory CSV and JSON summary");
    ConfigArgs sim_cfg;
    BudgetArgs sim_k;
    std::string day_path;
    std::optional<double> sim_e0;
    int sim_start = 1;
    sim_cfg.add_to(sim);
    sim_k.add_to(sim);
    sim->add_option("--day", day_path, "one day of timestamp,price rows")->required();
    sim->add_option("--e0", sim_e0, "initial SoC (default: battery.e0)");
    sim->add_option("--start", sim_start, "first decision step (1-based)")->capture_default_str();
    add_out(sim);
    sim->callback([&] { cmd_simulate(sim_cfg, sim_k, day_path, sim_e0, sim_start, out, summary); });

    // reach
    auto* reach = app.add_subcommand("reach", "SoC distribution per step as CSV (t, e, mass)");
    ReachInputs reach_in;
    std::string reach_mode = "augmented";
    reach_in.add_to(reach);
    reach->add_option("--mode", reach_mode, "augmented|marginal")->capture_default_str();
    add_out(reach);
    reach->callback([&] { cmd_reach(reach_in, reach_mode, out, summary); });

    // stop-time
    auto* stop = app.add_subcommand("stop-time", "Q_t curve as CSV (t, Q) and tau*");
    ReachInputs stop_in;
    double stop_eps = 0.1;
    std::string post_stop = "full";
    stop_in.add_to(stop);
    stop->add_option("--epsilon", stop_eps, "risk level")->capture_default_str();
    stop->add_option("--post-stop", post_stop, "idle|full|policy")->capture_default_str();
    add_out(stop);
    stop->callback([&] { cmd_stop_time(stop_in, stop_eps, post_stop, out, summary); });

    // table1
    auto* table = app.add_subcommand("table1", "counts of capacity-feasible trajectories ending in the band");
    ConfigArgs table_cfg;
    std::vector<double> t_e0;
    std::vector<std::string> t_bands;
    std::vector<int> t_steps;
    table->add_option("--config,--params", table_cfg.path, "config supplying battery and defaults");
    table->add_option("--e0", t_e0, "initial SoCs")->delimiter(',');
    table->add_option("--band", t_bands, "band 'lo,hi' (repeatable)");
    table->add_option("--steps", t_steps, "step counts")->delimiter(',');
    add_out(table);
    table->callback([&] { cmd_table1(table_cfg, t_e0, t_bands, t_steps, out); });

    // cqr
    auto* cqr = app.add_subcommand("cqr", "conformalized quantile regression of the terminal SoC");
    cqr->require_subcommand(1);
    ConfigArgs cqr_cfg;
    std::optional<double> cqr_eps;
    std::string split, model_path, band_s, predict_days;
    std::optional<double> predict_e0;
    auto cqr_common = [&](CLI::App* c) {
        cqr_cfg.add_to(c);
        c->add_option("--epsilon", cqr_eps, "miscoverage level");
        c->add_option("--split", split, "train,calib,test ratios");
        add_out(c);
    };
    auto* cqr_train = cqr->add_subcommand("train", "fit the quantile pair on training days; writes the model JSON");
    cqr_common(cqr_train);
    cqr_train->callback([&] {
        auto d = cqr_data(cqr_cfg, cqr_eps, split);
        WarningLog w;
        auto m = train_conformal(d.rows(d.data.split.train), d.cfg.cqr.epsilon, d.cfg.cqr.train, &w);
        Output(out).stream() << to_json(m).dump(2) << '\n';
        write_summary({{"n_train", d.data.split.train.size() * d.cfg.e0_sweep.size()}, {"warnings", w}}, summary);
    });
    auto* cqr_cal = cqr->add_subcommand("calibrate", "set delta_hat from calibration days");
    cqr_common(cqr_cal);
    cqr_cal->add_option("--model", model_path, "trained model JSON")->required();
    cqr_cal->callback([&] {
        auto d = cqr_data(cqr_cfg, cqr_eps, split);
        auto m = calibrate(load_model(model_path), d.rows(d.data.split.calib));
        Output(out).stream() << to_json(m).dump(2) << '\n';
        write_summary({{"delta_hat", m.delta_hat}}, summary);
    });
    auto* cqr_pred = cqr->add_subcommand("predict", "intervals for the days of a day matrix");
    cqr_common(cqr_pred);
    cqr_pred->add_option("--model", model_path, "calibrated model JSON")->required();
    cqr_pred->add_option("--days", predict_days, "day matrix CSV (default: configured test days)");
    cqr_pred->add_option("--e0", predict_e0, "initial SoC feature (default: battery.e0)");
    cqr_pred->callback([&] {
        auto cfg = cqr_cfg.load();
        auto m = load_model(model_path);
        std::vector<DayPrices> days;
        if (!predict_days.empty()) {
            std::ifstream in(predict_days);
            if (!in) throw DataError("cannot open '" + predict_days + "'");
            days = read_day_matrix(in, predict_days);
        } else {
            days = prepare_data(cfg).split.test;
        }
        const BatteryParams p = predict_e0 ? cfg.battery.with_e0(*predict_e0) : cfg.battery;
        p.validate();
        Output o(out);
        auto& os = o.stream();
        os << std::setprecision(17) << "day_id,lo,hi,lo_clipped,hi_clipped\n";
        for (const auto& day : days) {
            std::vector<double> f = day.values;
            f.push_back(p.e0);
            auto iv = predict_interval(m, f);
            auto c = iv.clipped(p);
            os << day.day_id << ',' << iv.lo << ',' << iv.hi << ',' << c.lo << ',' << c.hi << '\n';
        }
    });
    auto* cqr_eval = cqr->add_subcommand("evaluate", "coverage and band certificates on test days");
    cqr_common(cqr_eval);
    cqr_eval->add_option("--model", model_path, "calibrated model JSON")->required();
    cqr_eval->add_option("--band", band_s, "band 'lo,hi' (default: cqr.band or the first band)");
    cqr_eval->callback([&] {
        auto d = cqr_data(cqr_cfg, cqr_eps, split);
        const TargetBand band = band_s.empty() ? d.cfg.cqr.band.value_or(d.cfg.bands.front()) : parse_band(band_s);
        auto rep = evaluate_coverage(load_model(model_path), d.rows(d.data.split.test), band);
        Output(out).stream() << to_json(rep).dump(2) << '\n';
    });

    // backtest
    auto* bt = app.add_subcommand("backtest", "full experiment grid; writes the JSON report");
    ConfigArgs bt_cfg;
    bt_cfg.add_to(bt, true);
    add_out(bt);
    bt->callback([&] {
        auto cfg = bt_cfg.load();
        auto report = run_experiment(cfg);
        Output(out).stream() << report.dump(2) << '\n';
        std::size_t failed = 0;
        if (report.contains("cells"))
            for (const auto& c : report["cells"]) failed += c.contains("error");
        write_summary({{"config_sha256", report["provenance"]["config_sha256"]},
                       {"cells", report.contains("cells") ? report["cells"].size() : 0},
                       {"failed_cells", failed}},
                      summary);
    });

    // plot-data
    auto* plot = app.add_subcommand("plot-data", "CSV for one figure kind from a report");
    std::string report_path, kind;
    PlotSelection sel;
    plot->add_option("--report", report_path, "report JSON from backtest")->required();
    plot->add_option("--kind", kind, "soc-heatmap|Qt-curve|profit-curve|coverage-curve")->required();
    plot->add_option("--cell", sel.cell, "cell index for soc-heatmap and Qt-curve")->capture_default_str();
    plot->add_option("--budget", sel.budget, "budget index within the cell")->capture_default_str();
    add_out(plot);
    plot->callback([&] {
        auto report = read_json(report_path);
        std::ostringstream buf;  // nothing is written when the kind or block is missing
        emit_plot_data(report, kind, buf, sel);
        Output(out).stream() << buf.str();
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
