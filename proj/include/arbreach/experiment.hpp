#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "arbreach/battery.hpp"
#include "arbreach/config.hpp"
#include "arbreach/conformal.hpp"
#include "arbreach/digest.hpp"
#include "arbreach/error.hpp"
#include "arbreach/market_data.hpp"
#include "arbreach/offline.hpp"
#include "arbreach/policy.hpp"
#include "arbreach/reachability.hpp"
#include "arbreach/thresholds.hpp"

namespace arbreach {

inline constexpr const char* kVersion = "0.1.0";

struct DataSource {
    std::string prices_csv;   ///< timestamp,price rows
    std::string day_matrix;   ///< day_id,h0,... rows
    std::size_t synthetic_days = 0;
    SyntheticPriceModel synthetic;
};

struct CqrSettings {
    bool enabled = true;
    double epsilon = 0.1;
    std::optional<TargetBand> band;  ///< default: first configured band
    BudgetPair k{1, 1};
    TrainOptions train;
};

struct ExperimentConfig {
    BatteryParams battery;
    std::vector<TargetBand> bands{TargetBand::from_range(5, 7), TargetBand::from_range(3, 8)};
    std::vector<double> e0_sweep{1, 5, 9};
    std::vector<int> start_steps{8, 6, 4, 2};
    double epsilon = 0.1;
    std::vector<BudgetPair> k_grid;
    ThresholdMode threshold_mode = ThresholdMode::feasibility;
    BoundsMode bounds_mode = BoundsMode::global;
    RatioOverride ratios;
    PostStop post_stop = PostStop::full_control;
    double price_floor = kDefaultPriceFloor;
    DistributionKind distribution = DistributionKind::empirical;
    std::uint64_t seed = 7;
    DataSource data;
    SplitRatios split;
    bool shuffle = true;
    int kappa_sims = 200;
    CqrSettings cqr;
    unsigned workers = 0;  ///< 0: hardware concurrency

    KeyValues settings;       ///< effective key/value view, for the report
    std::string source_text;  ///< raw config text, hashed into the report

    void validate() const {
        battery.validate();
        detail::require(epsilon > 0.0 && epsilon < 1.0, "config: epsilon must lie in (0,1)");
        detail::require(cqr.epsilon > 0.0 && cqr.epsilon < 1.0, "config: cqr.epsilon must lie in (0,1)");
        detail::require(!bands.empty(), "config: at least one band is required");
        for (const auto& b : bands) b.validate(battery);
        for (double e0 : e0_sweep)
            detail::require(e0 >= battery.e_min && e0 <= battery.e_max,
                            "config: e0 " + std::to_string(e0) + " lies outside the capacity range");
        for (int s : start_steps)
            detail::require(s >= 1 && s <= battery.horizon,
                            "config: start step count " + std::to_string(s) + " must lie in [1, horizon]");
        for (const auto& [kc, kd] : k_grid) detail::require(kc >= 0 && kd >= 0, "config: k_grid entries must be >= 0");
        detail::require(kappa_sims >= 1, "config: kappa.n_sims must be >= 1");
        detail::require(price_floor > 0.0, "config: price.floor must be positive");
    }
};

namespace detail {

inline std::string resolve_path(const std::string& path, const std::string& config_source) {
    if (path.empty()) return path;
    std::filesystem::path p(path);
    if (p.is_absolute() || config_source.empty() || config_source.front() == '<') return path;
    return (std::filesystem::path(config_source).parent_path() / p).string();
}

} // namespace detail

/// Builds the experiment configuration; unknown keys are rejected.
inline ExperimentConfig experiment_config_from(const KeyValues& kv, std::string source_text = {}) {
    ExperimentConfig c;
    c.source_text = std::move(source_text);
    c.battery.e_min = kv.get_double("battery.e_min", c.battery.e_min);
    c.battery.e_max = kv.get_double("battery.e_max", c.battery.e_max);
    c.battery.rate = kv.get_double("battery.rate", c.battery.rate);
    c.battery.e0 = kv.get_double("battery.e0", 0.5 * (c.battery.e_min + c.battery.e_max));
    c.battery.horizon = static_cast<int>(kv.get_int("battery.horizon", c.battery.horizon));

    std::vector<std::pair<double, double>> band_default;
    for (const auto& b : c.bands) band_default.emplace_back(b.lo(), b.hi());
    c.bands.clear();
    for (auto [lo, hi] : kv.get_pairs("bands", band_default)) c.bands.push_back(TargetBand::from_range(lo, hi));
    c.e0_sweep = kv.get_doubles("e0_sweep", c.e0_sweep);
    c.start_steps.clear();
    for (auto s : kv.get_ints("start_steps", {8, 6, 4, 2})) c.start_steps.push_back(static_cast<int>(s));
    c.epsilon = kv.get_double("epsilon", c.epsilon);
    for (auto [a, b] : kv.get_pairs("k_grid", {})) {
        detail::require(a == std::floor(a) && b == std::floor(b), "config: k_grid entries must be integers");
        c.k_grid.emplace_back(static_cast<int>(a), static_cast<int>(b));
    }

    c.threshold_mode = parse_threshold_mode(kv.get_string("policy.threshold_mode", "feas"));
    c.bounds_mode = parse_bounds_mode(kv.get_string("policy.bounds_mode", "global"));
    c.ratios.alpha = kv.get_optional_double("policy.alpha");
    c.ratios.omega = kv.get_optional_double("policy.omega");
    c.post_stop = parse_post_stop(kv.get_string("policy.post_stop", "full"));
    c.price_floor = kv.get_double("price.floor", c.price_floor);
    c.distribution = parse_distribution_kind(kv.get_string("price.distribution", "empirical"));
    const auto seed = kv.get_int("seed", static_cast<long long>(c.seed));
    detail::require(seed >= 0, "config: seed must be non-negative");
    c.seed = static_cast<std::uint64_t>(seed);

    c.data.prices_csv = detail::resolve_path(kv.get_string("data.prices", ""), kv.source());
    c.data.day_matrix = detail::resolve_path(kv.get_string("data.days", ""), kv.source());
    const auto n_syn = kv.get_int("data.synthetic_days", 0);
    detail::require(n_syn >= 0, "config: data.synthetic_days must be >= 0");
    c.data.synthetic_days = static_cast<std::size_t>(n_syn);
    c.data.synthetic.base_price = kv.get_double("data.synthetic.base_price", c.data.synthetic.base_price);
    c.data.synthetic.daily_swing = kv.get_double("data.synthetic.daily_swing", c.data.synthetic.daily_swing);
    c.data.synthetic.day_sigma = kv.get_double("data.synthetic.day_sigma", c.data.synthetic.day_sigma);
    c.data.synthetic.hour_sigma = kv.get_double("data.synthetic.hour_sigma", c.data.synthetic.hour_sigma);
    auto split = kv.get_doubles("data.split", {0.6, 0.2, 0.2});
    detail::require(split.size() == 3, "config: data.split needs three ratios");
    c.split = {split[0], split[1], split[2]};
    c.shuffle = kv.get_bool("data.shuffle", c.shuffle);
    c.kappa_sims = static_cast<int>(kv.get_int("kappa.n_sims", c.kappa_sims));

    c.cqr.enabled = kv.get_bool("cqr.enabled", true);
    c.cqr.epsilon = kv.get_double("cqr.epsilon", c.epsilon);
    if (auto band = kv.get("cqr.band")) {
        auto [lo, hi] = KeyValues::parse_pair("cqr.band", *band);
        c.cqr.band = TargetBand::from_range(lo, hi);
    }
    auto k = kv.get_pairs("cqr.k", {{1, 1}});
    detail::require(k.size() == 1, "config: cqr.k takes a single k_ch:k_dis pair");
    c.cqr.k = {static_cast<int>(k[0].first), static_cast<int>(k[0].second)};
    c.cqr.train.epochs = static_cast<int>(kv.get_int("cqr.epochs", c.cqr.train.epochs));
    c.cqr.train.step = kv.get_double("cqr.step", c.cqr.train.step);
    c.cqr.train.batch = static_cast<std::size_t>(kv.get_int("cqr.batch", static_cast<long long>(c.cqr.train.batch)));
    c.cqr.train.seed = static_cast<std::uint64_t>(kv.get_int("cqr.seed", static_cast<long long>(c.seed)));
    const auto workers = kv.get_int("workers", 0);
    detail::require(workers >= 0, "config: workers must be >= 0");
    c.workers = static_cast<unsigned>(workers);

    kv.check_all_used();
    c.settings = kv;
    c.validate();
    return c;
}

inline ExperimentConfig parse_experiment_config(const std::string& text, std::string_view source = "<config>") {
    std::istringstream in(text);
    return experiment_config_from(KeyValues::parse(in, source), text);
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str(), path);
}

/// Days of the configured source, in chronological order.
inline std::vector<DayPrices> load_days(const ExperimentConfig& c, WarningLog* warnings = nullptr) {
    const int T = c.battery.horizon;
    std::vector<DayPrices> days;
    if (c.data.synthetic_days > 0) {
        days = synthetic_days(c.data.synthetic_days, T, c.seed, c.data.synthetic);
    } else if (!c.data.prices_csv.empty()) {
        days = slice_days(load_price_csv(c.data.prices_csv), T, warnings);
    } else if (!c.data.day_matrix.empty()) {
        std::ifstream in(c.data.day_matrix);
        if (!in) throw DataError("cannot open day matrix '" + c.data.day_matrix + "'");
        days = read_day_matrix(in, c.data.day_matrix);
    } else {
        throw DataError("no price data configured: set data.prices, data.days or data.synthetic_days");
    }
    for (const auto& d : days)
        if (d.horizon() != T)
            throw DataError("day '" + d.day_id + "' has " + std::to_string(d.horizon()) + " values, horizon is " +
                            std::to_string(T));
    if (days.empty()) throw DataError("price data holds no complete day");
    return days;
}

/// Runs fn(0..n-1) on up to `workers` threads. Each index is handled once.
inline void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
    if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    for (auto& t : pool) t.join();
}

inline nlohmann::ordered_json to_json(const SocDistribution& d) {
    nlohmann::ordered_json j;
    j["grid"] = d.grid();
    auto mass = nlohmann::ordered_json::array();
    for (int t = 0; t <= d.steps(); ++t) mass.push_back(d.at(t));
    j["mass"] = std::move(mass);
    return j;
}

struct SummaryStats {
    double mean = 0.0, stddev = 0.0, min = 0.0, max = 0.0;
    std::size_t n = 0;
};

inline SummaryStats summarize(const std::vector<double>& v) {
    SummaryStats s;
    s.n = v.size();
    if (v.empty()) return s;
    s.min = *std::min_element(v.begin(), v.end());
    s.max = *std::max_element(v.begin(), v.end());
    for (double x : v) s.mean += x;
    s.mean /= static_cast<double>(v.size());
    for (double x : v) s.stddev += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(s.stddev / static_cast<double>(v.size()));
    return s;
}

inline nlohmann::ordered_json to_json(const SummaryStats& s) {
    return {{"mean", s.mean}, {"std", s.stddev}, {"min", s.min}, {"max", s.max}, {"n", s.n}};
}

inline nlohmann::ordered_json band_json(const TargetBand& b) { return nlohmann::ordered_json::array({b.lo(), b.hi()}); }

/// Shared read-only inputs of one experiment.
struct ExperimentData {
    std::vector<DayPrices> days;
    DatasetSplit split;
    PriceEnvelope envelope;
    PriceDistribution distribution;
    WarningLog warnings;
};

inline ExperimentData prepare_data(const ExperimentConfig& c) {
    ExperimentData d;
    d.days = load_days(c, &d.warnings);
    d.split = split_dataset(d.days, c.split, c.seed, c.shuffle);
    d.envelope = PriceEnvelope(d.split.train, c.bounds_mode, c.price_floor, &d.warnings);
    d.distribution = fit_distribution(d.split.train, c.distribution, &d.warnings);
    return d;
}

inline PolicyConfig policy_config(const ExperimentConfig& c, BudgetPair k) {
    return {k.first, k.second, c.threshold_mode, c.ratios};
}

inline nlohmann::ordered_json counting_block(const ExperimentConfig& c) {
    auto rows = nlohmann::ordered_json::array();
    for (double e0 : c.e0_sweep)
        for (const auto& band : c.bands)
            for (int n : c.start_steps) {
                auto r = count_feasible_trajectories(c.battery.with_e0(e0), n, band);
                rows.push_back({{"e0", e0}, {"band", band_json(band)}, {"steps", n}, {"in_band", r.in_band},
                                {"total", r.total}, {"pct", r.pct}});
            }
    return rows;
}

/// One (e0, band, start) cell: reachability, stopping time and profits for every budget pair.
inline nlohmann::ordered_json run_cell(const ExperimentConfig& c, const ExperimentData& data, double e0,
                                       const TargetBand& band, int steps, std::uint64_t cell_seed) {
    const BatteryParams params = c.battery.with_e0(e0);
    const int first = params.horizon - steps + 1;
    nlohmann::ordered_json cell;
    cell["e0"] = e0;
    cell["band"] = band_json(band);
    cell["steps"] = steps;
    cell["start_step"] = first;

    auto kappa = kappa_prepolicy(c.k_grid, params, policy_config(c, c.k_grid.front()), data.envelope,
                                 data.distribution, c.kappa_sims, cell_seed, first);
    std::vector<double> opts;
    for (const auto& day : data.split.test) {
        std::vector<double> window(day.values.begin() + (first - 1), day.values.end());
        opts.push_back(offline_opt(window, params).profit);
    }
    const auto opt_stats = to_json(summarize(opts));

    std::map<BudgetPair, double> p_band;
    auto budgets = nlohmann::ordered_json::array();
    for (const auto& k : c.k_grid) {
        ThresholdRule rule(policy_config(c, k), data.envelope, params);
        auto stop = stopping_time(params, steps, k.first, k.second, policy_branch_probs(rule, data.distribution, first),
                                  band, c.epsilon, c.post_stop);
        const double p = terminal_band_probability(stop.dist, band);
        p_band[k] = p;

        std::vector<double> profits;
        for (const auto& day : data.split.test)
            profits.push_back(run_policy(day, params, rule.config(), data.envelope, first).profit);
        nlohmann::ordered_json b;
        b["k_ch"] = k.first;
        b["k_dis"] = k.second;
        b["p_band"] = p;
        b["tau_star"] = stop.tau_star ? nlohmann::ordered_json(*stop.tau_star) : nlohmann::ordered_json(nullptr);
        b["Q"] = stop.Q;
        b["profit"] = to_json(summarize(profits));
        b["opt_profit"] = opt_stats;
        b["dist"] = to_json(stop.dist);
        budgets.push_back(std::move(b));
    }
    // The all-idle fallback pair keeps the SoC at e0.
    std::map<BudgetPair, double> mixed_inputs;
    for (const auto& [k, w] : kappa.kappa.weights)
        mixed_inputs[k] = p_band.count(k) ? p_band[k] : (band.contains(e0) ? 1.0 : 0.0);
    auto kappa_json = nlohmann::ordered_json::array();
    for (const auto& [k, w] : kappa.kappa.weights)
        kappa_json.push_back({{"k_ch", k.first}, {"k_dis", k.second}, {"weight", w},
                              {"expected_profit", kappa.expected_profit.count(k) ? kappa.expected_profit.at(k) : 0.0}});
    cell["kappa"] = std::move(kappa_json);
    cell["p_band"] = mix_over_kappa(mixed_inputs, kappa.kappa);
    cell["budgets"] = std::move(budgets);
    return cell;
}

inline std::vector<LabeledDay> label_sweep(const std::vector<DayPrices>& days, const ExperimentConfig& c,
                                           const PriceEnvelope& env) {
    std::vector<LabeledDay> out;
    for (double e0 : c.e0_sweep) {
        auto rows = label_days(days, c.battery.with_e0(e0), policy_config(c, c.cqr.k), env);
        out.insert(out.end(), rows.begin(), rows.end());
    }
    return out;
}

inline nlohmann::ordered_json cqr_block(const ExperimentConfig& c, const ExperimentData& data) {
    const TargetBand band = c.cqr.band.value_or(c.bands.front());
    auto train = label_sweep(data.split.train, c, data.envelope);
    auto calib = label_sweep(data.split.calib, c, data.envelope);
    WarningLog warnings;
    auto model = calibrate(train_conformal(train, c.cqr.epsilon, c.cqr.train, &warnings), calib);
    auto test = label_sweep(data.split.test, c, data.envelope);
    auto j = to_json(evaluate_coverage(model, test, band));
    j["n_train"] = train.size();
    j["n_calib"] = calib.size();
    j["k_ch"] = c.cqr.k.first;
    j["k_dis"] = c.cqr.k.second;
    auto by_e0 = nlohmann::ordered_json::array();
    for (double e0 : c.e0_sweep) {
        std::vector<LabeledDay> subset;
        for (const auto& r : test)
            if (r.features.back() == e0) subset.push_back(r);
        auto rep = evaluate_coverage(model, subset, band);
        by_e0.push_back({{"e0", e0}, {"n_test", rep.n_test}, {"marginal_coverage", rep.marginal_coverage},
                         {"band_certificate_rate", rep.band_certificate_rate},
                         {"mean_interval_width", rep.mean_interval_width}});
    }
    j["by_e0"] = std::move(by_e0);
    j["model"] = to_json(model);
    j["warnings"] = warnings;
    return j;
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

/// Runs the configured grid. Cell failures are recorded in the cell, not thrown.
inline nlohmann::ordered_json run_experiment(const ExperimentConfig& c) {
    c.validate();
    const ExperimentData data = prepare_data(c);

    nlohmann::ordered_json report;
    auto& prov = report["provenance"];
    prov["tool"] = "arbreach";
    prov["version"] = kVersion;
    prov["config_sha256"] = sha256_hex(c.source_text);
    prov["effective_config_sha256"] = sha256_hex(c.settings.canonical());
    prov["seed"] = c.seed;
    prov["timestamp"] = utc_timestamp();
    nlohmann::ordered_json settings;
    for (const auto& [k, v] : c.settings.entries()) settings[k] = v;
    report["config"] = std::move(settings);

    nlohmann::ordered_json dj;
    dj["n_days"] = data.days.size();
    dj["n_train"] = data.split.train.size();
    dj["n_calib"] = data.split.calib.size();
    dj["n_test"] = data.split.test.size();
    dj["lambda_min"] = data.envelope.lambda_min();
    dj["lambda_max"] = data.envelope.lambda_max();
    dj["bounds_mode"] = to_string(c.bounds_mode);
    dj["threshold_mode"] = to_string(c.threshold_mode);
    dj["post_stop"] = to_string(c.post_stop);
    dj["warnings"] = data.warnings;
    report["data"] = std::move(dj);

    report["counting"] = counting_block(c);

    if (!c.k_grid.empty()) {
        struct Key {
            double e0;
            TargetBand band;
            int steps;
        };
        std::vector<Key> keys;
        for (double e0 : c.e0_sweep)
            for (const auto& band : c.bands)
                for (int n : c.start_steps) keys.push_back({e0, band, n});
        std::vector<nlohmann::ordered_json> cells(keys.size());
        parallel_for(keys.size(), c.workers, [&](std::size_t i) {
            try {
                cells[i] = run_cell(c, data, keys[i].e0, keys[i].band, keys[i].steps, c.seed + 1000003ULL * (i + 1));
            } catch (const std::exception& e) {
                cells[i] = {{"e0", keys[i].e0}, {"band", band_json(keys[i].band)}, {"steps", keys[i].steps},
                            {"error", e.what()}};
            }
        });
        report["cells"] = cells;
    }

    if (c.cqr.enabled) {
        try {
            report["cqr"] = cqr_block(c, data);
        } catch (const Error& e) {
            report["cqr"] = {{"error", e.what()}};
        }
    }
    return report;
}

/// Report with the run timestamp removed, for reproducibility comparisons.
inline nlohmann::ordered_json without_timestamp(nlohmann::ordered_json report) {
    if (report.contains("provenance")) report["provenance"].erase("timestamp");
    return report;
}

inline const std::vector<std::string>& plot_kinds() {
    static const std::vector<std::string> kinds{"soc-heatmap", "Qt-curve", "profit-curve", "coverage-curve"};
    return kinds;
}

struct PlotSelection {
    std::size_t cell = 0;    ///< index into report["cells"]
    std::size_t budget = 0;  ///< index into the cell's budgets
};

namespace detail {

inline const nlohmann::ordered_json& block(const nlohmann::ordered_json& report, const char* key) {
    if (!report.contains(key)) throw DataError(std::string("report has no '") + key + "' block");
    return report.at(key);
}

inline const nlohmann::ordered_json& selected_budget(const nlohmann::ordered_json& report, PlotSelection sel) {
    const auto& cells = block(report, "cells");
    if (sel.cell >= cells.size()) throw ValidationError("plot-data: cell index out of range");
    const auto& cell = cells[sel.cell];
    if (cell.contains("error")) throw DataError("plot-data: selected cell failed: " + cell["error"].get<std::string>());
    const auto& budgets = cell.at("budgets");
    if (sel.budget >= budgets.size()) throw ValidationError("plot-data: budget index out of range");
    return budgets[sel.budget];
}

} // namespace detail

/// Heatmap rows (t, e, mass) with non-zero mass for t >= 1.
inline void write_heatmap(std::ostream& os, const nlohmann::ordered_json& dist) {
    const auto grid = dist.at("grid").get<std::vector<double>>();
    const auto& mass = dist.at("mass");
    os << "t,e,mass\n" << std::setprecision(17);
    for (std::size_t t = 1; t < mass.size(); ++t)
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double m = mass[t][i].get<double>();
            if (m != 0.0) os << t << ',' << grid[i] << ',' << m << '\n';
        }
}

inline void emit_plot_data(const nlohmann::ordered_json& report, const std::string& kind, std::ostream& os,
                           PlotSelection sel = {}) {
    os << std::setprecision(17);
    if (kind == "soc-heatmap") {
        write_heatmap(os, detail::selected_budget(report, sel).at("dist"));
    } else if (kind == "Qt-curve") {
        const auto& b = detail::selected_budget(report, sel);
        os << "t,Q\n";
        const auto& Q = b.at("Q");
        for (std::size_t t = 0; t < Q.size(); ++t) os << t + 1 << ',' << Q[t].get<double>() << '\n';
    } else if (kind == "profit-curve") {
        os << "e0,band_lo,band_hi,steps,k_ch,k_dis,profit_mean,profit_std,opt_profit_mean,p_band\n";
        for (const auto& cell : detail::block(report, "cells")) {
            if (cell.contains("error")) continue;
            for (const auto& b : cell.at("budgets"))
                os << cell["e0"].get<double>() << ',' << cell["band"][0].get<double>() << ','
                   << cell["band"][1].get<double>() << ',' << cell["steps"].get<int>() << ',' << b["k_ch"].get<int>()
                   << ',' << b["k_dis"].get<int>() << ',' << b["profit"]["mean"].get<double>() << ','
                   << b["profit"]["std"].get<double>() << ',' << b["opt_profit"]["mean"].get<double>() << ','
                   << b["p_band"].get<double>() << '\n';
        }
    } else if (kind == "coverage-curve") {
        const auto& cqr = detail::block(report, "cqr");
        if (cqr.contains("error")) throw DataError("plot-data: CQR block failed: " + cqr["error"].get<std::string>());
        os << "e0,marginal_coverage,band_certificate_rate,mean_interval_width\n";
        for (const auto& r : cqr.at("by_e0"))
            os << r["e0"].get<double>() << ',' << r["marginal_coverage"].get<double>() << ','
               << r["band_certificate_rate"].get<double>() << ',' << r["mean_interval_width"].get<double>() << '\n';
    } else {
        std::string valid;
        for (const auto& k : plot_kinds()) valid += (valid.empty() ? "" : ", ") + k;
        throw ValidationError("unknown plot kind '" + kind + "' (valid kinds: " + valid + ")");
    }
}

} // namespace arbreach
