#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "arbreach/battery.hpp"
#include "arbreach/error.hpp"
#include "arbreach/market_data.hpp"
#include "arbreach/policy.hpp"
#include "arbreach/reachability.hpp"

namespace arbreach {

/// max(theta (y - yhat), (theta - 1)(y - yhat))
inline double pinball_loss(double y, double yhat, double theta) {
    detail::require(theta > 0.0 && theta < 1.0, "pinball_loss: theta must lie in (0,1)");
    const double r = y - yhat;
    return std::max(theta * r, (theta - 1.0) * r);
}

/// A day's raw features (T hourly prices followed by e0) and its terminal SoC.
struct LabeledDay {
    std::string day_id;
    std::vector<double> features;
    double e_T = 0.0;
};

/// Terminal SoC of the threshold policy on each day.
inline std::vector<LabeledDay> label_days(const std::vector<DayPrices>& days, const BatteryParams& params,
                                          const PolicyConfig& config, const PriceEnvelope& envelope) {
    std::vector<LabeledDay> out;
    out.reserve(days.size());
    ThresholdRule rule(config, envelope, params);
    for (const auto& day : days) {
        detail::require(day.horizon() == params.horizon, "label_days: day length must equal the battery horizon");
        auto [traj, st] = run_from(PolicyState::initial(params, config.k_ch, config.k_dis), day.values, rule);
        LabeledDay l;
        l.day_id = day.day_id;
        l.features = day.values;
        l.features.push_back(params.e0);
        l.e_T = st.e;
        out.push_back(std::move(l));
    }
    return out;
}

/// Column standardization frozen at training time. Zero-variance columns are dropped.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;
    std::vector<bool> keep;

    std::size_t width() const { return mean.size(); }
    std::size_t kept() const { return static_cast<std::size_t>(std::count(keep.begin(), keep.end(), true)); }

    std::vector<double> apply(std::span<const double> raw) const {
        if (raw.size() != width()) throw ValidationError("standardizer: feature vector has the wrong length");
        std::vector<double> z;
        z.reserve(kept());
        for (std::size_t j = 0; j < raw.size(); ++j) {
            if (!std::isfinite(raw[j])) throw ValidationError("standardizer: non-finite feature");
            if (keep[j]) z.push_back((raw[j] - mean[j]) / scale[j]);
        }
        return z;
    }

    static Standardizer fit(const std::vector<LabeledDay>& rows, WarningLog* warnings = nullptr) {
        detail::require(!rows.empty(), "standardizer: empty training set");
        const std::size_t w = rows.front().features.size();
        Standardizer s;
        s.mean.assign(w, 0.0);
        s.scale.assign(w, 1.0);
        s.keep.assign(w, true);
        for (const auto& r : rows) {
            if (r.features.size() != w) throw DataError("standardizer: inconsistent feature lengths");
            for (std::size_t j = 0; j < w; ++j) s.mean[j] += r.features[j];
        }
        for (auto& m : s.mean) m /= static_cast<double>(rows.size());
        std::vector<double> var(w, 0.0);
        for (const auto& r : rows)
            for (std::size_t j = 0; j < w; ++j) var[j] += (r.features[j] - s.mean[j]) * (r.features[j] - s.mean[j]);
        for (std::size_t j = 0; j < w; ++j) {
            const double sd = std::sqrt(var[j] / static_cast<double>(rows.size()));
            if (sd <= 1e-12 * std::max(1.0, std::abs(s.mean[j]))) {
                s.keep[j] = false;
                detail::warn(warnings, "standardizer: dropped zero-variance feature column " + std::to_string(j));
            } else {
                s.scale[j] = sd;
            }
        }
        return s;
    }
};

/// Linear predictor on standardized features: weights[0] + sum_j weights[j+1] z_j.
inline double linear_predict(const std::vector<double>& weights, std::span<const double> z) {
    double v = weights.at(0);
    for (std::size_t j = 0; j < z.size(); ++j) v += weights[j + 1] * z[j];
    return v;
}

struct TrainOptions {
    int epochs = 400;
    double step = 0.5;
    std::size_t batch = 32;
    std::uint64_t seed = 7;
};

struct TrainResult {
    std::vector<double> weights;
    std::vector<double> epoch_loss;  ///< mean pinball loss after each epoch
};

inline double mean_pinball(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                           const std::vector<double>& w, double theta) {
    double s = 0.0;
    for (std::size_t i = 0; i < X.size(); ++i) s += pinball_loss(y[i], linear_predict(w, X[i]), theta);
    return s / static_cast<double>(X.size());
}

/// Minimizes mean pinball loss by mini-batch subgradient descent.
///
/// Starts from the empirical theta-quantile as intercept. An epoch whose
/// full-data loss exceeds the previous one is rolled back and the step
/// halved, so the recorded epoch losses never increase.
inline TrainResult train_quantile_model(const std::vector<std::vector<double>>& X, const std::vector<double>& y,
                                        double theta, const TrainOptions& opt = {}) {
    detail::require(!X.empty() && X.size() == y.size(), "train_quantile_model: empty or mismatched training set");
    detail::require(theta > 0.0 && theta < 1.0, "train_quantile_model: theta must lie in (0,1)");
    detail::require(opt.epochs >= 0 && opt.step > 0.0 && opt.batch >= 1, "train_quantile_model: bad options");
    const std::size_t n = X.size();
    const std::size_t dim = X.front().size() + 1;

    std::vector<double> sorted = y;
    std::sort(sorted.begin(), sorted.end());
    const auto q_idx = static_cast<std::size_t>(std::clamp(std::ceil(theta * static_cast<double>(n)) - 1.0, 0.0,
                                                           static_cast<double>(n - 1)));
    TrainResult res;
    res.weights.assign(dim, 0.0);
    res.weights[0] = sorted[q_idx];
    double loss = mean_pinball(X, y, res.weights, theta);

    std::mt19937_64 rng(opt.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> grad(dim);
    double step = opt.step;
    for (int epoch = 0; epoch < opt.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        std::vector<double> w = res.weights;
        const double lr = step / std::sqrt(1.0 + epoch);
        for (std::size_t start = 0; start < n; start += opt.batch) {
            const std::size_t end = std::min(n, start + opt.batch);
            std::fill(grad.begin(), grad.end(), 0.0);
            for (std::size_t b = start; b < end; ++b) {
                const auto& x = X[order[b]];
                const double r = y[order[b]] - linear_predict(w, x);
                const double g = r > 0.0 ? -theta : (r < 0.0 ? 1.0 - theta : 0.0);
                grad[0] += g;
                for (std::size_t j = 0; j < x.size(); ++j) grad[j + 1] += g * x[j];
            }
            const double scale = lr / static_cast<double>(end - start);
            for (std::size_t j = 0; j < dim; ++j) w[j] -= scale * grad[j];
        }
        const double new_loss = mean_pinball(X, y, w, theta);
        if (new_loss <= loss) {
            res.weights = std::move(w);
            loss = new_loss;
        } else {
            step *= 0.5;
        }
        res.epoch_loss.push_back(loss);
    }
    return res;
}

struct PredictionInterval {
    double lo = 0.0;
    double hi = 0.0;

    double width() const { return hi - lo; }
    bool contains(double v) const { return v >= lo - detail::kLatticeSlack && v <= hi + detail::kLatticeSlack; }
    bool inside(const TargetBand& band) const {
        return lo >= band.lo() - detail::kLatticeSlack && hi <= band.hi() + detail::kLatticeSlack;
    }
    /// Interval clipped to capacity, for reporting only.
    PredictionInterval clipped(const BatteryParams& p) const {
        return {std::clamp(lo, p.e_min, p.e_max), std::clamp(hi, p.e_min, p.e_max)};
    }
};

/// Lower/upper quantile predictors plus the calibrated widening delta_hat.
struct ConformalModel {
    Standardizer standardizer;
    std::vector<double> weights_low;
    std::vector<double> weights_high;
    double rho_low = 0.05;
    double rho_high = 0.95;
    double delta_hat = 0.0;

    double epsilon() const { return 2.0 * rho_low; }

    /// Raw quantile predictions with crossing fixed by swapping.
    std::pair<double, double> quantiles(std::span<const double> raw_features) const {
        const auto z = standardizer.apply(raw_features);
        double lo = linear_predict(weights_low, z);
        double hi = linear_predict(weights_high, z);
        if (lo > hi) std::swap(lo, hi);
        return {lo, hi};
    }
};

inline std::vector<double> nonconformity_scores(const ConformalModel& model, const std::vector<LabeledDay>& calib) {
    if (calib.empty()) throw DataError("nonconformity_scores: empty calibration set");
    std::vector<double> s;
    s.reserve(calib.size());
    for (const auto& row : calib) {
        auto [lo, hi] = model.quantiles(row.features);
        s.push_back(std::max({lo - row.e_T, row.e_T - hi, 0.0}));
    }
    return s;
}

/// Order statistic of rank ceil((n + 1)(1 - epsilon)) of the scores.
inline double conformal_quantile(std::vector<double> scores, double epsilon) {
    detail::require(epsilon > 0.0 && epsilon < 1.0, "conformal_quantile: epsilon must lie in (0,1)");
    if (scores.empty()) throw DataError("conformal_quantile: no scores");
    const auto n = scores.size();
    const double rank = std::ceil(static_cast<double>(n + 1) * (1.0 - epsilon) - 1e-9);
    if (rank > static_cast<double>(n))
        throw DataError("conformal_quantile: calibration set of " + std::to_string(n) +
                        " is too small for epsilon " + std::to_string(epsilon) + "; need at least " +
                        std::to_string(static_cast<long>(std::ceil(1.0 / epsilon)) - 1) + " scores");
    std::sort(scores.begin(), scores.end());
    return scores[static_cast<std::size_t>(std::max(rank, 1.0)) - 1];
}

inline PredictionInterval predict_interval(const ConformalModel& model, std::span<const double> raw_features) {
    auto [lo, hi] = model.quantiles(raw_features);
    return {lo - model.delta_hat, hi + model.delta_hat};
}

namespace detail {

inline std::pair<std::vector<std::vector<double>>, std::vector<double>> design(const Standardizer& s,
                                                                               const std::vector<LabeledDay>& rows) {
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    X.reserve(rows.size());
    y.reserve(rows.size());
    for (const auto& r : rows) {
        X.push_back(s.apply(r.features));
        y.push_back(r.e_T);
    }
    return {std::move(X), std::move(y)};
}

} // namespace detail

/// Fits both quantile predictors at epsilon/2 and 1 - epsilon/2 (delta_hat = 0).
inline ConformalModel train_conformal(const std::vector<LabeledDay>& train, double epsilon,
                                      const TrainOptions& opt = {}, WarningLog* warnings = nullptr) {
    detail::require(epsilon > 0.0 && epsilon < 1.0, "train_conformal: epsilon must lie in (0,1)");
    if (train.empty()) throw DataError("train_conformal: empty training set");
    ConformalModel m;
    m.rho_low = epsilon / 2.0;
    m.rho_high = 1.0 - epsilon / 2.0;
    m.standardizer = Standardizer::fit(train, warnings);
    auto [X, y] = detail::design(m.standardizer, train);
    m.weights_low = train_quantile_model(X, y, m.rho_low, opt).weights;
    m.weights_high = train_quantile_model(X, y, m.rho_high, opt).weights;
    return m;
}

/// Sets delta_hat from the calibration scores.
inline ConformalModel calibrate(ConformalModel m, const std::vector<LabeledDay>& calib) {
    m.delta_hat = conformal_quantile(nonconformity_scores(m, calib), m.epsilon());
    return m;
}

struct CoverageReport {
    double epsilon = 0.0;
    std::size_t n_test = 0;
    double marginal_coverage = 0.0;
    double band_certificate_rate = 0.0;
    double mean_interval_width = 0.0;
    TargetBand band;
};

inline CoverageReport evaluate_coverage(const ConformalModel& model, const std::vector<LabeledDay>& test,
                                        const TargetBand& band) {
    if (test.empty()) throw DataError("evaluate_coverage: empty test set");
    CoverageReport r;
    r.epsilon = model.epsilon();
    r.n_test = test.size();
    r.band = band;
    std::size_t covered = 0, certified = 0;
    double width = 0.0;
    for (const auto& row : test) {
        const auto iv = predict_interval(model, row.features);
        covered += iv.contains(row.e_T);
        certified += iv.inside(band);
        width += iv.width();
    }
    const auto n = static_cast<double>(test.size());
    r.marginal_coverage = static_cast<double>(covered) / n;
    r.band_certificate_rate = static_cast<double>(certified) / n;
    r.mean_interval_width = width / n;
    return r;
}

inline nlohmann::ordered_json to_json(const ConformalModel& m) {
    nlohmann::ordered_json j;
    j["weights_low"] = m.weights_low;
    j["weights_high"] = m.weights_high;
    j["rho_low"] = m.rho_low;
    j["rho_high"] = m.rho_high;
    j["delta_hat"] = m.delta_hat;
    j["standardizer"] = {{"mean", m.standardizer.mean}, {"scale", m.standardizer.scale}, {"keep", m.standardizer.keep}};
    return j;
}

inline ConformalModel conformal_model_from_json(const nlohmann::json& j) {
    try {
        ConformalModel m;
        m.weights_low = j.at("weights_low").get<std::vector<double>>();
        m.weights_high = j.at("weights_high").get<std::vector<double>>();
        m.rho_low = j.at("rho_low").get<double>();
        m.rho_high = j.at("rho_high").get<double>();
        m.delta_hat = j.at("delta_hat").get<double>();
        const auto& s = j.at("standardizer");
        m.standardizer.mean = s.at("mean").get<std::vector<double>>();
        m.standardizer.scale = s.at("scale").get<std::vector<double>>();
        m.standardizer.keep = s.at("keep").get<std::vector<bool>>();
        const std::size_t dim = m.standardizer.kept() + 1;
        if (m.weights_low.size() != dim || m.weights_high.size() != dim ||
            m.standardizer.scale.size() != m.standardizer.mean.size() ||
            m.standardizer.keep.size() != m.standardizer.mean.size())
            throw DataError("conformal model: inconsistent dimensions");
        if (m.delta_hat < 0.0) throw DataError("conformal model: negative delta_hat");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("conformal model: ") + e.what());
    }
}

inline nlohmann::ordered_json to_json(const CoverageReport& r) {
    nlohmann::ordered_json j;
    j["epsilon"] = r.epsilon;
    j["n_test"] = r.n_test;
    j["marginal_coverage"] = r.marginal_coverage;
    j["band"] = {r.band.lo(), r.band.hi()};
    j["band_certificate_rate"] = r.band_certificate_rate;
    j["mean_interval_width"] = r.mean_interval_width;
    return j;
}

} // namespace arbreach
