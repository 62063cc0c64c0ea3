#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "arbreach/error.hpp"

namespace arbreach {

using HourPoint = std::chrono::sys_time<std::chrono::hours>;

/// Hourly price series; timestamps strictly increasing with one-hour spacing.
struct PriceSeries {
    std::vector<HourPoint> timestamps;
    std::vector<double> prices;

    std::size_t size() const { return prices.size(); }
};

/// One horizon worth of prices.
struct DayPrices {
    std::string day_id;
    std::vector<double> values;

    int horizon() const { return static_cast<int>(values.size()); }
};

/// Worst-case price lists over the remaining horizon at one time index.
/// `z_min` is sorted ascending, `z_max` descending.
struct PriceBounds {
    std::vector<double> z_min;
    std::vector<double> z_max;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
};

enum class BoundsMode { global, per_hour };

inline std::string_view to_string(BoundsMode m) {
    return m == BoundsMode::global ? "global" : "per-hour";
}

inline BoundsMode parse_bounds_mode(std::string_view s) {
    if (s == "global") return BoundsMode::global;
    if (s == "per-hour" || s == "per_hour" || s == "perhour") return BoundsMode::per_hour;
    throw ValidationError("unknown bounds mode '" + std::string(s) + "' (expected global|per-hour)");
}

/// Default positive floor applied to the lower price bound before threshold construction.
inline constexpr double kDefaultPriceFloor = 0.01;

using WarningLog = std::vector<std::string>;

namespace detail {

inline void warn(WarningLog* log, std::string msg) {
    if (log) log->push_back(std::move(msg));
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_double(std::string_view s) {
    s = trim(s);
    if (s.empty()) return std::nullopt;
    std::string buf(s);
    char* end = nullptr;
    double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::optional<int> parse_fixed_int(std::string_view s) {
    if (s.empty()) return std::nullopt;
    int v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return std::nullopt;
        v = v * 10 + (c - '0');
    }
    return v;
}

/// Parses "YYYY-MM-DD[ T]HH[:MM[:SS]]" with an optional trailing 'Z'.
/// Minutes and seconds must be zero.
inline std::optional<HourPoint> parse_hour_timestamp(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.back() == 'Z') s.remove_suffix(1);
    if (s.size() < 13 || s[4] != '-' || s[7] != '-' || (s[10] != ' ' && s[10] != 'T')) return std::nullopt;
    auto y = parse_fixed_int(s.substr(0, 4));
    auto mo = parse_fixed_int(s.substr(5, 2));
    auto d = parse_fixed_int(s.substr(8, 2));
    auto h = parse_fixed_int(s.substr(11, 2));
    if (!y || !mo || !d || !h || *h > 23) return std::nullopt;
    std::string_view rest = s.substr(13);
    while (!rest.empty()) {
        if (rest.size() < 3 || rest[0] != ':') return std::nullopt;
        auto part = parse_fixed_int(rest.substr(1, 2));
        if (!part || *part != 0) return std::nullopt;
        rest.remove_prefix(3);
    }
    std::chrono::year_month_day ymd{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*mo)},
                                    std::chrono::day{static_cast<unsigned>(*d)}};
    if (!ymd.ok()) return std::nullopt;
    return HourPoint{std::chrono::sys_days{ymd}} + std::chrono::hours{*h};
}

inline int hour_of_day(HourPoint tp) {
    auto day = std::chrono::floor<std::chrono::days>(tp);
    return static_cast<int>((tp - day).count());
}

} // namespace detail

inline std::string format_timestamp(HourPoint tp) {
    auto day = std::chrono::floor<std::chrono::days>(tp);
    std::chrono::year_month_day ymd{day};
    std::ostringstream os;
    os << std::setfill('0') << std::setw(4) << static_cast<int>(ymd.year()) << '-' << std::setw(2)
       << static_cast<unsigned>(ymd.month()) << '-' << std::setw(2) << static_cast<unsigned>(ymd.day()) << ' '
       << std::setw(2) << detail::hour_of_day(tp) << ":00";
    return os.str();
}

/// Reads `timestamp,price` rows. A non-numeric first row is treated as a header.
inline PriceSeries parse_price_csv(std::istream& in, std::string_view source = "<stream>") {
    struct Row {
        HourPoint ts;
        double price;
        std::size_t line;
    };
    std::vector<Row> rows;
    std::string line;
    std::size_t lineno = 0;
    bool first_content = true;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = detail::trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        auto comma = sv.find(',');
        auto fail = [&](const std::string& why) {
            return DataError(std::string(source) + ":" + std::to_string(lineno) + ": " + why);
        };
        if (comma == std::string_view::npos) {
            if (first_content) {
                first_content = false;
                continue;
            }
            throw fail("expected two columns 'timestamp,price'");
        }
        auto ts = detail::parse_hour_timestamp(sv.substr(0, comma));
        std::string_view price_field = sv.substr(comma + 1);
        if (auto extra = price_field.find(','); extra != std::string_view::npos) price_field = price_field.substr(0, extra);
        auto price = detail::parse_double(price_field);
        if (!ts || !price) {
            if (first_content) {
                first_content = false;
                continue;
            }
            throw fail(!ts ? "unparsable timestamp" : "unparsable price");
        }
        first_content = false;
        rows.push_back({*ts, *price, lineno});
    }
    if (rows.empty()) throw DataError(std::string(source) + ": no price rows");

    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.ts < b.ts; });
    PriceSeries out;
    out.timestamps.reserve(rows.size());
    out.prices.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0) {
            auto gap = rows[i].ts - rows[i - 1].ts;
            if (gap.count() == 0)
                throw DataError(std::string(source) + ":" + std::to_string(rows[i].line) + ": duplicate timestamp " +
                                format_timestamp(rows[i].ts));
            if (gap.count() != 1)
                throw DataError(std::string(source) + ": non-hourly gap between " + format_timestamp(rows[i - 1].ts) +
                                " and " + format_timestamp(rows[i].ts));
        }
        out.timestamps.push_back(rows[i].ts);
        out.prices.push_back(rows[i].price);
    }
    return out;
}

inline PriceSeries load_price_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open price file '" + path + "'");
    return parse_price_csv(in, path);
}

/// Cuts a series into consecutive blocks of `horizon` hours starting at the
/// first midnight. Leading and trailing partial blocks are dropped.
inline std::vector<DayPrices> slice_days(const PriceSeries& series, int horizon, WarningLog* warnings = nullptr) {
    detail::require(horizon > 0, "slice_days: horizon must be positive");
    std::size_t start = 0;
    while (start < series.size() && detail::hour_of_day(series.timestamps[start]) != 0) ++start;
    const auto T = static_cast<std::size_t>(horizon);
    std::vector<DayPrices> days;
    std::size_t pos = start;
    for (; pos + T <= series.size(); pos += T) {
        DayPrices d;
        HourPoint first = series.timestamps[pos];
        std::string id = format_timestamp(first);
        d.day_id = detail::hour_of_day(first) == 0 ? id.substr(0, 10) : id.substr(0, 10) + "T" + id.substr(11, 2);
        d.values.assign(series.prices.begin() + static_cast<std::ptrdiff_t>(pos),
                        series.prices.begin() + static_cast<std::ptrdiff_t>(pos + T));
        days.push_back(std::move(d));
    }
    std::size_t dropped = start + (series.size() - pos);
    if (dropped > 0)
        detail::warn(warnings, "slice_days: dropped " + std::to_string(dropped) + " points outside whole " +
                                   std::to_string(horizon) + "-hour days (" + std::to_string(start) + " leading, " +
                                   std::to_string(series.size() - pos) + " trailing)");
    return days;
}

/// Per-hour extremes of a day set, from which bounds at any time index follow.
class PriceEnvelope {
public:
    PriceEnvelope() = default;

    PriceEnvelope(const std::vector<DayPrices>& days, BoundsMode mode, double price_floor = kDefaultPriceFloor,
                  WarningLog* warnings = nullptr)
        : mode_(mode) {
        if (days.empty()) throw DataError("price bounds: empty day set");
        const std::size_t T = days.front().values.size();
        detail::require(T > 0, "price bounds: days must be non-empty");
        detail::require(price_floor > 0.0, "price bounds: floor must be positive");
        hour_min_.assign(T, std::numeric_limits<double>::infinity());
        hour_max_.assign(T, -std::numeric_limits<double>::infinity());
        for (const auto& d : days) {
            if (d.values.size() != T) throw DataError("price bounds: day '" + d.day_id + "' has the wrong length");
            for (std::size_t h = 0; h < T; ++h) {
                hour_min_[h] = std::min(hour_min_[h], d.values[h]);
                hour_max_[h] = std::max(hour_max_[h], d.values[h]);
            }
        }
        lambda_min_ = *std::min_element(hour_min_.begin(), hour_min_.end());
        lambda_max_ = *std::max_element(hour_max_.begin(), hour_max_.end());
        if (lambda_min_ <= price_floor) {
            detail::warn(warnings, "price bounds: minimum price " + std::to_string(lambda_min_) +
                                       " clamped to floor " + std::to_string(price_floor));
            lambda_min_ = price_floor;
            for (auto& v : hour_min_) v = std::max(v, price_floor);
        }
        lambda_max_ = std::max(lambda_max_, lambda_min_);
        for (auto& v : hour_max_) v = std::max(v, lambda_min_);
    }

    /// Builds an envelope with constant bounds (useful for synthetic studies).
    static PriceEnvelope constant(double lambda_min, double lambda_max, int horizon) {
        detail::require(lambda_min > 0.0 && lambda_min <= lambda_max, "price bounds: need 0 < lambda_min <= lambda_max");
        detail::require(horizon >= 1, "price bounds: horizon must be positive");
        PriceEnvelope env;
        env.mode_ = BoundsMode::global;
        env.lambda_min_ = lambda_min;
        env.lambda_max_ = lambda_max;
        env.hour_min_.assign(static_cast<std::size_t>(horizon), lambda_min);
        env.hour_max_.assign(static_cast<std::size_t>(horizon), lambda_max);
        return env;
    }

    int horizon() const { return static_cast<int>(hour_min_.size()); }
    BoundsMode mode() const { return mode_; }
    double lambda_min() const { return lambda_min_; }
    double lambda_max() const { return lambda_max_; }
    const std::vector<double>& hour_min() const { return hour_min_; }
    const std::vector<double>& hour_max() const { return hour_max_; }

    /// Bounds over the remaining slots t..T (1-based t).
    PriceBounds bounds_at(int t) const {
        const int T = horizon();
        detail::require(t >= 1 && t <= T, "price bounds: time index out of range");
        PriceBounds b;
        b.lambda_min = lambda_min_;
        b.lambda_max = lambda_max_;
        const auto n = static_cast<std::size_t>(T - t + 1);
        if (mode_ == BoundsMode::global) {
            b.z_min.assign(n, lambda_min_);
            b.z_max.assign(n, lambda_max_);
        } else {
            b.z_min.assign(hour_min_.begin() + (t - 1), hour_min_.end());
            b.z_max.assign(hour_max_.begin() + (t - 1), hour_max_.end());
            std::sort(b.z_min.begin(), b.z_min.end());
            std::sort(b.z_max.begin(), b.z_max.end(), std::greater<>());
        }
        return b;
    }

    /// Extremes of the bounds over slots t..T, used for fresh sub-horizon searches.
    std::pair<double, double> range_from(int t) const {
        if (mode_ == BoundsMode::global) return {lambda_min_, lambda_max_};
        auto lo = *std::min_element(hour_min_.begin() + (t - 1), hour_min_.end());
        auto hi = *std::max_element(hour_max_.begin() + (t - 1), hour_max_.end());
        return {lo, std::max(hi, lo)};
    }

private:
    BoundsMode mode_ = BoundsMode::global;
    std::vector<double> hour_min_;
    std::vector<double> hour_max_;
    double lambda_min_ = 0.0;
    double lambda_max_ = 0.0;
};

inline PriceBounds compute_bounds(const std::vector<DayPrices>& days, int t, BoundsMode mode,
                                  double price_floor = kDefaultPriceFloor, WarningLog* warnings = nullptr) {
    return PriceEnvelope(days, mode, price_floor, warnings).bounds_at(t);
}

enum class DistributionKind { empirical, lognormal };

inline DistributionKind parse_distribution_kind(std::string_view s) {
    if (s == "empirical") return DistributionKind::empirical;
    if (s == "lognormal") return DistributionKind::lognormal;
    throw ValidationError("unknown distribution '" + std::string(s) + "' (expected empirical|lognormal)");
}

/// Per-hour marginal price distribution F_t, t = 1..T.
class PriceDistribution {
public:
    PriceDistribution() = default;

    int horizon() const { return static_cast<int>(kind_ == DistributionKind::empirical ? samples_.size() : mu_.size()); }
    DistributionKind kind() const { return kind_; }

    /// P(lambda_t <= x).
    double cdf(int t, double x) const {
        check_hour(t);
        const auto h = static_cast<std::size_t>(t - 1);
        if (kind_ == DistributionKind::empirical) {
            const auto& s = samples_[h];
            auto it = std::upper_bound(s.begin(), s.end(), x);
            return static_cast<double>(it - s.begin()) / static_cast<double>(s.size());
        }
        return lognormal_cdf(h, x, true);
    }

    /// P(lambda_t < x), the left limit of the CDF.
    double cdf_below(int t, double x) const {
        check_hour(t);
        const auto h = static_cast<std::size_t>(t - 1);
        if (kind_ == DistributionKind::empirical) {
            const auto& s = samples_[h];
            auto it = std::lower_bound(s.begin(), s.end(), x);
            return static_cast<double>(it - s.begin()) / static_cast<double>(s.size());
        }
        return lognormal_cdf(h, x, false);
    }

    template <class Rng>
    std::vector<double> sample_day(Rng& rng) const {
        std::vector<double> out(static_cast<std::size_t>(horizon()));
        for (std::size_t h = 0; h < out.size(); ++h) {
            if (kind_ == DistributionKind::empirical) {
                std::uniform_int_distribution<std::size_t> pick(0, samples_[h].size() - 1);
                out[h] = samples_[h][pick(rng)];
            } else {
                std::normal_distribution<double> z(mu_[h], sigma_[h]);
                out[h] = std::exp(z(rng));
            }
        }
        return out;
    }

    static PriceDistribution empirical(const std::vector<DayPrices>& days) {
        if (days.empty()) throw DataError("fit_distribution: empty day set");
        PriceDistribution d;
        d.kind_ = DistributionKind::empirical;
        const std::size_t T = days.front().values.size();
        d.samples_.assign(T, {});
        for (const auto& day : days) {
            if (day.values.size() != T) throw DataError("fit_distribution: inconsistent day lengths");
            for (std::size_t h = 0; h < T; ++h) d.samples_[h].push_back(day.values[h]);
        }
        for (auto& s : d.samples_) std::sort(s.begin(), s.end());
        return d;
    }

    /// Per-hour lognormal fit on the positive samples.
    static PriceDistribution lognormal(const std::vector<DayPrices>& days, WarningLog* warnings = nullptr) {
        if (days.empty()) throw DataError("fit_distribution: empty day set");
        PriceDistribution d;
        d.kind_ = DistributionKind::lognormal;
        const std::size_t T = days.front().values.size();
        d.mu_.assign(T, 0.0);
        d.sigma_.assign(T, 0.0);
        for (std::size_t h = 0; h < T; ++h) {
            std::vector<double> logs;
            for (const auto& day : days) {
                if (day.values.size() != T) throw DataError("fit_distribution: inconsistent day lengths");
                if (day.values[h] > 0.0) logs.push_back(std::log(day.values[h]));
            }
            if (logs.empty()) throw DataError("fit_distribution: hour " + std::to_string(h + 1) + " has no positive prices");
            if (logs.size() < days.size())
                detail::warn(warnings, "fit_distribution: ignored " + std::to_string(days.size() - logs.size()) +
                                           " non-positive prices at hour " + std::to_string(h + 1));
            double mean = std::accumulate(logs.begin(), logs.end(), 0.0) / static_cast<double>(logs.size());
            double var = 0.0;
            for (double v : logs) var += (v - mean) * (v - mean);
            var /= static_cast<double>(logs.size());
            d.mu_[h] = mean;
            d.sigma_[h] = std::sqrt(var);
        }
        return d;
    }

private:
    void check_hour(int t) const {
        if (t < 1 || t > horizon()) throw ValidationError("price distribution: hour index out of range");
    }

    double lognormal_cdf(std::size_t h, double x, bool inclusive) const {
        if (x <= 0.0) return 0.0;
        const double lx = std::log(x);
        if (sigma_[h] == 0.0) return (lx > mu_[h] || (inclusive && lx == mu_[h])) ? 1.0 : 0.0;
        return 0.5 * std::erfc(-(lx - mu_[h]) / (sigma_[h] * std::numbers::sqrt2));
    }

    DistributionKind kind_ = DistributionKind::empirical;
    std::vector<std::vector<double>> samples_;
    std::vector<double> mu_;
    std::vector<double> sigma_;
};

inline PriceDistribution fit_distribution(const std::vector<DayPrices>& days,
                                          DistributionKind kind = DistributionKind::empirical,
                                          WarningLog* warnings = nullptr) {
    return kind == DistributionKind::empirical ? PriceDistribution::empirical(days)
                                               : PriceDistribution::lognormal(days, warnings);
}

struct DatasetSplit {
    std::vector<DayPrices> train;
    std::vector<DayPrices> calib;
    std::vector<DayPrices> test;
};

struct SplitRatios {
    double train = 0.6;
    double calib = 0.2;
    double test = 0.2;
};

/// Calibration and test sizes are floored (at least one day each); the remainder goes to training.
inline DatasetSplit split_dataset(const std::vector<DayPrices>& days, SplitRatios r, std::uint64_t seed,
                                  bool shuffled) {
    detail::require(r.train > 0 && r.calib > 0 && r.test > 0, "split_dataset: ratios must be positive");
    detail::require(std::abs(r.train + r.calib + r.test - 1.0) <= 1e-9, "split_dataset: ratios must sum to 1");
    const std::size_t n = days.size();
    if (n < 3) throw DataError("split_dataset: need at least 3 days to populate train/calib/test");
    auto take = [n](double ratio) {
        auto k = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio + 1e-9));
        return std::max<std::size_t>(k, 1);
    };
    const std::size_t n_calib = take(r.calib);
    const std::size_t n_test = take(r.test);
    if (n_calib + n_test >= n) throw DataError("split_dataset: too few days for the requested ratios");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    if (shuffled) {
        std::mt19937_64 rng(seed);
        std::shuffle(order.begin(), order.end(), rng);
    }
    DatasetSplit out;
    const std::size_t n_train = n - n_calib - n_test;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& d = days[order[i]];
        if (i < n_train)
            out.train.push_back(d);
        else if (i < n_train + n_calib)
            out.calib.push_back(d);
        else
            out.test.push_back(d);
    }
    return out;
}

/// Day matrix CSV: `day_id,h0,...,h{T-1}`.
inline void write_day_matrix(std::ostream& os, const std::vector<DayPrices>& days) {
    const std::size_t T = days.empty() ? 0 : days.front().values.size();
    os << "day_id";
    for (std::size_t h = 0; h < T; ++h) os << ",h" << h;
    os << '\n';
    os << std::setprecision(17);
    for (const auto& d : days) {
        os << d.day_id;
        for (double v : d.values) os << ',' << v;
        os << '\n';
    }
}

inline std::vector<DayPrices> read_day_matrix(std::istream& in, std::string_view source = "<stream>") {
    std::vector<DayPrices> days;
    std::string line;
    std::size_t lineno = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = detail::trim(line);
        if (sv.empty()) continue;
        std::vector<std::string_view> fields;
        std::size_t pos = 0;
        while (true) {
            auto c = sv.find(',', pos);
            fields.push_back(sv.substr(pos, c == std::string_view::npos ? std::string_view::npos : c - pos));
            if (c == std::string_view::npos) break;
            pos = c + 1;
        }
        if (detail::trim(fields[0]) == "day_id") {
            width = fields.size();
            continue;
        }
        if (fields.size() < 2 || (width && fields.size() != width))
            throw DataError(std::string(source) + ":" + std::to_string(lineno) + ": wrong number of columns");
        DayPrices d;
        d.day_id = std::string(detail::trim(fields[0]));
        for (std::size_t i = 1; i < fields.size(); ++i) {
            auto v = detail::parse_double(fields[i]);
            if (!v) throw DataError(std::string(source) + ":" + std::to_string(lineno) + ": unparsable price");
            d.values.push_back(*v);
        }
        width = fields.size();
        days.push_back(std::move(d));
    }
    if (days.empty()) throw DataError(std::string(source) + ": no day rows");
    return days;
}

/// Parameters of the seeded lognormal day generator.
struct SyntheticPriceModel {
    double base_price = 30.0;
    double daily_swing = 0.35;  ///< amplitude of the log-price daily shape
    double day_sigma = 0.25;    ///< day-level common shock
    double hour_sigma = 0.20;   ///< idiosyncratic hourly noise
};

inline std::vector<DayPrices> synthetic_days(std::size_t n_days, int horizon, std::uint64_t seed,
                                             const SyntheticPriceModel& model = {}) {
    detail::require(horizon >= 1, "synthetic_days: horizon must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<DayPrices> days;
    days.reserve(n_days);
    for (std::size_t n = 0; n < n_days; ++n) {
        DayPrices d;
        d.day_id = "synthetic-" + std::to_string(n);
        const double shock = model.day_sigma * z(rng);
        for (int h = 0; h < horizon; ++h) {
            // Morning trough, evening peak.
            const double phase = 2.0 * std::numbers::pi * (static_cast<double>(h) - 11.0) / static_cast<double>(horizon);
            const double shape = -model.daily_swing * std::cos(phase);
            d.values.push_back(std::exp(std::log(model.base_price) + shape + shock + model.hour_sigma * z(rng)));
        }
        days.push_back(std::move(d));
    }
    return days;
}

} // namespace arbreach
