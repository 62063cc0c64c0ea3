#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string_view>
#include <vector>

#include "arbreach/battery.hpp"
#include "arbreach/error.hpp"
#include "arbreach/market_data.hpp"

namespace arbreach {

/// max_search: sell k units (discharge side, ratio omega).
/// min_search: buy k units (charge side, ratio alpha).
enum class SearchSide { max_search, min_search };

/// Competitive ratio of the optimal k-search reservation-price algorithm.
///
/// k-max: omega solves (phi - 1) / (omega - 1) = (1 + omega/k)^k.
/// k-min: alpha solves (1 - 1/phi) / (1 - 1/alpha) = (1 + 1/(k alpha))^k.
/// phi = lambda_max / lambda_min. Both roots are unique in [1, phi]; found by bisection.
inline double competitive_ratio(double lambda_min, double lambda_max, int k, SearchSide side) {
    if (!std::isfinite(lambda_min) || !std::isfinite(lambda_max))
        throw ValidationError("competitive_ratio: price bounds must be finite");
    detail::require(lambda_min > 0.0, "competitive_ratio: lambda_min must be positive");
    detail::require(lambda_max >= lambda_min, "competitive_ratio: lambda_max must be >= lambda_min");
    detail::require(k >= 1, "competitive_ratio: k must be at least 1");
    const double phi = lambda_max / lambda_min;
    if (phi == 1.0) return 1.0;
    const double kd = static_cast<double>(k);
    // g is positive below the root and negative above it.
    auto g = [&](double r) {
        if (side == SearchSide::max_search) return (phi - 1.0) - (r - 1.0) * std::pow(1.0 + r / kd, kd);
        return (1.0 - 1.0 / phi) - (1.0 - 1.0 / r) * std::pow(1.0 + 1.0 / (kd * r), kd);
    };
    double lo = 1.0;
    double hi = phi;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

/// u_j = lambda_max [1 - (1 - 1/alpha)(1 + 1/(alpha k))^(j-1)], j = 1..k.
inline std::vector<double> static_charge_thresholds(double lambda_max, double alpha, int k_ch) {
    detail::require(alpha >= 1.0 && k_ch >= 1 && lambda_max > 0.0,
                    "static_charge_thresholds: need alpha >= 1, k >= 1, lambda_max > 0");
    std::vector<double> u;
    u.reserve(static_cast<std::size_t>(k_ch));
    // Written as u_1 minus an increment so that u_1 is exactly lambda_max / alpha.
    const double log_growth = std::log1p(1.0 / (alpha * k_ch));
    for (int j = 1; j <= k_ch; ++j)
        u.push_back(lambda_max / alpha - lambda_max * (1.0 - 1.0 / alpha) * std::expm1((j - 1) * log_growth));
    return u;
}

/// l_i = lambda_min [1 + (omega - 1)(1 + omega/k)^(i-1)], i = 1..k.
inline std::vector<double> static_discharge_thresholds(double lambda_min, double omega, int k_dis) {
    detail::require(omega >= 1.0 && k_dis >= 1 && lambda_min > 0.0,
                    "static_discharge_thresholds: need omega >= 1, k >= 1, lambda_min > 0");
    std::vector<double> l;
    l.reserve(static_cast<std::size_t>(k_dis));
    const double log_growth = std::log1p(omega / k_dis);
    for (int i = 1; i <= k_dis; ++i)
        l.push_back(omega * lambda_min + lambda_min * (omega - 1.0) * std::expm1((i - 1) * log_growth));
    return l;
}

/// Charge and discharge reservation prices with their ratios.
///
/// With ratios from competitive_ratio the first charge threshold is usually
/// at or above the first discharge threshold; the policy resolves that
/// overlap in favour of charging.
struct ThresholdSchedule {
    std::vector<double> charge;
    std::vector<double> discharge;
    double alpha = 1.0;
    double omega = 1.0;

    bool overlapping() const { return !charge.empty() && !discharge.empty() && charge.front() >= discharge.front(); }
};

struct RatioOverride {
    std::optional<double> alpha;
    std::optional<double> omega;
};

inline ThresholdSchedule make_static_schedule(double lambda_min, double lambda_max, int k_ch, int k_dis,
                                              RatioOverride ratios = {}) {
    ThresholdSchedule s;
    if (k_ch > 0) {
        s.alpha = ratios.alpha.value_or(competitive_ratio(lambda_min, lambda_max, k_ch, SearchSide::min_search));
        s.charge = static_charge_thresholds(lambda_max, s.alpha, k_ch);
    }
    if (k_dis > 0) {
        s.omega = ratios.omega.value_or(competitive_ratio(lambda_min, lambda_max, k_dis, SearchSide::max_search));
        s.discharge = static_discharge_thresholds(lambda_min, s.omega, k_dis);
    }
    return s;
}

/// One side of the time-dependent threshold recursion.
///
/// `activated` are the thresholds already used in the current search,
/// `budget` its total k. The next threshold averages the activated values
/// with the most adverse remaining bounds and scales by the ratio:
///   charge:    u = (1/(alpha k)) (sum u* + sum_{n <= k - |u*|} z_max_n)
///   discharge: l = (omega / k)   (sum l* + sum_{n <= k - |l*|} z_min_n)
struct SideThresholdInput {
    double ratio = 1.0;
    int budget = 0;
    std::vector<double> activated;
};

namespace detail {

inline double recursive_threshold(const SideThresholdInput& in, const std::vector<double>& worst_bounds,
                                  SearchSide side) {
    const int remaining = in.budget - static_cast<int>(in.activated.size());
    require(in.budget >= 1 && remaining >= 1, "threshold: no remaining budget on this side");
    if (static_cast<int>(worst_bounds.size()) < remaining)
        throw ValidationError("threshold: insufficient bound entries (" + std::to_string(worst_bounds.size()) +
                              " available, " + std::to_string(remaining) + " needed)");
    double total = std::accumulate(in.activated.begin(), in.activated.end(), 0.0);
    total = std::accumulate(worst_bounds.begin(), worst_bounds.begin() + remaining, total);
    const double k = static_cast<double>(in.budget);
    return side == SearchSide::min_search ? total / (in.ratio * k) : in.ratio * total / k;
}

} // namespace detail

struct NextThresholds {
    std::optional<double> charge;     ///< nullopt: no charge can fire
    std::optional<double> discharge;  ///< nullopt: no discharge can fire
};

/// Time-dependent thresholds from the current bound lists. A side with no
/// remaining budget is reported inactive.
inline NextThresholds timedep_thresholds(const SideThresholdInput& charge, const SideThresholdInput& discharge,
                                         const PriceBounds& bounds) {
    NextThresholds out;
    if (charge.budget > static_cast<int>(charge.activated.size()))
        out.charge = detail::recursive_threshold(charge, bounds.z_max, SearchSide::min_search);
    if (discharge.budget > static_cast<int>(discharge.activated.size()))
        out.discharge = detail::recursive_threshold(discharge, bounds.z_min, SearchSide::max_search);
    return out;
}

/// floor((e - e_min) / P)
inline int feasible_discharge_count(const BatteryParams& p, double e) {
    detail::require(e >= p.e_min - detail::kLatticeSlack && e <= p.e_max + detail::kLatticeSlack,
                    "feasible_discharge_count: SoC outside capacity");
    return std::max(0, detail::floor_steps(e - p.e_min, p.rate));
}

/// floor((e_max - e) / P)
inline int feasible_charge_count(const BatteryParams& p, double e) {
    detail::require(e >= p.e_min - detail::kLatticeSlack && e <= p.e_max + detail::kLatticeSlack,
                    "feasible_charge_count: SoC outside capacity");
    return std::max(0, detail::floor_steps(p.e_max - e, p.rate));
}

namespace detail {

/// Slots tau in [t, T] (returned as offsets into the remaining window) at
/// which an action of `side` is possible on some feasible path from (t, e).
inline std::vector<std::size_t> feasible_slots(const BatteryParams& p, int t, double e, SearchSide side) {
    std::vector<std::size_t> out;
    for (int tau = t; tau <= p.horizon; ++tau) {
        const int moves = tau - t;  // steps available before tau to reposition
        if (side == SearchSide::max_search) {
            const double best = std::min(p.e_max, e + moves * p.rate);
            if (best - p.rate >= p.e_min - kLatticeSlack) out.push_back(static_cast<std::size_t>(tau - t));
        } else {
            const double best = std::max(p.e_min, e - moves * p.rate);
            if (best + p.rate <= p.e_max + kLatticeSlack) out.push_back(static_cast<std::size_t>(tau - t));
        }
    }
    return out;
}

/// Restricts per-slot bounds (in time order) to feasible slots and returns them
/// sorted most adverse first.
inline std::vector<double> feasible_worst_bounds(const std::vector<double>& per_slot, const BatteryParams& p, int t,
                                                 double e, SearchSide side) {
    std::vector<double> out;
    for (auto idx : feasible_slots(p, t, e, side))
        if (idx < per_slot.size()) out.push_back(per_slot[idx]);
    if (side == SearchSide::max_search)
        std::sort(out.begin(), out.end());
    else
        std::sort(out.begin(), out.end(), std::greater<>());
    return out;
}

} // namespace detail

/// Remaining budget capped by what the SoC and the horizon can still host.
inline int feasible_remaining(const BatteryParams& p, int t, double e, int remaining_budget, SearchSide side) {
    const int by_soc = side == SearchSide::max_search ? feasible_discharge_count(p, e) : feasible_charge_count(p, e);
    const int by_time = std::max(0, p.horizon - t + 1);
    return std::max(0, std::min({remaining_budget, by_soc, by_time}));
}

/// Feasibility-aware thresholds at (t, e).
///
/// Like timedep_thresholds, but the remaining count on each side is K_rem
/// (budget capped by SoC and horizon) and the bounds are restricted to slots
/// that can host the action on some feasible path. The search size becomes
/// |activated| + K_rem; with no activations this is K_rem itself.
/// `slot_min` / `slot_max` are the per-slot bounds for slots t..T in time order.
inline NextThresholds feasibility_aware_thresholds(const SideThresholdInput& charge,
                                                   const SideThresholdInput& discharge, const BatteryParams& p, int t,
                                                   double e, const std::vector<double>& slot_min,
                                                   const std::vector<double>& slot_max) {
    NextThresholds out;
    if (t > p.horizon) return out;
    auto side_threshold = [&](const SideThresholdInput& in, const std::vector<double>& per_slot,
                              SearchSide side) -> std::optional<double> {
        const int remaining = in.budget - static_cast<int>(in.activated.size());
        const int k_rem = feasible_remaining(p, t, e, remaining, side);
        if (k_rem <= 0) return std::nullopt;
        auto worst = detail::feasible_worst_bounds(per_slot, p, t, e, side);
        SideThresholdInput eff = in;
        eff.budget = static_cast<int>(in.activated.size()) + k_rem;
        return detail::recursive_threshold(eff, worst, side);
    };
    out.charge = side_threshold(charge, slot_max, SearchSide::min_search);
    out.discharge = side_threshold(discharge, slot_min, SearchSide::max_search);
    return out;
}

enum class ThresholdMode { static_schedule, timedep, feasibility };

inline std::string_view to_string(ThresholdMode m) {
    switch (m) {
    case ThresholdMode::static_schedule: return "static";
    case ThresholdMode::timedep: return "timedep";
    case ThresholdMode::feasibility: return "feas";
    }
    return "static";
}

inline ThresholdMode parse_threshold_mode(std::string_view s) {
    if (s == "static") return ThresholdMode::static_schedule;
    if (s == "timedep") return ThresholdMode::timedep;
    if (s == "feas" || s == "feasibility") return ThresholdMode::feasibility;
    throw ValidationError("unknown threshold mode '" + std::string(s) + "' (expected static|timedep|feas)");
}

} // namespace arbreach
