#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "arbreach/battery.hpp"
#include "arbreach/error.hpp"
#include "arbreach/market_data.hpp"
#include "arbreach/policy.hpp"

namespace arbreach {

/// Exact action counts imposed on the offline benchmark.
struct FixedBudget {
    int k_ch = 0;
    int k_dis = 0;
};

/// End-of-horizon SoC rule. `automatic` keeps the initial energy
/// (e_T >= e0) when no budget is fixed and leaves e_T free otherwise, since
/// fixed counts already pin the net SoC change.
enum class TerminalSoc { automatic, free, at_least_initial };

struct OfflineResult {
    double profit = 0.0;
    Trajectory trajectory;
};

/// Perfect-foresight optimum over prices[0..n) starting from params.e0.
///
/// Dynamic programming over (step, SoC lattice[, charge count, discharge
/// count]). With `fixed` the optimum must execute exactly k_ch charges and
/// k_dis discharges. Among equal-profit schedules the one with the fewest
/// actions wins, then the one that discharges earliest.
inline OfflineResult offline_opt(const std::vector<double>& prices, const BatteryParams& params,
                                 std::optional<FixedBudget> fixed = std::nullopt,
                                 TerminalSoc terminal = TerminalSoc::automatic) {
    params.validate();
    const bool keep_initial =
        terminal == TerminalSoc::at_least_initial || (terminal == TerminalSoc::automatic && !fixed);
    const int n = static_cast<int>(prices.size());
    const SocLattice lattice(params);
    const int L = lattice.size();
    const int kc = fixed ? fixed->k_ch : 0;
    const int kd = fixed ? fixed->k_dis : 0;
    if (fixed) detail::require(kc >= 0 && kd >= 0, "offline_opt: budgets must be non-negative");
    const int nc = kc + 1;
    const int nd = kd + 1;
    auto idx = [&](int m_idx, int c, int d) { return (static_cast<std::size_t>(m_idx) * nc + c) * nd + d; };
    const std::size_t S = static_cast<std::size_t>(L) * nc * nd;

    struct Value {
        double profit = -std::numeric_limits<double>::infinity();
        int actions = 0;
    };
    auto better = [](const Value& a, const Value& b) {
        const double tol = 1e-9 * std::max(1.0, std::abs(b.profit));
        if (a.profit > b.profit + tol) return true;
        if (a.profit < b.profit - tol) return false;
        return a.actions < b.actions;
    };
    auto same = [&](const Value& a, const Value& b) { return !better(a, b) && !better(b, a); };

    // value[t][s]: best continuation from state s before step t (0-based).
    std::vector<std::vector<Value>> value(static_cast<std::size_t>(n + 1), std::vector<Value>(S));
    for (int m = 0; m < L; ++m)
        for (int c = 0; c < nc; ++c)
            for (int d = 0; d < nd; ++d)
                if ((!fixed || (c == kc && d == kd)) && (!keep_initial || lattice.offset_at(m) >= 0))
                    value[static_cast<std::size_t>(n)][idx(m, c, d)] = {0.0, 0};

    constexpr int kOrder[3] = {-1, 0, 1};  // discharge preferred on ties, then idle
    auto successor = [&](int m, int c, int d, int a) -> std::optional<std::size_t> {
        const int m2 = m + a;
        if (m2 < 0 || m2 >= L) return std::nullopt;
        int c2 = c, d2 = d;
        if (fixed) {
            if (a == 1) ++c2;
            if (a == -1) ++d2;
            if (c2 > kc || d2 > kd) return std::nullopt;
        }
        return idx(m2, c2, d2);
    };

    for (int t = n - 1; t >= 0; --t) {
        const double price = prices[static_cast<std::size_t>(t)];
        auto& cur = value[static_cast<std::size_t>(t)];
        const auto& nxt = value[static_cast<std::size_t>(t + 1)];
        for (int m = 0; m < L; ++m)
            for (int c = 0; c < nc; ++c)
                for (int d = 0; d < nd; ++d) {
                    Value best;
                    for (int a : kOrder) {
                        auto s2 = successor(m, c, d, a);
                        if (!s2 || !std::isfinite(nxt[*s2].profit)) continue;
                        Value v{nxt[*s2].profit - price * a * params.rate, nxt[*s2].actions + (a != 0)};
                        if (!std::isfinite(best.profit) || better(v, best)) best = v;
                    }
                    cur[idx(m, c, d)] = best;
                }
    }

    const std::size_t start = idx(lattice.index_of(0), 0, 0);
    if (!std::isfinite(value[0][start].profit))
        throw ValidationError("offline_opt: the fixed budget cannot be executed within capacity, horizon and end SoC rule");

    OfflineResult out;
    out.trajectory.start_step = 1;
    int m = lattice.index_of(0), c = 0, d = 0;
    for (int t = 0; t < n; ++t) {
        const double price = prices[static_cast<std::size_t>(t)];
        const Value& target = value[static_cast<std::size_t>(t)][idx(m, c, d)];
        for (int a : kOrder) {
            auto s2 = successor(m, c, d, a);
            if (!s2) continue;
            const Value& nv = value[static_cast<std::size_t>(t + 1)][*s2];
            if (!std::isfinite(nv.profit)) continue;
            Value v{nv.profit - price * a * params.rate, nv.actions + (a != 0)};
            if (same(v, target)) {
                m += a;
                if (fixed && a == 1) ++c;
                if (fixed && a == -1) ++d;
                out.trajectory.append(price, static_cast<Action>(a), lattice.energy_at(m), params.rate);
                break;
            }
        }
    }
    out.profit = out.trajectory.profit;
    return out;
}

inline OfflineResult offline_opt(const DayPrices& day, const BatteryParams& params,
                                 std::optional<FixedBudget> fixed = std::nullopt,
                                 TerminalSoc terminal = TerminalSoc::automatic) {
    return offline_opt(day.values, params, fixed, terminal);
}

/// End-of-horizon settlement of unused budget, used only for competitive checks:
/// leftover discharges sell at lambda_min, leftover charges buy at lambda_max.
struct CompulsorySettlement {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    int k_ch = 0;
    int k_dis = 0;
    double rate = 1.0;
};

struct CompetitiveResult {
    bool holds = false;
    double revenue = 0.0;         ///< policy revenue after any settlement
    double achieved_ratio = 1.0;  ///< OPT/ALG for revenue, ALG/OPT for cost
};

/// Checks ALG >= OPT / ratio for revenue problems (opt >= 0) and
/// cost(ALG) <= ratio * cost(OPT) when the benchmark is a pure cost (opt < 0).
inline CompetitiveResult competitive_check(const Trajectory& traj, double opt_value, double ratio,
                                           std::optional<CompulsorySettlement> compulsory = std::nullopt) {
    detail::require(ratio >= 1.0, "competitive_check: ratio must be >= 1");
    CompetitiveResult r;
    r.revenue = traj.profit;
    if (compulsory) {
        const int left_dis = std::max(0, compulsory->k_dis - traj.discharges());
        const int left_ch = std::max(0, compulsory->k_ch - traj.charges());
        r.revenue += left_dis * compulsory->lambda_min * compulsory->rate;
        r.revenue -= left_ch * compulsory->lambda_max * compulsory->rate;
    }
    const double tol = 1e-9 * std::max(1.0, std::abs(opt_value));
    if (opt_value >= 0.0) {
        r.holds = r.revenue >= opt_value / ratio - tol;
        r.achieved_ratio = r.revenue > 0.0 ? opt_value / r.revenue : (opt_value > 0.0 ? INFINITY : 1.0);
    } else {
        const double cost_alg = -r.revenue;
        const double cost_opt = -opt_value;
        r.holds = cost_alg <= ratio * cost_opt + tol;
        r.achieved_ratio = cost_alg / cost_opt;
    }
    return r;
}

/// Same check, with the benchmark given as a trajectory over the same prices.
inline CompetitiveResult competitive_check(const Trajectory& traj, const Trajectory& opt, double ratio,
                                           std::optional<CompulsorySettlement> compulsory = std::nullopt) {
    if (traj.steps() != opt.steps())
        throw ValidationError("competitive_check: policy and benchmark cover different numbers of steps");
    return competitive_check(traj, opt.profit, ratio, compulsory);
}

} // namespace arbreach
