#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "arbreach/battery.hpp"
#include "arbreach/error.hpp"
#include "arbreach/market_data.hpp"
#include "arbreach/thresholds.hpp"

namespace arbreach {

/// +1 charge, -1 discharge, 0 idle.
enum class Action : int { discharge = -1, idle = 0, charge = 1 };

inline int to_int(Action a) { return static_cast<int>(a); }

struct Activation {
    int t = 0;
    double threshold = 0.0;
    double price = 0.0;
};

/// Activation record of one side. A search "stage" starts at t = 1 with the
/// full budget and restarts whenever the budget is reduced mid-horizon.
struct SideLedger {
    int k = 0;
    std::vector<Activation> history;
    std::size_t stage_begin = 0;
    int stage_budget = 0;
    int stage_start = 1;
    bool restarted = false;  ///< current stage was opened by reduce_k

    int executed() const { return static_cast<int>(history.size()); }
    int stage_executed() const { return static_cast<int>(history.size() - stage_begin); }
    /// 1-based index of the next threshold of the current stage (j_next / i_next).
    int next_index() const { return stage_executed() + 1; }
    bool has_budget() const { return stage_executed() < stage_budget; }

    std::vector<double> stage_thresholds() const {
        std::vector<double> out;
        for (std::size_t i = stage_begin; i < history.size(); ++i) out.push_back(history[i].threshold);
        return out;
    }

    static SideLedger fresh(int k) {
        SideLedger s;
        s.k = k;
        s.stage_budget = k;
        return s;
    }
};

struct PolicyState {
    int t = 1;  ///< next step to decide, 1-based
    double e = 0.0;
    SideLedger ch;
    SideLedger dis;

    static PolicyState initial(const BatteryParams& p, int k_ch, int k_dis, int first_step = 1) {
        detail::require(k_ch >= 0 && k_dis >= 0, "policy: budgets must be non-negative");
        PolicyState s;
        s.t = first_step;
        s.e = p.e0;
        s.ch = SideLedger::fresh(k_ch);
        s.dis = SideLedger::fresh(k_dis);
        s.ch.stage_start = first_step;
        s.dis.stage_start = first_step;
        return s;
    }
};

struct StepResult {
    Action action = Action::idle;
    PolicyState state;
};

/// One decision of the threshold policy. Charging is checked first; a crossed
/// threshold whose move would leave capacity is treated as idle and does not
/// consume the threshold.
inline StepResult step_policy(const PolicyState& state, const BatteryParams& p, double price,
                              const NextThresholds& thr) {
    StepResult r{Action::idle, state};
    const double slack = detail::kLatticeSlack;
    if (state.ch.has_budget() && thr.charge && price <= *thr.charge && state.e + p.rate <= p.e_max + slack) {
        r.action = Action::charge;
        r.state.e += p.rate;
        r.state.ch.history.push_back({state.t, *thr.charge, price});
    } else if (state.dis.has_budget() && thr.discharge && price >= *thr.discharge &&
               state.e - p.rate >= p.e_min - slack) {
        r.action = Action::discharge;
        r.state.e -= p.rate;
        r.state.dis.history.push_back({state.t, *thr.discharge, price});
    }
    r.state.t += 1;
    return r;
}

enum class BudgetSide { charge, discharge };

/// Reduces the budget of one side to `new_k`. The remaining new_k - executed
/// actions form a fresh search over the rest of the horizon; past activations
/// stay in the history.
inline PolicyState reduce_k(const PolicyState& state, int new_k, BudgetSide side) {
    PolicyState out = state;
    SideLedger& s = side == BudgetSide::charge ? out.ch : out.dis;
    if (new_k < s.executed())
        throw ValidationError("reduce_k: new budget " + std::to_string(new_k) + " is below the " +
                              std::to_string(s.executed()) + " actions already executed");
    detail::require(new_k <= s.k, "reduce_k: new budget exceeds the current budget");
    if (new_k == s.k) return out;
    s.k = new_k;
    s.stage_begin = s.history.size();
    s.stage_budget = new_k - s.executed();
    s.stage_start = state.t;
    s.restarted = true;
    return out;
}

struct PolicyConfig {
    int k_ch = 1;
    int k_dis = 1;
    ThresholdMode mode = ThresholdMode::static_schedule;
    RatioOverride ratios;
};

/// Computes the next thresholds for a policy state under one configuration.
///
/// The initial stage uses the envelope's global bounds (or the override
/// ratios); a stage opened by reduce_k is a fresh search whose ratio comes
/// from the bounds of its own sub-horizon.
class ThresholdRule {
public:
    ThresholdRule(PolicyConfig config, PriceEnvelope envelope, BatteryParams params)
        : config_(config), env_(std::move(envelope)), params_(params) {
        params_.validate();
        detail::require(env_.horizon() == params_.horizon, "policy: envelope horizon must match battery horizon");
    }

    const PolicyConfig& config() const { return config_; }
    const PriceEnvelope& envelope() const { return env_; }
    const BatteryParams& params() const { return params_; }

    double stage_ratio(const SideLedger& s, SearchSide side) const {
        if (s.stage_budget <= 0) return 1.0;
        const bool initial = !s.restarted;
        if (initial) {
            const auto& ov = side == SearchSide::min_search ? config_.ratios.alpha : config_.ratios.omega;
            if (ov) return *ov;
        }
        auto [lo, hi] = initial ? std::pair{env_.lambda_min(), env_.lambda_max()} : env_.range_from(s.stage_start);
        auto key = std::tuple{static_cast<int>(side), s.stage_start, s.stage_budget, initial};
        if (auto it = ratio_cache_.find(key); it != ratio_cache_.end()) return it->second;
        const double r = competitive_ratio(lo, hi, s.stage_budget, side);
        ratio_cache_.emplace(key, r);
        return r;
    }

    NextThresholds next(const PolicyState& state) const {
        detail::require(state.t >= 1 && state.t <= params_.horizon, "policy: time index outside the horizon");
        switch (config_.mode) {
        case ThresholdMode::static_schedule: return static_next(state);
        case ThresholdMode::timedep: return timedep_next(state);
        case ThresholdMode::feasibility: return feasibility_next(state);
        }
        return {};
    }

private:
    std::optional<double> static_side(const SideLedger& s, SearchSide side) const {
        if (!s.has_budget()) return std::nullopt;
        const double ratio = stage_ratio(s, side);
        const bool initial = !s.restarted;
        auto [lo, hi] = initial ? std::pair{env_.lambda_min(), env_.lambda_max()} : env_.range_from(s.stage_start);
        const auto idx = static_cast<std::size_t>(s.stage_executed());
        return side == SearchSide::min_search ? static_charge_thresholds(hi, ratio, s.stage_budget)[idx]
                                              : static_discharge_thresholds(lo, ratio, s.stage_budget)[idx];
    }

    NextThresholds static_next(const PolicyState& st) const {
        return {static_side(st.ch, SearchSide::min_search), static_side(st.dis, SearchSide::max_search)};
    }

    NextThresholds timedep_next(const PolicyState& st) const {
        PriceBounds b = env_.bounds_at(st.t);
        // Slots beyond the horizon settle at the worst bound (compulsory convention).
        const auto need = static_cast<std::size_t>(std::max(st.ch.stage_budget, st.dis.stage_budget));
        if (b.z_max.size() < need) b.z_max.resize(need, env_.lambda_max());
        if (b.z_min.size() < need) b.z_min.resize(need, env_.lambda_min());
        SideThresholdInput ch{stage_ratio(st.ch, SearchSide::min_search), st.ch.stage_budget, st.ch.stage_thresholds()};
        SideThresholdInput dis{stage_ratio(st.dis, SearchSide::max_search), st.dis.stage_budget,
                               st.dis.stage_thresholds()};
        return timedep_thresholds(ch, dis, b);
    }

    NextThresholds feasibility_next(const PolicyState& st) const {
        std::vector<double> slot_min(env_.hour_min().begin() + (st.t - 1), env_.hour_min().end());
        std::vector<double> slot_max(env_.hour_max().begin() + (st.t - 1), env_.hour_max().end());
        if (env_.mode() == BoundsMode::global) {
            std::fill(slot_min.begin(), slot_min.end(), env_.lambda_min());
            std::fill(slot_max.begin(), slot_max.end(), env_.lambda_max());
        }
        SideThresholdInput ch{stage_ratio(st.ch, SearchSide::min_search), st.ch.stage_budget, st.ch.stage_thresholds()};
        SideThresholdInput dis{stage_ratio(st.dis, SearchSide::max_search), st.dis.stage_budget,
                               st.dis.stage_thresholds()};
        return feasibility_aware_thresholds(ch, dis, params_, st.t, st.e, slot_min, slot_max);
    }

    PolicyConfig config_;
    PriceEnvelope env_;
    BatteryParams params_;
    mutable std::map<std::tuple<int, int, int, bool>, double> ratio_cache_;
};

/// Realized policy path. `soc_path[i]` is the SoC after step `start_step + i`.
struct Trajectory {
    int start_step = 1;
    std::vector<double> prices;
    std::vector<int> actions;
    std::vector<double> soc_path;
    std::vector<double> cash_flows;  ///< discharge revenue positive, charge cost negative
    double profit = 0.0;

    std::size_t steps() const { return actions.size(); }
    int charges() const { return static_cast<int>(std::count(actions.begin(), actions.end(), 1)); }
    int discharges() const { return static_cast<int>(std::count(actions.begin(), actions.end(), -1)); }
    double final_soc(double e0) const { return soc_path.empty() ? e0 : soc_path.back(); }

    void append(double price, Action a, double soc, double rate) {
        prices.push_back(price);
        actions.push_back(to_int(a));
        soc_path.push_back(soc);
        const double cf = -price * to_int(a) * rate;
        cash_flows.push_back(cf);
        profit += cf;
    }
};

/// Steps the policy from `state` over `prices` (one price per remaining step).
inline std::pair<Trajectory, PolicyState> run_from(PolicyState state, const std::vector<double>& prices,
                                                   const ThresholdRule& rule) {
    Trajectory traj;
    traj.start_step = state.t;
    for (double price : prices) {
        auto r = step_policy(state, rule.params(), price, rule.next(state));
        traj.append(price, r.action, r.state.e, rule.params().rate);
        state = std::move(r.state);
    }
    return {std::move(traj), std::move(state)};
}

/// Runs the policy on one day from `first_step` (1-based) to the horizon end.
inline Trajectory run_policy(const DayPrices& day, const BatteryParams& params, const PolicyConfig& config,
                             const PriceEnvelope& envelope, int first_step = 1) {
    detail::require(day.horizon() == params.horizon, "run_policy: day length must equal the battery horizon");
    detail::require(first_step >= 1 && first_step <= params.horizon, "run_policy: first step outside the horizon");
    ThresholdRule rule(config, envelope, params);
    std::vector<double> prices(day.values.begin() + (first_step - 1), day.values.end());
    return run_from(PolicyState::initial(params, config.k_ch, config.k_dis, first_step), prices, rule).first;
}

} // namespace arbreach
