#include <gtest/gtest.h>

#include <random>

#include "arbreach/policy.hpp"

using namespace arbreach;

namespace {

const BatteryParams kDesk{0, 10, 2, 5, 24};

NextThresholds both(double u, double l) { return {u, l}; }

} // namespace

TEST(Step, TieAtChargeThresholdCharges) {
    auto s = PolicyState::initial(kDesk, 2, 2);
    auto r = step_policy(s, kDesk, 20.0, both(20.0, 50.0));
    EXPECT_EQ(r.action, Action::charge);
    EXPECT_DOUBLE_EQ(r.state.e, 7.0);
    EXPECT_EQ(r.state.ch.next_index(), 2);
    EXPECT_EQ(r.state.t, 2);
}

TEST(Step, TieAtDischargeThresholdDischarges) {
    auto s = PolicyState::initial(kDesk, 2, 2);
    auto r = step_policy(s, kDesk, 50.0, both(20.0, 50.0));
    EXPECT_EQ(r.action, Action::discharge);
    EXPECT_EQ(r.state.dis.history.size(), 1u);
}

TEST(Step, BetweenThresholdsIdles) {
    auto s = PolicyState::initial(kDesk, 2, 2);
    auto r = step_policy(s, kDesk, 35.0, both(20.0, 50.0));
    EXPECT_EQ(r.action, Action::idle);
    EXPECT_EQ(r.state.ch.next_index(), 1);
    EXPECT_EQ(r.state.dis.next_index(), 1);
}

TEST(Step, CapacityFailureKeepsCounter) {
    auto p = kDesk.with_e0(1.0);
    auto s = PolicyState::initial(p, 2, 2);
    auto r = step_policy(s, p, 80.0, both(20.0, 50.0));
    EXPECT_EQ(r.action, Action::idle);
    EXPECT_EQ(r.state.dis.next_index(), 1);
    EXPECT_DOUBLE_EQ(r.state.e, 1.0);
}

TEST(Step, ChargeWinsOverlap) {
    auto s = PolicyState::initial(kDesk, 1, 1);
    auto r = step_policy(s, kDesk, 30.0, both(40.0, 20.0));
    EXPECT_EQ(r.action, Action::charge);
}

TEST(Step, FullBatteryFallsThroughToDischarge) {
    auto p = kDesk.with_e0(10.0);
    auto s = PolicyState::initial(p, 1, 1);
    auto r = step_policy(s, p, 30.0, both(40.0, 20.0));
    EXPECT_EQ(r.action, Action::discharge);
}

TEST(Step, InactiveSidesNeverFire) {
    auto s = PolicyState::initial(kDesk, 1, 1);
    auto r = step_policy(s, kDesk, 0.0, NextThresholds{});
    EXPECT_EQ(r.action, Action::idle);
}

TEST(Run, AllMaxPricesDischargeOnce) {
    auto env = PriceEnvelope::constant(10, 90, 24);
    DayPrices day{"d", std::vector<double>(24, 90.0)};
    auto traj = run_policy(day, kDesk, {1, 1, ThresholdMode::static_schedule, {}}, env);
    EXPECT_EQ(traj.discharges(), 1);
    EXPECT_EQ(traj.charges(), 0);
    EXPECT_EQ(traj.actions[0], -1);
    EXPECT_DOUBLE_EQ(traj.profit, 180.0);
}

TEST(Run, BetweenThresholdsAllIdle) {
    auto env = PriceEnvelope::constant(10, 90, 24);
    PolicyConfig cfg{2, 2, ThresholdMode::static_schedule, {5.0, 5.0}};  // u_1 = 18, l_1 = 50
    DayPrices day{"d", std::vector<double>(24, 30.0)};
    auto traj = run_policy(day, kDesk, cfg, env);
    EXPECT_EQ(traj.charges() + traj.discharges(), 0);
    EXPECT_DOUBLE_EQ(traj.profit, 0.0);
    EXPECT_DOUBLE_EQ(traj.final_soc(kDesk.e0), kDesk.e0);
}

TEST(Run, DecreasingPricesFromFullBattery) {
    BatteryParams p{0, 10, 2, 10, 24};
    auto env = PriceEnvelope::constant(10, 90, 24);
    std::vector<double> prices;
    for (int t = 0; t < 24; ++t) prices.push_back(90.0 - 80.0 * t / 23.0);
    PolicyConfig cfg{0, 1, ThresholdMode::static_schedule, {}};
    auto traj = run_policy({"d", prices}, p, cfg, env);
    const double l1 = static_discharge_thresholds(10, competitive_ratio(10, 90, 1, SearchSide::max_search), 1)[0];
    const auto first = std::find_if(prices.begin(), prices.end(), [&](double x) { return x >= l1; });
    ASSERT_NE(first, prices.end());
    EXPECT_EQ(traj.discharges(), 1);
    EXPECT_DOUBLE_EQ(traj.profit, *first * 2.0);
}

TEST(Run, ProfitMatchesCashFlows) {
    auto env = PriceEnvelope::constant(10, 90, 24);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(10, 90);
    DayPrices day{"d", {}};
    for (int t = 0; t < 24; ++t) day.values.push_back(u(rng));
    auto traj = run_policy(day, kDesk, {3, 3, ThresholdMode::feasibility, {}}, env);
    double s = 0;
    for (std::size_t t = 0; t < traj.steps(); ++t) s += day.values[t] * -traj.actions[t] * kDesk.rate;
    EXPECT_NEAR(traj.profit, s, 1e-9);
}

TEST(Run, FeasibleAndWithinBudgetAllModes) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(10, 90);
    std::vector<DayPrices> hist(20, DayPrices{"h", {}});
    for (auto& d : hist)
        for (int t = 0; t < 24; ++t) d.values.push_back(u(rng));
    for (auto bmode : {BoundsMode::global, BoundsMode::per_hour}) {
        PriceEnvelope env(hist, bmode);
        for (auto mode : {ThresholdMode::static_schedule, ThresholdMode::timedep, ThresholdMode::feasibility})
            for (int trial = 0; trial < 40; ++trial) {
                const int kc = trial % 5, kd = (trial / 5) % 5;
                const double e0 = 2.0 * (trial % 6);
                auto p = kDesk.with_e0(e0);
                DayPrices day{"d", {}};
                for (int t = 0; t < 24; ++t) day.values.push_back(u(rng));
                auto traj = run_policy(day, p, {kc, kd, mode, {}}, env);
                EXPECT_LE(traj.charges(), kc);
                EXPECT_LE(traj.discharges(), kd);
                double prev = e0;
                for (std::size_t t = 0; t < traj.steps(); ++t) {
                    const double e = traj.soc_path[t];
                    EXPECT_GE(e, p.e_min - 1e-9);
                    EXPECT_LE(e, p.e_max + 1e-9);
                    EXPECT_DOUBLE_EQ(e - prev, traj.actions[t] * p.rate);
                    prev = e;
                }
            }
    }
}

TEST(Run, TimeDepMatchesStaticUnderConstantBounds) {
    auto env = PriceEnvelope::constant(10, 90, 24);
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(10, 90);
    for (int trial = 0; trial < 100; ++trial) {
        DayPrices day{"d", {}};
        for (int t = 0; t < 24; ++t) day.values.push_back(u(rng));
        const int kc = 1 + trial % 4, kd = 1 + (trial / 4) % 4;
        auto a = run_policy(day, kDesk, {kc, kd, ThresholdMode::static_schedule, {}}, env);
        auto b = run_policy(day, kDesk, {kc, kd, ThresholdMode::timedep, {}}, env);
        EXPECT_EQ(a.actions, b.actions);
    }
}

TEST(Run, StartMidHorizon) {
    auto env = PriceEnvelope::constant(10, 90, 24);
    DayPrices day{"d", std::vector<double>(24, 90.0)};
    auto traj = run_policy(day, kDesk, {1, 1, ThresholdMode::feasibility, {}}, env, 19);
    EXPECT_EQ(traj.start_step, 19);
    EXPECT_EQ(traj.steps(), 6u);
    EXPECT_EQ(traj.discharges(), 1);
}

TEST(Run, RejectsWrongDayLength) {
    auto env = PriceEnvelope::constant(10, 90, 24);
    EXPECT_THROW(run_policy({"d", std::vector<double>(23, 50.0)}, kDesk, {}, env), ValidationError);
}

TEST(ReduceK, SameBudgetIsIdentity) {
    auto s = PolicyState::initial(kDesk, 3, 3);
    auto r = reduce_k(s, 3, BudgetSide::discharge);
    EXPECT_EQ(r.dis.stage_budget, 3);
    EXPECT_FALSE(r.dis.restarted);
}

TEST(ReduceK, BelowExecutedThrows) {
    auto s = PolicyState::initial(kDesk, 3, 3);
    s.dis.history.push_back({1, 30, 40});
    s.dis.history.push_back({2, 35, 45});
    EXPECT_THROW(reduce_k(s, 1, BudgetSide::discharge), ValidationError);
    EXPECT_THROW(reduce_k(s, 4, BudgetSide::discharge), ValidationError);
}

TEST(ReduceK, FreshOneSearchOnSubHorizon) {
    std::vector<DayPrices> hist{{"a", {}}, {"b", {}}};
    for (int t = 0; t < 24; ++t) {
        hist[0].values.push_back(20.0 + t);
        hist[1].values.push_back(60.0 + t);
    }
    PriceEnvelope env(hist, BoundsMode::per_hour);
    BatteryParams p = kDesk.with_e0(10);
    ThresholdRule rule({0, 3, ThresholdMode::static_schedule, {}}, env, p);
    auto s = PolicyState::initial(p, 0, 3);
    s = step_policy(s, p, 100.0, rule.next(s)).state;
    ASSERT_EQ(s.dis.executed(), 1);
    for (int i = 0; i < 9; ++i) s = step_policy(s, p, 0.5, rule.next(s)).state;
    auto r = reduce_k(s, 2, BudgetSide::discharge);
    EXPECT_EQ(r.dis.stage_budget, 1);
    EXPECT_EQ(r.dis.executed(), 1);
    const double lo = 20.0 + 10, hi = 60.0 + 23;
    const double w1 = competitive_ratio(lo, hi, 1, SearchSide::max_search);
    EXPECT_NEAR(*rule.next(r).discharge, w1 * lo, 1e-9);
}

TEST(ReduceK, ChargeSideRestart) {
    auto env = PriceEnvelope::constant(10, 90, 24);
    ThresholdRule rule({3, 0, ThresholdMode::timedep, {}}, env, kDesk.with_e0(0));
    auto s = PolicyState::initial(kDesk.with_e0(0), 3, 0);
    s.t = 5;
    auto r = reduce_k(s, 1, BudgetSide::charge);
    const double a1 = competitive_ratio(10, 90, 1, SearchSide::min_search);
    EXPECT_NEAR(*rule.next(r).charge, 90 / a1, 1e-9);
}
