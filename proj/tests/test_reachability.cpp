#include <gtest/gtest.h>

#include <map>
#include <random>

#include "arbreach/reachability.hpp"

using namespace arbreach;

namespace {

struct UniformCdf {
    double lo, hi;
    double cdf(double x) const { return std::clamp((x - lo) / (hi - lo), 0.0, 1.0); }
    double cdf_below(double x) const { return cdf(x); }
};

const BatteryParams kDesk{0, 10, 2, 5, 24};
const ActionProbs kThird{1.0 / 3, 1.0 / 3, 1.0 / 3};

double mass_at(const SocDistribution& d, int t, double e) {
    const auto& lat = d.lattice();
    for (int i = 0; i < lat.size(); ++i)
        if (std::abs(lat.energy_at(i) - e) < 1e-9) return d.at(t)[static_cast<std::size_t>(i)];
    return 0.0;
}

std::vector<ActionProbs> random_probs(std::mt19937_64& rng, int n) {
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<ActionProbs> out;
    for (int t = 0; t < n; ++t) {
        double a = u(rng), b = u(rng), c = u(rng);
        const double s = a + b + c;
        out.push_back({a / s, b / s, 1.0 - a / s - b / s});
    }
    return out;
}

} // namespace

TEST(ActionProbs, UniformExample) {
    auto p = action_probabilities(30.0, 70.0, UniformCdf{0, 100});
    EXPECT_NEAR(p.charge, 0.3, 1e-15);
    EXPECT_NEAR(p.discharge, 0.3, 1e-15);
    EXPECT_NEAR(p.idle, 0.4, 1e-15);
}

TEST(ActionProbs, BothInactive) {
    auto p = action_probabilities(std::nullopt, std::nullopt, UniformCdf{0, 100});
    EXPECT_EQ(p.charge, 0.0);
    EXPECT_EQ(p.discharge, 0.0);
    EXPECT_EQ(p.idle, 1.0);
}

TEST(ActionProbs, AdjacentThresholds) {
    auto p = action_probabilities(50.0 - 1e-12, 50.0, UniformCdf{0, 100});
    EXPECT_NEAR(p.idle, 0.0, 1e-12);
    EXPECT_NEAR(p.charge + p.discharge, 1.0, 1e-12);
}

TEST(ActionProbs, OverlapGoesToCharge) {
    auto p = action_probabilities(60.0, 40.0, UniformCdf{0, 100});
    EXPECT_NEAR(p.charge, 0.6, 1e-15);
    EXPECT_NEAR(p.discharge, 0.4, 1e-15);
    EXPECT_NEAR(p.idle, 0.0, 1e-15);
}

TEST(ActionProbs, EmpiricalAtomsAtThreshold) {
    auto F = fit_distribution({{"a", {10}}, {"b", {20}}, {"c", {30}}, {"d", {40}}});
    auto p = action_probabilities(20.0, 30.0, HourCdf{&F, 1});
    EXPECT_DOUBLE_EQ(p.charge, 0.5);
    EXPECT_DOUBLE_EQ(p.discharge, 0.5);
    EXPECT_DOUBLE_EQ(p.idle, 0.0);
}

TEST(ActionProbs, MalformedCdf) {
    struct Bad {
        double cdf(double) const { return 1.5; }
        double cdf_below(double) const { return 0.0; }
    };
    EXPECT_THROW(action_probabilities(1.0, 2.0, Bad{}), DataError);
}

TEST(Propagate, FullBatteryFoldsCharge) {
    auto d = propagate(kDesk.with_e0(10), {{0.5, 0.3, 0.2}}, 5, 5);
    EXPECT_NEAR(mass_at(d, 1, 10), 0.7, 1e-15);
    EXPECT_NEAR(mass_at(d, 1, 8), 0.3, 1e-15);
}

TEST(Propagate, TwoUniformSteps) {
    for (auto mode : {PropagationMode::augmented, PropagationMode::marginal}) {
        auto d = propagate(kDesk, {kThird, kThird}, 24, 24, mode);
        EXPECT_NEAR(mass_at(d, 2, 1), 1.0 / 9, 1e-15);
        EXPECT_NEAR(mass_at(d, 2, 3), 2.0 / 9, 1e-15);
        EXPECT_NEAR(mass_at(d, 2, 5), 3.0 / 9, 1e-15);
        EXPECT_NEAR(mass_at(d, 2, 7), 2.0 / 9, 1e-15);
        EXPECT_NEAR(mass_at(d, 2, 9), 1.0 / 9, 1e-15);
        EXPECT_NEAR(terminal_band_probability(d, TargetBand::from_range(5, 7)), 5.0 / 9, 1e-15);
    }
}

TEST(Propagate, NoChargeBudget) {
    auto d = propagate(kDesk, std::vector<ActionProbs>(6, kThird), 0, 6);
    for (int t = 0; t <= 6; ++t)
        for (int i = 0; i < d.lattice().size(); ++i)
            if (d.lattice().energy_at(i) > 5.0) {
                EXPECT_EQ(d.at(t)[static_cast<std::size_t>(i)], 0.0);
            }
}

TEST(Propagate, BudgetCapsActions) {
    auto d = propagate(kDesk, std::vector<ActionProbs>(5, {1.0, 0.0, 0.0}), 1, 0);
    EXPECT_DOUBLE_EQ(mass_at(d, 5, 7), 1.0);
}

TEST(Propagate, MatchesBruteForceSmall) {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 40; ++trial) {
        const int n = 1 + trial % 6;
        auto probs = random_probs(rng, n);
        auto p = kDesk.with_e0(2.0 * (trial % 6));
        const int kc = trial % 4, kd = (trial / 4) % 4;
        auto a = propagate(p, probs, kc, kd);
        auto b = brute_force_distribution(p, probs, kc, kd);
        for (int t = 0; t <= n; ++t)
            for (int c = 0; c <= a.k_ch(); ++c)
                for (int d = 0; d <= a.k_dis(); ++d) EXPECT_NEAR(a.mass(t, c, d), b.mass(t, c, d), 1e-12);
    }
}

TEST(Propagate, ConservationAndSupportBothModes) {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 30; ++trial) {
        auto probs = random_probs(rng, 24);
        BatteryParams p{0, 9, 2, 1.0 + trial % 8, 24};
        for (auto mode : {PropagationMode::augmented, PropagationMode::marginal}) {
            auto d = propagate(p, probs, 3 + trial % 5, 2 + trial % 7, mode);
            for (int t = 0; t <= 24; ++t) {
                EXPECT_NEAR(d.total(t), 1.0, 1e-12);
                for (double e : d.grid()) {
                    EXPECT_GE(e, p.e_min - 1e-9);
                    EXPECT_LE(e, p.e_max + 1e-9);
                }
            }
        }
    }
}

TEST(Propagate, BruteForceLimit) {
    EXPECT_THROW(brute_force_distribution(kDesk, std::vector<ActionProbs>(11, kThird), 1, 1), ValidationError);
}

TEST(BandProbability, WholeRangeAndParity) {
    auto d = propagate(kDesk, std::vector<ActionProbs>(4, kThird), 4, 4);
    EXPECT_NEAR(terminal_band_probability(d, TargetBand::from_range(0, 10)), 1.0, 1e-12);
    EXPECT_EQ(terminal_band_probability(d, TargetBand::from_range(5.5, 6.5)), 0.0);
}

TEST(BandProbability, WideningIsMonotone) {
    std::mt19937_64 rng(4);
    auto d = propagate(kDesk, random_probs(rng, 10), 10, 10);
    double prev = 0.0;
    for (double delta = 0; delta <= 5; delta += 0.5) {
        const double p = terminal_band_probability(d, {5.0, delta});
        EXPECT_GE(p, prev - 1e-15);
        prev = p;
    }
}

TEST(Kappa, Mixing) {
    EXPECT_DOUBLE_EQ(mix_over_kappa({{{1, 1}, 0.7}}, {{{{1, 1}, 1.0}}}), 0.7);
    EXPECT_DOUBLE_EQ(mix_over_kappa({{{1, 1}, 0.4}, {{2, 2}, 0.8}}, {{{{1, 1}, 0.5}, {{2, 2}, 0.5}}}), 0.6);
    EXPECT_THROW(mix_over_kappa({{{1, 1}, 0.4}}, {{{{2, 2}, 1.0}}}), ValidationError);
}

TEST(Kappa, UnprofitableFallsBackToIdle) {
    // Flat prices: every pair earns nothing.
    std::vector<DayPrices> days(5, DayPrices{"d", std::vector<double>(24, 30.0)});
    auto env = PriceEnvelope::constant(10, 90, 24);
    auto F = fit_distribution(days);
    auto k = kappa_prepolicy({{1, 1}, {2, 2}}, kDesk, {}, env, F, 10, 1);
    ASSERT_EQ(k.kappa.weights.size(), 1u);
    EXPECT_EQ(k.kappa.weights.begin()->first, (BudgetPair{0, 0}));
}

TEST(Kappa, UniformOverSurvivorsAndDeterministic) {
    auto days = synthetic_days(60, 24, 3);
    PriceEnvelope env(days, BoundsMode::global);
    auto F = fit_distribution(days);
    std::vector<BudgetPair> pairs{{1, 1}, {2, 2}, {3, 3}, {4, 4}};
    auto a = kappa_prepolicy(pairs, kDesk, {1, 1, ThresholdMode::static_schedule, {}}, env, F, 50, 9);
    auto b = kappa_prepolicy(pairs, kDesk, {1, 1, ThresholdMode::static_schedule, {}}, env, F, 50, 9);
    EXPECT_EQ(a.expected_profit, b.expected_profit);
    double sum = 0;
    for (const auto& [pair, w] : a.kappa.weights) {
        EXPECT_GT(a.expected_profit.at(pair), 0.0);
        EXPECT_DOUBLE_EQ(w, 1.0 / a.kappa.weights.size());
        sum += w;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(Stopping, FirstPassage) {
    EXPECT_EQ(first_passage({0.2, 0.5, 0.95, 0.99}, 0.1), 3);
    EXPECT_EQ(first_passage({0.2, 0.5}, 0.1), std::nullopt);
}

TEST(Stopping, FullControlWholeRange) {
    auto r = stopping_time(kDesk, std::vector<ActionProbs>(6, kThird), TargetBand::from_range(0, 10), 0.1);
    for (double q : r.Q) EXPECT_DOUBLE_EQ(q, 1.0);
    EXPECT_EQ(r.tau_star, 1);
}

TEST(Stopping, FullControlTwoSteps) {
    auto r = stopping_time(kDesk, {kThird, kThird}, TargetBand::from_range(5, 7), 0.1);
    EXPECT_NEAR(r.Q[0], 1.0, 1e-15);
    EXPECT_EQ(r.tau_star, 1);
}

TEST(Stopping, IdleModeIsBandProbability) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        auto probs = random_probs(rng, 12);
        auto band = TargetBand::from_range(4, 8);
        auto r = stopping_time(kDesk, probs, band, 0.2, PostStop::idle, BudgetPair{4, 4});
        auto d = propagate(kDesk, probs, 4, 4);
        for (int t = 1; t <= 12; ++t) EXPECT_NEAR(r.Q[static_cast<std::size_t>(t - 1)], terminal_band_probability(d, band, t), 1e-12);
    }
}

TEST(Stopping, PolicyModeEndsAtTerminalProbability) {
    std::mt19937_64 rng(22);
    auto probs = random_probs(rng, 10);
    auto band = TargetBand::from_range(3, 7);
    auto r = stopping_time(kDesk, probs, band, 0.1, PostStop::continue_policy, BudgetPair{3, 3});
    auto d = propagate(kDesk, probs, 3, 3);
    const double pT = terminal_band_probability(d, band);
    // Continuing the same chain from any step gives the same terminal probability.
    for (double q : r.Q) EXPECT_NEAR(q, pT, 1e-12);
}

TEST(Stopping, ContractHolds) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 60; ++trial) {
        auto probs = random_probs(rng, 4 + trial % 20);
        auto band = TargetBand::from_range(2.0 * (trial % 3), 2.0 * (trial % 3) + 4);
        for (auto mode : {PostStop::idle, PostStop::full_control, PostStop::continue_policy}) {
            auto r = stopping_time(kDesk, probs, band, 0.1, mode);
            for (double q : r.Q) {
                EXPECT_GE(q, 0.0);
                EXPECT_LE(q, 1.0);
            }
            if (r.tau_star) {
                EXPECT_GE(r.Q[static_cast<std::size_t>(*r.tau_star - 1)], 0.9);
                for (int t = 1; t < *r.tau_star; ++t) EXPECT_LT(r.Q[static_cast<std::size_t>(t - 1)], 0.9);
            } else {
                for (double q : r.Q) EXPECT_LT(q, 0.9);
            }
        }
    }
}

TEST(Stopping, RejectsBadEpsilon) {
    EXPECT_THROW(stopping_time(kDesk, {kThird}, TargetBand::from_range(4, 6), 0.0), ValidationError);
}

TEST(Counting, TableOneSpotChecks) {
    auto cell = [](double e0, double lo, double hi, int n) {
        return count_feasible_trajectories(kDesk.with_e0(e0), n, TargetBand::from_range(lo, hi));
    };
    auto c = cell(1, 5, 7, 8);
    EXPECT_EQ(c.in_band, 901u);
    EXPECT_EQ(c.total, 1931u);
    EXPECT_NEAR(c.pct, 46.66, 0.01);
    EXPECT_NEAR(cell(1, 5, 7, 4).pct, 37.14, 0.01);
    EXPECT_NEAR(cell(1, 5, 7, 2).pct, 20.00, 0.01);
    EXPECT_NEAR(cell(9, 5, 7, 2).pct, 60.00, 0.01);
    EXPECT_NEAR(cell(5, 5, 7, 2).pct, 55.56, 0.01);
    EXPECT_NEAR(cell(5, 3, 8, 2).pct, 77.78, 0.01);
}

TEST(Counting, MirrorSymmetry) {
    for (double e0 : {0.0, 1.0, 3.0, 4.0})
        for (int n = 1; n <= 10; ++n)
            for (double lo = 0; lo <= 8; lo += 1) {
                auto a = count_feasible_trajectories(kDesk.with_e0(e0), n, TargetBand::from_range(lo, lo + 2));
                auto b = count_feasible_trajectories(kDesk.with_e0(10 - e0), n, TargetBand::from_range(8 - lo, 10 - lo));
                EXPECT_EQ(a.in_band, b.in_band);
                EXPECT_EQ(a.total, b.total);
            }
}

namespace {

// Exact terminal-SoC law of the policy when each hour's price is drawn
// independently and uniformly from the listed day values.
std::map<long, double> enumerate_policy(const ThresholdRule& rule, const std::vector<DayPrices>& days) {
    const int T = rule.params().horizon;
    const int n = static_cast<int>(days.size());
    std::map<long, double> law;
    std::vector<int> pick(static_cast<std::size_t>(T), 0);
    const double w = std::pow(1.0 / n, T);
    while (true) {
        std::vector<double> prices;
        for (int t = 0; t < T; ++t) prices.push_back(days[static_cast<std::size_t>(pick[static_cast<std::size_t>(t)])].values[static_cast<std::size_t>(t)]);
        auto [traj, st] = run_from(PolicyState::initial(rule.params(), rule.config().k_ch, rule.config().k_dis), prices, rule);
        law[std::lround(st.e * 1000)] += w;
        int i = 0;
        while (i < T && pick[static_cast<std::size_t>(i)] == n - 1) pick[static_cast<std::size_t>(i++)] = 0;
        if (i == T) break;
        ++pick[static_cast<std::size_t>(i)];
    }
    return law;
}

} // namespace

TEST(PolicyProbs, AugmentedPropagationIsExactForStaticPolicy) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(10, 90);
    for (int trial = 0; trial < 12; ++trial) {
        BatteryParams p{0, 6, 2, 2.0 * (trial % 4), 5};
        std::vector<DayPrices> days(3, DayPrices{"d", {}});
        for (auto& d : days)
            for (int t = 0; t < p.horizon; ++t) d.values.push_back(std::round(u(rng)));
        PriceEnvelope env(days, BoundsMode::global);
        auto F = fit_distribution(days);
        for (auto mode : {ThresholdMode::static_schedule, ThresholdMode::timedep}) {
            ThresholdRule rule({1 + trial % 3, 1 + (trial / 3) % 3, mode, {}}, env, p);
            auto law = enumerate_policy(rule, days);
            auto dist = propagate_branches(p, p.horizon, rule.config().k_ch, rule.config().k_dis,
                                           policy_branch_probs(rule, F));
            const auto& lat = dist.lattice();
            for (int i = 0; i < lat.size(); ++i) {
                const long key = std::lround(lat.energy_at(i) * 1000);
                const double expect = law.count(key) ? law[key] : 0.0;
                EXPECT_NEAR(dist.at(p.horizon)[static_cast<std::size_t>(i)], expect, 1e-12);
            }
        }
    }
}

TEST(PolicyProbs, ExpectedOrderSumsToOne) {
    auto days = synthetic_days(40, 24, 2);
    PriceEnvelope env(days, BoundsMode::per_hour);
    auto F = fit_distribution(days);
    ThresholdRule rule({3, 3, ThresholdMode::feasibility, {}}, env, kDesk);
    auto probs = expected_order_probs(rule, F, 7);
    EXPECT_EQ(probs.size(), 18u);
    for (const auto& p : probs) EXPECT_NEAR(p.charge + p.discharge + p.idle, 1.0, 1e-12);
    auto d = propagate(kDesk, probs, 3, 3, PropagationMode::marginal);
    EXPECT_NEAR(d.total(18), 1.0, 1e-12);
}
