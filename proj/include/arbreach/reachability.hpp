#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

#include "arbreach/battery.hpp"
#include "arbreach/error.hpp"
#include "arbreach/market_data.hpp"
#include "arbreach/policy.hpp"

namespace arbreach {

/// Probabilities of charge (alpha), discharge (beta) and idle (gamma) at one step.
struct ActionProbs {
    double charge = 0.0;
    double discharge = 0.0;
    double idle = 1.0;
};

/// Per-hour CDF view of a PriceDistribution, usable with action_probabilities.
struct HourCdf {
    const PriceDistribution* dist = nullptr;
    int hour = 1;

    double cdf(double x) const { return dist->cdf(hour, x); }
    double cdf_below(double x) const { return dist->cdf_below(hour, x); }
};

/// alpha = P(lambda <= u), beta = P(lambda >= l), gamma = 1 - alpha - beta.
///
/// When the thresholds overlap (u >= l) charging wins, so beta only counts
/// prices strictly above u. `Cdf` provides cdf(x) = P(lambda <= x) and
/// cdf_below(x) = P(lambda < x).
template <class Cdf>
ActionProbs action_probabilities(std::optional<double> u, std::optional<double> l, const Cdf& F) {
    ActionProbs p;
    p.charge = u ? F.cdf(*u) : 0.0;
    if (l) p.discharge = (u && *u >= *l) ? 1.0 - F.cdf(*u) : 1.0 - F.cdf_below(*l);
    p.idle = 1.0 - p.charge - p.discharge;
    constexpr double tol = 1e-12;
    auto bad = [](double v) { return !(v >= -tol && v <= 1.0 + tol); };
    if (bad(p.charge) || bad(p.discharge) || bad(p.idle))
        throw DataError("action_probabilities: probabilities outside [0,1]; malformed CDF");
    p.charge = std::clamp(p.charge, 0.0, 1.0);
    p.discharge = std::clamp(p.discharge, 0.0, 1.0);
    p.idle = std::clamp(p.idle, 0.0, 1.0);
    return p;
}

/// Terminal SoC band [e_target - delta, e_target + delta].
struct TargetBand {
    double e_target = 0.0;
    double delta = 0.0;

    static TargetBand from_range(double lo, double hi) {
        detail::require(lo <= hi, "target band: lower edge above upper edge");
        return {0.5 * (lo + hi), 0.5 * (hi - lo)};
    }

    double lo() const { return e_target - delta; }
    double hi() const { return e_target + delta; }
    bool contains(double e) const { return e >= lo() - detail::kLatticeSlack && e <= hi() + detail::kLatticeSlack; }

    void validate(const BatteryParams& p) const {
        detail::require(delta >= 0.0, "target band: delta must be non-negative");
        detail::require(hi() >= p.e_min && lo() <= p.e_max, "target band: band does not intersect capacity range");
    }
};

enum class PropagationMode { augmented, marginal };

inline std::string_view to_string(PropagationMode m) { return m == PropagationMode::augmented ? "augmented" : "marginal"; }

inline PropagationMode parse_propagation_mode(std::string_view s) {
    if (s == "augmented") return PropagationMode::augmented;
    if (s == "marginal") return PropagationMode::marginal;
    throw ValidationError("unknown propagation mode '" + std::string(s) + "' (expected augmented|marginal)");
}

/// Action probabilities that may depend on the branch: step (1-based within
/// the propagation), executed charges, executed discharges and SoC.
using BranchProbs = std::function<ActionProbs(int step, int n_ch, int n_dis, double e)>;

/// SoC probability mass over steps 0..n.
///
/// The marginal view dist_t[e] is always available. In augmented mode the
/// mass is also kept per (n_ch, n_dis); the SoC of such a cell is
/// e0 + (n_ch - n_dis) * rate.
class SocDistribution {
public:
    SocDistribution(BatteryParams params, PropagationMode mode, int steps, int k_ch, int k_dis)
        : params_(params), lattice_(params), mode_(mode), steps_(steps),
          k_ch_(std::min(std::max(k_ch, 0), steps)), k_dis_(std::min(std::max(k_dis, 0), steps)) {
        marginal_.assign(static_cast<std::size_t>(steps + 1), std::vector<double>(static_cast<std::size_t>(lattice_.size()), 0.0));
        if (mode == PropagationMode::augmented)
            augmented_.assign(static_cast<std::size_t>(steps + 1),
                              std::vector<double>(static_cast<std::size_t>((k_ch_ + 1) * (k_dis_ + 1)), 0.0));
    }

    const BatteryParams& params() const { return params_; }
    const SocLattice& lattice() const { return lattice_; }
    PropagationMode mode() const { return mode_; }
    int steps() const { return steps_; }
    int k_ch() const { return k_ch_; }
    int k_dis() const { return k_dis_; }
    std::vector<double> grid() const { return lattice_.levels(); }

    /// Marginal mass at step t over the lattice (index order of grid()).
    const std::vector<double>& at(int t) const { return marginal_.at(static_cast<std::size_t>(t)); }
    std::vector<double>& at(int t) { return marginal_.at(static_cast<std::size_t>(t)); }

    double mass(int t, int n_ch, int n_dis) const {
        if (mode_ != PropagationMode::augmented) throw ValidationError("SocDistribution: no augmented state in marginal mode");
        if (n_ch < 0 || n_dis < 0 || n_ch > k_ch_ || n_dis > k_dis_) return 0.0;
        return augmented_.at(static_cast<std::size_t>(t))[cell(n_ch, n_dis)];
    }
    double& mass_ref(int t, int n_ch, int n_dis) { return augmented_.at(static_cast<std::size_t>(t))[cell(n_ch, n_dis)]; }

    double total(int t) const {
        double s = 0.0;
        for (double v : at(t)) s += v;
        return s;
    }

    /// Recomputes the marginal view of step t from the augmented cells.
    void refresh_marginal(int t) {
        auto& m = at(t);
        std::fill(m.begin(), m.end(), 0.0);
        for (int c = 0; c <= k_ch_; ++c)
            for (int d = 0; d <= k_dis_; ++d) {
                const double v = augmented_[static_cast<std::size_t>(t)][cell(c, d)];
                if (v != 0.0) m[static_cast<std::size_t>(lattice_.index_of(c - d))] += v;
            }
    }

private:
    std::size_t cell(int c, int d) const { return static_cast<std::size_t>(c * (k_dis_ + 1) + d); }

    BatteryParams params_;
    SocLattice lattice_;
    PropagationMode mode_;
    int steps_;
    int k_ch_;
    int k_dis_;
    std::vector<std::vector<double>> marginal_;
    std::vector<std::vector<double>> augmented_;
};

/// Forward propagation with probability redistribution. Mass of a charge
/// (discharge) that would leave capacity, or exceed its budget in augmented
/// mode, is folded into the idle branch.
inline SocDistribution propagate_branches(const BatteryParams& params, int steps, int k_ch, int k_dis,
                                          const BranchProbs& probs) {
    params.validate();
    detail::require(steps >= 0, "propagate: negative number of steps");
    SocDistribution dist(params, PropagationMode::augmented, steps, k_ch, k_dis);
    const SocLattice& lat = dist.lattice();
    const int kc = dist.k_ch();
    const int kd = dist.k_dis();
    dist.mass_ref(0, 0, 0) = 1.0;
    dist.refresh_marginal(0);
    for (int t = 1; t <= steps; ++t) {
        for (int c = 0; c <= kc; ++c)
            for (int d = 0; d <= kd; ++d) {
                const double w = dist.mass(t - 1, c, d);
                if (w == 0.0) continue;
                const int m = c - d;
                const ActionProbs p = probs(t, c, d, lat.energy(m));
                double stay = p.idle;
                if (c < k_ch && c < kc && lat.contains(m + 1))
                    dist.mass_ref(t, c + 1, d) += w * p.charge;
                else
                    stay += p.charge;
                if (d < k_dis && d < kd && lat.contains(m - 1))
                    dist.mass_ref(t, c, d + 1) += w * p.discharge;
                else
                    stay += p.discharge;
                dist.mass_ref(t, c, d) += w * stay;
            }
        dist.refresh_marginal(t);
    }
    return dist;
}

/// Propagation with one ActionProbs per step. Marginal mode tracks only the
/// SoC; budgets are then enforced only through the probabilities.
inline SocDistribution propagate(const BatteryParams& params, const std::vector<ActionProbs>& probs, int k_ch,
                                 int k_dis, PropagationMode mode = PropagationMode::augmented) {
    const int steps = static_cast<int>(probs.size());
    if (mode == PropagationMode::augmented)
        return propagate_branches(params, steps, k_ch, k_dis, [&probs](int t, int, int, double) {
            return probs[static_cast<std::size_t>(t - 1)];
        });
    params.validate();
    SocDistribution dist(params, PropagationMode::marginal, steps, k_ch, k_dis);
    const SocLattice& lat = dist.lattice();
    dist.at(0)[static_cast<std::size_t>(lat.index_of(0))] = 1.0;
    for (int t = 1; t <= steps; ++t) {
        const ActionProbs& p = probs[static_cast<std::size_t>(t - 1)];
        const auto& prev = dist.at(t - 1);
        auto& cur = dist.at(t);
        for (int i = 0; i < lat.size(); ++i) {
            const double w = prev[static_cast<std::size_t>(i)];
            if (w == 0.0) continue;
            double stay = p.idle;
            if (i + 1 < lat.size())
                cur[static_cast<std::size_t>(i + 1)] += w * p.charge;
            else
                stay += p.charge;
            if (i > 0)
                cur[static_cast<std::size_t>(i - 1)] += w * p.discharge;
            else
                stay += p.discharge;
            cur[static_cast<std::size_t>(i)] += w * stay;
        }
    }
    return dist;
}

/// Exhaustive enumeration of every intended action sequence (3^n paths),
/// applying the fold-to-idle rule path by path. Test oracle for propagate.
inline SocDistribution brute_force_distribution(const BatteryParams& params, int steps, int k_ch, int k_dis,
                                                const BranchProbs& probs) {
    params.validate();
    if (steps > 10) throw ValidationError("brute_force_distribution: horizon too large for enumeration (max 10)");
    SocDistribution dist(params, PropagationMode::augmented, steps, k_ch, k_dis);
    const SocLattice lat(params);
    struct Frame {
        int t, c, d, m;
        double w;
    };
    std::vector<Frame> stack{{0, 0, 0, 0, 1.0}};
    while (!stack.empty()) {
        Frame f = stack.back();
        stack.pop_back();
        dist.mass_ref(f.t, f.c, f.d) += f.w;
        if (f.t == steps) continue;
        const ActionProbs p = probs(f.t + 1, f.c, f.d, lat.energy(f.m));
        const std::pair<int, double> intents[] = {{1, p.charge}, {-1, p.discharge}, {0, p.idle}};
        for (auto [a, pa] : intents) {
            if (pa == 0.0) continue;
            Frame g{f.t + 1, f.c, f.d, f.m, f.w * pa};
            if (a == 1 && f.c < k_ch && lat.contains(f.m + 1)) {
                ++g.c;
                ++g.m;
            } else if (a == -1 && f.d < k_dis && lat.contains(f.m - 1)) {
                ++g.d;
                --g.m;
            }
            stack.push_back(g);
        }
    }
    for (int t = 0; t <= steps; ++t) dist.refresh_marginal(t);
    return dist;
}

inline SocDistribution brute_force_distribution(const BatteryParams& params, const std::vector<ActionProbs>& probs,
                                                int k_ch, int k_dis) {
    return brute_force_distribution(params, static_cast<int>(probs.size()), k_ch, k_dis,
                                    [&probs](int t, int, int, double) { return probs[static_cast<std::size_t>(t - 1)]; });
}

/// P(e_t in band) at step t (default: the final step).
inline double terminal_band_probability(const SocDistribution& dist, const TargetBand& band, std::optional<int> t = {}) {
    const int step = t.value_or(dist.steps());
    const auto& m = dist.at(step);
    double p = 0.0;
    for (int i = 0; i < dist.lattice().size(); ++i)
        if (band.contains(dist.lattice().energy_at(i))) p += m[static_cast<std::size_t>(i)];
    return p;
}

using BudgetPair = std::pair<int, int>;  ///< (k_ch, k_dis)

/// Pre-policy weights over (k_ch, k_dis) pairs.
struct KappaPolicy {
    std::map<BudgetPair, double> weights;
};

/// sum_k kappa(k) * P(e_T in band | k)
inline double mix_over_kappa(const std::map<BudgetPair, double>& results, const KappaPolicy& kappa) {
    if (results.size() != kappa.weights.size())
        throw ValidationError("mix_over_kappa: kappa keys do not match the result keys");
    double p = 0.0;
    for (const auto& [pair, w] : kappa.weights) {
        auto it = results.find(pair);
        if (it == results.end())
            throw ValidationError("mix_over_kappa: no result for pair (" + std::to_string(pair.first) + "," +
                                  std::to_string(pair.second) + ")");
        p += w * it->second;
    }
    return p;
}

struct KappaEstimate {
    KappaPolicy kappa;
    std::map<BudgetPair, double> expected_profit;
};

/// Expected profit of each pair by Monte-Carlo on days drawn from F (the same
/// draws for every pair). Unprofitable pairs are dropped and the survivors
/// share equal weight; with no survivor the policy is the all-idle pair (0,0).
inline KappaEstimate kappa_prepolicy(const std::vector<BudgetPair>& pairs, const BatteryParams& params,
                                     const PolicyConfig& base, const PriceEnvelope& envelope,
                                     const PriceDistribution& F, int n_sims, std::uint64_t seed, int first_step = 1) {
    detail::require(!pairs.empty(), "kappa_prepolicy: no candidate pairs");
    detail::require(n_sims >= 1, "kappa_prepolicy: need at least one simulation");
    detail::require(F.horizon() == params.horizon, "kappa_prepolicy: distribution horizon must match the battery horizon");
    std::mt19937_64 rng(seed);
    std::vector<DayPrices> draws;
    draws.reserve(static_cast<std::size_t>(n_sims));
    for (int i = 0; i < n_sims; ++i) draws.push_back({"sim-" + std::to_string(i), F.sample_day(rng)});

    KappaEstimate out;
    std::vector<BudgetPair> survivors;
    for (const auto& pair : pairs) {
        PolicyConfig cfg = base;
        cfg.k_ch = pair.first;
        cfg.k_dis = pair.second;
        double total = 0.0;
        for (const auto& day : draws) total += run_policy(day, params, cfg, envelope, first_step).profit;
        const double mean = total / n_sims;
        out.expected_profit[pair] = mean;
        if (mean > 0.0) survivors.push_back(pair);
    }
    if (survivors.empty()) {
        out.kappa.weights[{0, 0}] = 1.0;
    } else {
        for (const auto& pair : survivors) out.kappa.weights[pair] = 1.0 / static_cast<double>(survivors.size());
    }
    return out;
}

/// Probabilities for every branch, with thresholds from the rule. The
/// branch's activation history is taken as the thresholds the rule produces
/// when activated one after another at the current step; for static
/// schedules, and for time-dependent ones under constant bounds, this is exact
/// when prices are independent across hours.
inline BranchProbs policy_branch_probs(const ThresholdRule& rule, const PriceDistribution& F, int first_step = 1) {
    return [&rule, &F, first_step](int step, int n_ch, int n_dis, double e) {
        const int t = first_step + step - 1;
        PolicyState st = PolicyState::initial(rule.params(), rule.config().k_ch, rule.config().k_dis, first_step);
        st.t = t;
        for (int i = 0; i < n_ch; ++i) {
            auto th = rule.next(st).charge;
            st.ch.history.push_back({t, th.value_or(0.0), th.value_or(0.0)});
        }
        for (int i = 0; i < n_dis; ++i) {
            auto th = rule.next(st).discharge;
            st.dis.history.push_back({t, th.value_or(0.0), th.value_or(0.0)});
        }
        st.e = e;
        NextThresholds thr = rule.next(st);
        // A side that cannot move the SoC never fires, so its price mass is not
        // taken from the other side.
        const BatteryParams& p = rule.params();
        if (e + p.rate > p.e_max + detail::kLatticeSlack) thr.charge.reset();
        if (e - p.rate < p.e_min - detail::kLatticeSlack) thr.discharge.reset();
        return action_probabilities(thr.charge, thr.discharge, HourCdf{&F, t});
    };
}

/// One probability triple per step for marginal propagation: the threshold
/// index advances with the expected number of activations so far.
inline std::vector<ActionProbs> expected_order_probs(const ThresholdRule& rule, const PriceDistribution& F,
                                                     int first_step = 1) {
    const BatteryParams& p = rule.params();
    const SocLattice lat(p);
    std::vector<ActionProbs> out;
    double exp_ch = 0.0, exp_dis = 0.0;
    for (int t = first_step; t <= p.horizon; ++t) {
        const int c = std::min(static_cast<int>(std::floor(exp_ch + 1e-12)), rule.config().k_ch);
        const int d = std::min(static_cast<int>(std::floor(exp_dis + 1e-12)), rule.config().k_dis);
        const int m = std::clamp(c - d, lat.min_offset(), lat.max_offset());
        const ActionProbs ap = policy_branch_probs(rule, F, first_step)(t - first_step + 1, c, d, lat.energy(m));
        out.push_back(ap);
        exp_ch += ap.charge;
        exp_dis += ap.discharge;
    }
    return out;
}

/// Behaviour assumed after stopping at t, defining q_t(e).
enum class PostStop { idle, full_control, continue_policy };

inline std::string_view to_string(PostStop m) {
    switch (m) {
    case PostStop::idle: return "idle";
    case PostStop::full_control: return "full";
    case PostStop::continue_policy: return "policy";
    }
    return "full";
}

inline PostStop parse_post_stop(std::string_view s) {
    if (s == "idle") return PostStop::idle;
    if (s == "full" || s == "full-control") return PostStop::full_control;
    if (s == "policy" || s == "continue-policy") return PostStop::continue_policy;
    throw ValidationError("unknown post-stop mode '" + std::string(s) + "' (expected idle|full|policy)");
}

struct StoppingResult {
    std::vector<std::vector<double>> q_table;  ///< [t][lattice index], t = 0..n
    std::vector<double> Q;                     ///< Q[t-1] = Q_t, t = 1..n
    std::optional<int> tau_star;
    double epsilon = 0.1;
    SocDistribution dist;
};

namespace detail {

/// Can some in-capacity action sequence of `remaining` steps move lattice
/// offset m into the band?
inline bool band_reachable(const SocLattice& lat, int m, int remaining, const TargetBand& band) {
    const int lo = std::max(lat.min_offset(), m - remaining);
    const int hi = std::min(lat.max_offset(), m + remaining);
    for (int x = lo; x <= hi; ++x)
        if (band.contains(lat.energy(x))) return true;
    return false;
}

} // namespace detail

/// tau* = min{t : Q_t >= 1 - epsilon}, Q_t = sum_e dist_t[e] q_t(e).
inline std::optional<int> first_passage(const std::vector<double>& Q, double epsilon) {
    for (std::size_t i = 0; i < Q.size(); ++i)
        if (Q[i] >= 1.0 - epsilon) return static_cast<int>(i + 1);
    return std::nullopt;
}

/// Minimum stopping time over branch-dependent probabilities (augmented chain).
inline StoppingResult stopping_time(const BatteryParams& params, int steps, int k_ch, int k_dis,
                                    const BranchProbs& probs, const TargetBand& band, double epsilon,
                                    PostStop post_stop = PostStop::full_control) {
    detail::require(epsilon > 0.0 && epsilon < 1.0, "stopping_time: epsilon must lie in (0,1)");
    band.validate(params);
    SocDistribution dist = propagate_branches(params, steps, k_ch, k_dis, probs);
    const SocLattice& lat = dist.lattice();
    const int kc = dist.k_ch(), kd = dist.k_dis();
    const auto L = static_cast<std::size_t>(lat.size());

    // Continuation success probability per augmented cell, backwards from the end.
    std::vector<std::vector<double>> h;
    if (post_stop == PostStop::continue_policy) {
        h.assign(static_cast<std::size_t>(steps + 1), std::vector<double>(static_cast<std::size_t>((kc + 1) * (kd + 1)), 0.0));
        auto cell = [kd](int c, int d) { return static_cast<std::size_t>(c * (kd + 1) + d); };
        for (int c = 0; c <= kc; ++c)
            for (int d = 0; d <= kd; ++d)
                if (lat.contains(c - d)) h[static_cast<std::size_t>(steps)][cell(c, d)] = band.contains(lat.energy(c - d)) ? 1.0 : 0.0;
        for (int t = steps - 1; t >= 0; --t)
            for (int c = 0; c <= kc; ++c)
                for (int d = 0; d <= kd; ++d) {
                    const int m = c - d;
                    if (!lat.contains(m)) continue;
                    const ActionProbs p = probs(t + 1, c, d, lat.energy(m));
                    const auto& nxt = h[static_cast<std::size_t>(t + 1)];
                    double stay = p.idle, v = 0.0;
                    if (c < k_ch && c < kc && lat.contains(m + 1))
                        v += p.charge * nxt[cell(c + 1, d)];
                    else
                        stay += p.charge;
                    if (d < k_dis && d < kd && lat.contains(m - 1))
                        v += p.discharge * nxt[cell(c, d + 1)];
                    else
                        stay += p.discharge;
                    h[static_cast<std::size_t>(t)][cell(c, d)] = v + stay * nxt[cell(c, d)];
                }
    }

    StoppingResult r{{}, {}, std::nullopt, epsilon, dist};
    r.q_table.assign(static_cast<std::size_t>(steps + 1), std::vector<double>(L, 0.0));
    for (int t = 0; t <= steps; ++t) {
        auto& q = r.q_table[static_cast<std::size_t>(t)];
        if (post_stop == PostStop::continue_policy) {
            std::vector<double> num(L, 0.0);
            for (int c = 0; c <= kc; ++c)
                for (int d = 0; d <= kd; ++d) {
                    if (!lat.contains(c - d)) continue;
                    const double w = dist.mass(t, c, d);
                    num[static_cast<std::size_t>(lat.index_of(c - d))] +=
                        w * h[static_cast<std::size_t>(t)][static_cast<std::size_t>(c * (kd + 1) + d)];
                }
            const auto& marg = dist.at(t);
            for (std::size_t i = 0; i < L; ++i) q[i] = marg[i] > 0.0 ? num[i] / marg[i] : 0.0;
        } else {
            for (int i = 0; i < lat.size(); ++i) {
                const int m = lat.offset_at(i);
                q[static_cast<std::size_t>(i)] = post_stop == PostStop::idle
                                                     ? (band.contains(lat.energy(m)) ? 1.0 : 0.0)
                                                     : (detail::band_reachable(lat, m, steps - t, band) ? 1.0 : 0.0);
            }
        }
        if (t >= 1) {
            double Qt = 0.0;
            const auto& marg = dist.at(t);
            for (std::size_t i = 0; i < L; ++i) Qt += marg[i] * q[i];
            r.Q.push_back(std::min(Qt, 1.0));
        }
    }
    r.tau_star = first_passage(r.Q, epsilon);
    return r;
}

inline StoppingResult stopping_time(const BatteryParams& params, const std::vector<ActionProbs>& probs,
                                    const TargetBand& band, double epsilon, PostStop post_stop = PostStop::full_control,
                                    std::optional<BudgetPair> budgets = std::nullopt) {
    const int steps = static_cast<int>(probs.size());
    const auto [kc, kd] = budgets.value_or(BudgetPair{steps, steps});
    return stopping_time(params, steps, kc, kd,
                         [&probs](int t, int, int, double) { return probs[static_cast<std::size_t>(t - 1)]; }, band,
                         epsilon, post_stop);
}

struct TrajectoryCount {
    std::uint64_t in_band = 0;
    std::uint64_t total = 0;
    double pct = 0.0;
};

/// Counts all action sequences of length n that stay within capacity, and
/// those of them ending in the band.
inline TrajectoryCount count_feasible_trajectories(const BatteryParams& params, int n, const TargetBand& band) {
    params.validate();
    detail::require(n >= 1, "count_feasible_trajectories: need at least one step");
    const SocLattice lat(params);
    std::vector<std::uint64_t> ways(static_cast<std::size_t>(lat.size()), 0);
    ways[static_cast<std::size_t>(lat.index_of(0))] = 1;
    for (int step = 0; step < n; ++step) {
        std::vector<std::uint64_t> next(ways.size(), 0);
        for (std::size_t i = 0; i < ways.size(); ++i) {
            if (ways[i] == 0) continue;
            next[i] += ways[i];
            if (i + 1 < ways.size()) next[i + 1] += ways[i];
            if (i > 0) next[i - 1] += ways[i];
        }
        ways = std::move(next);
    }
    TrajectoryCount out;
    for (int i = 0; i < lat.size(); ++i) {
        out.total += ways[static_cast<std::size_t>(i)];
        if (band.contains(lat.energy_at(i))) out.in_band += ways[static_cast<std::size_t>(i)];
    }
    out.pct = 100.0 * static_cast<double>(out.in_band) / static_cast<double>(out.total);
    return out;
}

} // namespace arbreach
