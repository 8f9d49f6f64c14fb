#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "dmab/arms.hpp"
#include "dmab/errors.hpp"
#include "dmab/matching.hpp"
#include "dmab/policy.hpp"

namespace dmab {

/// Suboptimality gaps, per arm (single player) or per matching
/// (multi-player). A zero minimum gap leaves every bound undefined.
struct GapStats {
    std::vector<double> gaps;  // per suboptimal arm / per non-optimal matching
    double gap_min = 0.0;
    double gap_max = 0.0;
    double optimal = 0.0;  // best mean, or best matching surplus
};

inline GapStats gap_stats(const std::vector<double>& means) {
    if (means.size() < 2) throw InvalidModelError("gap stats: need at least two arms");
    double best = means[detail::best_mean_arm(means)];
    GapStats g;
    g.optimal = best;
    for (double mu : means) {
        double d = best - mu;
        if (d == 0.0) continue;  // the optimal arm itself (ties handled below)
        g.gaps.push_back(d);
    }
    if (g.gaps.size() + 1 != means.size())
        throw UndefinedBoundError("gap stats: optimal arm is not unique (gap_min = 0)");
    g.gap_min = *std::min_element(g.gaps.begin(), g.gaps.end());
    g.gap_max = *std::max_element(g.gaps.begin(), g.gaps.end());
    return g;
}

/// Multi-player gaps over all injective matchings, by enumeration.
inline GapStats gap_stats(const ValueMatrix& means) {
    auto all = enumerate_matchings(means);
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& [m, s] : all) best = std::max(best, s);
    GapStats g;
    g.optimal = best;
    std::size_t optima = 0;
    for (const auto& [m, s] : all) {
        double d = best - s;
        if (d == 0.0) {
            optima += 1;
            continue;
        }
        g.gaps.push_back(d);
    }
    if (optima != 1)
        throw UndefinedBoundError("gap stats: optimal matching is not unique (gap_min = 0)");
    if (g.gaps.empty())
        throw UndefinedBoundError("gap stats: no suboptimal matchings to take a gap over");
    g.gap_min = *std::min_element(g.gaps.begin(), g.gaps.end());
    g.gap_max = *std::max_element(g.gaps.begin(), g.gaps.end());
    return g;
}

/// Chain-dependent constants shared by the Markov bounds.
struct MarkovConstants {
    double correction = 0.0;   // sum over chains of (sum of state rewards) / pi_min(chain)
    double visit_ratio = 0.0;  // |X|_max / pi_min over everything
    double rho_min = 1.0;
    double rho_max = 0.0;
    int max_states = 0;
    double pi_min = 1.0;

    double kappa_floor_single() const {
        return 168.0 * max_states * max_states / rho_min;
    }
    double kappa_floor_multi(int players) const {
        return (112.0 + 56.0 * players) * max_states * max_states / rho_min;
    }
};

inline MarkovConstants markov_constants(const std::vector<const MarkovArm*>& chains) {
    if (chains.empty()) throw InvalidModelError("markov constants: no chains");
    MarkovConstants c;
    for (const MarkovArm* arm : chains) {
        const ChainStats& st = arm->stats();
        double reward_sum = 0.0;
        for (double x : arm->rewards()) reward_sum += x;
        c.correction += reward_sum / st.pi_min;
        c.pi_min = std::min(c.pi_min, st.pi_min);
        c.rho_min = std::min(c.rho_min, st.rho);
        c.rho_max = std::max(c.rho_max, st.rho);
        c.max_states = std::max(c.max_states, st.cardinality);
    }
    c.visit_ratio = static_cast<double>(c.max_states) / c.pi_min;
    return c;
}

/// eps = f(L): how the matching/index precision follows the frame length.
/// Physical mode ties it to the per-frame subframe budget; packetized mode
/// fixes it by configuration.
struct PrecisionRule {
    bool physical = false;
    double fixed_eps = 0.0;

    double eval(long frame_len, int players) const {
        if (!physical) return fixed_eps;
        long j = std::max<long>(1, (frame_len - players) / players);
        return std::pow(2.0, -static_cast<double>(j));
    }
};

namespace detail {

inline void require_positive_gaps(const GapStats& g, const char* who) {
    if (g.gaps.empty() || g.gap_min <= 0.0)
        throw UndefinedBoundError(std::string(who) + ": requires a positive minimum gap");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Single player, i.i.d.
// ---------------------------------------------------------------------------

/// UCB1 with recomputation every L slots.
inline double bound_ucb1_periodic(const GapStats& g, int L, double T) {
    detail::require_positive_gaps(g, "ucb1 bound");
    if (T < 1.0) throw UndefinedBoundError("ucb1 bound: T must be >= 1");
    double sum_inv = 0.0, sum_gap = 0.0;
    for (double d : g.gaps) {
        sum_inv += 1.0 / d;
        sum_gap += d;
    }
    double lT = std::log(T);
    return 8.0 * L * lT * sum_inv +
           L * (1.0 + std::numbers::pi * std::numbers::pi / 3.0) * sum_gap;
}

/// Doubling-epoch policy with per-computation cost C.
inline double bound_ucb4(const GapStats& g, double cost, int num_arms, double T) {
    detail::require_positive_gaps(g, "ucb4 bound");
    if (T < 1.0) throw UndefinedBoundError("ucb4 bound: T must be >= 1");
    double lT = std::log(T);
    double sum = 0.0;
    for (double d : g.gaps) sum += 12.0 * lT / (d * d);
    return (g.gap_max + cost * (1.0 + lT)) * (sum + 2.0 * num_arms);
}

/// eps-precise indices, gap known. eps = 0 falls back to the exact form.
inline double bound_ucb4_precise(const GapStats& g, const CostModel& cost, double eps,
                                 int num_arms, double T) {
    detail::require_positive_gaps(g, "ucb4 precision bound");
    if (T < 1.0) throw UndefinedBoundError("ucb4 precision bound: T must be >= 1");
    if (eps < 0.0) throw UndefinedBoundError("ucb4 precision bound: eps must be >= 0");
    if (eps > 0.0 && eps >= g.gap_min)
        throw UndefinedBoundError("ucb4 precision bound: eps at or past the pole eps >= gap_min");
    double lT = std::log(T);
    double sum = 0.0;
    for (double d : g.gaps) sum += 12.0 * lT / ((d - eps) * (d - eps));
    return (g.gap_max + cost.eval(eps) * (1.0 + lT)) * (sum + 2.0 * num_arms);
}

/// eps-precise indices, gap unknown: a decreasing precision schedule pays a
/// linear prefix until eps_t first drops below gap_min / 2.
inline double bound_ucb4_precise_unknown(const GapStats& g, const CostModel& cost,
                                         const Schedule& eps_t, int num_arms, double T) {
    detail::require_positive_gaps(g, "ucb4 precision bound");
    if (T < 1.0) throw UndefinedBoundError("ucb4 precision bound: T must be >= 1");
    double eps_min = g.gap_min / 2.0;
    long t0 = 0;
    for (long t = 1; t <= static_cast<long>(T); ++t)
        if (eps_t.value(static_cast<double>(t)) < eps_min) {
            t0 = t;
            break;
        }
    if (t0 == 0)
        throw UndefinedBoundError("ucb4 precision bound: schedule never reaches eps_min by T");
    double lT = std::log(T);
    double sum = 0.0;
    for (double d : g.gaps) sum += 12.0 * lT / ((d - eps_min) * (d - eps_min));
    double prefix = (g.gap_max + cost.eval(eps_min)) * static_cast<double>(t0);
    double eps_T = eps_t.value(T);
    return prefix + (g.gap_max + cost.eval(eps_T) * (1.0 + lT)) * (sum + 2.0 * num_arms);
}

// ---------------------------------------------------------------------------
// Single player, Markov.
// ---------------------------------------------------------------------------

/// Markov-index policy. kappa must clear its floor for the tail sums in the
/// analysis to converge.
inline double bound_ucb4_markov(const GapStats& g, const MarkovConstants& c, double kappa,
                                double cost, int num_arms, double T, bool check_kappa = true) {
    detail::require_positive_gaps(g, "markov ucb4 bound");
    if (T < 1.0) throw UndefinedBoundError("markov ucb4 bound: T must be >= 1");
    if (check_kappa && !(kappa > c.kappa_floor_single()))
        throw UndefinedBoundError("markov ucb4 bound: kappa below its floor " +
                                  std::to_string(c.kappa_floor_single()));
    double lT = std::log(T);
    double sum = 0.0;
    for (double d : g.gaps) sum += 4.0 * kappa * lT / (d * d);
    return (g.gap_max + cost * (1.0 + lT)) * (sum + num_arms * (2.0 * c.visit_ratio + 1.0)) +
           c.correction;
}

/// Markov indices at eps precision. eps = 0 falls back to the exact form.
inline double bound_ucb4_markov_precise(const GapStats& g, const MarkovConstants& c, double kappa,
                                        double eps, const CostModel& cost, int num_arms, double T,
                                        bool check_kappa = true) {
    detail::require_positive_gaps(g, "markov ucb4 precision bound");
    if (T < 1.0) throw UndefinedBoundError("markov ucb4 precision bound: T must be >= 1");
    if (eps < 0.0) throw UndefinedBoundError("markov ucb4 precision bound: eps must be >= 0");
    if (eps > 0.0 && eps >= g.gap_min)
        throw UndefinedBoundError("markov ucb4 precision bound: eps at or past the pole");
    if (check_kappa && !(kappa > c.kappa_floor_single()))
        throw UndefinedBoundError("markov ucb4 precision bound: kappa below its floor");
    double lT = std::log(T);
    double sum = 0.0;
    for (double d : g.gaps) sum += 4.0 * kappa * lT / ((d - eps) * (d - eps));
    return (g.gap_max + cost.eval(eps) * (1.0 + lT)) *
               (sum + num_arms * (2.0 * c.visit_ratio + 1.0)) +
           c.correction;
}

// ---------------------------------------------------------------------------
// Decentralized.
// ---------------------------------------------------------------------------

/// Decentralized i.i.d. run, gap known. eps is both the matching precision
/// and the index resolution; the pole sits at (M+1) eps = gap_min.
inline double bound_ducb4(const GapStats& g, int players, int num_arms, double eps, long frame_len,
                          const CostModel& cost, const PrecisionRule& f, double T) {
    detail::require_positive_gaps(g, "ducb4 bound");
    if (T < 1.0) throw UndefinedBoundError("ducb4 bound: T must be >= 1");
    if (eps < 0.0) throw UndefinedBoundError("ducb4 bound: eps must be >= 0");
    double md = static_cast<double>(players);
    if ((md + 1.0) * eps >= g.gap_min)
        throw UndefinedBoundError("ducb4 bound: (M+1) eps at or past the pole gap_min");
    double lT = std::log(T);
    double denom = g.gap_min - (md + 1.0) * eps;
    double main = 4.0 * md * md * md * (md + 2.0) * num_arms * lT / (denom * denom) +
                  num_arms * md * (2.0 * md + 1.0);
    double frame_cost = cost.eval(f.eval(frame_len, players));
    return (frame_len * g.gap_max + frame_cost * (1.0 + lT)) * main;
}

/// Decentralized i.i.d., gap unknown: growing frames L_t, prefix until the
/// induced precision f(L_t) first drops below gap_min / (2(M+1)).
inline double bound_ducb4_unknown(const GapStats& g, int players, int num_arms,
                                  const Schedule& frame_len_t, const CostModel& cost,
                                  const PrecisionRule& f, double T) {
    detail::require_positive_gaps(g, "ducb4 bound");
    if (T < 1.0) throw UndefinedBoundError("ducb4 bound: T must be >= 1");
    double md = static_cast<double>(players);
    double eps_min = g.gap_min / (2.0 * (md + 1.0));
    long t0 = 0;
    for (long t = 1; t <= static_cast<long>(T); ++t) {
        long lt = std::lround(frame_len_t.value(static_cast<double>(t)));
        if (f.eval(lt, players) < eps_min) {
            t0 = t;
            break;
        }
    }
    if (t0 == 0)
        throw UndefinedBoundError("ducb4 bound: f(L_t) never reaches eps_min by T");
    double lT = std::log(T);
    double denom = g.gap_min - eps_min;
    double main = 4.0 * md * md * md * (md + 2.0) * num_arms * lT / (denom * denom) +
                  num_arms * md * (2.0 * md + 1.0);
    long l_t0 = std::lround(frame_len_t.value(static_cast<double>(t0)));
    long l_T = std::lround(frame_len_t.value(T));
    double prefix =
        (l_t0 * g.gap_max + cost.eval(f.eval(l_t0, players))) * static_cast<double>(t0);
    return prefix + (l_T * g.gap_max + cost.eval(f.eval(l_T, players)) * (1.0 + lT)) * main;
}

/// Decentralized Markov run with the kappa index.
inline double bound_ducb4_markov(const GapStats& g, int players, int num_arms, double eps,
                                 long frame_len, double kappa, const MarkovConstants& c,
                                 const CostModel& cost, const PrecisionRule& f, double T,
                                 bool check_kappa = true) {
    detail::require_positive_gaps(g, "markov ducb4 bound");
    if (T < 1.0) throw UndefinedBoundError("markov ducb4 bound: T must be >= 1");
    if (eps < 0.0) throw UndefinedBoundError("markov ducb4 bound: eps must be >= 0");
    double md = static_cast<double>(players);
    if ((md + 1.0) * eps >= g.gap_min)
        throw UndefinedBoundError("markov ducb4 bound: (M+1) eps at or past the pole gap_min");
    if (check_kappa && !(kappa > c.kappa_floor_multi(players)))
        throw UndefinedBoundError("markov ducb4 bound: kappa below its floor " +
                                  std::to_string(c.kappa_floor_multi(players)));
    double lT = std::log(T);
    double denom = g.gap_min - (md + 1.0) * eps;
    double main = 4.0 * md * md * md * kappa * num_arms * lT / (denom * denom) +
                  (2.0 * md * c.visit_ratio + 1.0) * md * num_arms;
    double frame_cost = cost.eval(f.eval(frame_len, players));
    return (frame_len * g.gap_max + frame_cost * (1.0 + lT)) * main + c.correction;
}

}  // namespace dmab
