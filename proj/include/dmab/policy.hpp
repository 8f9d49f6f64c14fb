#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dmab/arms.hpp"
#include "dmab/errors.hpp"
#include "dmab/rng.hpp"
#include "dmab/trace.hpp"

namespace dmab {

inline bool is_power_of_two(long v) { return v >= 1 && (v & (v - 1)) == 0; }

/// Floor x to a multiple of eps (eps <= 0 means exact).
inline double quantize_floor(double x, double eps) {
    if (eps <= 0.0) return x;
    return std::floor(x / eps) * eps;
}

// ---------------------------------------------------------------------------
// Parameter schedules for the unknown-parameter variants.
// ---------------------------------------------------------------------------

enum class ScheduleKind { Constant, EpsDecay, KappaGrowth, FrameGrowth };

/// Time-indexed parameter value. Default forms: eps_t = c0 / ln(e+t)
/// (monotone to 0), kappa_t = min(t, c0 ln(e+t)) (monotone up, <= t),
/// L_t = ceil(c0 + ln(1+t)) (monotone up).
struct Schedule {
    ScheduleKind kind = ScheduleKind::Constant;
    double c0 = 1.0;

    double value(double t) const {
        switch (kind) {
            case ScheduleKind::Constant: return c0;
            case ScheduleKind::EpsDecay: return c0 / std::log(std::exp(1.0) + t);
            case ScheduleKind::KappaGrowth:
                return std::min(t, std::log(std::exp(1.0) + t) * c0);
            case ScheduleKind::FrameGrowth: return std::ceil(c0 + std::log1p(t));
        }
        return c0;
    }
};

inline double schedule_value(const Schedule& s, double t) { return s.value(t); }

// ---------------------------------------------------------------------------
// Index specification and computation cost.
// ---------------------------------------------------------------------------

/// Which exploration coefficient the index uses. Ucb1 fixes 2, Ucb4 fixes 3,
/// Kappa takes an explicit coefficient (Markov chains, and the (M+2)
/// multi-player form).
enum class IndexKind { Ucb1, Ucb4, Kappa };

/// What the log in the exploration term counts: the global clock, or the
/// player's own successful plays.
enum class TimeSource { GlobalTime, OwnPlays };

struct IndexSpec {
    IndexKind kind = IndexKind::Ucb4;
    double kappa = 0.0;
    std::optional<Schedule> kappa_schedule;
    double eps2 = 0.0;  // index resolution; 0 = exact
    std::optional<Schedule> eps2_schedule;
    TimeSource time_source = TimeSource::GlobalTime;

    double coefficient(double t) const {
        switch (kind) {
            case IndexKind::Ucb1: return 2.0;
            case IndexKind::Ucb4: return 3.0;
            case IndexKind::Kappa:
                return kappa_schedule ? kappa_schedule->value(t) : kappa;
        }
        return 3.0;
    }

    double eps2_at(double t) const { return eps2_schedule ? eps2_schedule->value(t) : eps2; }
};

/// Cost of one index computation at precision eps. eps = 0 is the
/// exact-with-fixed-cost mode. With per_bit > 0 the cost diverges as the
/// precision sharpens.
struct CostModel {
    double base = 0.0;
    double per_bit = 0.0;

    double eval(double eps) const {
        if (eps <= 0.0) return base;
        double bits = std::ceil(std::log2(1.0 / eps));
        return base + per_bit * std::max(0.0, bits);
    }
};

// ---------------------------------------------------------------------------
// Player statistics and the index itself.
// ---------------------------------------------------------------------------

/// Running per-player state: play counts, reward sums, epoch counter, and
/// bookkeeping of index computations (split by whether the recomputation
/// landed on the optimal choice, for diagnostics).
struct PlayerStats {
    std::vector<long> n;
    std::vector<double> reward_sum;
    std::vector<double> index;
    long n_total = 0;
    long eta = 1;
    int last_arm = -1;
    long m = 0;
    long m_opt = 0;
    long m_subopt = 0;

    explicit PlayerStats(std::size_t arms = 0)
        : n(arms, 0), reward_sum(arms, 0.0), index(arms, 0.0) {}

    double mean(std::size_t j) const { return reward_sum[j] / static_cast<double>(n[j]); }

    void record_success(std::size_t j, double reward) {
        n[j] += 1;
        reward_sum[j] += reward;
        n_total += 1;
    }
};

/// Index g_j = X̄_j + sqrt(coef * log(time) / n_j), floor-quantized to the
/// resolution in force. Natural log.
inline double compute_index(const PlayerStats& stats, const IndexSpec& spec, std::size_t arm,
                            double t) {
    if (arm >= stats.n.size()) throw InvalidModelError("compute_index: arm id out of range");
    if (stats.n[arm] < 1)
        throw InvalidModelError("compute_index: arm has no successful plays yet");
    if (!(t >= 1.0)) throw InvalidModelError("compute_index: time must be >= 1");
    double time_arg =
        spec.time_source == TimeSource::GlobalTime ? t : static_cast<double>(stats.n_total);
    double bonus =
        std::sqrt(spec.coefficient(t) * std::log(time_arg) / static_cast<double>(stats.n[arm]));
    return quantize_floor(stats.mean(arm) + bonus, spec.eps2_at(t));
}

/// Lowest arm id among the eps2-maximizers: indices within eps2 of the
/// maximum (after floor quantization) are indistinguishable.
inline std::size_t epsilon_argmax(std::span<const double> indices, double eps2) {
    if (indices.empty()) throw InvalidModelError("epsilon_argmax: empty index vector");
    if (eps2 <= 0.0) {
        std::size_t best = 0;
        for (std::size_t j = 1; j < indices.size(); ++j)
            if (indices[j] > indices[best]) best = j;
        return best;
    }
    double qmax = quantize_floor(indices[0], eps2);
    for (std::size_t j = 1; j < indices.size(); ++j)
        qmax = std::max(qmax, quantize_floor(indices[j], eps2));
    for (std::size_t j = 0; j < indices.size(); ++j)
        if (quantize_floor(indices[j], eps2) >= qmax - eps2) return j;
    throw ProtocolError("epsilon_argmax: no maximizer found");
}

// ---------------------------------------------------------------------------
// Single-player runs.
// ---------------------------------------------------------------------------

namespace detail {

inline std::size_t best_mean_arm(const std::vector<double>& means) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < means.size(); ++j)
        if (means[j] > means[best]) best = j;
    return best;
}

}  // namespace detail

/// UCB1 with the index recomputed once every L slots; the argmax is then
/// replayed until the next recomputation. Regret is counted against the best
/// mean (no computation cost here).
inline RegretTrace run_ucb1_L(const std::vector<IidArm>& arms, int L, long horizon,
                              const StreamFactory& streams, const RecordGrid& grid,
                              bool keep_plays = false) {
    const std::size_t num_arms = arms.size();
    if (num_arms < 2) throw InvalidModelError("ucb1: need at least two arms");
    if (L < 1) throw InvalidModelError("ucb1: L must be >= 1");
    if (horizon < static_cast<long>(num_arms) * L)
        throw InvalidModelError("ucb1: horizon shorter than N*L");

    std::vector<RngStream> arm_streams;
    arm_streams.reserve(num_arms);
    std::vector<double> means(num_arms);
    for (std::size_t j = 0; j < num_arms; ++j) {
        arm_streams.push_back(streams.stream(stream_tag::player_arm, 0, j));
        means[j] = arms[j].mean();
    }
    double mu_best = means[detail::best_mean_arm(means)];

    PlayerStats stats(num_arms);
    RegretTrace trace;
    std::size_t grid_pos = 0;
    std::vector<double> g(num_arms);
    int current = -1;

    auto snapshot = [&](long t) {
        while (grid_pos < grid.times.size() && grid.times[grid_pos] == t) {
            double counts_term = 0.0;
            for (std::size_t j = 0; j < num_arms; ++j)
                counts_term += means[j] * static_cast<double>(stats.n[j]);
            double regret = mu_best * static_cast<double>(t) - counts_term;
            trace.rows.push_back({t, 0, trace.cum_reward, regret, regret,
                                  static_cast<double>(stats.m), 0, 0});
            ++grid_pos;
        }
    };

    for (long t = 1; t <= horizon; ++t) {
        if (t <= static_cast<long>(num_arms)) {
            current = static_cast<int>(t - 1);
        } else if ((t - static_cast<long>(num_arms) - 1) % L == 0) {
            for (std::size_t j = 0; j < num_arms; ++j) {
                double bonus = std::sqrt(2.0 * std::log(static_cast<double>(t)) /
                                         static_cast<double>(stats.n[j]));
                g[j] = stats.mean(j) + bonus;
            }
            stats.m += 1;
            trace.recompute_ticks.push_back(t);
            current = static_cast<int>(epsilon_argmax(g, 0.0));
        }
        double r = arms[static_cast<std::size_t>(current)].sample(
            arm_streams[static_cast<std::size_t>(current)]);
        stats.record_success(static_cast<std::size_t>(current), r);
        trace.cum_reward += r;
        if (keep_plays) trace.arm_sequence.push_back(current);
        snapshot(t);
    }

    trace.play_counts = stats.n;
    trace.m = stats.m;
    return trace;
}

/// The doubling-epoch policy: indices are recomputed only when the epoch
/// counter hits a power of two, and the counter resets whenever the best arm
/// changes. Each recomputation is charged its computation cost.
inline RegretTrace run_ucb4(std::vector<ArmModel> arms, const IndexSpec& spec,
                            const CostModel& cost, long horizon, const StreamFactory& streams,
                            const RecordGrid& grid, bool keep_plays = false) {
    const std::size_t num_arms = arms.size();
    if (num_arms < 2) throw InvalidModelError("ucb4: need at least two arms");
    if (horizon < static_cast<long>(num_arms)) throw InvalidModelError("ucb4: horizon < N");

    std::vector<RngStream> arm_streams;
    arm_streams.reserve(num_arms);
    std::vector<double> means(num_arms);
    bool markov_mode = false;
    for (std::size_t j = 0; j < num_arms; ++j) {
        arm_streams.push_back(streams.stream(stream_tag::player_arm, 0, j));
        means[j] = arms[j].mean();
        markov_mode = markov_mode || arms[j].is_markov();
        RngStream init = streams.stream(stream_tag::chain_init, 0, j);
        arms[j].reset(init);
    }
    const std::size_t optimal = detail::best_mean_arm(means);
    const double mu_best = means[optimal];

    PlayerStats stats(num_arms);
    RegretTrace trace;
    std::size_t grid_pos = 0;
    double cost_accum = 0.0;

    auto snapshot = [&](long t) {
        while (grid_pos < grid.times.size() && grid.times[grid_pos] == t) {
            double counts_term = 0.0;
            for (std::size_t j = 0; j < num_arms; ++j)
                counts_term += means[j] * static_cast<double>(stats.n[j]);
            double regret_counts = mu_best * static_cast<double>(t) - counts_term + cost_accum;
            double regret_realized =
                mu_best * static_cast<double>(t) - trace.cum_reward + cost_accum;
            double reported = markov_mode ? regret_realized : regret_counts;
            trace.rows.push_back({t, 0, trace.cum_reward, reported, regret_counts,
                                  static_cast<double>(stats.m), 0, stats.eta});
            ++grid_pos;
        }
    };

    auto play = [&](int j, long t) {
        double r = arms[static_cast<std::size_t>(j)].play(arm_streams[static_cast<std::size_t>(j)]);
        stats.record_success(static_cast<std::size_t>(j), r);
        trace.cum_reward += r;
        if (keep_plays) trace.arm_sequence.push_back(j);
        snapshot(t);
    };

    // Initialization: one play of every arm, then a first (uncharged) index
    // update to seed the running best arm.
    for (long t = 1; t <= static_cast<long>(num_arms); ++t) play(static_cast<int>(t - 1), t);
    std::vector<double> g(num_arms);
    for (std::size_t j = 0; j < num_arms; ++j)
        g[j] = compute_index(stats, spec, j, static_cast<double>(num_arms));
    stats.index = g;
    int best = static_cast<int>(
        epsilon_argmax(g, spec.eps2_at(static_cast<double>(num_arms))));
    stats.last_arm = best;
    stats.eta = 1;

    for (long t = static_cast<long>(num_arms) + 1; t <= horizon; ++t) {
        if (is_power_of_two(stats.eta)) {
            double td = static_cast<double>(t);
            for (std::size_t j = 0; j < num_arms; ++j) g[j] = compute_index(stats, spec, j, td);
            stats.index = g;
            int chosen = static_cast<int>(epsilon_argmax(g, spec.eps2_at(td)));
            stats.m += 1;
            cost_accum += cost.eval(spec.eps2_at(td));
            trace.recompute_ticks.push_back(t);
            if (chosen == static_cast<int>(optimal))
                stats.m_opt += 1;
            else
                stats.m_subopt += 1;
            if (chosen != stats.last_arm) stats.eta = 1;
            stats.last_arm = chosen;
        }
        play(stats.last_arm, t);
        stats.eta += 1;
    }

    trace.play_counts = stats.n;
    trace.m = stats.m;
    trace.m_opt = stats.m_opt;
    trace.m_subopt = stats.m_subopt;
    return trace;
}

}  // namespace dmab
