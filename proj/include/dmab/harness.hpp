#pragma once

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "dmab/arms.hpp"
#include "dmab/bounds.hpp"
#include "dmab/config.hpp"
#include "dmab/errors.hpp"
#include "dmab/matching.hpp"
#include "dmab/policy.hpp"
#include "dmab/protocol.hpp"
#include "dmab/trace.hpp"

namespace dmab {

// ------------------------------------------------------------ arm factories

inline IidArm build_iid_arm(const SimConfig& c, int player, int arm) {
    if (!c.bernoulli.empty())
        return IidArm::bernoulli(
            c.bernoulli[static_cast<std::size_t>(player)][static_cast<std::size_t>(arm)]);
    const DiscreteArmSpec& d =
        c.discrete[static_cast<std::size_t>(player)][static_cast<std::size_t>(arm)];
    return IidArm::discrete(d.values, d.probs);
}

inline MarkovArm build_markov_arm(const SimConfig& c, int player, int arm) {
    const TwoStateChainSpec& t =
        c.chains[static_cast<std::size_t>(player)][static_cast<std::size_t>(arm)];
    return two_state_chain(t.p01, t.p10, t.reward0, t.reward1, t.initial);
}

inline ArmModel build_arm(const SimConfig& c, int player, int arm) {
    if (c.markov()) return ArmModel(build_markov_arm(c, player, arm));
    return ArmModel(build_iid_arm(c, player, arm));
}

inline std::vector<std::vector<ArmModel>> build_arm_matrix(const SimConfig& c) {
    std::vector<std::vector<ArmModel>> rows;
    for (int i = 0; i < c.players(); ++i) {
        std::vector<ArmModel> row;
        for (int j = 0; j < c.arms(); ++j) row.push_back(build_arm(c, i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Checks that need the arm models themselves: degenerate gaps, the kappa
/// floor, and the precision pole, i.e. everything the bound evaluators would
/// reject at run time. Call after the shallow validation is clean.
inline void validate_config_deep(const SimConfig& c, std::vector<std::string>& errors) {
    const int m = c.players();
    const int n = c.arms();
    try {
        if (c.decentralized()) {
            ValueMatrix means(m, n);
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) means.at(i, j) = build_arm(c, i, j).mean();
            GapStats gaps = gap_stats(means);
            double eps = c.mode == "physical"
                             ? PrecisionRule{true, 0.0}.eval(c.L, m)
                             : c.index_precision;
            if (c.bid_precision > 0.0 && c.mode == "physical")
                eps = std::min(eps, c.bid_precision);
            if (!c.frame_schedule && (m + 1) * eps >= gaps.gap_min)
                errors.push_back("index_precision: (M+1) eps = " +
                                 std::to_string((m + 1) * eps) +
                                 " reaches the bound pole at gap_min = " +
                                 std::to_string(gaps.gap_min));
            if (c.scenario == Scenario::DecentralMarkov && !c.kappa_schedule) {
                std::vector<MarkovArm> flat;
                flat.reserve(static_cast<std::size_t>(m * n));
                for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j) flat.push_back(build_markov_arm(c, i, j));
                std::vector<const MarkovArm*> ptrs;
                for (const auto& a : flat) ptrs.push_back(&a);
                double floor = markov_constants(ptrs).kappa_floor_multi(m);
                if (!(c.kappa > floor))
                    errors.push_back("kappa: " + std::to_string(c.kappa) +
                                     " is below the bound floor " + std::to_string(floor));
            }
        } else {
            std::vector<double> means;
            for (int j = 0; j < n; ++j) means.push_back(build_arm(c, 0, j).mean());
            GapStats gaps = gap_stats(means);
            if (c.index_precision > 0.0 && !c.index_precision_schedule &&
                c.index_precision >= gaps.gap_min)
                errors.push_back("index_precision: reaches the bound pole at gap_min = " +
                                 std::to_string(gaps.gap_min));
            if (c.scenario == Scenario::SingleMarkov && !c.kappa_schedule) {
                std::vector<MarkovArm> flat;
                for (int j = 0; j < n; ++j) flat.push_back(build_markov_arm(c, 0, j));
                std::vector<const MarkovArm*> ptrs;
                for (const auto& a : flat) ptrs.push_back(&a);
                double floor = markov_constants(ptrs).kappa_floor_single();
                if (!(c.kappa > floor))
                    errors.push_back("kappa: " + std::to_string(c.kappa) +
                                     " is below the bound floor " + std::to_string(floor));
            }
        }
    } catch (const UndefinedBoundError& e) {
        errors.push_back(std::string("arms: ") + e.what());
    } catch (const InvalidModelError& e) {
        errors.push_back(std::string("arms: ") + e.what());
    }
}

/// Parse, validate, and deep-validate in one step; what the CLI uses.
inline SimConfig load_and_validate(const std::string& text, std::vector<std::string>& errors) {
    SimConfig c = load_config(text, errors);
    if (errors.empty()) validate_config_deep(c, errors);
    return c;
}

// ------------------------------------------------------------ run resolution

/// Parameters shared by every seed of a batch, derived once from the config.
struct ResolvedRun {
    RecordGrid grid;
    IndexSpec index;
    ProtocolParams protocol;            // decentralized runs
    double auction_eps = 0.0;           // effective matching precision
    PrecisionRule precision_rule;       // eps = f(L) for the bound
    std::function<double(double)> bound;  // bound curve over t; may throw
    std::vector<std::uint64_t> seeds;
};

inline ResolvedRun resolve_run(const SimConfig& c) {
    ResolvedRun r;
    r.grid = RecordGrid::geometric(c.horizon, c.record_ratio, c.record_extra);

    r.seeds = c.seed_list;
    if (r.seeds.empty())
        for (int s = 0; s < c.seeds; ++s)
            r.seeds.push_back(c.seed_base + static_cast<std::uint64_t>(s));

    const int m = c.players();
    const int n = c.arms();

    // index specification
    IndexSpec spec;
    spec.eps2 = c.index_precision;
    spec.eps2_schedule = c.index_precision_schedule;
    if (c.decentralized()) {
        spec.time_source = TimeSource::OwnPlays;
        spec.kind = IndexKind::Kappa;
        if (c.scenario == Scenario::DecentralIid) {
            spec.kappa = static_cast<double>(m) + 2.0;
        } else {
            spec.kappa = c.kappa;
            spec.kappa_schedule = c.kappa_schedule;
        }
    } else {
        spec.time_source = TimeSource::GlobalTime;
        if (c.scenario == Scenario::SingleMarkov) {
            spec.kind = IndexKind::Kappa;
            spec.kappa = c.kappa;
            spec.kappa_schedule = c.kappa_schedule;
        } else {
            spec.kind = c.policy == PolicyKind::Ucb1L ? IndexKind::Ucb1 : IndexKind::Ucb4;
        }
    }
    r.index = spec;

    // effective precisions
    if (c.decentralized()) {
        r.protocol.index = spec;
        r.protocol.cost = c.cost;
        r.protocol.frame_len = c.L;
        r.protocol.frame_schedule = c.frame_schedule;
        long initial_len = c.L;
        if (c.frame_schedule)
            initial_len = std::max<long>(std::lround(c.frame_schedule->value(0.0)), 2L * m);
        if (c.mode == "physical") {
            r.protocol.mode = NegotiationMode::Physical;
            r.precision_rule = PrecisionRule{true, 0.0};
            double fl = r.precision_rule.eval(initial_len, m);
            double eps1 = c.bid_precision > 0.0 ? c.bid_precision : fl;
            double eps2 = c.index_precision > 0.0 ? c.index_precision : fl;
            r.protocol.eps1 = eps1;
            r.protocol.index.eps2 = eps2;
            r.index.eps2 = eps2;
            r.auction_eps = std::min(eps1, eps2);
        } else {
            r.protocol.mode = NegotiationMode::Packetized;
            r.protocol.eps1 = 0.0;
            r.auction_eps = c.index_precision;  // exact bids: eps1 plays no part
            r.precision_rule = PrecisionRule{false, r.auction_eps};
        }
        r.protocol.auction_eps = r.auction_eps;
    }

    // bound curve
    if (c.decentralized()) {
        ValueMatrix means(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) means.at(i, j) = build_arm(c, i, j).mean();
        GapStats gaps = gap_stats(means);
        if (c.scenario == Scenario::DecentralIid) {
            if (c.frame_schedule && c.mode == "physical") {
                // growing frames, precision tied to the subframe budget
                Schedule lt = *c.frame_schedule;
                CostModel cost = c.cost;
                PrecisionRule f = r.precision_rule;
                r.bound = [gaps, m, n, lt, cost, f](double t) {
                    return bound_ducb4_unknown(gaps, m, n, lt, cost, f, t);
                };
            } else if (c.frame_schedule) {
                r.bound = [](double) -> double {
                    throw UndefinedBoundError(
                        "bound curve: packetized growing-frame runs have no closed form");
                };
            } else {
                double eps = r.auction_eps;
                long L = c.L;
                CostModel cost = c.cost;
                PrecisionRule f = r.precision_rule;
                r.bound = [gaps, m, n, eps, L, cost, f](double t) {
                    return bound_ducb4(gaps, m, n, eps, L, cost, f, t);
                };
            }
        } else if (c.frame_schedule) {
            r.bound = [](double) -> double {
                throw UndefinedBoundError(
                    "bound curve: growing-frame markov runs have no closed form");
            };
        } else {
            std::vector<MarkovArm> arms_flat;
            arms_flat.reserve(static_cast<std::size_t>(m * n));
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) arms_flat.push_back(build_markov_arm(c, i, j));
            std::vector<const MarkovArm*> ptrs;
            for (const auto& a : arms_flat) ptrs.push_back(&a);
            MarkovConstants mc = markov_constants(ptrs);
            double eps = r.auction_eps;
            long L = c.L;
            double kappa = c.kappa;
            CostModel cost = c.cost;
            PrecisionRule f = r.precision_rule;
            r.bound = [gaps, m, n, eps, L, kappa, mc, cost, f](double t) {
                return bound_ducb4_markov(gaps, m, n, eps, L, kappa, mc, cost, f, t);
            };
        }
    } else {
        std::vector<double> means;
        for (int j = 0; j < n; ++j) means.push_back(build_arm(c, 0, j).mean());
        GapStats gaps = gap_stats(means);
        if (c.policy == PolicyKind::Ucb1L) {
            int L = c.L;
            r.bound = [gaps, L](double t) { return bound_ucb1_periodic(gaps, L, t); };
        } else if (c.scenario == Scenario::SingleIid) {
            CostModel cost = c.cost;
            double eps2 = c.index_precision;
            if (c.index_precision_schedule) {
                Schedule s = *c.index_precision_schedule;
                r.bound = [gaps, cost, s, n](double t) {
                    return bound_ucb4_precise_unknown(gaps, cost, s, n, t);
                };
            } else if (eps2 > 0.0) {
                r.bound = [gaps, cost, eps2, n](double t) {
                    return bound_ucb4_precise(gaps, cost, eps2, n, t);
                };
            } else {
                double cval = cost.eval(0.0);
                r.bound = [gaps, cval, n](double t) { return bound_ucb4(gaps, cval, n, t); };
            }
        } else {
            std::vector<MarkovArm> arms_flat;
            for (int j = 0; j < n; ++j) arms_flat.push_back(build_markov_arm(c, 0, j));
            std::vector<const MarkovArm*> ptrs;
            for (const auto& a : arms_flat) ptrs.push_back(&a);
            MarkovConstants mc = markov_constants(ptrs);
            CostModel cost = c.cost;
            double eps2 = c.index_precision;
            double kappa = c.kappa;
            if (eps2 > 0.0) {
                r.bound = [gaps, mc, kappa, eps2, cost, n](double t) {
                    return bound_ucb4_markov_precise(gaps, mc, kappa, eps2, cost, n, t);
                };
            } else {
                double cval = cost.eval(0.0);
                r.bound = [gaps, mc, kappa, cval, n](double t) {
                    return bound_ucb4_markov(gaps, mc, kappa, cval, n, t);
                };
            }
        }
    }
    return r;
}

// ------------------------------------------------------------ batch running

inline RegretTrace run_one_seed(const SimConfig& c, const ResolvedRun& r, std::uint64_t seed) {
    StreamFactory streams(seed);
    if (c.decentralized())
        return run_ducb4(build_arm_matrix(c), r.protocol, c.horizon, streams, r.grid);
    if (c.policy == PolicyKind::Ucb1L) {
        std::vector<IidArm> arms;
        for (int j = 0; j < c.arms(); ++j) arms.push_back(build_iid_arm(c, 0, j));
        return run_ucb1_L(arms, c.L, c.horizon, streams, r.grid);
    }
    std::vector<ArmModel> arms;
    for (int j = 0; j < c.arms(); ++j) arms.push_back(build_arm(c, 0, j));
    return run_ucb4(std::move(arms), r.index, c.cost, c.horizon, streams, r.grid);
}

struct BatchResult {
    std::vector<AggregateRow> rows;
    std::vector<RegretTrace> traces;  // in seed-list order
};

inline int default_workers(const SimConfig& c, std::size_t num_seeds) {
    if (c.workers > 0) return c.workers;
    if (const char* env = std::getenv("DMAB_WORKERS")) {
        int w = std::atoi(env);
        if (w > 0) return w;
    }
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    return static_cast<int>(std::min<std::size_t>(hw, num_seeds));
}

/// Run every seed (in parallel up to the worker count), aggregate pointwise
/// on the common grid, and attach the bound curve. The result is identical
/// whatever the worker count: each seed's run owns all of its state and the
/// reduction happens in a fixed order.
inline BatchResult run_batch(const SimConfig& c) {
    ResolvedRun r = resolve_run(c);
    BatchResult out;
    out.traces.resize(r.seeds.size());

    int workers = default_workers(c, r.seeds.size());
    std::atomic<std::size_t> next{0};
    std::vector<std::string> failures(r.seeds.size());
    auto worker = [&]() {
        for (;;) {
            std::size_t idx = next.fetch_add(1);
            if (idx >= r.seeds.size()) return;
            try {
                out.traces[idx] = run_one_seed(c, r, r.seeds[idx]);
            } catch (const std::exception& e) {
                failures[idx] = e.what();
            }
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (std::size_t i = 0; i < failures.size(); ++i)
        if (!failures[i].empty())
            throw ProtocolError("seed " + std::to_string(r.seeds[i]) + " failed: " + failures[i]);

    out.rows = aggregate_traces(out.traces);
    for (auto& row : out.rows) {
        try {
            row.bound = r.bound(static_cast<double>(row.t));
        } catch (const UndefinedBoundError&) {
            row.bound = std::numeric_limits<double>::infinity();
        }
    }
    return out;
}

// ------------------------------------------------------------ CSV emission

inline std::string csv_string(const std::vector<AggregateRow>& rows) {
    std::string s = "t,regret_mean,regret_min,regret_max,bound,m_t_mean,collisions_mean\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.t,
                      r.regret_mean, r.regret_min, r.regret_max, r.bound, r.m_mean,
                      r.collisions_mean);
        s += buf;
    }
    return s;
}

inline void emit_csv(const std::vector<AggregateRow>& rows, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InvalidModelError("emit_csv: cannot open '" + path + "' for writing");
    f << csv_string(rows);
    if (!f) throw InvalidModelError("emit_csv: write failed for '" + path + "'");
}

/// Bound curve alone, same grid, for the `bounds` subcommand.
inline std::string bounds_csv(const SimConfig& c) {
    ResolvedRun r = resolve_run(c);
    std::string s = "t,bound\n";
    char buf[128];
    for (long t : r.grid.times) {
        double b;
        try {
            b = r.bound(static_cast<double>(t));
        } catch (const UndefinedBoundError&) {
            b = std::numeric_limits<double>::infinity();
        }
        std::snprintf(buf, sizeof(buf), "%ld,%.17g\n", t, b);
        s += buf;
    }
    return s;
}

}  // namespace dmab
