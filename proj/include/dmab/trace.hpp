#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dmab/errors.hpp"

namespace dmab {

/// Slot times at which a run snapshots its trace. Geometric by default so a
/// horizon of 1e5 stays a few hundred rows.
struct RecordGrid {
    std::vector<long> times;  // sorted, unique, within [1, horizon]

    static RecordGrid geometric(long horizon, double ratio = 1.1, std::vector<long> extra = {}) {
        if (horizon < 1) throw InvalidModelError("record grid: horizon must be >= 1");
        if (!(ratio > 1.0)) throw InvalidModelError("record grid: ratio must be > 1");
        std::vector<long> ts;
        for (double x = 1.0; x <= static_cast<double>(horizon) * ratio; x *= ratio) {
            long t = std::lround(x);
            if (t >= 1 && t <= horizon) ts.push_back(t);
        }
        ts.push_back(1);
        ts.push_back(horizon);
        for (long t : extra)
            if (t >= 1 && t <= horizon) ts.push_back(t);
        std::sort(ts.begin(), ts.end());
        ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
        return RecordGrid{std::move(ts)};
    }
};

struct TraceRow {
    long t = 0;            // slot clock
    long frame = 0;        // frame clock (0 for single-player runs)
    double cum_reward = 0.0;
    double regret = 0.0;         // reported regret, cost term included
    double regret_counts = 0.0;  // count-based form, cost term included
    double m = 0.0;              // index computations / decision frames so far
    long collisions = 0;
    long eta = 0;
};

/// Per-run record: snapshot rows on the grid plus end-of-run counters and
/// diagnostics used by property tests.
struct RegretTrace {
    std::vector<TraceRow> rows;

    // end-of-run state
    std::vector<long> play_counts;  // per arm (single) or row-major per (player, arm)
    double cum_reward = 0.0;
    long m = 0;
    long m_opt = 0;     // recomputations that yielded the optimal choice
    long m_subopt = 0;
    long collisions = 0;
    long budget_exhausted = 0;  // negotiations that ran out of subframes

    // diagnostics
    std::vector<long> recompute_ticks;   // single-player index recomputations
    std::vector<long> decision_frames;   // frame indices of decision frames
    std::vector<int> arm_sequence;       // single-player plays, filled when kept
};

/// Pointwise aggregate over seeds on a common grid.
struct AggregateRow {
    long t = 0;
    double regret_mean = 0.0;
    double regret_min = 0.0;
    double regret_max = 0.0;
    double bound = 0.0;
    double m_mean = 0.0;
    double collisions_mean = 0.0;
};

/// Mean/min/max across seeds. Values are sorted before summing so the
/// aggregate is invariant to seed-list order, bit for bit.
inline std::vector<AggregateRow> aggregate_traces(const std::vector<RegretTrace>& traces) {
    std::vector<AggregateRow> out;
    if (traces.empty()) return out;
    const std::size_t rows = traces.front().rows.size();
    for (const auto& tr : traces)
        if (tr.rows.size() != rows)
            throw ProtocolError("aggregate: traces do not share a record grid");
    out.resize(rows);
    std::vector<double> vals(traces.size());
    for (std::size_t r = 0; r < rows; ++r) {
        AggregateRow& a = out[r];
        a.t = traces.front().rows[r].t;
        for (std::size_t s = 0; s < traces.size(); ++s) vals[s] = traces[s].rows[r].regret;
        std::sort(vals.begin(), vals.end());
        a.regret_min = vals.front();
        a.regret_max = vals.back();
        double sum = 0.0;
        for (double v : vals) sum += v;
        a.regret_mean = sum / static_cast<double>(vals.size());

        for (std::size_t s = 0; s < traces.size(); ++s) vals[s] = traces[s].rows[r].m;
        std::sort(vals.begin(), vals.end());
        sum = 0.0;
        for (double v : vals) sum += v;
        a.m_mean = sum / static_cast<double>(vals.size());

        for (std::size_t s = 0; s < traces.size(); ++s)
            vals[s] = static_cast<double>(traces[s].rows[r].collisions);
        std::sort(vals.begin(), vals.end());
        sum = 0.0;
        for (double v : vals) sum += v;
        a.collisions_mean = sum / static_cast<double>(vals.size());
    }
    return out;
}

}  // namespace dmab
