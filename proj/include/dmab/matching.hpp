#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dmab/errors.hpp"

namespace dmab {

/// Dense M x N value matrix, players on rows, arms on columns, M <= N.
struct ValueMatrix {
    int players = 0;
    int arms = 0;
    std::vector<double> v;  // row-major

    ValueMatrix() = default;
    ValueMatrix(int m, int n, double fill = 0.0)
        : players(m), arms(n), v(static_cast<std::size_t>(m) * static_cast<std::size_t>(n), fill) {
        if (m < 1 || n < m) throw InvalidModelError("value matrix: need 1 <= M <= N");
    }

    double& at(int i, int j) { return v[static_cast<std::size_t>(i) * arms + j]; }
    double at(int i, int j) const { return v[static_cast<std::size_t>(i) * arms + j]; }
    std::span<const double> row(int i) const {
        return {v.data() + static_cast<std::size_t>(i) * arms, static_cast<std::size_t>(arms)};
    }
};

/// Injective player -> arm assignment.
struct Matching {
    std::vector<int> arm_of;  // arm_of[i] = arm of player i, -1 if unassigned

    bool complete() const {
        return std::none_of(arm_of.begin(), arm_of.end(), [](int a) { return a < 0; });
    }

    bool injective() const {
        std::vector<int> seen;
        for (int a : arm_of) {
            if (a < 0) continue;
            if (std::find(seen.begin(), seen.end(), a) != seen.end()) return false;
            seen.push_back(a);
        }
        return true;
    }

    bool operator==(const Matching& o) const { return arm_of == o.arm_of; }
};

inline double matching_surplus(const ValueMatrix& values, const Matching& m) {
    double s = 0.0;
    for (int i = 0; i < values.players; ++i) s += values.at(i, m.arm_of[static_cast<std::size_t>(i)]);
    return s;
}

struct Bid {
    int preferred_arm = -1;
    double value = 0.0;
};

/// One player's auction bid: preferred arm maximizes net value, the bid is
/// the margin over the second-best net value plus eps/M. A single arm has no
/// second-best, so the bid degenerates to eps/M.
inline Bid compute_bid(std::span<const double> values, std::span<const double> prices, double eps,
                       int num_players) {
    if (values.empty() || values.size() != prices.size())
        throw InvalidModelError("compute_bid: values/prices size mismatch");
    if (!(eps > 0.0)) throw InvalidModelError("compute_bid: eps must be positive");
    std::size_t best = 0;
    double best_net = values[0] - prices[0];
    double second_net = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j < values.size(); ++j) {
        double net = values[j] - prices[j];
        if (net > best_net) {
            second_net = best_net;
            best_net = net;
            best = j;
        } else if (net > second_net) {
            second_net = net;
        }
    }
    if (values.size() == 1) second_net = best_net;
    return {static_cast<int>(best), best_net - second_net + eps / num_players};
}

struct AuctionBidRecord {
    int player = -1;
    int arm = -1;
    double bid = 0.0;
};

/// Prices, partial assignment and the per-round transcript of an auction.
struct AuctionState {
    std::vector<double> prices;
    std::vector<int> holder;  // holder[j] = player currently holding arm j, -1 if none
    Matching assignment;
    long rounds = 0;
    std::vector<std::vector<AuctionBidRecord>> transcript;
    std::vector<std::vector<double>> price_history;  // prices after each round
};

namespace detail {

inline long auction_round_cap(const ValueMatrix& values, double eps) {
    double vmax = *std::max_element(values.v.begin(), values.v.end());
    double vmin = *std::min_element(values.v.begin(), values.v.end());
    double m = static_cast<double>(values.players);
    double scale = vmin >= 0.0 ? std::max(vmax, eps) : (vmax - vmin + eps);
    return static_cast<long>(std::ceil(m * m * scale / eps)) + values.players;
}

}  // namespace detail

/// Jacobi-round auction: every unassigned player bids simultaneously, the
/// highest bidder per arm takes it (displacing any holder) and the price
/// rises by the winning bid. Ties go to the lowest player id. Terminates
/// with an assignment whose surplus is within eps of optimal.
inline std::pair<Matching, AuctionState> run_auction(const ValueMatrix& values, double eps) {
    if (!(eps > 0.0)) throw InvalidModelError("auction: eps must be positive");
    const int m = values.players;
    const int n = values.arms;

    AuctionState st;
    st.prices.assign(static_cast<std::size_t>(n), 0.0);
    st.holder.assign(static_cast<std::size_t>(n), -1);
    st.assignment.arm_of.assign(static_cast<std::size_t>(m), -1);

    const long cap = detail::auction_round_cap(values, eps);
    std::vector<Bid> bids(static_cast<std::size_t>(m));

    while (!st.assignment.complete()) {
        if (st.rounds >= cap)
            throw ProtocolError("auction: round cap exceeded (" + std::to_string(cap) + ")");
        st.rounds += 1;
        st.transcript.emplace_back();

        for (int i = 0; i < m; ++i) {
            bids[static_cast<std::size_t>(i)].preferred_arm = -1;
            if (st.assignment.arm_of[static_cast<std::size_t>(i)] >= 0) continue;
            bids[static_cast<std::size_t>(i)] = compute_bid(values.row(i), st.prices, eps, m);
            st.transcript.back().push_back(
                {i, bids[static_cast<std::size_t>(i)].preferred_arm,
                 bids[static_cast<std::size_t>(i)].value});
        }

        for (int j = 0; j < n; ++j) {
            int winner = -1;
            double best_bid = 0.0;
            for (int i = 0; i < m; ++i) {
                const Bid& b = bids[static_cast<std::size_t>(i)];
                if (b.preferred_arm != j) continue;
                if (winner < 0 || b.value > best_bid) {
                    winner = i;
                    best_bid = b.value;
                }
            }
            if (winner < 0) continue;
            int displaced = st.holder[static_cast<std::size_t>(j)];
            if (displaced >= 0) st.assignment.arm_of[static_cast<std::size_t>(displaced)] = -1;
            st.holder[static_cast<std::size_t>(j)] = winner;
            st.assignment.arm_of[static_cast<std::size_t>(winner)] = j;
            st.prices[static_cast<std::size_t>(j)] += best_bid;
        }
        st.price_history.push_back(st.prices);
    }
    return {st.assignment, std::move(st)};
}

/// Exact optimum by enumeration of all injective assignments; the guard
/// keeps the factorial blowup at test scale. Ties resolve to the
/// lexicographically smallest assignment.
inline std::pair<Matching, double> brute_force_matching(const ValueMatrix& values) {
    const int m = values.players;
    const int n = values.arms;
    if (n > 10) throw InvalidModelError("brute force matching: N > 10 unsupported");

    Matching best;
    double best_surplus = -std::numeric_limits<double>::infinity();
    std::vector<int> current(static_cast<std::size_t>(m), -1);
    std::vector<bool> used(static_cast<std::size_t>(n), false);

    auto recurse = [&](auto&& self, int player, double surplus) -> void {
        if (player == m) {
            if (surplus > best_surplus) {
                best_surplus = surplus;
                best.arm_of = current;
            }
            return;
        }
        for (int j = 0; j < n; ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            used[static_cast<std::size_t>(j)] = true;
            current[static_cast<std::size_t>(player)] = j;
            self(self, player + 1, surplus + values.at(player, j));
            used[static_cast<std::size_t>(j)] = false;
        }
    };
    recurse(recurse, 0, 0.0);
    return {best, best_surplus};
}

/// All injective matchings with their surpluses (same size guard).
inline std::vector<std::pair<Matching, double>> enumerate_matchings(const ValueMatrix& values) {
    const int m = values.players;
    const int n = values.arms;
    if (n > 10) throw InvalidModelError("enumerate matchings: N > 10 unsupported");
    std::vector<std::pair<Matching, double>> out;
    std::vector<int> current(static_cast<std::size_t>(m), -1);
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    auto recurse = [&](auto&& self, int player, double surplus) -> void {
        if (player == m) {
            out.push_back({Matching{current}, surplus});
            return;
        }
        for (int j = 0; j < n; ++j) {
            if (used[static_cast<std::size_t>(j)]) continue;
            used[static_cast<std::size_t>(j)] = true;
            current[static_cast<std::size_t>(player)] = j;
            self(self, player + 1, surplus + values.at(player, j));
            used[static_cast<std::size_t>(j)] = false;
        }
    };
    recurse(recurse, 0, 0.0);
    return out;
}

}  // namespace dmab
