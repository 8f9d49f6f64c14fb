#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dmab/arms.hpp"
#include "dmab/errors.hpp"
#include "dmab/matching.hpp"
#include "dmab/policy.hpp"
#include "dmab/rng.hpp"
#include "dmab/trace.hpp"

namespace dmab {

/// Matching r assigns player i to arm (i + r) mod N; across the N matchings
/// every (player, arm) pair appears exactly once.
inline std::vector<Matching> initialization_rotation(int players, int arms) {
    if (players < 1 || arms < players)
        throw InvalidModelError("rotation: need 1 <= M <= N");
    std::vector<Matching> out;
    out.reserve(static_cast<std::size_t>(arms));
    for (int r = 0; r < arms; ++r) {
        Matching m;
        m.arm_of.resize(static_cast<std::size_t>(players));
        for (int i = 0; i < players; ++i) m.arm_of[static_cast<std::size_t>(i)] = (i + r) % arms;
        out.push_back(std::move(m));
    }
    return out;
}

enum class NegotiationMode { Packetized, Physical };

struct NegotiationPacket {
    int player = -1;
    int arm = -1;
    double bid = 0.0;  // as transmitted (exact in packetized mode, quantized in physical)
};

/// Physical-mode wire format: ceil(log2 N) bits of arm id and
/// ceil(log2 1/eps1) bits of floor-quantized fixed-point bid magnitude.
struct PacketCodec {
    int arm_bits = 0;
    int bid_bits = 0;
    double eps1 = 0.0;

    static PacketCodec physical(int num_arms, double eps1) {
        if (!(eps1 > 0.0)) throw InvalidModelError("codec: physical mode needs eps1 > 0");
        PacketCodec c;
        c.eps1 = eps1;
        c.arm_bits = num_arms > 1
                         ? static_cast<int>(std::ceil(std::log2(static_cast<double>(num_arms))))
                         : 0;
        c.bid_bits = eps1 < 1.0 ? static_cast<int>(std::ceil(std::log2(1.0 / eps1))) : 0;
        return c;
    }

    int total_bits() const { return arm_bits + bid_bits; }

    /// floor(b / eps1) * eps1, saturated to what bid_bits can carry.
    double quantize_bid(double bid) const {
        double k = std::floor(std::max(bid, 0.0) / eps1);
        double kmax = std::pow(2.0, bid_bits) - 1.0;
        return std::min(k, kmax) * eps1;
    }

    std::uint64_t encode(int arm, double transmitted_bid) const {
        auto k = static_cast<std::uint64_t>(std::llround(transmitted_bid / eps1));
        return (static_cast<std::uint64_t>(arm) << bid_bits) | k;
    }

    std::pair<int, double> decode(std::uint64_t word) const {
        std::uint64_t mask = bid_bits >= 64 ? ~0ULL : ((1ULL << bid_bits) - 1ULL);
        double bid = static_cast<double>(word & mask) * eps1;
        int arm = static_cast<int>(word >> bid_bits);
        return {arm, bid};
    }
};

enum class SlotKind { Idle, Success, Collision };

/// Lossless slotted broadcast: resolves simultaneous arm plays into
/// idle/success/collision per channel and records the protocol transcript.
class BroadcastMedium {
public:
    BroadcastMedium(int players, int arms, NegotiationMode mode, double eps1)
        : players_(players), arms_(arms), mode_(mode) {
        if (mode_ == NegotiationMode::Physical) codec_ = PacketCodec::physical(arms, eps1);
    }

    NegotiationMode mode() const { return mode_; }
    const PacketCodec& codec() const { return codec_; }

    /// Growing frames sharpen the wire precision; the codec follows.
    void set_physical_precision(double eps1) {
        if (mode_ == NegotiationMode::Physical) codec_ = PacketCodec::physical(arms_, eps1);
    }

    struct PlayResolution {
        std::vector<SlotKind> channel;  // per arm
        std::vector<bool> success;      // per player
        int colliding_players = 0;
    };

    /// Two or more players on one channel collide; all of them see it.
    PlayResolution resolve_plays(const std::vector<int>& chosen) const {
        PlayResolution res;
        res.channel.assign(static_cast<std::size_t>(arms_), SlotKind::Idle);
        res.success.assign(chosen.size(), false);
        std::vector<int> count(static_cast<std::size_t>(arms_), 0);
        for (int a : chosen) count[static_cast<std::size_t>(a)] += 1;
        for (int j = 0; j < arms_; ++j)
            res.channel[static_cast<std::size_t>(j)] =
                count[static_cast<std::size_t>(j)] == 0
                    ? SlotKind::Idle
                    : (count[static_cast<std::size_t>(j)] == 1 ? SlotKind::Success
                                                               : SlotKind::Collision);
        for (std::size_t i = 0; i < chosen.size(); ++i) {
            bool ok = count[static_cast<std::size_t>(chosen[i])] == 1;
            res.success[i] = ok;
            if (!ok) res.colliding_players += 1;
        }
        return res;
    }

    /// Transmit one subframe: slot i carries player i's packet or is idle.
    /// Physical mode re-encodes through the wire format.
    std::vector<std::optional<NegotiationPacket>> transmit_subframe(
        long frame, int subframe, std::vector<std::optional<NegotiationPacket>> slots) {
        if (mode_ == NegotiationMode::Physical) {
            for (auto& s : slots) {
                if (!s) continue;
                auto [arm, bid] = codec_.decode(codec_.encode(s->arm, s->bid));
                s->arm = arm;
                s->bid = bid;
            }
        }
        for (const auto& s : slots)
            if (s) packet_log_.push_back({frame, subframe, *s});
        return slots;
    }

    void log_interrupt(long frame, const std::vector<bool>& bits) {
        interrupt_log_.push_back({frame, bits});
    }

    /// Line-delimited transcript dump for debugging.
    std::vector<std::string> transcript_lines() const {
        std::vector<std::string> lines;
        for (const auto& e : packet_log_) {
            std::ostringstream os;
            os << "frame=" << e.frame << " sub=" << e.subframe << " player=" << e.packet.player
               << " arm=" << e.packet.arm << " bid=" << e.packet.bid;
            if (mode_ == NegotiationMode::Physical)
                os << " bits=" << codec_.total_bits()
                   << " word=" << codec_.encode(e.packet.arm, e.packet.bid);
            lines.push_back(os.str());
        }
        for (const auto& e : interrupt_log_) {
            std::ostringstream os;
            os << "frame=" << e.frame << " interrupt=";
            for (bool b : e.bits) os << (b ? '1' : '0');
            lines.push_back(os.str());
        }
        return lines;
    }

    std::size_t packets_logged() const { return packet_log_.size(); }

private:
    struct PacketEntry {
        long frame;
        int subframe;
        NegotiationPacket packet;
    };
    struct InterruptEntry {
        long frame;
        std::vector<bool> bits;
    };

    int players_;
    int arms_;
    NegotiationMode mode_;
    PacketCodec codec_;
    std::vector<PacketEntry> packet_log_;
    std::vector<InterruptEntry> interrupt_log_;
};

/// One player's view of the distributed matching protocol. Decisions depend
/// only on the player's own reward history and the public packet transcript.
class PlayerAgent {
public:
    PlayerAgent(int id, int players, int arms, IndexSpec spec, double auction_eps)
        : id_(id),
          players_(players),
          arms_(arms),
          spec_(std::move(spec)),
          auction_eps_(auction_eps),
          stats_(static_cast<std::size_t>(arms)),
          indices_(static_cast<std::size_t>(arms), 0.0) {
        if (!(auction_eps_ > 0.0)) throw InvalidModelError("agent: auction eps must be positive");
    }

    int id() const { return id_; }
    long eta() const { return eta_; }
    const PlayerStats& stats() const { return stats_; }
    const std::vector<double>& indices() const { return indices_; }
    const Matching& matching() const { return current_; }
    int current_arm() const { return current_.arm_of[static_cast<std::size_t>(id_)]; }

    void set_initial_matching(const Matching& m) {
        current_ = m;
        pending_ = m;
    }

    /// Per-frame precision update for growing-frame runs; public knowledge,
    /// so every agent applies the same values.
    void configure_precision(double auction_eps, double eps2) {
        if (auction_eps > 0.0) auction_eps_ = auction_eps;
        spec_.eps2 = eps2;
        spec_.eps2_schedule.reset();
    }

    /// Counters move only on successful, collision-free plays.
    void record_play(int arm, double reward, bool success) {
        if (success) stats_.record_success(static_cast<std::size_t>(arm), reward);
    }

    /// Recompute own indices from own history and reset the auction replica.
    /// `now` is the global slot clock, used only by parameter schedules.
    void begin_negotiation(double now) {
        for (int j = 0; j < arms_; ++j)
            indices_[static_cast<std::size_t>(j)] =
                compute_index(stats_, spec_, static_cast<std::size_t>(j), std::max(now, 1.0));
        prices_.assign(static_cast<std::size_t>(arms_), 0.0);
        holder_.assign(static_cast<std::size_t>(arms_), -1);
        replica_.arm_of.assign(static_cast<std::size_t>(players_), -1);
    }

    bool replica_complete() const { return replica_.complete(); }

    /// Own bid for this subframe, if still unassigned in the replica.
    std::optional<NegotiationPacket> make_packet() const {
        if (replica_complete() || replica_.arm_of[static_cast<std::size_t>(id_)] >= 0)
            return std::nullopt;
        Bid b = compute_bid(indices_, prices_, auction_eps_, players_);
        return NegotiationPacket{id_, b.preferred_arm, b.value};
    }

    /// Replay one public subframe: winner per arm by transmitted bid (ties to
    /// the lowest player id), price raised by at least eps/M so every round
    /// makes progress even when quantization floors a bid to zero.
    void observe_subframe(const std::vector<std::optional<NegotiationPacket>>& slots) {
        double floor_raise = auction_eps_ / players_;
        for (int j = 0; j < arms_; ++j) {
            int winner = -1;
            double best = 0.0;
            for (const auto& s : slots) {
                if (!s || s->arm != j) continue;
                if (winner < 0 || s->bid > best) {
                    winner = s->player;
                    best = s->bid;
                }
            }
            if (winner < 0) continue;
            int displaced = holder_[static_cast<std::size_t>(j)];
            if (displaced >= 0) replica_.arm_of[static_cast<std::size_t>(displaced)] = -1;
            holder_[static_cast<std::size_t>(j)] = winner;
            replica_.arm_of[static_cast<std::size_t>(winner)] = j;
            prices_[static_cast<std::size_t>(j)] += std::max(best, floor_raise);
        }
    }

    /// Adopt the negotiated matching, or keep the previous one when the
    /// subframe budget ran out before the auction finished.
    void end_negotiation(bool completed) { pending_ = completed ? replica_ : current_; }

    const Matching& pending() const { return pending_; }

    /// The interrupt phase carries a `1` from every player whose match changed.
    bool interrupt_bit() const {
        return pending_.arm_of[static_cast<std::size_t>(id_)] !=
               current_.arm_of[static_cast<std::size_t>(id_)];
    }

    void end_frame(bool decision_frame, bool interrupt_flag) {
        if (decision_frame) current_ = pending_;
        if (decision_frame && interrupt_flag) eta_ = 1;
        eta_ += 1;
    }

private:
    int id_;
    int players_;
    int arms_;
    IndexSpec spec_;
    double auction_eps_;
    long eta_ = 1;
    PlayerStats stats_;
    std::vector<double> indices_;
    std::vector<double> prices_;
    std::vector<int> holder_;
    Matching replica_;
    Matching current_;
    Matching pending_;
};

/// A centrally-run auction transcript rendered as negotiation packets, one
/// subframe per auction round, same layout the agents put on the air.
inline std::vector<std::vector<NegotiationPacket>> auction_transcript_packets(
    const AuctionState& st) {
    std::vector<std::vector<NegotiationPacket>> frames;
    for (const auto& round : st.transcript) {
        std::vector<NegotiationPacket> sub;
        for (const auto& bid : round) sub.push_back({bid.player, bid.arm, bid.bid});
        frames.push_back(std::move(sub));
    }
    return frames;
}

struct NegotiationOutcome {
    std::vector<Matching> per_agent;
    bool completed = false;
    int rounds_used = 0;
};

/// Run auction rounds over the medium, one subframe per round, until the
/// auction terminates or the budget is spent. All agents replay the same
/// transcript, so their matchings must agree.
inline NegotiationOutcome negotiate(std::span<PlayerAgent> agents, BroadcastMedium& medium,
                                    int budget_subframes, long frame_id = 0) {
    if (agents.empty()) throw InvalidModelError("negotiate: no agents");
    if (budget_subframes < 1) throw InvalidModelError("negotiate: budget must be >= 1");
    NegotiationOutcome out;
    for (int sub = 0; sub < budget_subframes; ++sub) {
        if (agents[0].replica_complete()) break;
        std::vector<std::optional<NegotiationPacket>> slots;
        slots.reserve(agents.size());
        for (const auto& a : agents) slots.push_back(a.make_packet());
        auto delivered = medium.transmit_subframe(frame_id, sub, std::move(slots));
        for (auto& a : agents) a.observe_subframe(delivered);
        out.rounds_used += 1;
    }
    out.completed = agents[0].replica_complete();
    for (auto& a : agents) {
        if (a.replica_complete() != out.completed)
            throw ProtocolError("negotiate: agents disagree on completion");
        a.end_negotiation(out.completed);
        out.per_agent.push_back(a.pending());
    }
    for (std::size_t i = 1; i < out.per_agent.size(); ++i)
        if (!(out.per_agent[i] == out.per_agent[0]))
            throw ProtocolError("negotiate: agents computed different matchings");
    if (out.completed && !out.per_agent[0].injective())
        throw ProtocolError("negotiate: non-injective matching");
    return out;
}

/// The interrupt phase: player i transmits its bit in slot i; the frame-wide
/// flag is the OR, observed identically by everyone.
inline bool interrupt_phase(std::span<PlayerAgent> agents, BroadcastMedium& medium,
                            long frame_id = 0) {
    std::vector<bool> bits;
    bits.reserve(agents.size());
    bool flag = false;
    for (const auto& a : agents) {
        bits.push_back(a.interrupt_bit());
        flag = flag || bits.back();
    }
    medium.log_interrupt(frame_id, bits);
    return flag;
}

/// Everything a decentralized run needs besides the arm matrix and horizon.
struct ProtocolParams {
    IndexSpec index;                         // eps2 and coefficient live here
    NegotiationMode mode = NegotiationMode::Packetized;
    double eps1 = 0.0;                       // bid precision, physical mode only
    double auction_eps = 0.0;                // effective matching precision, > 0
    int frame_len = 0;                       // L, in slots
    std::optional<Schedule> frame_schedule;  // L_t override
    CostModel cost;
};

/// Decentralized doubling-epoch run over an M x N arm matrix. Time is slots;
/// frames of L slots are decision frames exactly when the shared epoch
/// counter is a power of two. Players keep playing their current matching
/// through decision frames; negotiation and interrupts ride alongside as
/// out-of-band signaling, and the frame's computation cost is charged
/// separately.
inline RegretTrace run_ducb4(std::vector<std::vector<ArmModel>> arm_matrix,
                             const ProtocolParams& params, long horizon,
                             const StreamFactory& streams, const RecordGrid& grid) {
    const int players = static_cast<int>(arm_matrix.size());
    if (players < 1) throw InvalidModelError("ducb4: empty arm matrix");
    const int arms = static_cast<int>(arm_matrix.front().size());
    for (const auto& row : arm_matrix)
        if (static_cast<int>(row.size()) != arms)
            throw InvalidModelError("ducb4: ragged arm matrix");
    if (arms < players) throw InvalidModelError("ducb4: need M <= N");
    if (!(params.auction_eps > 0.0)) throw InvalidModelError("ducb4: auction eps must be positive");
    if (!params.frame_schedule && params.frame_len < 2 * players)
        throw InvalidModelError(
            "ducb4: frame length must be >= 2M so a decision frame carries at least one subframe");
    if (horizon < arms) throw InvalidModelError("ducb4: horizon shorter than initialization");

    // expected values and the optimal matching, for regret accounting only
    ValueMatrix means(players, arms);
    for (int i = 0; i < players; ++i)
        for (int j = 0; j < arms; ++j) means.at(i, j) = arm_matrix[static_cast<std::size_t>(i)]
                                                            [static_cast<std::size_t>(j)]
                                                                .mean();
    auto [opt_matching, opt_surplus] = brute_force_matching(means);

    std::vector<std::vector<RngStream>> reward_streams;
    reward_streams.reserve(static_cast<std::size_t>(players));
    for (int i = 0; i < players; ++i) {
        std::vector<RngStream> row;
        row.reserve(static_cast<std::size_t>(arms));
        for (int j = 0; j < arms; ++j) {
            row.push_back(streams.stream(stream_tag::player_arm, static_cast<std::uint64_t>(i),
                                         static_cast<std::uint64_t>(j)));
            RngStream init = streams.stream(stream_tag::chain_init, static_cast<std::uint64_t>(i),
                                            static_cast<std::uint64_t>(j));
            arm_matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].reset(init);
        }
        reward_streams.push_back(std::move(row));
    }

    BroadcastMedium medium(players, arms, params.mode, params.eps1);
    std::vector<PlayerAgent> agents;
    agents.reserve(static_cast<std::size_t>(players));
    for (int i = 0; i < players; ++i)
        agents.emplace_back(i, players, arms, params.index, params.auction_eps);

    RegretTrace trace;
    trace.play_counts.assign(static_cast<std::size_t>(players) * static_cast<std::size_t>(arms), 0);
    std::size_t grid_pos = 0;
    long t = 0;
    long frame = 0;
    double cost_accum = 0.0;
    const double frame_cost = params.cost.eval(params.auction_eps);

    auto snapshot = [&]() {
        while (grid_pos < grid.times.size() && grid.times[grid_pos] == t) {
            double counts_term = 0.0;
            for (int i = 0; i < players; ++i)
                for (int j = 0; j < arms; ++j)
                    counts_term +=
                        means.at(i, j) *
                        static_cast<double>(
                            trace.play_counts[static_cast<std::size_t>(i) *
                                                  static_cast<std::size_t>(arms) +
                                              static_cast<std::size_t>(j)]);
            double base = opt_surplus * static_cast<double>(t);
            double regret_realized = base - trace.cum_reward + cost_accum;
            double regret_counts = base - counts_term + cost_accum;
            trace.rows.push_back({t, frame, trace.cum_reward, regret_realized, regret_counts,
                                  static_cast<double>(trace.m), trace.collisions,
                                  agents[0].eta()});
            ++grid_pos;
        }
    };

    auto play_slot = [&](const std::vector<int>& chosen) {
        t += 1;
        auto res = medium.resolve_plays(chosen);
        for (int i = 0; i < players; ++i) {
            int arm = chosen[static_cast<std::size_t>(i)];
            if (res.success[static_cast<std::size_t>(i)]) {
                double r = arm_matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(arm)]
                               .play(reward_streams[static_cast<std::size_t>(i)]
                                                   [static_cast<std::size_t>(arm)]);
                agents[static_cast<std::size_t>(i)].record_play(arm, r, true);
                trace.cum_reward += r;
                trace.play_counts[static_cast<std::size_t>(i) * static_cast<std::size_t>(arms) +
                                  static_cast<std::size_t>(arm)] += 1;
            } else {
                agents[static_cast<std::size_t>(i)].record_play(arm, 0.0, false);
            }
        }
        trace.collisions += res.colliding_players;
        snapshot();
    };

    // Initialization: rotate matchings so every pair is played exactly once.
    auto rotations = initialization_rotation(players, arms);
    for (const auto& rot : rotations) {
        if (t >= horizon) break;
        play_slot(rot.arm_of);
    }
    for (auto& a : agents) a.set_initial_matching(rotations.back());

    std::vector<int> chosen(static_cast<std::size_t>(players));
    auto current_plays = [&]() {
        for (int i = 0; i < players; ++i)
            chosen[static_cast<std::size_t>(i)] = agents[static_cast<std::size_t>(i)].current_arm();
        return chosen;
    };

    while (t < horizon) {
        long frame_len = params.frame_len;
        if (params.frame_schedule) {
            frame_len = std::lround(params.frame_schedule->value(static_cast<double>(t)));
            frame_len = std::max<long>(frame_len, 2L * players);
        }
        if (horizon - t < frame_len) {
            // tail too short for a whole frame: exploit it and stop
            while (t < horizon) play_slot(current_plays());
            break;
        }
        frame += 1;
        for (const auto& a : agents)
            if (a.eta() != agents[0].eta()) throw ProtocolError("ducb4: epoch counters diverged");
        bool decision = is_power_of_two(agents[0].eta());

        if (decision) {
            trace.m += 1;
            trace.decision_frames.push_back(frame);
            int budget = static_cast<int>((frame_len - players) / players);
            double eps_now = params.auction_eps;
            if (params.frame_schedule && params.mode == NegotiationMode::Physical) {
                // growing frames sharpen the precision: eps = f(L) per frame
                eps_now = std::pow(2.0, -static_cast<double>(std::max(1, budget)));
                medium.set_physical_precision(eps_now);
                for (auto& a : agents) a.configure_precision(eps_now, eps_now);
            }
            cost_accum += params.frame_schedule ? params.cost.eval(eps_now) : frame_cost;
            for (auto& a : agents) a.begin_negotiation(static_cast<double>(t));
            for (long k = 0; k < frame_len; ++k) play_slot(current_plays());
            auto outcome = negotiate(agents, medium, budget, frame);
            if (!outcome.completed) trace.budget_exhausted += 1;
            bool flag = interrupt_phase(agents, medium, frame);
            for (auto& a : agents) a.end_frame(true, flag);
        } else {
            for (long k = 0; k < frame_len; ++k) play_slot(current_plays());
            for (auto& a : agents) a.end_frame(false, false);
        }
    }

    return trace;
}

}  // namespace dmab
