#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dmab/arms.hpp"
#include "dmab/bounds.hpp"
#include "dmab/errors.hpp"
#include "dmab/policy.hpp"
#include "dmab/protocol.hpp"

namespace dmab {

using json = nlohmann::json;

enum class Scenario { SingleIid, SingleMarkov, DecentralIid, DecentralMarkov };
enum class PolicyKind { Ucb1L, Ucb4, Ducb4 };

struct TwoStateChainSpec {
    double p01 = 0.0;
    double p10 = 0.0;
    double reward0 = 0.0;
    double reward1 = 1.0;
    std::vector<double> initial;  // empty = stationary
};

struct DiscreteArmSpec {
    std::vector<double> values;
    std::vector<double> probs;
};

/// One experiment: scenario, arm definitions, policy parameters, horizon,
/// seeds and output. Parsed from JSON; serializes back losslessly.
struct SimConfig {
    Scenario scenario = Scenario::SingleIid;
    PolicyKind policy = PolicyKind::Ucb4;
    long horizon = 0;
    int seeds = 1;
    std::vector<std::uint64_t> seed_list;
    std::uint64_t seed_base = 1;
    int workers = 0;  // 0 = DMAB_WORKERS env or hardware
    std::string output;
    double record_ratio = 1.1;
    std::vector<long> record_extra;

    // arms: exactly one of these is populated (rows = players)
    std::vector<std::vector<double>> bernoulli;
    std::vector<std::vector<DiscreteArmSpec>> discrete;
    std::vector<std::vector<TwoStateChainSpec>> chains;

    // policy parameters
    int L = 0;  // ucb1 recompute period, or ducb4 frame length
    std::optional<Schedule> frame_schedule;
    std::string mode = "packetized";
    double bid_precision = 0.0;    // eps1
    double index_precision = 0.0;  // eps2
    std::optional<Schedule> index_precision_schedule;
    double kappa = 0.0;
    std::optional<Schedule> kappa_schedule;
    CostModel cost;

    int players() const {
        if (!bernoulli.empty()) return static_cast<int>(bernoulli.size());
        if (!discrete.empty()) return static_cast<int>(discrete.size());
        return static_cast<int>(chains.size());
    }
    int arms() const {
        if (!bernoulli.empty()) return static_cast<int>(bernoulli.front().size());
        if (!discrete.empty()) return static_cast<int>(discrete.front().size());
        return chains.empty() ? 0 : static_cast<int>(chains.front().size());
    }
    bool markov() const {
        return scenario == Scenario::SingleMarkov || scenario == Scenario::DecentralMarkov;
    }
    bool decentralized() const {
        return scenario == Scenario::DecentralIid || scenario == Scenario::DecentralMarkov;
    }
};

// -------------------------------------------------------------- json helpers

inline std::string scenario_name(Scenario s) {
    switch (s) {
        case Scenario::SingleIid: return "single_iid";
        case Scenario::SingleMarkov: return "single_markov";
        case Scenario::DecentralIid: return "decentral_iid";
        case Scenario::DecentralMarkov: return "decentral_markov";
    }
    return "?";
}

inline std::string policy_name(PolicyKind p) {
    switch (p) {
        case PolicyKind::Ucb1L: return "ucb1L";
        case PolicyKind::Ucb4: return "ucb4";
        case PolicyKind::Ducb4: return "ducb4";
    }
    return "?";
}

inline std::string schedule_kind_name(ScheduleKind k) {
    switch (k) {
        case ScheduleKind::Constant: return "constant";
        case ScheduleKind::EpsDecay: return "eps_decay";
        case ScheduleKind::KappaGrowth: return "kappa_growth";
        case ScheduleKind::FrameGrowth: return "frame_growth";
    }
    return "?";
}

inline Schedule schedule_from_json(const json& j, const std::string& field,
                                   std::vector<std::string>& errors) {
    Schedule s;
    std::string kind = j.value("kind", "");
    if (kind == "constant")
        s.kind = ScheduleKind::Constant;
    else if (kind == "eps_decay")
        s.kind = ScheduleKind::EpsDecay;
    else if (kind == "kappa_growth")
        s.kind = ScheduleKind::KappaGrowth;
    else if (kind == "frame_growth")
        s.kind = ScheduleKind::FrameGrowth;
    else
        errors.push_back(field + ".kind: unknown schedule kind '" + kind + "'");
    s.c0 = j.value("c0", 1.0);
    return s;
}

inline json schedule_to_json(const Schedule& s) {
    return json{{"kind", schedule_kind_name(s.kind)}, {"c0", s.c0}};
}

/// Parse a config, collecting field-level problems instead of throwing on
/// the first one. Structural JSON errors still throw.
inline SimConfig parse_config(const json& j, std::vector<std::string>& errors) {
    SimConfig c;

    std::string sc = j.value("scenario", "");
    if (sc == "single_iid")
        c.scenario = Scenario::SingleIid;
    else if (sc == "single_markov")
        c.scenario = Scenario::SingleMarkov;
    else if (sc == "decentral_iid")
        c.scenario = Scenario::DecentralIid;
    else if (sc == "decentral_markov")
        c.scenario = Scenario::DecentralMarkov;
    else
        errors.push_back("scenario: expected one of single_iid|single_markov|decentral_iid|"
                         "decentral_markov, got '" + sc + "'");

    std::string pol = j.value("policy", "");
    if (pol.empty())
        c.policy = (c.scenario == Scenario::DecentralIid || c.scenario == Scenario::DecentralMarkov)
                       ? PolicyKind::Ducb4
                       : PolicyKind::Ucb4;
    else if (pol == "ucb1L")
        c.policy = PolicyKind::Ucb1L;
    else if (pol == "ucb4")
        c.policy = PolicyKind::Ucb4;
    else if (pol == "ducb4")
        c.policy = PolicyKind::Ducb4;
    else
        errors.push_back("policy: expected ucb1L|ucb4|ducb4, got '" + pol + "'");

    c.horizon = j.value("horizon", 0L);
    if (c.horizon < 1) errors.push_back("horizon: must be a positive integer");

    c.seeds = j.value("seeds", 1);
    if (j.contains("seed_list")) c.seed_list = j["seed_list"].get<std::vector<std::uint64_t>>();
    if (c.seed_list.empty() && c.seeds < 1) errors.push_back("seeds: must be >= 1");
    c.seed_base = j.value("seed_base", static_cast<std::uint64_t>(1));
    c.workers = j.value("workers", 0);
    c.output = j.value("output", "");

    if (j.contains("record")) {
        const json& r = j["record"];
        c.record_ratio = r.value("ratio", 1.1);
        if (!(c.record_ratio > 1.0)) errors.push_back("record.ratio: must be > 1");
        if (r.contains("extra")) c.record_extra = r["extra"].get<std::vector<long>>();
    }

    if (!j.contains("arms")) {
        errors.push_back("arms: missing");
    } else {
        const json& a = j["arms"];
        int kinds = static_cast<int>(a.contains("bernoulli")) +
                    static_cast<int>(a.contains("discrete")) +
                    static_cast<int>(a.contains("two_state"));
        if (kinds != 1)
            errors.push_back("arms: give exactly one of bernoulli|discrete|two_state");
        if (a.contains("bernoulli")) {
            c.bernoulli = a["bernoulli"].get<std::vector<std::vector<double>>>();
            for (std::size_t i = 0; i < c.bernoulli.size(); ++i)
                for (std::size_t k = 0; k < c.bernoulli[i].size(); ++k)
                    if (!(c.bernoulli[i][k] >= 0.0 && c.bernoulli[i][k] <= 1.0))
                        errors.push_back("arms.bernoulli[" + std::to_string(i) + "][" +
                                         std::to_string(k) + "]: mean outside [0,1]");
        }
        if (a.contains("discrete")) {
            for (const auto& row : a["discrete"]) {
                std::vector<DiscreteArmSpec> specs;
                for (const auto& cell : row) {
                    DiscreteArmSpec d;
                    d.values = cell.value("values", std::vector<double>{});
                    d.probs = cell.value("probs", std::vector<double>{});
                    if (d.values.empty() || d.values.size() != d.probs.size())
                        errors.push_back("arms.discrete: values/probs must be nonempty and match");
                    specs.push_back(std::move(d));
                }
                c.discrete.push_back(std::move(specs));
            }
        }
        if (a.contains("two_state")) {
            for (const auto& row : a["two_state"]) {
                std::vector<TwoStateChainSpec> specs;
                for (const auto& cell : row) {
                    TwoStateChainSpec t;
                    t.p01 = cell.value("p01", -1.0);
                    t.p10 = cell.value("p10", -1.0);
                    t.reward0 = cell.value("reward0", 0.0);
                    t.reward1 = cell.value("reward1", 1.0);
                    if (cell.contains("initial"))
                        t.initial = cell["initial"].get<std::vector<double>>();
                    if (!(t.p01 > 0.0 && t.p01 <= 1.0) || !(t.p10 > 0.0 && t.p10 <= 1.0))
                        errors.push_back("arms.two_state: p01 and p10 must lie in (0,1]");
                    specs.push_back(std::move(t));
                }
                c.chains.push_back(std::move(specs));
            }
        }
    }

    c.L = j.value("L", 0);
    std::vector<std::string> serrs;
    if (j.contains("frame_schedule"))
        c.frame_schedule = schedule_from_json(j["frame_schedule"], "frame_schedule", errors);
    c.mode = j.value("mode", "packetized");
    if (c.mode != "packetized" && c.mode != "physical")
        errors.push_back("mode: expected packetized|physical");
    c.bid_precision = j.value("bid_precision", 0.0);
    c.index_precision = j.value("index_precision", 0.0);
    if (j.contains("index_precision_schedule"))
        c.index_precision_schedule = schedule_from_json(j["index_precision_schedule"],
                                                        "index_precision_schedule", errors);
    c.kappa = j.value("kappa", 0.0);
    if (j.contains("kappa_schedule"))
        c.kappa_schedule = schedule_from_json(j["kappa_schedule"], "kappa_schedule", errors);
    if (j.contains("cost")) {
        c.cost.base = j["cost"].value("base", 0.0);
        c.cost.per_bit = j["cost"].value("per_bit", 0.0);
        if (c.cost.base < 0.0 || c.cost.per_bit < 0.0)
            errors.push_back("cost: base and per_bit must be >= 0");
    }
    (void)serrs;
    return c;
}

/// Cross-field validation, beyond what parsing can see locally.
inline void validate_config(const SimConfig& c, std::vector<std::string>& errors) {
    const int m = c.players();
    const int n = c.arms();
    if (m < 1 || n < 1) {
        errors.push_back("arms: empty matrix");
        return;
    }
    for (const auto& row : c.bernoulli)
        if (static_cast<int>(row.size()) != n) errors.push_back("arms.bernoulli: ragged rows");
    for (const auto& row : c.chains)
        if (static_cast<int>(row.size()) != n) errors.push_back("arms.two_state: ragged rows");
    for (const auto& row : c.discrete)
        if (static_cast<int>(row.size()) != n) errors.push_back("arms.discrete: ragged rows");

    bool wants_markov = c.markov();
    if (wants_markov && c.chains.empty())
        errors.push_back("arms: markov scenario needs two_state chains");
    if (!wants_markov && !c.chains.empty())
        errors.push_back("arms: iid scenario cannot use two_state chains");

    if (c.decentralized()) {
        if (c.policy != PolicyKind::Ducb4)
            errors.push_back("policy: decentralized scenarios require ducb4");
        if (m > n) errors.push_back("arms: need players <= arms");
        if (!c.frame_schedule && c.L < 2 * m)
            errors.push_back("L: frame length must be >= 2M so a decision frame fits a subframe");
        double eps2 = c.index_precision;
        if (c.mode == "packetized" && !(eps2 > 0.0))
            errors.push_back("index_precision: packetized ducb4 needs index_precision > 0");
        if (c.mode == "physical" && c.bid_precision < 0.0)
            errors.push_back("bid_precision: must be >= 0");
        if (c.scenario == Scenario::DecentralMarkov && !c.kappa_schedule && !(c.kappa > 0.0))
            errors.push_back("kappa: markov ducb4 needs kappa > 0 (or a kappa_schedule)");
    } else {
        if (m != 1) errors.push_back("arms: single-player scenario needs exactly one row");
        if (n < 2) errors.push_back("arms: need at least two arms");
        if (c.policy == PolicyKind::Ducb4)
            errors.push_back("policy: ducb4 requires a decentralized scenario");
        if (c.policy == PolicyKind::Ucb1L) {
            if (c.L < 1) errors.push_back("L: ucb1L needs L >= 1");
            if (c.horizon < static_cast<long>(n) * c.L)
                errors.push_back("horizon: ucb1L needs horizon >= N*L");
            if (wants_markov) errors.push_back("policy: ucb1L supports only iid arms");
        }
        if (c.scenario == Scenario::SingleMarkov && !c.kappa_schedule && !(c.kappa > 0.0))
            errors.push_back("kappa: markov ucb4 needs kappa > 0 (or a kappa_schedule)");
    }
}

inline SimConfig load_config(const std::string& text, std::vector<std::string>& errors) {
    json j = json::parse(text);
    SimConfig c = parse_config(j, errors);
    if (errors.empty()) validate_config(c, errors);
    return c;
}

inline json config_to_json(const SimConfig& c) {
    json j;
    j["scenario"] = scenario_name(c.scenario);
    j["policy"] = policy_name(c.policy);
    j["horizon"] = c.horizon;
    if (!c.seed_list.empty())
        j["seed_list"] = c.seed_list;
    else
        j["seeds"] = c.seeds;
    j["seed_base"] = c.seed_base;
    if (c.workers != 0) j["workers"] = c.workers;
    if (!c.output.empty()) j["output"] = c.output;
    j["record"] = json{{"ratio", c.record_ratio}};
    if (!c.record_extra.empty()) j["record"]["extra"] = c.record_extra;

    json arms;
    if (!c.bernoulli.empty()) arms["bernoulli"] = c.bernoulli;
    if (!c.discrete.empty()) {
        json rows = json::array();
        for (const auto& row : c.discrete) {
            json r = json::array();
            for (const auto& d : row) r.push_back(json{{"values", d.values}, {"probs", d.probs}});
            rows.push_back(r);
        }
        arms["discrete"] = rows;
    }
    if (!c.chains.empty()) {
        json rows = json::array();
        for (const auto& row : c.chains) {
            json r = json::array();
            for (const auto& ch : row) {
                json cell{{"p01", ch.p01}, {"p10", ch.p10}, {"reward0", ch.reward0},
                          {"reward1", ch.reward1}};
                if (!ch.initial.empty()) cell["initial"] = ch.initial;
                r.push_back(cell);
            }
            rows.push_back(r);
        }
        arms["two_state"] = rows;
    }
    j["arms"] = arms;

    if (c.L != 0) j["L"] = c.L;
    if (c.frame_schedule) j["frame_schedule"] = schedule_to_json(*c.frame_schedule);
    j["mode"] = c.mode;
    if (c.bid_precision != 0.0) j["bid_precision"] = c.bid_precision;
    if (c.index_precision != 0.0) j["index_precision"] = c.index_precision;
    if (c.index_precision_schedule)
        j["index_precision_schedule"] = schedule_to_json(*c.index_precision_schedule);
    if (c.kappa != 0.0) j["kappa"] = c.kappa;
    if (c.kappa_schedule) j["kappa_schedule"] = schedule_to_json(*c.kappa_schedule);
    j["cost"] = json{{"base", c.cost.base}, {"per_bit", c.cost.per_bit}};
    return j;
}

}  // namespace dmab
