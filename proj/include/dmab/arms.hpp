#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dmab/errors.hpp"
#include "dmab/rng.hpp"

namespace dmab {

inline constexpr double kProbTol = 1e-12;
inline constexpr double kReversibilityTol = 1e-10;

/// Arm with i.i.d. rewards in [0,1]: Bernoulli or a discrete bounded
/// distribution given by support points and probabilities.
class IidArm {
public:
    static IidArm bernoulli(double p) {
        if (!(p >= 0.0 && p <= 1.0))
            throw InvalidModelError("bernoulli: p must lie in [0,1], got " + std::to_string(p));
        return IidArm({0.0, 1.0}, {1.0 - p, p}, p);
    }

    static IidArm discrete(std::vector<double> values, std::vector<double> probs) {
        if (values.empty() || values.size() != probs.size())
            throw InvalidModelError("discrete: values/probs must be nonempty and equal-sized");
        double total = 0.0, mean = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!(values[i] >= 0.0 && values[i] <= 1.0))
                throw InvalidModelError("discrete: support value outside [0,1]");
            if (probs[i] < 0.0) throw InvalidModelError("discrete: negative probability");
            total += probs[i];
            mean += values[i] * probs[i];
        }
        if (std::abs(total - 1.0) > kProbTol)
            throw InvalidModelError("discrete: probabilities sum to " + std::to_string(total));
        return IidArm(std::move(values), std::move(probs), mean);
    }

    double mean() const { return mean_; }
    const std::vector<double>& support() const { return values_; }

    /// Draw one reward; advances the stream deterministically (one uniform).
    double sample(RngStream& rng) const {
        double u = rng.uniform01();
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < probs_.size(); ++i) {
            acc += probs_[i];
            if (u < acc) return values_[i];
        }
        return values_.back();
    }

private:
    IidArm(std::vector<double> values, std::vector<double> probs, double mean)
        : values_(std::move(values)), probs_(std::move(probs)), mean_(mean) {}

    std::vector<double> values_;
    std::vector<double> probs_;
    double mean_;
};

/// Stationary summary of a reward chain: distribution, mean, and the
/// eigenvalue gap of P^2 that governs its concentration rate.
struct ChainStats {
    std::vector<double> pi;
    double mean = 0.0;
    double rho = 0.0;   // 1 - lambda2(P^2)
    double pi_min = 0.0;
    double x_max = 0.0;
    double x_min = 0.0;
    double pi_hat_max = 0.0;  // max_x max(pi_x, 1-pi_x)
    int cardinality = 0;
};

/// Rested Markov reward arm: a finite, irreducible, aperiodic, reversible
/// chain that transitions only when step() is called. Construction checks
/// all chain properties and precomputes the stationary summary.
class MarkovArm {
public:
    /// rows of `transition` are P[from][to]; `initial` is the start-state law.
    MarkovArm(std::vector<double> state_rewards, std::vector<std::vector<double>> transition,
              std::vector<double> initial)
        : rewards_(std::move(state_rewards)), p_(std::move(transition)), lambda_(std::move(initial)) {
        validate();
        stats_ = compute_stats();
        check_reversible();
        current_ = 0;
    }

    int num_states() const { return static_cast<int>(rewards_.size()); }
    int current_state() const { return current_; }
    const std::vector<double>& rewards() const { return rewards_; }
    const std::vector<std::vector<double>>& transition() const { return p_; }
    const std::vector<double>& initial_distribution() const { return lambda_; }
    const ChainStats& stats() const { return stats_; }

    /// Draw the start state from the initial distribution.
    void reset(RngStream& rng) { current_ = draw(lambda_, rng); }

    /// One transition from the current state; returns the reward of the new
    /// state. The chain is rested: no call, no movement.
    double step(RngStream& rng) {
        current_ = draw(p_[static_cast<std::size_t>(current_)], rng);
        return rewards_[static_cast<std::size_t>(current_)];
    }

private:
    static int draw(const std::vector<double>& dist, RngStream& rng) {
        double u = rng.uniform01();
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < dist.size(); ++i) {
            acc += dist[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(dist.size()) - 1;
    }

    void validate() const {
        const std::size_t n = rewards_.size();
        if (n == 0) throw InvalidModelError("markov: empty state space");
        for (double x : rewards_)
            if (!(x >= 0.0 && x <= 1.0))
                throw InvalidModelError("markov: state reward outside [0,1]");
        if (p_.size() != n) throw InvalidModelError("markov: transition matrix is not square");
        for (const auto& row : p_) {
            if (row.size() != n) throw InvalidModelError("markov: transition matrix is not square");
            double s = 0.0;
            for (double q : row) {
                if (q < 0.0) throw InvalidModelError("markov: negative transition probability");
                s += q;
            }
            if (std::abs(s - 1.0) > kProbTol)
                throw InvalidModelError("markov: row sums to " + std::to_string(s));
        }
        if (lambda_.size() != n)
            throw InvalidModelError("markov: initial distribution has wrong length");
        double s = std::accumulate(lambda_.begin(), lambda_.end(), 0.0);
        if (std::abs(s - 1.0) > kProbTol || *std::min_element(lambda_.begin(), lambda_.end()) < 0.0)
            throw InvalidModelError("markov: initial distribution is not a probability vector");

        // Irreducible + aperiodic <=> P^k strictly positive for some k <= n^2.
        if (!primitive())
            throw InvalidModelError("markov: chain is not irreducible and aperiodic");
    }

    bool primitive() const {
        const int n = num_states();
        Eigen::MatrixXd pm(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                pm(i, j) = p_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] > 0.0 ? 1.0 : 0.0;
        Eigen::MatrixXd acc = pm;
        for (int k = 1; k <= n * n; ++k) {
            if ((acc.array() > 0.0).all()) return true;
            acc = acc * pm;
            // keep entries bounded; only the zero pattern matters
            acc = (acc.array() > 0.0).cast<double>();
        }
        return (acc.array() > 0.0).all();
    }

    ChainStats compute_stats() const {
        const int n = num_states();
        ChainStats st;
        st.cardinality = n;
        Eigen::MatrixXd pm(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                pm(i, j) = p_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];

        // Stationary distribution: solve pi P = pi with sum(pi) = 1 as a
        // linear system, replacing one balance equation by normalization.
        Eigen::MatrixXd a = pm.transpose() - Eigen::MatrixXd::Identity(n, n);
        a.row(n - 1).setOnes();
        Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
        b(n - 1) = 1.0;
        Eigen::VectorXd pi = a.fullPivLu().solve(b);
        if (!(pi.array().isFinite().all()))
            throw InvalidModelError("markov: stationary-distribution solve failed");
        st.pi.assign(pi.data(), pi.data() + n);
        for (double q : st.pi)
            if (q <= 0.0) throw InvalidModelError("markov: nonpositive stationary mass");

        st.mean = 0.0;
        st.pi_min = 1.0;
        st.pi_hat_max = 0.0;
        st.x_max = rewards_.front();
        st.x_min = rewards_.front();
        for (int i = 0; i < n; ++i) {
            double x = rewards_[static_cast<std::size_t>(i)];
            st.mean += x * st.pi[static_cast<std::size_t>(i)];
            st.pi_min = std::min(st.pi_min, st.pi[static_cast<std::size_t>(i)]);
            st.pi_hat_max = std::max(
                st.pi_hat_max,
                std::max(st.pi[static_cast<std::size_t>(i)], 1.0 - st.pi[static_cast<std::size_t>(i)]));
            st.x_max = std::max(st.x_max, x);
            st.x_min = std::min(st.x_min, x);
        }

        // lambda2 of P^2. Reversibility makes D^{1/2} P^2 D^{-1/2} symmetric
        // (D = diag(pi)), so a self-adjoint solver applies.
        if (n == 1) {
            st.rho = 1.0;
            return st;
        }
        Eigen::MatrixXd p2 = pm * pm;
        Eigen::VectorXd sq = pi.array().sqrt();
        Eigen::MatrixXd sym = sq.asDiagonal() * p2 * sq.cwiseInverse().asDiagonal();
        sym = 0.5 * (sym + sym.transpose());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
        if (es.info() != Eigen::Success)
            throw InvalidModelError("markov: eigen decomposition did not converge");
        double lambda2 = es.eigenvalues()(n - 2);
        st.rho = 1.0 - lambda2;
        if (!(st.rho > 0.0 && st.rho <= 1.0 + 1e-12))
            throw InvalidModelError("markov: eigenvalue gap outside (0,1]");
        st.rho = std::min(st.rho, 1.0);
        return st;
    }

    void check_reversible() const {
        const int n = num_states();
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double lhs = stats_.pi[static_cast<std::size_t>(i)] *
                             p_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                double rhs = stats_.pi[static_cast<std::size_t>(j)] *
                             p_[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
                if (std::abs(lhs - rhs) > kReversibilityTol)
                    throw InvalidModelError("markov: chain is not reversible");
            }
    }

    std::vector<double> rewards_;
    std::vector<std::vector<double>> p_;
    std::vector<double> lambda_;
    ChainStats stats_;
    int current_ = 0;
};

/// Convenience for the common two-state chain with transition probabilities
/// p01 (low->high) and p10 (high->low).
inline MarkovArm two_state_chain(double p01, double p10, double reward0 = 0.0, double reward1 = 1.0,
                                 std::vector<double> initial = {}) {
    std::vector<std::vector<double>> p = {{1.0 - p01, p01}, {p10, 1.0 - p10}};
    if (initial.empty()) {
        double pi1 = p01 / (p01 + p10);
        initial = {1.0 - pi1, pi1};  // stationary start
    }
    return MarkovArm({reward0, reward1}, std::move(p), std::move(initial));
}

inline double sample_iid(const IidArm& arm, RngStream& rng) { return arm.sample(rng); }
inline double step_markov(MarkovArm& arm, RngStream& rng) { return arm.step(rng); }
inline const ChainStats& chain_stats(const MarkovArm& arm) { return arm.stats(); }

/// Either arm model behind one interface. Markov arms advance only on play.
class ArmModel {
public:
    ArmModel(IidArm arm) : impl_(std::move(arm)) {}       // NOLINT: implicit by design
    ArmModel(MarkovArm arm) : impl_(std::move(arm)) {}    // NOLINT

    bool is_markov() const { return std::holds_alternative<MarkovArm>(impl_); }
    const MarkovArm& markov() const { return std::get<MarkovArm>(impl_); }

    double mean() const {
        if (auto* a = std::get_if<IidArm>(&impl_)) return a->mean();
        return std::get<MarkovArm>(impl_).stats().mean;
    }

    void reset(RngStream& rng) {
        if (auto* a = std::get_if<MarkovArm>(&impl_)) a->reset(rng);
    }

    double play(RngStream& rng) {
        if (auto* a = std::get_if<IidArm>(&impl_)) return a->sample(rng);
        return std::get<MarkovArm>(impl_).step(rng);
    }

private:
    std::variant<IidArm, MarkovArm> impl_;
};

}  // namespace dmab
