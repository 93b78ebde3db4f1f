#pragma once

#include "remocom/model.hpp"
#include "remocom/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace remocom {

inline constexpr double kTwoPeakHigh = 2.0;
inline constexpr double kTwoPeakLow = 1.0;
// Tent-profile normalizer and weights; the raw weights sum to 1 only for odd
// window sizes, so rows are always renormalized afterwards.
inline Eigen::VectorXd circular_decay_profile(int m, int n_states, int center) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n_states);
    const double norm = (m - 1) * (m - 1) / 2.0 + 6.0 * m / 5.0;
    for (int s = 0; s < n_states; ++s) {
        int diff = std::abs(s - center);
        int dist = std::min(diff, n_states - diff);
        if (2 * dist < m)
            w(s) = ((5.0 + (s == center ? 1.0 : 0.0)) * m / 5.0 - 2.0 * dist) / norm;
    }
    return w;
}

/// Random MDP with one-hot transition rows (density 1/|S|), zero reward,
/// uniform initial distribution. Equal seeds give identical tensors.
inline ControlledMarkovProcess generate_deterministic_base(std::uint64_t seed, int n_states,
                                                           int n_actions, double gamma = 0.95) {
    if (n_states < 2) throw std::invalid_argument("generate_deterministic_base: n_states < 2");
    if (n_actions < 1) throw std::invalid_argument("generate_deterministic_base: n_actions < 1");
    Rng rng(seed);
    ControlledMarkovProcess mdp;
    mdp.n_states = n_states;
    mdp.n_actions = n_actions;
    mdp.gamma = gamma;
    mdp.transitions.assign(n_actions, Eigen::MatrixXd::Zero(n_states, n_states));
    mdp.reward.assign(n_actions, Eigen::MatrixXd::Zero(n_states, n_states));
    for (int a = 0; a < n_actions; ++a)
        for (int s = 0; s < n_states; ++s)
            mdp.transitions[a](s, rng.bounded_int(n_states)) = 1.0;
    mdp.initial_dist = Eigen::VectorXd::Constant(n_states, 1.0 / n_states);
    mdp.metadata.seed = seed;
    mdp.metadata.density = 1.0 / n_states;
    mdp.metadata.family = "deterministic_base";
    return mdp;
}

/// Spread each one-hot row over a circular window of m = round(d * |S|)
/// states with linearly decaying weight. m = 1 reproduces the base.
inline ControlledMarkovProcess densify(const ControlledMarkovProcess& base, double d) {
    const int n = base.n_states;
    const int m_raw = static_cast<int>(std::lround(d * n));
    if (m_raw > n) throw std::invalid_argument("densify: window larger than the state circle");
    const int m = std::max(1, m_raw);

    ControlledMarkovProcess out = base;
    for (int a = 0; a < base.n_actions; ++a) {
        for (int s = 0; s < n; ++s) {
            int center = -1;
            for (int t = 0; t < n; ++t) {
                const double p = base.P(a)(s, t);
                if (p > 1.0 - kSimplexTol) center = t;
                else if (p > kSimplexTol)
                    throw std::invalid_argument("densify: base row is not one-hot");
            }
            if (center < 0) throw std::invalid_argument("densify: base row is not one-hot");
            Eigen::VectorXd w = circular_decay_profile(m, n, center);
            out.transitions[a].row(s) = (w / w.sum()).transpose();
        }
    }
    out.metadata.density = d;
    return out;
}

/// Reward earned on arrival: kTwoPeakHigh at the target state, kTwoPeakLow at
/// the secondary state, half of kTwoPeakLow at the secondary's circular
/// neighbors, 0 elsewhere. Independent of the departure state and action.
inline std::vector<Eigen::MatrixXd> two_peak_reward(int n_states, int n_actions, int target,
                                                    int secondary) {
    if (target == secondary)
        throw std::invalid_argument("two_peak_reward: target and secondary must differ");
    Eigen::VectorXd g = Eigen::VectorXd::Zero(n_states);
    g((secondary + 1) % n_states) = kTwoPeakLow / 2.0;
    g((secondary + n_states - 1) % n_states) = kTwoPeakLow / 2.0;
    g(secondary) = kTwoPeakLow;
    g(target) = kTwoPeakHigh;
    Eigen::MatrixXd slice = g.transpose().replicate(n_states, 1);
    return std::vector<Eigen::MatrixXd>(static_cast<size_t>(n_actions), slice);
}

/// Estimation task over a fixed chain: one action per state, transitions
/// shared across actions, reward 1 exactly when the guess equals the current
/// state (before the transition).
inline ControlledMarkovProcess estimation_mdp(const Eigen::MatrixXd& chain, double gamma = 0.95) {
    const int n = static_cast<int>(chain.rows());
    if (chain.cols() != n || n < 1) throw std::invalid_argument("estimation_mdp: malformed chain");
    for (int s = 0; s < n; ++s) {
        if (std::abs(chain.row(s).sum() - 1.0) > kSimplexTol || chain.row(s).minCoeff() < -kProbFloor)
            throw std::invalid_argument("estimation_mdp: chain row " + std::to_string(s) +
                                        " is not a distribution");
    }
    ControlledMarkovProcess mdp;
    mdp.n_states = n;
    mdp.n_actions = n;
    mdp.gamma = gamma;
    mdp.transitions.assign(static_cast<size_t>(n), chain);
    mdp.reward.reserve(static_cast<size_t>(n));
    for (int a = 0; a < n; ++a) {
        Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, n);
        r.row(a).setOnes();  // guessing a pays off iff the current state is a
        mdp.reward.push_back(r);
    }
    mdp.initial_dist = Eigen::VectorXd::Constant(n, 1.0 / n);
    mdp.metadata.family = "estimation";
    return mdp;
}

/// 5-state, 2-action process where a greedy shortcut gamble and a safe long
/// loop both lead back to the rewarding state 0. Action 0 walks the loop
/// 0->1->2->3->0 (state 4 absorbs); action 1 gambles from 0 into {1, 4} and
/// shortcuts 4->0 while freezing states 1..3. Reward 1 on any arrival at 0.
inline ControlledMarkovProcess build_counterexample(double gamma = 0.9) {
    ControlledMarkovProcess mdp;
    mdp.n_states = 5;
    mdp.n_actions = 2;
    mdp.gamma = gamma;
    Eigen::MatrixXd p1 = Eigen::MatrixXd::Zero(5, 5);
    p1(0, 1) = 1.0;
    p1(1, 2) = 1.0;
    p1(2, 3) = 1.0;
    p1(3, 0) = 1.0;
    p1(4, 4) = 1.0;
    Eigen::MatrixXd p2 = Eigen::MatrixXd::Zero(5, 5);
    p2(0, 1) = 0.5;
    p2(0, 4) = 0.5;
    p2(1, 1) = 1.0;
    p2(2, 2) = 1.0;
    p2(3, 3) = 1.0;
    p2(4, 0) = 1.0;
    mdp.transitions = {p1, p2};
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(5, 5);
    r.col(0).setOnes();
    mdp.reward = {r, r};
    mdp.initial_dist = Eigen::VectorXd::Zero(5);
    mdp.initial_dist(0) = 1.0;
    mdp.metadata.family = "counterexample";
    return mdp;
}

}  // namespace remocom
