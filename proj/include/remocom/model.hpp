#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace remocom {

/// Simplex / row-stochasticity tolerance shared by validation and belief code.
inline constexpr double kSimplexTol = 1e-9;

/// Floor used when clamping tiny negative rounding residue in distributions.
inline constexpr double kProbFloor = 1e-15;

struct ModelMetadata {
    std::uint64_t seed = 0;
    double density = 0.0;       // window fraction d used by densify, 0 if n/a
    std::string family;         // "deterministic_base", "control_two_peak", ...
};

/// Finite controlled Markov process with per-action transition matrices
/// P[a](s, s') and rewards r[a](s, s') accrued on the transition s -> s'.
struct ControlledMarkovProcess {
    int n_states = 0;
    int n_actions = 0;
    double gamma = 0.0;
    std::vector<Eigen::MatrixXd> transitions;  // n_actions matrices, n x n
    std::vector<Eigen::MatrixXd> reward;       // n_actions matrices, n x n
    Eigen::VectorXd initial_dist;              // length n_states
    ModelMetadata metadata;

    const Eigen::MatrixXd& P(int a) const { return transitions[static_cast<size_t>(a)]; }
    const Eigen::MatrixXd& R(int a) const { return reward[static_cast<size_t>(a)]; }

    /// E[r | s, a] = sum_s' P[a](s,s') r[a](s,s').
    double expected_reward(int s, int a) const {
        return P(a).row(s).dot(R(a).row(s));
    }

    double r_max() const {
        double m = reward.empty() ? 0.0 : reward[0](0, 0);
        for (const auto& ra : reward) m = std::max(m, ra.maxCoeff());
        return m;
    }
    double r_min() const {
        double m = reward.empty() ? 0.0 : reward[0](0, 0);
        for (const auto& ra : reward) m = std::min(m, ra.minCoeff());
        return m;
    }

    /// True when actions do not influence the dynamics and the reward is the
    /// guess-the-state indicator; solvers use this to shortcut the estimator.
    bool is_estimation() const {
        if (n_actions != n_states) return false;
        for (int a = 1; a < n_actions; ++a)
            if (!P(a).isApprox(P(0), 1e-12)) return false;
        for (int a = 0; a < n_actions; ++a)
            for (int s = 0; s < n_states; ++s)
                for (int t = 0; t < n_states; ++t)
                    if (R(a)(s, t) != (s == a ? 1.0 : 0.0)) return false;
        return true;
    }
};

struct CommunicationCost {
    double beta = 0.0;  // >= 0
};

/// Forced-transmission horizon and the optimality tolerance used by solvers.
struct HorizonConfig {
    int t_max = 1;       // >= 1
    double epsilon = 1e-6;
};

/// Collect every contract violation; empty result means the model is usable.
inline std::vector<std::string> validate(const ControlledMarkovProcess& mdp) {
    std::vector<std::string> bad;
    auto note = [&bad](const std::string& msg) { bad.push_back(msg); };

    if (mdp.n_states < 1) note("n_states must be >= 1");
    if (mdp.n_actions < 1) note("n_actions must be >= 1");
    if (!(mdp.gamma > 0.0) || !(mdp.gamma < 1.0)) note("gamma must lie in (0, 1)");
    if (static_cast<int>(mdp.transitions.size()) != mdp.n_actions)
        note("transitions must hold one matrix per action");
    if (static_cast<int>(mdp.reward.size()) != mdp.n_actions)
        note("reward must hold one matrix per action");
    if (!bad.empty()) return bad;

    for (int a = 0; a < mdp.n_actions; ++a) {
        const auto& P = mdp.P(a);
        const auto& R = mdp.R(a);
        if (P.rows() != mdp.n_states || P.cols() != mdp.n_states) {
            note("transition matrix for action " + std::to_string(a) + " has wrong shape");
            continue;
        }
        if (R.rows() != mdp.n_states || R.cols() != mdp.n_states)
            note("reward matrix for action " + std::to_string(a) + " has wrong shape");
        for (int s = 0; s < mdp.n_states; ++s) {
            double row = 0.0;
            for (int t = 0; t < mdp.n_states; ++t) {
                const double p = P(s, t);
                if (p < -kProbFloor)
                    note("negative transition probability at (a=" + std::to_string(a) +
                         ", s=" + std::to_string(s) + ", s'=" + std::to_string(t) + ")");
                row += p;
            }
            if (std::abs(row - 1.0) > kSimplexTol)
                note("transition row (a=" + std::to_string(a) + ", s=" + std::to_string(s) +
                     ") sums to " + std::to_string(row));
        }
        if (R.rows() == mdp.n_states && !R.allFinite())
            note("reward matrix for action " + std::to_string(a) + " has non-finite entries");
    }

    if (mdp.initial_dist.size() != mdp.n_states) {
        note("initial_dist has wrong length");
    } else {
        double total = 0.0;
        for (int s = 0; s < mdp.n_states; ++s) {
            if (mdp.initial_dist(s) < -kProbFloor)
                note("initial_dist has a negative entry at state " + std::to_string(s));
            total += mdp.initial_dist(s);
        }
        if (std::abs(total - 1.0) > kSimplexTol)
            note("initial_dist sums to " + std::to_string(total));
    }
    return bad;
}

inline void require_valid(const ControlledMarkovProcess& mdp) {
    auto bad = validate(mdp);
    if (!bad.empty()) {
        std::string msg = "invalid model:";
        for (const auto& b : bad) msg += "\n  " + b;
        throw std::invalid_argument(msg);
    }
}

inline void require_cost(const CommunicationCost& cost) {
    if (!(cost.beta >= 0.0) || !std::isfinite(cost.beta))
        throw std::invalid_argument("communication cost beta must be finite and >= 0");
}

inline void require_horizon(const HorizonConfig& cfg) {
    if (cfg.t_max < 1) throw std::invalid_argument("t_max must be >= 1");
    if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
}

}  // namespace remocom
