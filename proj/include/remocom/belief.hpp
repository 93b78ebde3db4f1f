#pragma once

#include "remocom/model.hpp"
#include "remocom/util.hpp"

#include <optional>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

namespace remocom {

/// What the estimator/controller knows between updates: the age of the last
/// received state and that state itself.
struct DecoderState {
    int delta = 0;   // in [0, t_max]
    int s_last = 0;
};

enum class BeliefOrigin { naive, implicit };

struct Belief {
    Eigen::VectorXd probs;
    BeliefOrigin origin = BeliefOrigin::naive;
};

/// Thrown when a silent step is observed although the encoder policy
/// transmits in every state the belief allows. Fatal inside solvers.
struct BeliefInconsistency : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Deterministic transmission rule (s, delta, s_last) -> {0, 1}.
/// Row delta = t_max is forced to 1.
struct EncoderPolicy {
    int n_states = 0;
    int t_max = 0;
    std::vector<std::uint8_t> table;  // [(delta * n + s_last) * n + s]

    EncoderPolicy() = default;
    EncoderPolicy(int n, int tmax, std::uint8_t fill = 0)
        : n_states(n), t_max(tmax),
          table(static_cast<size_t>(tmax + 1) * n * n, fill) {
        force_boundary();
    }

    size_t idx(int s, int delta, int s_last) const {
        return (static_cast<size_t>(delta) * n_states + s_last) * n_states + s;
    }
    int decide(int s, int delta, int s_last) const { return table[idx(s, delta, s_last)]; }
    void set(int s, int delta, int s_last, int v) { table[idx(s, delta, s_last)] = static_cast<std::uint8_t>(v); }
    void force_boundary() {
        for (int sl = 0; sl < n_states; ++sl)
            for (int s = 0; s < n_states; ++s) set(s, t_max, sl, 1);
    }

    std::uint64_t fingerprint() const {
        std::uint64_t h = kFnvOffset;
        h = fnv1a64_mix(static_cast<std::uint64_t>(n_states), h);
        h = fnv1a64_mix(static_cast<std::uint64_t>(t_max), h);
        return fnv1a64(std::string_view(reinterpret_cast<const char*>(table.data()), table.size()), h);
    }
};

inline EncoderPolicy encoder_always(int n, int tmax) { return EncoderPolicy(n, tmax, 1); }
inline EncoderPolicy encoder_silent(int n, int tmax) { return EncoderPolicy(n, tmax, 0); }

inline void require_encoder(const EncoderPolicy& enc) {
    if (enc.n_states < 1 || enc.t_max < 1 ||
        enc.table.size() != static_cast<size_t>(enc.t_max + 1) * enc.n_states * enc.n_states)
        throw std::invalid_argument("encoder policy table has wrong shape");
    for (int sl = 0; sl < enc.n_states; ++sl)
        for (int s = 0; s < enc.n_states; ++s)
            if (enc.decide(s, enc.t_max, sl) != 1)
                throw std::invalid_argument("encoder policy must transmit at delta = t_max");
}

/// Action rule (delta, s_last) -> action.
struct DecoderPolicy {
    int n_states = 0;
    int t_max = 0;
    std::vector<int> table;  // [delta * n + s_last]

    DecoderPolicy() = default;
    DecoderPolicy(int n, int tmax, int fill = 0)
        : n_states(n), t_max(tmax), table(static_cast<size_t>(tmax + 1) * n, fill) {}

    size_t idx(int delta, int s_last) const {
        return static_cast<size_t>(delta) * n_states + s_last;
    }
    int act(int delta, int s_last) const { return table[idx(delta, s_last)]; }
    void set(int delta, int s_last, int a) { table[idx(delta, s_last)] = a; }

    std::uint64_t fingerprint() const {
        std::uint64_t h = kFnvOffset;
        h = fnv1a64_mix(static_cast<std::uint64_t>(n_states), h);
        h = fnv1a64_mix(static_cast<std::uint64_t>(t_max), h);
        for (int a : table) h = fnv1a64_mix(static_cast<std::uint64_t>(a), h);
        return h;
    }
};

inline void require_decoder(const DecoderPolicy& dec, int n_actions) {
    if (dec.n_states < 1 || dec.t_max < 1 ||
        dec.table.size() != static_cast<size_t>(dec.t_max + 1) * dec.n_states)
        throw std::invalid_argument("decoder policy table has wrong shape");
    for (int a : dec.table)
        if (a < 0 || a >= n_actions) throw std::invalid_argument("decoder policy action out of range");
}

/// Entries below kProbFloor are zeroed and the vector renormalized; keeps
/// denormals from accumulating over long silent stretches.
inline void clamp_belief(Eigen::VectorXd& w) {
    for (int i = 0; i < w.size(); ++i)
        if (w(i) < kProbFloor) w(i) = 0.0;
    const double total = w.sum();
    if (total > 0.0) w /= total;
}

inline Belief belief_reset(int n_states, int s) {
    if (s < 0 || s >= n_states) throw std::invalid_argument("belief_reset: state out of range");
    Belief b;
    b.probs = Eigen::VectorXd::Zero(n_states);
    b.probs(s) = 1.0;
    b.origin = BeliefOrigin::naive;
    return b;
}

/// A-priori belief after ds.delta silent steps: chained transition products
/// from the last received state, ignoring what silence itself reveals.
inline Belief prior_belief(const ControlledMarkovProcess& mdp, const DecoderState& ds,
                           std::span<const int> actions) {
    if (static_cast<int>(actions.size()) != ds.delta)
        throw std::invalid_argument("prior_belief: need exactly delta actions");
    Belief b = belief_reset(mdp.n_states, ds.s_last);
    for (int a : actions) b.probs = mdp.P(a).transpose() * b.probs;
    clamp_belief(b.probs);
    return b;
}

/// One silent-step update: propagate, then mask away every state in which the
/// encoder would have transmitted at (ds.delta, ds.s_last), and renormalize.
inline Belief posterior_step(const ControlledMarkovProcess& mdp, const Belief& prev, int action,
                             const EncoderPolicy& enc, const DecoderState& ds) {
    if (ds.delta < 1) throw std::invalid_argument("posterior_step: delta must be >= 1");
    Eigen::VectorXd w = mdp.P(action).transpose() * prev.probs;
    for (int s = 0; s < mdp.n_states; ++s)
        if (enc.decide(s, ds.delta, ds.s_last)) w(s) = 0.0;
    const double total = w.sum();
    if (total <= 0.0)
        throw BeliefInconsistency("silent step observed but the encoder transmits in every reachable state");
    w /= total;
    clamp_belief(w);
    return Belief{std::move(w), BeliefOrigin::implicit};
}

/// Probability the chain visits exactly `seq` over the next m silent steps,
/// starting from decoder knowledge `start` under the given control policy and
/// pull schedule. A pull scheduled inside the window zeroes the mass.
inline double trajectory_belief(const ControlledMarkovProcess& mdp, const DecoderState& start,
                                const DecoderPolicy& dec, const std::vector<int>& tau,
                                std::span<const int> seq) {
    const int m = static_cast<int>(seq.size());
    if (m < 1 || start.delta + m >= dec.t_max)
        throw std::invalid_argument("trajectory_belief: window runs into the forced transmission");
    std::vector<int> prefix(static_cast<size_t>(start.delta) + 1);
    for (int l = 0; l <= start.delta; ++l) prefix[static_cast<size_t>(l)] = dec.act(l, start.s_last);
    Belief one = prior_belief(mdp, DecoderState{start.delta + 1, start.s_last},
                              std::span<const int>(prefix));
    double p = one.probs(seq[0]);
    for (int l = 1; l < m; ++l) {
        if (tau[static_cast<size_t>(start.s_last)] == start.delta + l) return 0.0;
        const int a = dec.act(start.delta + l, start.s_last);
        p *= mdp.P(a)(seq[static_cast<size_t>(l) - 1], seq[static_cast<size_t>(l)]);
    }
    return p;
}

/// Beliefs for every age 0..t_max along one silent stretch from s_last, under
/// per-age decoder actions and optional per-age encoder masks (push mode).
/// reachable_to marks the last age whose belief has positive support mass.
struct BeliefLadder {
    Eigen::MatrixXd beliefs;  // (t_max + 1) x n, row delta
    int reachable_to = 0;
};

inline BeliefLadder belief_ladder(const ControlledMarkovProcess& mdp, int s_last, int t_max,
                                  const std::vector<int>& actions_by_age,
                                  const EncoderPolicy* enc) {
    BeliefLadder lad;
    lad.beliefs = Eigen::MatrixXd::Zero(t_max + 1, mdp.n_states);
    lad.beliefs(0, s_last) = 1.0;
    lad.reachable_to = t_max;
    Eigen::VectorXd w = lad.beliefs.row(0).transpose();
    for (int delta = 1; delta <= t_max; ++delta) {
        const int a = actions_by_age[static_cast<size_t>(delta) - 1];
        w = mdp.P(a).transpose() * w;
        if (enc != nullptr)
            for (int s = 0; s < mdp.n_states; ++s)
                if (enc->decide(s, delta, s_last)) w(s) = 0.0;
        const double total = w.sum();
        if (total <= 0.0) {
            lad.reachable_to = delta - 1;
            break;
        }
        w /= total;
        clamp_belief(w);
        lad.beliefs.row(delta) = w.transpose();
    }
    return lad;
}

/// Memo for belief ladders keyed by (s_last, action prefix, mask slice).
/// One instance per solver/worker; not synchronized.
class BeliefCache {
  public:
    const BeliefLadder& get(const ControlledMarkovProcess& mdp, int s_last, int t_max,
                            const std::vector<int>& actions_by_age, const EncoderPolicy* enc) {
        std::uint64_t h = kFnvOffset;
        h = fnv1a64_mix(static_cast<std::uint64_t>(s_last), h);
        h = fnv1a64_mix(static_cast<std::uint64_t>(t_max), h);
        for (int a : actions_by_age) h = fnv1a64_mix(static_cast<std::uint64_t>(a), h);
        if (enc != nullptr)
            for (int delta = 1; delta <= t_max; ++delta)
                for (int s = 0; s < mdp.n_states; ++s)
                    h = fnv1a64_mix(static_cast<std::uint64_t>(enc->decide(s, delta, s_last)), h);
        auto it = cache_.find(h);
        if (it != cache_.end()) return it->second;
        auto [pos, _] = cache_.emplace(h, belief_ladder(mdp, s_last, t_max, actions_by_age, enc));
        return pos->second;
    }

    void clear() { cache_.clear(); }

  private:
    std::unordered_map<std::uint64_t, BeliefLadder> cache_;
};

}  // namespace remocom
