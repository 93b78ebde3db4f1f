#pragma once

#include "remocom/chain.hpp"
#include "remocom/model.hpp"
#include "remocom/rng.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace remocom {

enum class Architecture { pull, push, periodic };

inline std::string architecture_name(Architecture a) {
    switch (a) {
        case Architecture::pull: return "pull";
        case Architecture::push: return "push";
        default: return "periodic";
    }
}

struct JointPolicy {
    EncoderPolicy encoder;
    DecoderPolicy decoder;
    Architecture architecture = Architecture::push;
};

struct EvalResult {
    double reward = 0.0;            // xi-weighted discounted reward, no cost term
    double r_beta = 0.0;            // reward - beta * discounted channel use
    double channel_discounted = 0.0;
    double channel_rate = 0.0;      // long-run average transmissions per step
    double reward_rate = 0.0;       // long-run average reward per step
    Eigen::MatrixXd paoi;           // row s_last, col delta+1 in [1, t_max]
    std::string method = "exact";
    double stderr_r_beta = 0.0;     // Monte Carlo only
};

struct EvalConfig {
    int node_cap = kChainNodeCap;
};

inline void require_joint(const ControlledMarkovProcess& mdp, const JointPolicy& jp) {
    require_encoder(jp.encoder);
    require_decoder(jp.decoder, mdp.n_actions);
    if (jp.encoder.n_states != mdp.n_states || jp.decoder.n_states != mdp.n_states ||
        jp.encoder.t_max != jp.decoder.t_max)
        throw std::invalid_argument("joint policy tables do not match the model");
}

/// Exact discounted and long-run evaluation via the closed chain over
/// <s, delta, s_last>. Evaluation starts at renewal nodes <s, 0, s> ~ xi with
/// no cost charged at t = 0; transmissions at t >= 1 are charged when made.
inline EvalResult evaluate_exact(const ControlledMarkovProcess& mdp, const CommunicationCost& cost,
                                 const JointPolicy& jp, const EvalConfig& cfg = {}) {
    require_valid(mdp);
    require_cost(cost);
    require_joint(mdp, jp);
    InducedChain ch = build_induced_chain(mdp, jp.decoder, jp.encoder);
    if (ch.node_count > cfg.node_cap)
        throw ChainSizeExceeded("chain exceeds configured node cap");

    Eigen::MatrixXd rhs(ch.node_count, 2);
    rhs.col(0) = ch.er;
    rhs.col(1) = mdp.gamma * ch.ptx;  // transmissions bill at the arrival step
    Eigen::MatrixXd x = solve_discounted(ch.T, mdp.gamma, rhs);

    EvalResult out;
    out.reward = ch.init.dot(x.col(0));
    out.channel_discounted = ch.init.dot(x.col(1));
    out.r_beta = out.reward - cost.beta * out.channel_discounted;

    ChainAnalysis ca = analyze_chain(ch.T);
    out.reward_rate = long_run_rate(ca, ch.init, ch.er);
    out.channel_rate = long_run_rate(ca, ch.init, ch.ptx);

    // PAoI: a transmission leaving node <s, delta, s_last> records peak
    // delta + 1 against s_last.
    Eigen::VectorXd mix = limiting_distribution(ca, ch.init);
    out.paoi = Eigen::MatrixXd::Zero(mdp.n_states, ch.t_max + 1);
    for (int id = 0; id < ch.node_count; ++id) {
        const double mass = mix(id) * ch.ptx(id);
        if (mass <= 0.0) continue;
        out.paoi(ch.node_slast[static_cast<size_t>(id)],
                 ch.node_delta[static_cast<size_t>(id)] + 1) += mass;
    }
    for (int s = 0; s < mdp.n_states; ++s) {
        const double total = out.paoi.row(s).sum();
        if (total > 0.0) out.paoi.row(s) /= total;
    }
    out.method = "exact";
    return out;
}

struct SimulateConfig {
    int horizon = 100000;
    int reps = 16;
};

/// Seeded Monte Carlo rollouts of the joint policy. Discounted sums are
/// truncated at `horizon`; rates average the full trajectory. Per-rep seeds
/// derive deterministically from `seed`.
inline EvalResult simulate(const ControlledMarkovProcess& mdp, const CommunicationCost& cost,
                           const JointPolicy& jp, std::uint64_t seed,
                           const SimulateConfig& cfg = {}) {
    require_valid(mdp);
    require_cost(cost);
    require_joint(mdp, jp);
    if (cfg.horizon < 1) throw std::invalid_argument("simulate: horizon must be >= 1");
    if (cfg.reps < 1) throw std::invalid_argument("simulate: reps must be >= 1");
    const int n = mdp.n_states;
    const int t_max = jp.encoder.t_max;

    EvalResult out;
    out.method = "monte_carlo";
    out.paoi = Eigen::MatrixXd::Zero(n, t_max + 1);
    double sum_rb = 0.0, sumsq_rb = 0.0;

    for (int rep = 0; rep < cfg.reps; ++rep) {
        Rng rng(mix_seed(seed, static_cast<std::uint64_t>(rep)));
        int s = rng.weighted(mdp.initial_dist);
        int delta = 0, s_last = s;
        double disc = 1.0;
        double reward = 0.0, channel = 0.0;
        long long tx_events = 0;
        double reward_sum = 0.0;
        for (int t = 0; t < cfg.horizon; ++t) {
            const int a = jp.decoder.act(delta, s_last);
            const int s_next = rng.weighted(mdp.P(a).row(s).transpose());
            const double r = mdp.R(a)(s, s_next);
            reward += disc * r;
            reward_sum += r;
            disc *= mdp.gamma;
            const int c = jp.encoder.decide(s_next, delta + 1, s_last);
            if (c) {
                channel += disc;  // already advanced to t+1
                ++tx_events;
                out.paoi(s_last, delta + 1) += 1.0;
                s_last = s_next;
                delta = 0;
            } else {
                ++delta;
            }
            s = s_next;
        }
        const double rb = reward - cost.beta * channel;
        out.reward += reward;
        out.channel_discounted += channel;
        out.channel_rate += static_cast<double>(tx_events) / cfg.horizon;
        out.reward_rate += reward_sum / cfg.horizon;
        sum_rb += rb;
        sumsq_rb += rb * rb;
    }
    const double k = static_cast<double>(cfg.reps);
    out.reward /= k;
    out.channel_discounted /= k;
    out.channel_rate /= k;
    out.reward_rate /= k;
    out.r_beta = sum_rb / k;
    if (cfg.reps > 1) {
        const double var = std::max(0.0, (sumsq_rb - sum_rb * sum_rb / k) / (k - 1.0));
        out.stderr_r_beta = std::sqrt(var / k);
    }
    for (int s = 0; s < n; ++s) {
        const double total = out.paoi.row(s).sum();
        if (total > 0.0) out.paoi.row(s) /= total;
    }
    return out;
}

/// Per-state peak-age distribution, exact when the chain fits the cap.
inline Eigen::MatrixXd paoi_profile(const ControlledMarkovProcess& mdp,
                                    const CommunicationCost& cost, const JointPolicy& jp,
                                    const EvalConfig& cfg = {}) {
    return evaluate_exact(mdp, cost, jp, cfg).paoi;
}

/// Estimation encoder that stays silent exactly in the decoder's likeliest
/// state. Silence keeps the belief one-hot, so estimation never errs; both
/// sides break argmax ties toward the lowest state index.
struct PerfectEstimationPolicy {
    JointPolicy joint;
    std::vector<std::vector<int>> silent_state;  // [s_last][delta] for delta >= 1
};

inline PerfectEstimationPolicy perfect_estimation_policy(const ControlledMarkovProcess& mdp,
                                                         int t_max) {
    if (!mdp.is_estimation())
        throw std::invalid_argument("perfect_estimation_policy: not an estimation task");
    const int n = mdp.n_states;
    PerfectEstimationPolicy out;
    out.joint.architecture = Architecture::push;
    out.joint.encoder = EncoderPolicy(n, t_max, 1);
    out.joint.decoder = DecoderPolicy(n, t_max, 0);
    out.silent_state.assign(static_cast<size_t>(n), std::vector<int>(static_cast<size_t>(t_max) + 1, -1));
    for (int sl = 0; sl < n; ++sl) {
        int anchor = sl;  // belief support after delta silent steps
        out.joint.decoder.set(0, sl, sl);
        for (int delta = 1; delta <= t_max; ++delta) {
            // pre-communication belief is row `anchor` of the shared chain
            int best = 0;
            double best_p = -1.0;
            for (int s = 0; s < n; ++s) {
                const double p = mdp.P(0)(anchor, s);
                if (p > best_p + 1e-15) {
                    best_p = p;
                    best = s;
                }
            }
            out.silent_state[static_cast<size_t>(sl)][static_cast<size_t>(delta)] = best;
            out.joint.decoder.set(delta, sl, best);
            if (delta < t_max)
                for (int s = 0; s < n; ++s)
                    out.joint.encoder.set(s, delta, sl, s == best ? 0 : 1);
            anchor = best;
        }
    }
    return out;
}

}  // namespace remocom
