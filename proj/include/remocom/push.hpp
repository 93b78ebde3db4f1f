#pragma once

#include "remocom/belief.hpp"
#include "remocom/evaluate.hpp"
#include "remocom/model.hpp"
#include "remocom/pull.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace remocom {

/// Pre-decision values v(s, delta, s_last) of a fixed (decoder, encoder)
/// pair: the encoder's transmit/stay branch at the node is baked in, so the
/// renewal diagonal v(s, 0, s) carries the closed-loop value.
struct EncoderValueTable {
    int n_states = 0;
    int t_max = 0;
    Eigen::VectorXd v;

    int idx(int s, int delta, int s_last) const {
        return (s * (t_max + 1) + delta) * n_states + s_last;
    }
    double at(int s, int delta, int s_last) const { return v(idx(s, delta, s_last)); }
};

struct EquilibriumReport {
    int rounds = 0;
    bool converged = false;
    double final_gap = std::numeric_limits<double>::infinity();
};

/// The two conventional starting encoders: transmit never (boundary only)
/// and transmit always.
inline std::pair<EncoderPolicy, EncoderPolicy> standard_inits(const ControlledMarkovProcess& mdp,
                                                              const HorizonConfig& cfg) {
    require_valid(mdp);
    require_horizon(cfg);
    return {encoder_silent(mdp.n_states, cfg.t_max), encoder_always(mdp.n_states, cfg.t_max)};
}

namespace detail {

inline void require_push_pair(const ControlledMarkovProcess& mdp, const DecoderPolicy& dec,
                              const EncoderPolicy& enc, const HorizonConfig& cfg) {
    require_valid(mdp);
    require_horizon(cfg);
    require_decoder(dec, mdp.n_actions);
    require_encoder(enc);
    if (dec.n_states != mdp.n_states || dec.t_max != cfg.t_max)
        throw std::invalid_argument("decoder table does not match the model/horizon");
    if (enc.n_states != mdp.n_states || enc.t_max != cfg.t_max)
        throw std::invalid_argument("encoder table does not match the model/horizon");
}

/// Renewal-to-renewal response of one silent branch under a fixed encoder:
/// out_c collects stretch rewards minus discounted transmission charges,
/// out_m(s') the discounted arrival mass at s', so the branch value equals
/// out_c + out_m . W for renewal values W.
inline void branch_response(const ControlledMarkovProcess& mdp, const CommunicationCost& cost,
                            const Eigen::MatrixXd& er_sa, const EncoderPolicy& enc, int sl,
                            const std::vector<int>& plan, double& out_c, Eigen::VectorXd& out_m) {
    const int n = mdp.n_states;
    out_c = 0.0;
    out_m = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);
    mu(sl) = 1.0;
    double disc = 1.0;
    for (int l = 0; l < enc.t_max; ++l) {
        const int a = plan[static_cast<size_t>(l)];
        out_c += disc * mu.dot(er_sa.col(a));
        const Eigen::VectorXd nu = mdp.P(a).transpose() * mu;
        mu.setZero();
        for (int s = 0; s < n; ++s) {
            if (nu(s) <= 0.0) continue;
            if (enc.decide(s, l + 1, sl)) {
                out_m(s) += disc * mdp.gamma * nu(s);
                out_c -= disc * mdp.gamma * nu(s) * cost.beta;
            } else {
                mu(s) = nu(s);
            }
        }
        disc *= mdp.gamma;
        if (mu.sum() <= 0.0) break;
    }
}

}  // namespace detail

/// Exact node values of a fixed pair. Silence strictly ages a node and the
/// boundary row always transmits, so every value is affine in the n renewal
/// values W(s) = v(s, 0, s): W solves the n x n system assembled from the
/// silent-branch responses and the rest back-substitutes age-descending.
inline EncoderValueTable evaluate_push(const ControlledMarkovProcess& mdp,
                                       const CommunicationCost& cost, const DecoderPolicy& dec,
                                       const EncoderPolicy& enc, const HorizonConfig& cfg,
                                       bool force_iterative = false) {
    detail::require_push_pair(mdp, dec, enc, cfg);
    require_cost(cost);
    const int n = mdp.n_states;
    const int t_max = cfg.t_max;
    const double gamma = mdp.gamma;

    EncoderValueTable out;
    out.n_states = n;
    out.t_max = t_max;
    const int node_count = n * (t_max + 1) * n;

    if (!force_iterative) {
        const Eigen::MatrixXd er_sa = detail::expected_reward_table(mdp);
        Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n);
        Eigen::VectorXd rhs(n);
        for (int sl = 0; sl < n; ++sl) {
            double c;
            Eigen::VectorXd m;
            detail::branch_response(mdp, cost, er_sa, enc, sl,
                                    detail::branch_actions(dec, sl, t_max), c, m);
            rhs(sl) = c;
            system.row(sl) -= m.transpose();
        }
        const Eigen::VectorXd w = system.partialPivLu().solve(rhs);

        out.v = Eigen::VectorXd::Zero(node_count);
        for (int sl = 0; sl < n; ++sl) {
            Eigen::VectorXd next = w.array() - cost.beta;
            for (int s = 0; s < n; ++s) out.v(out.idx(s, t_max, sl)) = next(s);
            for (int delta = t_max - 1; delta >= 0; --delta) {
                const int a = dec.act(delta, sl);
                Eigen::VectorXd cur = er_sa.col(a) + gamma * (mdp.P(a) * next);
                if (delta >= 1)
                    for (int s = 0; s < n; ++s)
                        if (enc.decide(s, delta, sl)) cur(s) = w(s) - cost.beta;
                for (int s = 0; s < n; ++s) out.v(out.idx(s, delta, sl)) = cur(s);
                next = std::move(cur);
            }
        }
        return out;
    }

    out.v = Eigen::VectorXd::Zero(node_count);
    const double target = cfg.epsilon * (1.0 - gamma) / (2.0 * gamma);
    for (int sweep = 0; sweep < kPullSweepCap; ++sweep) {
        double residual = 0.0;
        for (int delta = 0; delta <= t_max; ++delta)
            for (int s = 0; s < n; ++s)
                for (int sl = 0; sl < n; ++sl) {
                    const int id = out.idx(s, delta, sl);
                    double next;
                    if (delta >= 1 && enc.decide(s, delta, sl)) {
                        next = out.v(out.idx(s, 0, s)) - cost.beta;
                    } else {
                        const int a = dec.act(delta, sl);
                        next = mdp.expected_reward(s, a);
                        for (int t = 0; t < n; ++t) {
                            const double p = mdp.P(a)(s, t);
                            if (p > 0.0) next += gamma * p * out.v(out.idx(t, delta + 1, sl));
                        }
                    }
                    residual = std::max(residual, std::abs(next - out.v(id)));
                    out.v(id) = next;
                }
        if (residual < target) return out;
    }
    throw std::runtime_error("push evaluation did not converge within the sweep cap");
}

/// Optimal decoder against a fixed encoder. Estimation processes take the
/// myopic argmax of the silence-conditioned belief; otherwise the renewal
/// values are solved exactly and every branch's silent action sequence is
/// searched whole, for the same aliasing reason as the pull solver.
inline DecoderPolicy decoder_best_response(const ControlledMarkovProcess& mdp,
                                           const CommunicationCost& cost, const EncoderPolicy& enc,
                                           const HorizonConfig& cfg, int max_iterations = 200) {
    require_valid(mdp);
    require_cost(cost);
    require_horizon(cfg);
    require_encoder(enc);
    if (enc.n_states != mdp.n_states || enc.t_max != cfg.t_max)
        throw std::invalid_argument("encoder table does not match the model/horizon");
    const int n = mdp.n_states;
    const int t_max = cfg.t_max;

    if (mdp.is_estimation()) {
        DecoderPolicy dec(n, t_max, 0);
        const std::vector<int> any(static_cast<size_t>(t_max), 0);
        for (int sl = 0; sl < n; ++sl) {
            const BeliefLadder post = belief_ladder(mdp, sl, t_max, any, &enc);
            const BeliefLadder naive = belief_ladder(mdp, sl, t_max, any, nullptr);
            for (int delta = 0; delta <= t_max; ++delta) {
                const auto row = delta <= post.reachable_to ? post.beliefs.row(delta)
                                                            : naive.beliefs.row(delta);
                int best = 0;
                double best_p = -1.0;
                for (int s = 0; s < n; ++s)
                    if (row(s) > best_p + 1e-12) {
                        best_p = row(s);
                        best = s;
                    }
                dec.set(delta, sl, best);
            }
        }
        return dec;
    }

    detail::require_branch_plan_budget(mdp.n_actions, t_max, t_max);
    const Eigen::MatrixXd er_sa = detail::expected_reward_table(mdp);

    DecoderPolicy dec(n, t_max, 0);
    for (int it = 0; it < max_iterations; ++it) {
        Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n);
        Eigen::VectorXd rhs(n);
        for (int sl = 0; sl < n; ++sl) {
            double c;
            Eigen::VectorXd m;
            detail::branch_response(mdp, cost, er_sa, enc, sl,
                                    detail::branch_actions(dec, sl, t_max), c, m);
            rhs(sl) = c;
            system.row(sl) -= m.transpose();
        }
        const Eigen::VectorXd w = system.partialPivLu().solve(rhs);

        DecoderPolicy next(n, t_max, 0);
        for (int sl = 0; sl < n; ++sl) {
            std::vector<int> best_seq(static_cast<size_t>(t_max), 0);
            double best_val = -std::numeric_limits<double>::infinity();
            std::vector<int> seq(static_cast<size_t>(t_max), 0);
            while (true) {
                double c;
                Eigen::VectorXd m;
                detail::branch_response(mdp, cost, er_sa, enc, sl, seq, c, m);
                const double val = c + m.dot(w);
                if (val > best_val + 1e-12) {
                    best_val = val;
                    best_seq = seq;
                }
                int pos = t_max - 1;
                while (pos >= 0 && ++seq[static_cast<size_t>(pos)] == mdp.n_actions) {
                    seq[static_cast<size_t>(pos)] = 0;
                    --pos;
                }
                if (pos < 0) break;
            }
            // Ages the encoder leaves no silent path to cannot change the
            // value; their entries repeat the last informed choice so the
            // decoder stays committed to its plan without fresh evidence.
            Eigen::VectorXd mu = Eigen::VectorXd::Zero(n);
            mu(sl) = 1.0;
            for (int age = 0; age < t_max; ++age) {
                const size_t at = static_cast<size_t>(age);
                if (mu.sum() <= 0.0 && age > 0) best_seq[at] = best_seq[at - 1];
                next.set(age, sl, best_seq[at]);
                const Eigen::VectorXd nu = mdp.P(best_seq[at]).transpose() * mu;
                mu.setZero();
                for (int s = 0; s < n; ++s)
                    if (nu(s) > 0.0 && !enc.decide(s, age + 1, sl)) mu(s) = nu(s);
            }
            next.set(t_max, sl, next.act(t_max - 1, sl));
        }
        if (next.table == dec.table) return dec;
        dec = std::move(next);
    }
    throw std::runtime_error("decoder best response hit the iteration cap");
}

/// Optimal encoder against a fixed decoder: policy iteration on the fully
/// observed node process (s, delta, s_last). Exact ties stay silent to save
/// the charge, except at zero cost where information is free and ties
/// transmit.
inline EncoderPolicy encoder_best_response(const ControlledMarkovProcess& mdp,
                                           const CommunicationCost& cost, const DecoderPolicy& dec,
                                           const HorizonConfig& cfg, int max_iterations = 200) {
    require_valid(mdp);
    require_cost(cost);
    require_horizon(cfg);
    require_decoder(dec, mdp.n_actions);
    if (dec.n_states != mdp.n_states || dec.t_max != cfg.t_max)
        throw std::invalid_argument("decoder table does not match the model/horizon");
    const int n = mdp.n_states;
    const int t_max = cfg.t_max;
    const double beta = cost.beta;

    EncoderPolicy enc = encoder_silent(n, t_max);
    for (int it = 0; it < max_iterations; ++it) {
        const EncoderValueTable v = evaluate_push(mdp, cost, dec, enc, cfg);
        EncoderPolicy next = encoder_silent(n, t_max);
        for (int delta = 1; delta < t_max; ++delta)
            for (int sl = 0; sl < n; ++sl) {
                const int a = dec.act(delta, sl);
                for (int s = 0; s < n; ++s) {
                    const double transmit = v.at(s, 0, s) - beta;
                    double silent = mdp.expected_reward(s, a);
                    for (int t = 0; t < n; ++t) {
                        const double p = mdp.P(a)(s, t);
                        if (p > 0.0) silent += mdp.gamma * p * v.at(t, delta + 1, sl);
                    }
                    const bool send = beta == 0.0 ? transmit >= silent - 1e-12
                                                  : transmit > silent + 1e-12;
                    if (send) next.set(s, delta, sl, 1);
                }
            }
        if (next.table == enc.table) return enc;
        enc = std::move(next);
    }
    throw std::runtime_error("encoder best response hit the iteration cap");
}

struct ApiResult {
    DecoderPolicy decoder;
    EncoderPolicy encoder;
    EncoderValueTable values;
    double value = 0.0;
    std::vector<double> value_history;  // one entry per round
    EquilibriumReport report;
};

/// Alternating best responses from the given starting encoder. The shared
/// objective is a potential for the two-player game, so the round values
/// never decrease; stops at an exact mutual fixpoint or when a round gains
/// less than cfg.epsilon. A cap breach reports converged = false instead of
/// throwing, so callers can inspect the partial equilibrium.
inline ApiResult solve_api(const ControlledMarkovProcess& mdp, const CommunicationCost& cost,
                           const EncoderPolicy& init, const HorizonConfig& cfg,
                           int max_rounds = 200) {
    require_valid(mdp);
    require_cost(cost);
    require_horizon(cfg);
    require_encoder(init);
    if (init.n_states != mdp.n_states || init.t_max != cfg.t_max)
        throw std::invalid_argument("encoder table does not match the model/horizon");

    ApiResult out;
    out.encoder = init;
    bool have_prev = false;
    double prev_value = 0.0;
    for (int round = 1; round <= max_rounds; ++round) {
        DecoderPolicy dec = decoder_best_response(mdp, cost, out.encoder, cfg);
        EncoderPolicy enc = encoder_best_response(mdp, cost, dec, cfg);

        out.values = evaluate_push(mdp, cost, dec, enc, cfg);
        double value = 0.0;
        for (int s = 0; s < mdp.n_states; ++s)
            value += mdp.initial_dist(s) * out.values.at(s, 0, s);
        out.value_history.push_back(value);
        out.report.rounds = round;

        const bool fixpoint =
            have_prev && dec.table == out.decoder.table && enc.table == out.encoder.table;
        const double gain = value - prev_value;
        out.decoder = std::move(dec);
        out.encoder = std::move(enc);
        out.value = value;
        if (fixpoint || (have_prev && std::abs(gain) < cfg.epsilon)) {
            out.report.converged = true;
            out.report.final_gap = fixpoint ? 0.0 : std::abs(gain);
            break;
        }
        if (have_prev) out.report.final_gap = std::abs(gain);
        have_prev = true;
        prev_value = value;
    }
    return out;
}

}  // namespace remocom
