#pragma once

#include "remocom/belief.hpp"
#include "remocom/evaluate.hpp"
#include "remocom/model.hpp"

#include <limits>
#include <stdexcept>
#include <vector>

namespace remocom {

inline constexpr int kPullSweepCap = 1000000;

/// Pull delay per anchor state: the estimator requests a fresh sample m steps
/// after the last one, m in [1, t_max].
struct PullSchedule {
    std::vector<int> tau;
};

inline void require_schedule(const PullSchedule& sched, int n_states, int t_max) {
    if (static_cast<int>(sched.tau.size()) != n_states)
        throw std::invalid_argument("pull schedule must cover every state");
    for (int m : sched.tau)
        if (m < 1 || m > t_max)
            throw std::invalid_argument("pull delay must lie in [1, t_max]");
}

inline PullSchedule constant_schedule(int n_states, int m) {
    PullSchedule out;
    out.tau.assign(static_cast<size_t>(n_states), m);
    return out;
}

/// Transmission table induced by a schedule: transmit exactly when the age
/// reaches tau(s_last), independent of the source state.
inline EncoderPolicy schedule_encoder(int n_states, int t_max, const PullSchedule& sched) {
    require_schedule(sched, n_states, t_max);
    EncoderPolicy enc(n_states, t_max, 0);
    for (int sl = 0; sl < n_states; ++sl)
        for (int delta = sched.tau[static_cast<size_t>(sl)]; delta <= t_max; ++delta)
            for (int s = 0; s < n_states; ++s) enc.set(s, delta, sl, 1);
    return enc;
}

inline JointPolicy pull_joint(const DecoderPolicy& dec, const PullSchedule& sched) {
    JointPolicy jp;
    jp.architecture = Architecture::pull;
    jp.decoder = dec;
    jp.encoder = schedule_encoder(dec.n_states, dec.t_max, sched);
    return jp;
}

/// v(delta, s_last) for delta in [0, t_max]; rows past the scheduled pull are
/// filled by the same recursion but are unreachable in closed loop.
struct PullValueTable {
    Eigen::MatrixXd v;
};

namespace detail {

inline Eigen::MatrixXd expected_reward_table(const ControlledMarkovProcess& mdp) {
    Eigen::MatrixXd er(mdp.n_states, mdp.n_actions);
    for (int s = 0; s < mdp.n_states; ++s)
        for (int a = 0; a < mdp.n_actions; ++a) er(s, a) = mdp.expected_reward(s, a);
    return er;
}

inline std::vector<int> branch_actions(const DecoderPolicy& dec, int sl, int t_max) {
    std::vector<int> acts(static_cast<size_t>(t_max));
    for (int delta = 0; delta < t_max; ++delta)
        acts[static_cast<size_t>(delta)] = dec.act(delta, sl);
    return acts;
}

inline PullValueTable evaluate_pull_impl(const ControlledMarkovProcess& mdp,
                                         const CommunicationCost& cost, const DecoderPolicy& dec,
                                         const PullSchedule& sched, const HorizonConfig& cfg,
                                         bool force_iterative, BeliefCache* cache) {
    require_valid(mdp);
    require_cost(cost);
    require_horizon(cfg);
    require_decoder(dec, mdp.n_actions);
    if (dec.n_states != mdp.n_states || dec.t_max != cfg.t_max)
        throw std::invalid_argument("decoder table does not match the model/horizon");
    require_schedule(sched, mdp.n_states, cfg.t_max);

    const int n = mdp.n_states;
    const int t_max = cfg.t_max;
    const int node_count = (t_max + 1) * n;
    const double gamma = mdp.gamma;
    const double beta = cost.beta;
    const Eigen::MatrixXd er_sa = expected_reward_table(mdp);

    BeliefCache local;
    if (cache == nullptr) cache = &local;

    // Per node: expected reward under the naive belief, and for pull exits the
    // arrival distribution over the next anchor.
    Eigen::MatrixXd er = Eigen::MatrixXd::Zero(t_max + 1, n);
    std::vector<Eigen::MatrixXd> arrival(static_cast<size_t>(n));
    for (int sl = 0; sl < n; ++sl) {
        const BeliefLadder& lad = cache->get(mdp, sl, t_max, branch_actions(dec, sl, t_max), nullptr);
        Eigen::MatrixXd q(t_max + 1, n);
        for (int delta = 0; delta <= t_max; ++delta) {
            const Eigen::VectorXd w = lad.beliefs.row(delta).transpose();
            const int a = dec.act(delta, sl);
            er(delta, sl) = w.dot(er_sa.col(a));
            q.row(delta) = (mdp.P(a).transpose() * w).transpose();
        }
        arrival[static_cast<size_t>(sl)] = std::move(q);
    }

    auto node = [n](int delta, int sl) { return delta * n + sl; };
    // tau <= t_max, so every row at or past the boundary satisfies this too
    auto pulls = [&sched](int delta, int sl) {
        return delta + 1 >= sched.tau[static_cast<size_t>(sl)];
    };

    PullValueTable out;
    out.v.resize(t_max + 1, n);

    if (!force_iterative && node_count <= kDenseSolveCap) {
        Eigen::MatrixXd A = Eigen::MatrixXd::Identity(node_count, node_count);
        Eigen::VectorXd b(node_count);
        for (int delta = 0; delta <= t_max; ++delta)
            for (int sl = 0; sl < n; ++sl) {
                const int id = node(delta, sl);
                b(id) = er(delta, sl);
                if (pulls(delta, sl)) {
                    b(id) -= gamma * beta;
                    for (int s2 = 0; s2 < n; ++s2)
                        A(id, node(0, s2)) -= gamma * arrival[static_cast<size_t>(sl)](delta, s2);
                } else {
                    A(id, node(delta + 1, sl)) -= gamma;
                }
            }
        const Eigen::VectorXd x = A.partialPivLu().solve(b);
        for (int delta = 0; delta <= t_max; ++delta)
            for (int sl = 0; sl < n; ++sl) out.v(delta, sl) = x(node(delta, sl));
        return out;
    }

    const double target = cfg.epsilon * (1.0 - gamma) / (2.0 * gamma);
    Eigen::MatrixXd v = Eigen::MatrixXd::Zero(t_max + 1, n);
    Eigen::MatrixXd v2 = v;
    for (int sweep = 0; sweep < kPullSweepCap; ++sweep) {
        for (int delta = t_max; delta >= 0; --delta)
            for (int sl = 0; sl < n; ++sl) {
                double cont;
                if (pulls(delta, sl))
                    cont = arrival[static_cast<size_t>(sl)].row(delta).dot(v.row(0)) - beta;
                else
                    cont = v(delta + 1, sl);
                v2(delta, sl) = er(delta, sl) + gamma * cont;
            }
        const double resid = (v2 - v).cwiseAbs().maxCoeff();
        v.swap(v2);
        if (resid < target) {
            out.v = v;
            return out;
        }
    }
    throw std::runtime_error("pull evaluation did not converge within the sweep cap");
}

}  // namespace detail

/// Exact fixed point of the pull Bellman recursion under (dec, sched): direct
/// linear solve at desk scale, damped sweeps above kDenseSolveCap nodes.
inline PullValueTable evaluate_pull(const ControlledMarkovProcess& mdp,
                                    const CommunicationCost& cost, const DecoderPolicy& dec,
                                    const PullSchedule& sched, const HorizonConfig& cfg,
                                    BeliefCache* cache = nullptr) {
    return detail::evaluate_pull_impl(mdp, cost, dec, sched, cfg, false, cache);
}

/// One-step greedy policy against v, sweeping delta upward so that each chosen
/// action feeds the belief used at the next age. Ties take the lowest action.
inline DecoderPolicy improve_control(const ControlledMarkovProcess& mdp,
                                     const CommunicationCost& cost, const PullValueTable& v,
                                     const PullSchedule& sched, const HorizonConfig& cfg) {
    require_valid(mdp);
    require_cost(cost);
    require_horizon(cfg);
    require_schedule(sched, mdp.n_states, cfg.t_max);
    if (v.v.rows() != cfg.t_max + 1 || v.v.cols() != mdp.n_states)
        throw std::invalid_argument("value table does not match the model/horizon");
    const int n = mdp.n_states;
    const int t_max = cfg.t_max;
    const Eigen::MatrixXd er_sa = detail::expected_reward_table(mdp);
    const Eigen::VectorXd v0 = v.v.row(0).transpose();

    DecoderPolicy out(n, t_max, 0);
    for (int sl = 0; sl < n; ++sl) {
        Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
        w(sl) = 1.0;
        for (int delta = 0; delta <= t_max; ++delta) {
            const bool pull = delta + 1 >= sched.tau[static_cast<size_t>(sl)];
            int best = 0;
            double best_q = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < mdp.n_actions; ++a) {
                double q = w.dot(er_sa.col(a));
                if (pull)
                    q += mdp.gamma * ((mdp.P(a).transpose() * w).dot(v0) - cost.beta);
                else
                    q += mdp.gamma * v.v(delta + 1, sl);
                if (q > best_q + 1e-12) {
                    best_q = q;
                    best = a;
                }
            }
            out.set(delta, sl, best);
            if (delta < t_max) w = mdp.P(best).transpose() * w;
        }
    }
    return out;
}

/// Branch objective for pulling m steps after the renewal at s_last: rewards
/// along the silent stretch under dec, then the discounted continuation
/// v(0, arrival) minus the sampling charge at the pull instant.
inline double comm_objective(const ControlledMarkovProcess& mdp, const CommunicationCost& cost,
                             const DecoderPolicy& dec, const PullValueTable& v, int s_last, int m,
                             BeliefCache* cache = nullptr) {
    const int t_max = dec.t_max;
    if (m < 1 || m > t_max) throw std::invalid_argument("pull delay must lie in [1, t_max]");
    BeliefCache local;
    if (cache == nullptr) cache = &local;
    const BeliefLadder& lad =
        cache->get(mdp, s_last, t_max, detail::branch_actions(dec, s_last, t_max), nullptr);
    const Eigen::MatrixXd er_sa = detail::expected_reward_table(mdp);
    const Eigen::VectorXd v0 = v.v.row(0).transpose();

    double run = 0.0, disc = 1.0;
    for (int l = 0; l < m; ++l) {
        run += disc * lad.beliefs.row(l).dot(er_sa.col(dec.act(l, s_last)));
        disc *= mdp.gamma;
    }
    return run + disc * (lad.beliefs.row(m).dot(v0) - cost.beta);
}

/// Per-anchor argmax of comm_objective over m in [1, t_max]; ties take the
/// smallest delay.
inline PullSchedule improve_comm(const ControlledMarkovProcess& mdp, const CommunicationCost& cost,
                                 const DecoderPolicy& dec, const PullValueTable& v,
                                 const HorizonConfig& cfg, BeliefCache* cache = nullptr) {
    require_valid(mdp);
    require_cost(cost);
    require_horizon(cfg);
    if (dec.t_max != cfg.t_max || dec.n_states != mdp.n_states)
        throw std::invalid_argument("decoder table does not match the model/horizon");
    if (v.v.rows() != cfg.t_max + 1 || v.v.cols() != mdp.n_states)
        throw std::invalid_argument("value table does not match the model/horizon");
    BeliefCache local;
    if (cache == nullptr) cache = &local;

    PullSchedule out;
    out.tau.assign(static_cast<size_t>(mdp.n_states), 1);
    for (int sl = 0; sl < mdp.n_states; ++sl) {
        int best_m = 1;
        double best = -std::numeric_limits<double>::infinity();
        for (int m = 1; m <= cfg.t_max; ++m) {
            const double val = comm_objective(mdp, cost, dec, v, sl, m, cache);
            if (val > best + 1e-12) {
                best = val;
                best_m = m;
            }
        }
        out.tau[static_cast<size_t>(sl)] = best_m;
    }
    return out;
}

namespace detail {

inline constexpr long long kBranchPlanCap = 1LL << 20;

inline void require_branch_plan_budget(int n_actions, int m_min, int m_max) {
    long long total = 0, per_m = 1;
    for (int m = 1; m <= m_max; ++m) {
        per_m *= n_actions;
        if (m < m_min) continue;
        total += per_m;
        if (total > kBranchPlanCap)
            throw std::invalid_argument("pull solver: branch improvement enumeration exceeds the size cap");
    }
}

struct SilentPlan {
    int m = 1;
    std::vector<int> actions;  // length m
};

/// Best silent stretch for one anchor against the renewal row v0: the delay m
/// and the full action sequence are searched jointly, so one update is a plain
/// policy-improvement step on the renewal-to-renewal problem. Ties take the
/// smallest delay, then the lexicographically smallest sequence.
inline SilentPlan best_branch_plan(const ControlledMarkovProcess& mdp,
                                   const CommunicationCost& cost, const Eigen::MatrixXd& er_sa,
                                   const Eigen::VectorXd& v0, int sl, int m_min, int m_max) {
    SilentPlan best;
    best.actions.assign(1, 0);
    best.m = m_min;
    double best_val = -std::numeric_limits<double>::infinity();
    std::vector<int> seq;
    for (int m = m_min; m <= m_max; ++m) {
        seq.assign(static_cast<size_t>(m), 0);
        while (true) {
            Eigen::VectorXd w = Eigen::VectorXd::Zero(mdp.n_states);
            w(sl) = 1.0;
            double score = 0.0, disc = 1.0;
            for (int l = 0; l < m; ++l) {
                const int a = seq[static_cast<size_t>(l)];
                score += disc * w.dot(er_sa.col(a));
                w = mdp.P(a).transpose() * w;
                disc *= mdp.gamma;
            }
            score += disc * (w.dot(v0) - cost.beta);
            if (score > best_val + 1e-12) {
                best_val = score;
                best.m = m;
                best.actions = seq;
            }
            int pos = m - 1;
            while (pos >= 0 && ++seq[static_cast<size_t>(pos)] == mdp.n_actions) {
                seq[static_cast<size_t>(pos)] = 0;
                --pos;
            }
            if (pos < 0) break;
        }
    }
    return best;
}

/// Writes the plan into rows [0, m) and fills the unreachable rows at or past
/// the pull with the one-step greedy choice against v0, so every row stays a
/// deterministic function of the renewal values.
inline void apply_branch_plan(const ControlledMarkovProcess& mdp, const CommunicationCost& cost,
                              const Eigen::MatrixXd& er_sa, const Eigen::VectorXd& v0, int sl,
                              const SilentPlan& plan, DecoderPolicy& dec) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(mdp.n_states);
    w(sl) = 1.0;
    for (int l = 0; l < plan.m; ++l) {
        const int a = plan.actions[static_cast<size_t>(l)];
        dec.set(l, sl, a);
        w = mdp.P(a).transpose() * w;
    }
    for (int delta = plan.m; delta <= dec.t_max; ++delta) {
        int best = 0;
        double best_q = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < mdp.n_actions; ++a) {
            const double q = w.dot(er_sa.col(a)) +
                             mdp.gamma * ((mdp.P(a).transpose() * w).dot(v0) - cost.beta);
            if (q > best_q + 1e-12) {
                best_q = q;
                best = a;
            }
        }
        dec.set(delta, sl, best);
        if (delta < dec.t_max) w = mdp.P(best).transpose() * w;
    }
}

}  // namespace detail

struct MpiResult {
    DecoderPolicy decoder;
    PullSchedule schedule;
    PullValueTable values;
    double value = 0.0;                 // initial-distribution weighted v(0, .)
    int iterations = 0;
    std::vector<double> value_history;  // one entry per evaluation
};

/// Alternates exact evaluation with a joint improvement of the delay and the
/// silent action sequence per anchor, until neither table changes. The cap
/// breach throws; it is never silent.
///
/// Rows with age > 0 are aliased: their value depends on the whole action
/// prefix through the belief, so improving actions row by row against stale
/// continuation rows can cycle or stall below the optimum. Searching each
/// branch's full plan against the exactly evaluated renewal row sidesteps
/// that, keeping the renewal values nondecreasing and the fixpoint optimal
/// over schedule-driven policies.
inline MpiResult solve_mpi(const ControlledMarkovProcess& mdp, const CommunicationCost& cost,
                           const HorizonConfig& cfg, int max_iterations = 200) {
    require_valid(mdp);
    require_cost(cost);
    require_horizon(cfg);
    detail::require_branch_plan_budget(mdp.n_actions, 1, cfg.t_max);
    const Eigen::MatrixXd er_sa = detail::expected_reward_table(mdp);
    BeliefCache cache;

    MpiResult out;
    out.decoder = DecoderPolicy(mdp.n_states, cfg.t_max, 0);
    out.schedule = constant_schedule(mdp.n_states, cfg.t_max);
    for (int it = 0; it < max_iterations; ++it) {
        out.values = evaluate_pull(mdp, cost, out.decoder, out.schedule, cfg, &cache);
        out.value = out.values.v.row(0).dot(mdp.initial_dist);
        out.value_history.push_back(out.value);
        out.iterations = it + 1;

        const Eigen::VectorXd v0 = out.values.v.row(0).transpose();
        DecoderPolicy dec(mdp.n_states, cfg.t_max, 0);
        PullSchedule sched;
        sched.tau.assign(static_cast<size_t>(mdp.n_states), 1);
        for (int sl = 0; sl < mdp.n_states; ++sl) {
            const auto plan = detail::best_branch_plan(mdp, cost, er_sa, v0, sl, 1, cfg.t_max);
            sched.tau[static_cast<size_t>(sl)] = plan.m;
            detail::apply_branch_plan(mdp, cost, er_sa, v0, sl, plan, dec);
        }
        if (dec.table == out.decoder.table && sched.tau == out.schedule.tau) return out;
        out.decoder = std::move(dec);
        out.schedule = std::move(sched);
    }
    throw std::runtime_error("pull solver hit the iteration cap before the policies settled");
}

struct PeriodicResult {
    int period = 1;
    DecoderPolicy decoder;
    PullValueTable values;
    double value = 0.0;
};

/// Best constant-delay schedule: for each period the control policy is solved
/// to a fixed point by the same whole-branch improvement as the adaptive
/// solver (delay held fixed), then the highest-value period wins (ties to
/// the lowest).
inline PeriodicResult solve_periodic(const ControlledMarkovProcess& mdp,
                                     const CommunicationCost& cost, const HorizonConfig& cfg,
                                     int max_iterations = 200) {
    require_valid(mdp);
    require_cost(cost);
    require_horizon(cfg);
    detail::require_branch_plan_budget(mdp.n_actions, cfg.t_max, cfg.t_max);
    const Eigen::MatrixXd er_sa = detail::expected_reward_table(mdp);
    BeliefCache cache;

    PeriodicResult out;
    double best = -std::numeric_limits<double>::infinity();
    for (int m = 1; m <= cfg.t_max; ++m) {
        const PullSchedule sched = constant_schedule(mdp.n_states, m);
        DecoderPolicy dec(mdp.n_states, cfg.t_max, 0);
        PullValueTable v;
        bool settled = false;
        for (int it = 0; it < max_iterations; ++it) {
            v = evaluate_pull(mdp, cost, dec, sched, cfg, &cache);
            const Eigen::VectorXd v0 = v.v.row(0).transpose();
            DecoderPolicy next(mdp.n_states, cfg.t_max, 0);
            for (int sl = 0; sl < mdp.n_states; ++sl) {
                const auto plan = detail::best_branch_plan(mdp, cost, er_sa, v0, sl, m, m);
                detail::apply_branch_plan(mdp, cost, er_sa, v0, sl, plan, next);
            }
            if (next.table == dec.table) {
                settled = true;
                break;
            }
            dec = std::move(next);
        }
        if (!settled)
            throw std::runtime_error("periodic control loop hit the iteration cap");
        const double val = v.v.row(0).dot(mdp.initial_dist);
        if (val > best + 1e-12) {
            best = val;
            out.period = m;
            out.decoder = dec;
            out.values = v;
            out.value = val;
        }
    }
    return out;
}

}  // namespace remocom
