#pragma once

#include "remocom/evaluate.hpp"
#include "remocom/model.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace remocom {

/// Howard policy iteration on the fully observed process. Oracle for the
/// zero-cost limit and for sandwich checks; ties go to the lowest action.
struct PolicyIterationResult {
    std::vector<int> policy;
    Eigen::VectorXd values;
    int iterations = 0;
};

inline PolicyIterationResult solve_policy_iteration(const ControlledMarkovProcess& mdp,
                                                    int max_iterations = 1000) {
    require_valid(mdp);
    const int n = mdp.n_states;
    PolicyIterationResult out;
    out.policy.assign(static_cast<size_t>(n), 0);
    Eigen::VectorXd er(n);
    for (int it = 0; it < max_iterations; ++it) {
        Eigen::MatrixXd P(n, n);
        for (int s = 0; s < n; ++s) {
            const int a = out.policy[static_cast<size_t>(s)];
            P.row(s) = mdp.P(a).row(s);
            er(s) = mdp.expected_reward(s, a);
        }
        Eigen::VectorXd v = (Eigen::MatrixXd::Identity(n, n) - mdp.gamma * P).partialPivLu().solve(er);
        bool changed = false;
        for (int s = 0; s < n; ++s) {
            int best = 0;
            double best_q = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < mdp.n_actions; ++a) {
                const double q = mdp.expected_reward(s, a) + mdp.gamma * mdp.P(a).row(s).dot(v);
                if (q > best_q + 1e-12) {
                    best_q = q;
                    best = a;
                }
            }
            if (best != out.policy[static_cast<size_t>(s)]) {
                out.policy[static_cast<size_t>(s)] = best;
                changed = true;
            }
        }
        out.values = v;
        out.iterations = it + 1;
        if (!changed) return out;
    }
    throw std::runtime_error("policy iteration did not converge");
}

enum class BruteForceMode { joint, pull_restricted, perfect_estimation };

struct BruteForceConfig {
    int t_max = 1;
    BruteForceMode mode = BruteForceMode::joint;
    long long max_plans_per_branch = 1000000;
    double tol = 1e-12;
    int max_sweeps = 100000;
};

struct BruteForceResult {
    JointPolicy policy;
    double value = 0.0;               // xi-weighted objective at the fixed point
    Eigen::VectorXd renewal_values;   // objective from each renewal state
};

namespace detail {

/// One silent-stretch plan: decoder actions per post-age and transmit masks
/// per (pre-age, state). The forced boundary at t_max is implicit.
struct BranchPlan {
    std::vector<int> act;            // post-ages 0..t_max-1
    std::vector<std::uint8_t> mask;  // [(delta-1)*n + s] for pre-ages 1..t_max-1
};

inline double plan_value(const ControlledMarkovProcess& mdp, double beta, int t_max,
                         const BranchPlan& plan, int sl, const Eigen::VectorXd& g,
                         bool reward_active) {
    const int n = mdp.n_states;
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
    w(sl) = 1.0;
    double val = 0.0, disc = 1.0;
    for (int delta = 0; delta < t_max; ++delta) {
        const int a = plan.act[static_cast<size_t>(delta)];
        if (reward_active)
            for (int s = 0; s < n; ++s)
                if (w(s) > 0.0) val += disc * w(s) * mdp.expected_reward(s, a);
        Eigen::VectorXd w2 = mdp.P(a).transpose() * w;
        disc *= mdp.gamma;
        for (int s = 0; s < n; ++s) {
            if (w2(s) <= 0.0) continue;
            const bool tx = (delta + 1 == t_max) ||
                            plan.mask[static_cast<size_t>(delta) * n + s] != 0;
            if (tx) {
                val += disc * w2(s) * (g(s) - beta);
                w2(s) = 0.0;
            }
        }
        w = std::move(w2);
        if (w.sum() <= 0.0) break;
    }
    return val;
}

inline std::vector<BranchPlan> enumerate_plans(const ControlledMarkovProcess& mdp,
                                               const BruteForceConfig& cfg, int sl) {
    const int n = mdp.n_states;
    const int t_max = cfg.t_max;
    const int mask_ages = t_max - 1;
    std::vector<BranchPlan> plans;

    auto dec_count = [&] {
        long long c = 1;
        for (int i = 0; i < t_max; ++i) c *= mdp.n_actions;
        return c;
    };
    auto decode_actions = [&](long long idx) {
        std::vector<int> act(static_cast<size_t>(t_max));
        for (int i = 0; i < t_max; ++i) {
            act[static_cast<size_t>(i)] = static_cast<int>(idx % mdp.n_actions);
            idx /= mdp.n_actions;
        }
        return act;
    };

    switch (cfg.mode) {
        case BruteForceMode::joint: {
            const int bits = mask_ages * n;
            if (bits > 40) throw std::invalid_argument("brute force: size bound exceeded");
            const long long n_masks = 1LL << bits;
            const long long total = dec_count() * n_masks;
            if (total > cfg.max_plans_per_branch)
                throw std::invalid_argument("brute force: size bound exceeded");
            plans.reserve(static_cast<size_t>(total));
            for (long long d = 0; d < dec_count(); ++d) {
                auto act = decode_actions(d);
                for (long long m = 0; m < n_masks; ++m) {
                    BranchPlan p;
                    p.act = act;
                    p.mask.resize(static_cast<size_t>(bits));
                    for (int b = 0; b < bits; ++b)
                        p.mask[static_cast<size_t>(b)] = static_cast<std::uint8_t>((m >> b) & 1);
                    plans.push_back(std::move(p));
                }
            }
            break;
        }
        case BruteForceMode::pull_restricted: {
            const long long total = dec_count() * t_max;
            if (total > cfg.max_plans_per_branch)
                throw std::invalid_argument("brute force: size bound exceeded");
            for (int tau = 1; tau <= t_max; ++tau)
                for (long long d = 0; d < dec_count(); ++d) {
                    BranchPlan p;
                    p.act = decode_actions(d);
                    p.mask.assign(static_cast<size_t>(mask_ages) * n, 0);
                    for (int delta = tau; delta <= mask_ages; ++delta)
                        for (int s = 0; s < n; ++s)
                            p.mask[static_cast<size_t>(delta - 1) * n + s] = 1;
                    plans.push_back(std::move(p));
                }
            break;
        }
        case BruteForceMode::perfect_estimation: {
            if (!mdp.is_estimation())
                throw std::invalid_argument("brute force: perfect-estimation mode needs an estimation task");
            // Silent support must stay a singleton: a plan is a sequence of
            // exempt states x_1..x_k (k < t_max) followed by transmit-all.
            std::vector<std::vector<int>> seqs;
            seqs.push_back({});
            std::vector<std::vector<int>> frontier = {{}};
            for (int len = 1; len <= mask_ages; ++len) {
                std::vector<std::vector<int>> next;
                for (const auto& seq : frontier)
                    for (int x = 0; x < n; ++x) {
                        auto ext = seq;
                        ext.push_back(x);
                        seqs.push_back(ext);
                        next.push_back(std::move(ext));
                    }
                frontier = std::move(next);
                if (static_cast<long long>(seqs.size()) > cfg.max_plans_per_branch)
                    throw std::invalid_argument("brute force: size bound exceeded");
            }
            for (const auto& seq : seqs) {
                BranchPlan p;
                p.act.assign(static_cast<size_t>(t_max), sl);
                p.mask.assign(static_cast<size_t>(mask_ages) * n, 1);
                for (size_t i = 0; i < seq.size(); ++i) {
                    p.act[i + 1] = seq[i];  // correct guess after i+1 silent steps
                    p.mask[i * n + static_cast<size_t>(seq[i])] = 0;
                }
                plans.push_back(std::move(p));
            }
            break;
        }
    }
    return plans;
}

}  // namespace detail

/// Exhaustive optimum over all deterministic joint policies on the sufficient
/// statistic. Branches from different renewal states couple only through the
/// renewal values g, so per-branch exhaustion inside a fixed-point iteration
/// covers the full joint table space exactly.
///
/// mode pull_restricted keeps only age-threshold (schedule) encoders;
/// mode perfect_estimation keeps rate-1 estimation policies and minimizes the
/// discounted channel use (the returned value is -beta-free cost, rewards off).
inline BruteForceResult brute_force_joint(const ControlledMarkovProcess& mdp,
                                          const CommunicationCost& cost,
                                          const BruteForceConfig& cfg) {
    require_valid(mdp);
    require_cost(cost);
    if (cfg.t_max < 1) throw std::invalid_argument("brute force: t_max must be >= 1");
    const int n = mdp.n_states;
    const bool reward_active = cfg.mode != BruteForceMode::perfect_estimation;
    const double beta = cfg.mode == BruteForceMode::perfect_estimation ? 1.0 : cost.beta;

    std::vector<std::vector<detail::BranchPlan>> plans;
    plans.reserve(static_cast<size_t>(n));
    for (int sl = 0; sl < n; ++sl) plans.push_back(detail::enumerate_plans(mdp, cfg, sl));

    Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
    std::vector<size_t> best_plan(static_cast<size_t>(n), 0);
    for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
        Eigen::VectorXd g2(n);
        for (int sl = 0; sl < n; ++sl) {
            double best = -std::numeric_limits<double>::infinity();
            size_t best_i = 0;
            const auto& ps = plans[static_cast<size_t>(sl)];
            for (size_t i = 0; i < ps.size(); ++i) {
                const double v = detail::plan_value(mdp, beta, cfg.t_max, ps[i], sl, g, reward_active);
                if (v > best + 1e-15) {
                    best = v;
                    best_i = i;
                }
            }
            g2(sl) = best;
            best_plan[static_cast<size_t>(sl)] = best_i;
        }
        const double change = (g2 - g).cwiseAbs().maxCoeff();
        g = g2;
        if (change < cfg.tol * std::max(1.0, g.cwiseAbs().maxCoeff())) break;
        if (sweep + 1 == cfg.max_sweeps)
            throw std::runtime_error("brute force fixed point did not converge");
    }

    BruteForceResult out;
    out.renewal_values = g;
    out.value = mdp.initial_dist.dot(g);
    out.policy.architecture =
        cfg.mode == BruteForceMode::pull_restricted ? Architecture::pull : Architecture::push;
    out.policy.encoder = EncoderPolicy(n, cfg.t_max, 1);
    out.policy.decoder = DecoderPolicy(n, cfg.t_max, 0);
    for (int sl = 0; sl < n; ++sl) {
        const auto& p = plans[static_cast<size_t>(sl)][best_plan[static_cast<size_t>(sl)]];
        for (int delta = 0; delta < cfg.t_max; ++delta)
            out.policy.decoder.set(delta, sl, p.act[static_cast<size_t>(delta)]);
        for (int delta = 1; delta <= cfg.t_max - 1; ++delta)
            for (int s = 0; s < n; ++s)
                out.policy.encoder.set(s, delta, sl,
                                       p.mask[static_cast<size_t>(delta - 1) * n + s]);
    }
    return out;
}

}  // namespace remocom
