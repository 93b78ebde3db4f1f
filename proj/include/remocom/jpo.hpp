#pragma once

#include "remocom/belief.hpp"
#include "remocom/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace remocom {

/// Single-agent reformulation of the push problem: the joint action pairs a
/// control action with a per-state transmit mask, the next state is observed
/// exactly when its mask bit is set, and the mask charge is prepaid one step
/// ahead at the arrival state.
struct AugmentedPOMDP {
    int n_states = 0;
    int n_base_actions = 0;
    int n_actions = 0;  // n_base_actions << n_states
    double gamma = 0.0;
    double beta = 0.0;
    std::vector<Eigen::MatrixXd> P;  // per base action, shared across masks
    Eigen::MatrixXd r_hat;           // n_states x n_actions

    int base_action(int ahat) const { return ahat >> n_states; }
    int mask(int ahat) const { return ahat & ((1 << n_states) - 1); }
    bool observes(int ahat, int s_next) const { return (ahat >> s_next) & 1; }
    int full_mask_action(int a) const { return (a << n_states) | ((1 << n_states) - 1); }
    int chi() const { return n_states; }
    int observation(int s_next, int ahat) const {
        return observes(ahat, s_next) ? s_next : chi();
    }
};

inline constexpr int kJpoStateCap = 12;

inline AugmentedPOMDP build_augmented(const ControlledMarkovProcess& mdp,
                                      const CommunicationCost& cost,
                                      int state_cap = kJpoStateCap) {
    require_valid(mdp);
    require_cost(cost);
    if (mdp.n_states > state_cap)
        throw std::invalid_argument("augmented action space exceeds the state cap");
    AugmentedPOMDP out;
    out.n_states = mdp.n_states;
    out.n_base_actions = mdp.n_actions;
    out.n_actions = mdp.n_actions << mdp.n_states;
    out.gamma = mdp.gamma;
    out.beta = cost.beta;
    out.P.reserve(static_cast<size_t>(mdp.n_actions));
    for (int a = 0; a < mdp.n_actions; ++a) out.P.push_back(mdp.P(a));
    out.r_hat.resize(mdp.n_states, out.n_actions);
    Eigen::VectorXd mask_vec(mdp.n_states);
    for (int ahat = 0; ahat < out.n_actions; ++ahat) {
        const int a = out.base_action(ahat);
        for (int s = 0; s < mdp.n_states; ++s)
            mask_vec(s) = out.observes(ahat, s) ? 1.0 : 0.0;
        for (int s = 0; s < mdp.n_states; ++s) {
            double charged = mdp.P(a).row(s).dot(mask_vec);
            out.r_hat(s, ahat) = mdp.expected_reward(s, a) - mdp.gamma * cost.beta * charged;
        }
    }
    return out;
}

struct AlphaVector {
    Eigen::VectorXd values;
    int action = 0;  // augmented action index
};

/// One vector per joint action: the value of playing it forever regardless
/// of observations. A valid lower bound anywhere on the simplex for the
/// age-unconstrained relaxation; only the full-mask columns respect forced
/// transmission, so the solver seeds its ladder from those alone.
inline std::vector<AlphaVector> blind_lower_bound(const AugmentedPOMDP& pomdp) {
    const int n = pomdp.n_states;
    std::vector<AlphaVector> out;
    out.reserve(static_cast<size_t>(pomdp.n_actions));
    for (int a = 0; a < pomdp.n_base_actions; ++a) {
        const Eigen::MatrixXd sys =
            Eigen::MatrixXd::Identity(n, n) - pomdp.gamma * pomdp.P[static_cast<size_t>(a)];
        const auto lu = sys.partialPivLu();
        for (int m = 0; m < (1 << n); ++m) {
            const int ahat = (a << n) | m;
            out.push_back({lu.solve(pomdp.r_hat.col(ahat)), ahat});
        }
    }
    return out;
}

/// Per-action upper vectors: the observation branch is resolved as if the
/// maximizing continuation could be chosen per observation, which can only
/// overestimate. Columns indexed by joint action.
inline Eigen::MatrixXd fast_informed_bound(const AugmentedPOMDP& pomdp, double tolerance = 1e-6,
                                           int max_sweeps = 100000) {
    const int n = pomdp.n_states;
    const int na = pomdp.n_actions;
    const double r_top = pomdp.r_hat.maxCoeff();
    Eigen::MatrixXd alpha =
        Eigen::MatrixXd::Constant(n, na, std::max(r_top, 0.0) / (1.0 - pomdp.gamma));
    Eigen::MatrixXd next(n, na);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        const Eigen::VectorXd best = alpha.rowwise().maxCoeff();
        for (int ahat = 0; ahat < na; ++ahat) {
            const Eigen::MatrixXd& tp = pomdp.P[static_cast<size_t>(pomdp.base_action(ahat))];
            // Observed arrivals contribute the pointwise best continuation;
            // the silent branch is one maximization over whole vectors.
            Eigen::MatrixXd silent = tp;
            Eigen::VectorXd seen = Eigen::VectorXd::Zero(n);
            for (int t = 0; t < n; ++t)
                if (pomdp.observes(ahat, t)) {
                    silent.col(t).setZero();
                    seen += tp.col(t) * best(t);
                }
            const Eigen::MatrixXd proj = silent * alpha;  // n x na
            next.col(ahat) =
                pomdp.r_hat.col(ahat) + pomdp.gamma * (seen + proj.rowwise().maxCoeff());
        }
        const double residual = (next - alpha).cwiseAbs().maxCoeff();
        alpha.swap(next);
        if (residual < tolerance) return alpha;
    }
    throw std::runtime_error("informed upper bound did not converge within the sweep cap");
}

/// Upper bound as corner values plus sampled points, interpolated by the
/// sawtooth rule: each point pulls the corner hull down over its support.
struct SawtoothUpper {
    Eigen::VectorXd corner;
    std::vector<std::pair<Eigen::VectorXd, double>> points;

    double at(const Eigen::VectorXd& w) const {
        double best = w.dot(corner);
        for (const auto& [b, v] : points) {
            const double base = b.dot(corner);
            if (v >= base) continue;
            double ratio = std::numeric_limits<double>::infinity();
            for (int s = 0; s < b.size(); ++s)
                if (b(s) > 0.0) ratio = std::min(ratio, w(s) / b(s));
            best = std::min(best, w.dot(corner) + ratio * (v - base));
        }
        return best;
    }

    void insert(const Eigen::VectorXd& w, double value) {
        int corner_idx = -1;
        for (int s = 0; s < w.size(); ++s)
            if (w(s) > 1.0 - 1e-12) corner_idx = s;
        if (corner_idx >= 0) {
            corner(corner_idx) = std::min(corner(corner_idx), value);
            return;
        }
        for (auto& [b, v] : points)
            if ((b - w).cwiseAbs().maxCoeff() < 1e-12) {
                v = std::min(v, value);
                return;
            }
        points.emplace_back(w, value);
    }
};

struct ValueBounds {
    std::vector<AlphaVector> lower;
    SawtoothUpper upper;

    double lower_at(const Eigen::VectorXd& w) const {
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& a : lower) best = std::max(best, w.dot(a.values));
        return best;
    }
    double upper_at(const Eigen::VectorXd& w) const { return upper.at(w); }
};

/// Beliefs visited while closing the certificate, with the silence age and
/// the gap observed at the visit. Roots come first.
struct BeliefTree {
    struct Node {
        Eigen::VectorXd belief;
        int depth = 0;
        int age = 0;
        double gap = 0.0;
    };
    std::vector<Node> nodes;
    int n_roots = 0;
};

/// Every belief the decoder can hold after the first step: a one-hot per
/// revealed state and the renormalized prior over every silent support set.
inline std::vector<Eigen::VectorXd> initial_belief_set(const ControlledMarkovProcess& mdp) {
    require_valid(mdp);
    std::vector<int> support;
    for (int s = 0; s < mdp.n_states; ++s)
        if (mdp.initial_dist(s) > 0.0) support.push_back(s);
    std::vector<Eigen::VectorXd> out;
    const int k = static_cast<int>(support.size());
    for (int subset = 1; subset < (1 << k); ++subset) {
        Eigen::VectorXd w = Eigen::VectorXd::Zero(mdp.n_states);
        for (int i = 0; i < k; ++i)
            if ((subset >> i) & 1)
                w(support[static_cast<size_t>(i)]) = mdp.initial_dist(support[static_cast<size_t>(i)]);
        out.push_back(w / w.sum());
    }
    return out;
}

struct JpoConfig {
    int state_cap = kJpoStateCap;
    int max_backups = 50000;
    int prune_cadence = 50;
    int depth_cap = 500;
    double fib_tolerance = 1e-6;
};

struct EncoderFirstStep {
    std::vector<int> mask;  // transmit bit per initial state
    double score = 0.0;
};

struct JpoPolicies {
    DecoderPolicy decoder;
    EncoderPolicy encoder;
};

struct JpoResult {
    ValueBounds bounds;                // age-0 bounds, the certificate level
    std::vector<ValueBounds> ladder;   // one per silence age 0 .. t_max - 1
    BeliefTree tree;
    std::vector<Eigen::VectorXd> roots;
    std::vector<double> root_gaps;
    double value = 0.0;        // initial-dist weighted certified lower value at the one-hots
    double value_upper = 0.0;  // same aggregation on the upper bound
    bool converged = false;
    int backups = 0;
    JpoPolicies policies;
    EncoderFirstStep first_step;
};

namespace detail {

struct ObsSplit {
    Eigen::VectorXd predicted;  // mass per arrival state
    Eigen::VectorXd silent;     // unnormalized chi-branch belief
    double p_chi = 0.0;
};

inline ObsSplit split_observation(const AugmentedPOMDP& pomdp, const Eigen::VectorXd& w,
                                  int ahat) {
    ObsSplit out;
    out.predicted = pomdp.P[static_cast<size_t>(pomdp.base_action(ahat))].transpose() * w;
    out.silent = out.predicted;
    for (int t = 0; t < pomdp.n_states; ++t)
        if (pomdp.observes(ahat, t)) out.silent(t) = 0.0;
    out.p_chi = out.silent.sum();
    return out;
}

/// Joint actions available at a silence age: unrestricted until the forced
/// age, where only full-mask actions remain.
inline std::vector<int> level_actions(const AugmentedPOMDP& pomdp, int level, int n_levels) {
    std::vector<int> out;
    if (level + 1 < n_levels) {
        out.resize(static_cast<size_t>(pomdp.n_actions));
        for (int ahat = 0; ahat < pomdp.n_actions; ++ahat) out[static_cast<size_t>(ahat)] = ahat;
    } else {
        out.reserve(static_cast<size_t>(pomdp.n_base_actions));
        for (int a = 0; a < pomdp.n_base_actions; ++a) out.push_back(pomdp.full_mask_action(a));
    }
    return out;
}

inline double upper_q(const AugmentedPOMDP& pomdp, const std::vector<ValueBounds>& ladder,
                      int level, const Eigen::VectorXd& w, int ahat) {
    const ObsSplit split = split_observation(pomdp, w, ahat);
    double cont = 0.0;
    for (int t = 0; t < pomdp.n_states; ++t)
        if (pomdp.observes(ahat, t) && split.predicted(t) > 0.0)
            cont += split.predicted(t) * ladder.front().upper.corner(t);
    if (split.p_chi > 0.0)
        cont += split.p_chi * ladder[static_cast<size_t>(level + 1)].upper_at(split.silent / split.p_chi);
    return w.dot(pomdp.r_hat.col(ahat)) + pomdp.gamma * cont;
}

/// Point-based backup at one silence age: observed arrivals bootstrap the
/// age-0 pointwise maximum, the silent branch its successor age's argmax
/// vector, and the best action's vector joins that age's lower set.
inline void lower_backup(const AugmentedPOMDP& pomdp, std::vector<ValueBounds>& ladder,
                         int level, const Eigen::VectorXd& w) {
    const int n = pomdp.n_states;
    const int n_levels = static_cast<int>(ladder.size());
    Eigen::VectorXd pointwise =
        Eigen::VectorXd::Constant(n, -std::numeric_limits<double>::infinity());
    for (const auto& a : ladder.front().lower) pointwise = pointwise.cwiseMax(a.values);

    AlphaVector best;
    double best_val = -std::numeric_limits<double>::infinity();
    for (int ahat : level_actions(pomdp, level, n_levels)) {
        const ObsSplit split = split_observation(pomdp, w, ahat);
        Eigen::VectorXd cont(n);
        for (int t = 0; t < n; ++t) cont(t) = pointwise(t);
        if (split.p_chi > 0.0) {
            const std::vector<AlphaVector>& next_set =
                ladder[static_cast<size_t>(level + 1)].lower;
            const AlphaVector* chi_pick = &next_set.front();
            double chi_best = -std::numeric_limits<double>::infinity();
            for (const auto& a : next_set) {
                const double v = split.silent.dot(a.values);
                if (v > chi_best + 1e-15) {
                    chi_best = v;
                    chi_pick = &a;
                }
            }
            for (int t = 0; t < n; ++t)
                if (!pomdp.observes(ahat, t)) cont(t) = chi_pick->values(t);
        }
        AlphaVector cand;
        cand.action = ahat;
        cand.values = pomdp.r_hat.col(ahat) +
                      pomdp.gamma * (pomdp.P[static_cast<size_t>(pomdp.base_action(ahat))] * cont);
        const double val = w.dot(cand.values);
        if (val > best_val + 1e-12) {
            best_val = val;
            best = std::move(cand);
        }
    }
    ladder[static_cast<size_t>(level)].lower.push_back(std::move(best));
}

// Exact pointwise domination keeps a true partial order, so kept vectors
// cover every dropped one and lower values are preserved exactly.
inline void prune_lower(std::vector<AlphaVector>& gamma_set) {
    std::vector<AlphaVector> kept;
    for (size_t i = 0; i < gamma_set.size(); ++i) {
        bool dominated = false;
        for (size_t j = 0; j < gamma_set.size() && !dominated; ++j) {
            if (i == j) continue;
            const Eigen::ArrayXd diff = (gamma_set[j].values - gamma_set[i].values).array();
            if (!(diff >= 0.0).all()) continue;
            dominated = j < i || (diff > 0.0).any();
        }
        if (!dominated) kept.push_back(gamma_set[i]);
    }
    gamma_set.swap(kept);
}

}  // namespace detail

/// Reads the tabular pair off the converged lower ladder: walk each silent
/// branch from its one-hot root, take the lookahead-greedy joint action, and
/// write its mask into the next age row.
inline JpoPolicies extract_policies(const AugmentedPOMDP& pomdp,
                                    const std::vector<ValueBounds>& ladder,
                                    const HorizonConfig& cfg) {
    require_horizon(cfg);
    const int n = pomdp.n_states;
    const int t_max = cfg.t_max;
    if (static_cast<int>(ladder.size()) != t_max)
        throw std::invalid_argument("bound ladder does not match the horizon");
    JpoPolicies out{DecoderPolicy(n, t_max, 0), encoder_silent(n, t_max)};
    Eigen::VectorXd corner_lower(n);
    for (int t = 0; t < n; ++t) {
        Eigen::VectorXd corner = Eigen::VectorXd::Zero(n);
        corner(t) = 1.0;
        corner_lower(t) = ladder.front().lower_at(corner);
    }
    for (int sl = 0; sl < n; ++sl) {
        Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
        w(sl) = 1.0;
        bool alive = true;
        for (int delta = 0; delta < t_max; ++delta) {
            if (!alive) {
                out.decoder.set(delta, sl, out.decoder.act(delta - 1, sl));
                continue;
            }
            int best = 0;
            double best_q = -std::numeric_limits<double>::infinity();
            for (int ahat : detail::level_actions(pomdp, delta, t_max)) {
                const detail::ObsSplit split = detail::split_observation(pomdp, w, ahat);
                double cont = 0.0;
                for (int t = 0; t < n; ++t)
                    if (pomdp.observes(ahat, t)) cont += split.predicted(t) * corner_lower(t);
                if (split.p_chi > 0.0)
                    cont += split.p_chi *
                            ladder[static_cast<size_t>(delta + 1)].lower_at(split.silent / split.p_chi);
                const double q = w.dot(pomdp.r_hat.col(ahat)) + pomdp.gamma * cont;
                if (q > best_q + 1e-12) {
                    best_q = q;
                    best = ahat;
                }
            }
            out.decoder.set(delta, sl, pomdp.base_action(best));
            const detail::ObsSplit split = detail::split_observation(pomdp, w, best);
            if (delta + 1 < t_max)
                for (int t = 0; t < n; ++t)
                    out.encoder.set(t, delta + 1, sl,
                                    split.predicted(t) > 0.0 && pomdp.observes(best, t) ? 1 : 0);
            if (split.p_chi > 0.0) {
                w = split.silent / split.p_chi;
            } else {
                alive = false;
            }
        }
        out.decoder.set(t_max, sl, out.decoder.act(t_max - 1, sl));
    }
    return out;
}

/// First-step transmit rule over the initial states, scored on the certified
/// lower bound with the immediate charge as printed in the source recursion.
inline EncoderFirstStep first_step_rule(const ControlledMarkovProcess& mdp,
                                        const CommunicationCost& cost,
                                        const ValueBounds& bounds) {
    require_valid(mdp);
    const int n = mdp.n_states;
    EncoderFirstStep out;
    out.score = -std::numeric_limits<double>::infinity();
    for (int m = 0; m < (1 << n); ++m) {
        double score = 0.0;
        Eigen::VectorXd silent = Eigen::VectorXd::Zero(n);
        for (int s = 0; s < n; ++s) {
            if (mdp.initial_dist(s) <= 0.0) continue;
            if ((m >> s) & 1) {
                Eigen::VectorXd corner = Eigen::VectorXd::Zero(n);
                corner(s) = 1.0;
                score += mdp.initial_dist(s) * (bounds.lower_at(corner) - cost.beta);
            } else {
                silent(s) = mdp.initial_dist(s);
            }
        }
        const double p_silent = silent.sum();
        if (p_silent > 0.0) score += p_silent * bounds.lower_at(silent / p_silent);
        if (score > out.score + 1e-12) {
            out.score = score;
            out.mask.assign(static_cast<size_t>(n), 0);
            for (int s = 0; s < n; ++s) out.mask[static_cast<size_t>(s)] = (m >> s) & 1;
        }
    }
    return out;
}

/// Gap-directed point-based solver over silence-age-indexed bounds: descend
/// from an uncertified root along the upper-greedy action and the child with
/// the largest probability-weighted excess over its depth-scaled allowance
/// epsilon / gamma^(depth+1), then back up both bounds along the path until
/// every root is certified to epsilon. The excess form is what makes a
/// parent backup close its own allowance once no child violates one; raw
/// gap-weighted descent can orbit already-certified subtrees forever.
/// Roots are served round-robin.
inline JpoResult solve_jpo(const ControlledMarkovProcess& mdp, const CommunicationCost& cost,
                           double epsilon, const HorizonConfig& cfg, const JpoConfig& jcfg = {}) {
    require_valid(mdp);
    require_cost(cost);
    require_horizon(cfg);
    if (epsilon <= 0.0) throw std::invalid_argument("epsilon must be positive");

    JpoResult out;
    const AugmentedPOMDP pomdp = build_augmented(mdp, cost, jcfg.state_cap);
    const int n = pomdp.n_states;
    const int n_levels = cfg.t_max;

    std::vector<AlphaVector> seeds;
    {
        const std::vector<AlphaVector> blind = blind_lower_bound(pomdp);
        for (const auto& a : blind)
            if (a.action == pomdp.full_mask_action(pomdp.base_action(a.action)))
                seeds.push_back(a);
    }
    const Eigen::MatrixXd fib = fast_informed_bound(pomdp, jcfg.fib_tolerance);
    ValueBounds level_init;
    level_init.lower = seeds;
    level_init.upper.corner = fib.rowwise().maxCoeff();
    out.ladder.assign(static_cast<size_t>(n_levels), level_init);

    out.roots = initial_belief_set(mdp);
    out.tree.n_roots = static_cast<int>(out.roots.size());
    for (const auto& r : out.roots)
        out.tree.nodes.push_back(
            {r, 0, 0, out.ladder.front().upper_at(r) - out.ladder.front().lower_at(r)});
    out.root_gaps.assign(out.roots.size(), 0.0);

    const auto root_gap = [&](size_t i) {
        return out.ladder.front().upper_at(out.roots[i]) - out.ladder.front().lower_at(out.roots[i]);
    };
    const auto next_root = [&](size_t start) {
        for (size_t k = 0; k < out.roots.size(); ++k) {
            const size_t i = (start + k) % out.roots.size();
            if (root_gap(i) > epsilon) return static_cast<int>(i);
        }
        return -1;
    };

    int since_prune = 0;
    size_t rr = 0;
    int root_idx = next_root(rr);
    while (root_idx >= 0 && out.backups < jcfg.max_backups) {
        rr = static_cast<size_t>(root_idx) + 1;
        std::vector<std::pair<Eigen::VectorXd, int>> path;
        Eigen::VectorXd w = out.roots[static_cast<size_t>(root_idx)];
        int level = 0;
        double disc = 1.0;
        for (int depth = 0; depth < jcfg.depth_cap; ++depth) {
            const ValueBounds& vb = out.ladder[static_cast<size_t>(level)];
            const double gap = vb.upper_at(w) - vb.lower_at(w);
            if (disc * gap <= epsilon) break;
            path.emplace_back(w, level);
            int ahat = -1;
            double best_q = -std::numeric_limits<double>::infinity();
            for (int cand : detail::level_actions(pomdp, level, n_levels)) {
                const double q = detail::upper_q(pomdp, out.ladder, level, w, cand);
                if (q > best_q + 1e-12) {
                    best_q = q;
                    ahat = cand;
                }
            }
            const detail::ObsSplit split = detail::split_observation(pomdp, w, ahat);
            const double child_allowance = epsilon / (disc * pomdp.gamma);
            Eigen::VectorXd next;
            int next_level = 0;
            double best_weight = 0.0;
            for (int t = 0; t < n; ++t) {
                if (!pomdp.observes(ahat, t) || split.predicted(t) <= 0.0) continue;
                Eigen::VectorXd corner = Eigen::VectorXd::Zero(n);
                corner(t) = 1.0;
                const double weight =
                    split.predicted(t) * (out.ladder.front().upper_at(corner) -
                                          out.ladder.front().lower_at(corner) - child_allowance);
                if (weight > best_weight + 1e-15) {
                    best_weight = weight;
                    next = corner;
                    next_level = 0;
                }
            }
            if (split.p_chi > 0.0) {
                const ValueBounds& nb = out.ladder[static_cast<size_t>(level + 1)];
                const Eigen::VectorXd silent = split.silent / split.p_chi;
                const double weight =
                    split.p_chi * (nb.upper_at(silent) - nb.lower_at(silent) - child_allowance);
                if (weight > best_weight + 1e-15) {
                    best_weight = weight;
                    next = silent;
                    next_level = level + 1;
                }
            }
            if (best_weight <= 0.0) break;
            out.tree.nodes.push_back(
                {next, depth + 1, next_level,
                 out.ladder[static_cast<size_t>(next_level)].upper_at(next) -
                     out.ladder[static_cast<size_t>(next_level)].lower_at(next)});
            w = next;
            level = next_level;
            disc *= pomdp.gamma;
        }
        if (path.empty()) break;
        for (auto it = path.rbegin(); it != path.rend(); ++it) {
            detail::lower_backup(pomdp, out.ladder, it->second, it->first);
            double best_q = -std::numeric_limits<double>::infinity();
            for (int cand : detail::level_actions(pomdp, it->second, n_levels))
                best_q = std::max(best_q, detail::upper_q(pomdp, out.ladder, it->second, it->first, cand));
            out.ladder[static_cast<size_t>(it->second)].upper.insert(it->first, best_q);
            ++out.backups;
            if (++since_prune >= jcfg.prune_cadence) {
                for (auto& vb : out.ladder) detail::prune_lower(vb.lower);
                since_prune = 0;
            }
            if (out.backups >= jcfg.max_backups) break;
        }
        root_idx = next_root(rr);
    }
    for (auto& vb : out.ladder) detail::prune_lower(vb.lower);
    out.converged = next_root(0) < 0;
    for (size_t i = 0; i < out.roots.size(); ++i) out.root_gaps[i] = root_gap(i);

    out.value = 0.0;
    out.value_upper = 0.0;
    for (int s = 0; s < n; ++s) {
        if (mdp.initial_dist(s) <= 0.0) continue;
        Eigen::VectorXd corner = Eigen::VectorXd::Zero(n);
        corner(s) = 1.0;
        out.value += mdp.initial_dist(s) * out.ladder.front().lower_at(corner);
        out.value_upper += mdp.initial_dist(s) * out.ladder.front().upper_at(corner);
    }
    out.bounds = out.ladder.front();
    out.policies = extract_policies(pomdp, out.ladder, cfg);
    out.first_step = first_step_rule(mdp, cost, out.bounds);
    return out;
}

}  // namespace remocom
