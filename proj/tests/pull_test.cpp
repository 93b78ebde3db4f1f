#include "remocom/pull.hpp"

#include "remocom/generators.hpp"
#include "remocom/oracles.hpp"

#include <gtest/gtest.h>

namespace remocom {
namespace {

ControlledMarkovProcess tent_two_peak(std::uint64_t seed, int n, int n_actions, double gamma) {
    auto mdp = densify(generate_deterministic_base(seed, n, n_actions, gamma), 1.0);
    mdp.reward = two_peak_reward(n, n_actions, 0, n / 2);
    return mdp;
}

DecoderPolicy lift_markov_policy(const std::vector<int>& policy, int t_max) {
    const int n = static_cast<int>(policy.size());
    DecoderPolicy dec(n, t_max, 0);
    for (int delta = 0; delta <= t_max; ++delta)
        for (int sl = 0; sl < n; ++sl) dec.set(delta, sl, policy[static_cast<size_t>(sl)]);
    return dec;
}

TEST(Schedule, ValidationAndEncoderLift) {
    EXPECT_THROW(require_schedule(PullSchedule{{1, 2}}, 3, 4), std::invalid_argument);
    EXPECT_THROW(require_schedule(PullSchedule{{0, 2, 1}}, 3, 4), std::invalid_argument);
    EXPECT_THROW(require_schedule(PullSchedule{{1, 5, 1}}, 3, 4), std::invalid_argument);
    PullSchedule sched{{2, 1, 4}};
    auto enc = schedule_encoder(3, 4, sched);
    for (int sl = 0; sl < 3; ++sl)
        for (int delta = 1; delta <= 4; ++delta)
            for (int s = 0; s < 3; ++s)
                EXPECT_EQ(enc.decide(s, delta, sl), delta >= sched.tau[static_cast<size_t>(sl)] ? 1 : 0);
}

TEST(EvaluatePull, ImmediatePullAtZeroCostMatchesPolicyIteration) {
    auto mdp = build_counterexample();
    auto pi = solve_policy_iteration(mdp);
    HorizonConfig cfg{3, 1e-9};
    auto dec = lift_markov_policy(pi.policy, cfg.t_max);
    auto v = evaluate_pull(mdp, CommunicationCost{0.0}, dec, constant_schedule(5, 1), cfg);
    for (int s = 0; s < 5; ++s) EXPECT_NEAR(v.v(0, s), pi.values(s), 1e-9) << "s=" << s;
}

TEST(EvaluatePull, ZeroRewardIsPureSamplingCost) {
    auto mdp = build_counterexample();
    for (auto& r : mdp.reward) r.setZero();
    HorizonConfig cfg{3, 1e-9};
    DecoderPolicy dec(5, 3, 0);
    const auto sched = constant_schedule(5, 3);
    const CommunicationCost cost{0.6};
    auto v = evaluate_pull(mdp, cost, dec, sched, cfg);
    EXPECT_LE(v.v.maxCoeff(), 1e-15);
    auto exact = evaluate_exact(mdp, cost, pull_joint(dec, sched));
    EXPECT_NEAR(v.v.row(0).dot(mdp.initial_dist), exact.r_beta, 1e-9);
    EXPECT_NEAR(exact.r_beta, -cost.beta * exact.channel_discounted, 1e-12);
}

TEST(EvaluatePull, MatchesClosedChainPerRenewalState) {
    auto mdp = build_counterexample();
    HorizonConfig cfg{4, 1e-9};
    DecoderPolicy dec(5, 4, 0);
    for (int delta = 0; delta <= 4; ++delta)
        for (int sl = 0; sl < 5; ++sl) dec.set(delta, sl, (delta + sl) % 2);
    const auto sched = constant_schedule(5, 2);
    const CommunicationCost cost{0.3};
    auto v = evaluate_pull(mdp, cost, dec, sched, cfg);
    for (int s = 0; s < 5; ++s) {
        auto from_s = mdp;
        from_s.initial_dist = Eigen::VectorXd::Zero(5);
        from_s.initial_dist(s) = 1.0;
        auto exact = evaluate_exact(from_s, cost, pull_joint(dec, sched));
        EXPECT_NEAR(v.v(0, s), exact.r_beta, 1e-6) << "s=" << s;
    }
}

TEST(EvaluatePull, IterativeSweepsMatchDirectSolve) {
    auto mdp = tent_two_peak(61, 4, 2, 0.95);
    HorizonConfig cfg{3, 1e-10};
    DecoderPolicy dec(4, 3, 0);
    for (int delta = 0; delta <= 3; ++delta)
        for (int sl = 0; sl < 4; ++sl) dec.set(delta, sl, (2 * delta + sl) % 2);
    PullSchedule sched{{2, 3, 1, 3}};
    const CommunicationCost cost{0.4};
    auto dense = evaluate_pull(mdp, cost, dec, sched, cfg);
    auto sweep = detail::evaluate_pull_impl(mdp, cost, dec, sched, cfg, true, nullptr);
    EXPECT_LT((dense.v - sweep.v).cwiseAbs().maxCoeff(), 1e-8);
    const double bound = (std::max(std::abs(mdp.r_max()), std::abs(mdp.r_min())) + cost.beta) /
                         (1.0 - mdp.gamma);
    EXPECT_LE(dense.v.cwiseAbs().maxCoeff(), bound + 1e-9);
}

TEST(ImproveControl, ImmediatePullMatchesOneStepGreedy) {
    auto mdp = build_counterexample();
    HorizonConfig cfg{3, 1e-9};
    DecoderPolicy dec(5, 3, 0);
    const auto sched = constant_schedule(5, 1);
    const CommunicationCost cost{0.0};
    auto v = evaluate_pull(mdp, cost, dec, sched, cfg);
    auto improved = improve_control(mdp, cost, v, sched, cfg);
    for (int sl = 0; sl < 5; ++sl) {
        int best = 0;
        double best_q = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < 2; ++a) {
            const double q = mdp.expected_reward(sl, a) +
                             mdp.gamma * mdp.P(a).row(sl).dot(v.v.row(0));
            if (q > best_q + 1e-12) {
                best_q = q;
                best = a;
            }
        }
        EXPECT_EQ(improved.act(0, sl), best) << "sl=" << sl;
    }
}

TEST(ImproveControl, TiesPickLowestAction) {
    auto mdp = build_counterexample();
    mdp.transitions[1] = mdp.transitions[0];  // both actions now identical
    HorizonConfig cfg{3, 1e-9};
    const auto sched = constant_schedule(5, 2);
    auto v = evaluate_pull(mdp, CommunicationCost{0.2}, DecoderPolicy(5, 3, 1), sched, cfg);
    auto improved = improve_control(mdp, CommunicationCost{0.2}, v, sched, cfg);
    for (int delta = 0; delta <= 3; ++delta)
        for (int sl = 0; sl < 5; ++sl) EXPECT_EQ(improved.act(delta, sl), 0);
}

TEST(ImproveControl, GambleChosenWhenFresh) {
    auto mdp = build_counterexample();
    auto pi = solve_policy_iteration(mdp);
    HorizonConfig cfg{3, 1e-9};
    auto dec = lift_markov_policy(pi.policy, cfg.t_max);
    const auto sched = constant_schedule(5, 1);
    const CommunicationCost cost{0.05};
    auto v = evaluate_pull(mdp, cost, dec, sched, cfg);
    auto improved = improve_control(mdp, cost, v, sched, cfg);
    EXPECT_EQ(improved.act(0, 0), 1);
}

TEST(CommObjective, MatchesExplicitPathSum) {
    auto mdp = tent_two_peak(67, 3, 2, 0.95);
    HorizonConfig cfg{3, 1e-9};
    DecoderPolicy dec(3, 3, 0);
    for (int delta = 0; delta <= 3; ++delta)
        for (int sl = 0; sl < 3; ++sl) dec.set(delta, sl, (delta + sl) % 2);
    const CommunicationCost cost{0.5};
    auto v = evaluate_pull(mdp, cost, dec, constant_schedule(3, 3), cfg);
    const int sl = 1;
    const int a0 = dec.act(0, sl), a1 = dec.act(1, sl);
    double total = 0.0;
    for (int s1 = 0; s1 < 3; ++s1)
        for (int s2 = 0; s2 < 3; ++s2)
            total += mdp.P(a0)(sl, s1) * mdp.P(a1)(s1, s2) *
                     (mdp.R(a0)(sl, s1) + mdp.gamma * mdp.R(a1)(s1, s2) +
                      mdp.gamma * mdp.gamma * (v.v(0, s2) - cost.beta));
    EXPECT_NEAR(comm_objective(mdp, cost, dec, v, sl, 2), total, 1e-12);
}

TEST(CommObjective, CostEntersOnlyThroughPullCharge) {
    auto mdp = tent_two_peak(71, 3, 2, 0.95);
    HorizonConfig cfg{3, 1e-9};
    DecoderPolicy dec(3, 3, 1);
    auto v = evaluate_pull(mdp, CommunicationCost{0.2}, dec, constant_schedule(3, 2), cfg);
    double disc = 1.0;
    for (int m = 1; m <= 3; ++m) {
        disc *= mdp.gamma;
        const double lo = comm_objective(mdp, CommunicationCost{0.2}, dec, v, 0, m);
        const double hi = comm_objective(mdp, CommunicationCost{0.9}, dec, v, 0, m);
        EXPECT_NEAR(lo - hi, disc * 0.7, 1e-12) << "m=" << m;
    }
}

TEST(ImproveComm, FreeChannelPullsImmediately) {
    auto mdp = build_counterexample();
    auto pi = solve_policy_iteration(mdp);
    HorizonConfig cfg{4, 1e-9};
    auto dec = lift_markov_policy(pi.policy, cfg.t_max);
    const CommunicationCost cost{0.0};
    auto v = evaluate_pull(mdp, cost, dec, constant_schedule(5, 1), cfg);
    auto sched = improve_comm(mdp, cost, dec, v, cfg);
    for (int s = 0; s < 5; ++s) {
        EXPECT_EQ(sched.tau[static_cast<size_t>(s)], 1);
        for (int m = 2; m <= 4; ++m)
            EXPECT_GE(comm_objective(mdp, cost, dec, v, s, 1),
                      comm_objective(mdp, cost, dec, v, s, m) - 1e-12);
    }
}

TEST(ImproveComm, ProhibitiveCostWaitsMaximally) {
    auto mdp = build_counterexample();
    auto pi = solve_policy_iteration(mdp);
    HorizonConfig cfg{4, 1e-9};
    auto dec = lift_markov_policy(pi.policy, cfg.t_max);
    const CommunicationCost cost{20.0};  // above max reward / (1 - gamma)
    auto v = evaluate_pull(mdp, cost, dec, constant_schedule(5, 4), cfg);
    auto sched = improve_comm(mdp, cost, dec, v, cfg);
    for (int s = 0; s < 5; ++s) EXPECT_EQ(sched.tau[static_cast<size_t>(s)], 4);
}

TEST(SolveMpi, FreeChannelReachesFullyObservedOptimum) {
    auto mdp = build_counterexample();
    auto pi = solve_policy_iteration(mdp);
    HorizonConfig cfg{4, 1e-9};
    auto res = solve_mpi(mdp, CommunicationCost{0.0}, cfg);
    EXPECT_NEAR(res.value, pi.values(0), 1e-8);
    for (int s = 0; s < 5; ++s) EXPECT_EQ(res.schedule.tau[static_cast<size_t>(s)], 1);
    auto exact = evaluate_exact(mdp, CommunicationCost{0.0}, pull_joint(res.decoder, res.schedule));
    EXPECT_NEAR(exact.channel_rate, 1.0, 1e-12);
}

TEST(SolveMpi, ProhibitiveCostOnEstimationGuessesTheMode) {
    Eigen::MatrixXd chain(3, 3);
    chain << 0.1, 0.8, 0.1, 0.1, 0.8, 0.1, 0.1, 0.8, 0.1;
    auto mdp = estimation_mdp(chain, 0.95);
    HorizonConfig cfg{4, 1e-9};
    auto res = solve_mpi(mdp, CommunicationCost{50.0}, cfg);
    for (int s = 0; s < 3; ++s) {
        EXPECT_EQ(res.schedule.tau[static_cast<size_t>(s)], 4);
        EXPECT_EQ(res.decoder.act(0, s), s);
        for (int delta = 1; delta <= 4; ++delta) EXPECT_EQ(res.decoder.act(delta, s), 1);
    }
    auto exact = evaluate_exact(mdp, CommunicationCost{50.0}, pull_joint(res.decoder, res.schedule));
    EXPECT_NEAR(exact.r_beta, res.value, 1e-8);
}

TEST(SolveMpi, MatchesRestrictedExhaustiveSearch) {
    for (std::uint64_t seed : {101ULL, 102ULL, 103ULL, 104ULL, 105ULL, 106ULL}) {
        const int n = 2 + static_cast<int>(seed % 3);
        auto mdp = tent_two_peak(seed, n, 2, 0.9);
        for (double beta : {0.0, 0.3, 1.0}) {
            HorizonConfig cfg{3, 1e-9};
            auto res = solve_mpi(mdp, CommunicationCost{beta}, cfg);
            BruteForceConfig bf_cfg;
            bf_cfg.t_max = 3;
            bf_cfg.mode = BruteForceMode::pull_restricted;
            auto bf = brute_force_joint(mdp, CommunicationCost{beta}, bf_cfg);
            EXPECT_NEAR(res.value, bf.value, 1e-6) << "seed=" << seed << " beta=" << beta;
            auto exact = evaluate_exact(mdp, CommunicationCost{beta},
                                        pull_joint(res.decoder, res.schedule));
            EXPECT_NEAR(exact.r_beta, res.value, 1e-8);
            for (size_t i = 1; i < res.value_history.size(); ++i)
                EXPECT_GE(res.value_history[i], res.value_history[i - 1] - 1e-9)
                    << "seed=" << seed << " beta=" << beta << " iteration=" << i;
        }
    }
}

TEST(SolveMpi, GambleLoopConvergesAtIntermediateCosts) {
    auto mdp = build_counterexample();
    HorizonConfig cfg{4, 1e-9};
    for (double beta : {0.2, 0.5}) {
        auto res = solve_mpi(mdp, CommunicationCost{beta}, cfg);
        EXPECT_LE(res.iterations, 50) << "beta=" << beta;
        BruteForceConfig bf_cfg;
        bf_cfg.t_max = 4;
        bf_cfg.mode = BruteForceMode::pull_restricted;
        auto bf = brute_force_joint(mdp, CommunicationCost{beta}, bf_cfg);
        EXPECT_NEAR(res.value, bf.value, 1e-6) << "beta=" << beta;
        for (size_t i = 1; i < res.value_history.size(); ++i)
            EXPECT_GE(res.value_history[i], res.value_history[i - 1] - 1e-9)
                << "beta=" << beta << " iteration=" << i;
    }
}

TEST(SolveMpi, RewardAndChannelMonotoneInCost) {
    auto mdp = tent_two_peak(83, 3, 2, 0.95);
    HorizonConfig cfg{4, 1e-9};
    double prev_reward = std::numeric_limits<double>::infinity();
    double prev_channel = std::numeric_limits<double>::infinity();
    for (double beta : {0.0, 0.3, 0.8}) {
        auto res = solve_mpi(mdp, CommunicationCost{beta}, cfg);
        auto exact = evaluate_exact(mdp, CommunicationCost{beta},
                                    pull_joint(res.decoder, res.schedule));
        EXPECT_LE(exact.reward, prev_reward + 1e-9) << "beta=" << beta;
        EXPECT_LE(exact.channel_discounted, prev_channel + 1e-9) << "beta=" << beta;
        prev_reward = exact.reward;
        prev_channel = exact.channel_discounted;
    }
}

TEST(SolvePeriodic, NeverBeatsAdaptiveSchedules) {
    auto mdp = tent_two_peak(89, 3, 2, 0.95);
    HorizonConfig cfg{4, 1e-9};
    for (double beta : {0.0, 0.4, 1.2}) {
        auto per = solve_periodic(mdp, CommunicationCost{beta}, cfg);
        auto mpi = solve_mpi(mdp, CommunicationCost{beta}, cfg);
        EXPECT_LE(per.value, mpi.value + 1e-9) << "beta=" << beta;
        EXPECT_GE(per.period, 1);
        EXPECT_LE(per.period, 4);
        auto exact = evaluate_exact(mdp, CommunicationCost{beta},
                                    pull_joint(per.decoder, constant_schedule(3, per.period)));
        EXPECT_NEAR(exact.r_beta, per.value, 1e-8) << "beta=" << beta;
    }
}

TEST(SolvePeriodic, SingleStepHorizonCoincidesWithAdaptive) {
    auto mdp = tent_two_peak(97, 3, 2, 0.95);
    HorizonConfig cfg{1, 1e-9};
    auto per = solve_periodic(mdp, CommunicationCost{0.3}, cfg);
    auto mpi = solve_mpi(mdp, CommunicationCost{0.3}, cfg);
    EXPECT_EQ(per.period, 1);
    EXPECT_NEAR(per.value, mpi.value, 1e-12);
}

}  // namespace
}  // namespace remocom
