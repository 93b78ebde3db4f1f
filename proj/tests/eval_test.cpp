#include "remocom/evaluate.hpp"
#include "remocom/generators.hpp"
#include "remocom/rng.hpp"

#include <gtest/gtest.h>

namespace remocom {
namespace {

// Encoder form of a pull schedule: transmit exactly when the age reaches tau.
EncoderPolicy schedule_encoder(int n, int t_max, const std::vector<int>& tau) {
    EncoderPolicy enc(n, t_max, 0);
    for (int sl = 0; sl < n; ++sl)
        for (int delta = 1; delta <= t_max; ++delta)
            if (delta >= tau[static_cast<size_t>(sl)])
                for (int s = 0; s < n; ++s) enc.set(s, delta, sl, 1);
    enc.force_boundary();
    return enc;
}

// Discounted sums along a deterministic trajectory, summed until the tail is
// numerically irrelevant. Independent of the linear-algebra path.
struct ScalarRollout {
    double reward = 0.0;
    double channel = 0.0;
};

ScalarRollout deterministic_rollout(const ControlledMarkovProcess& mdp, const JointPolicy& jp,
                                    int s0) {
    ScalarRollout out;
    int s = s0, delta = 0, s_last = s0;
    double disc = 1.0;
    while (disc > 1e-16) {
        const int a = jp.decoder.act(delta, s_last);
        int s_next = 0;
        mdp.P(a).row(s).maxCoeff(&s_next);
        out.reward += disc * mdp.R(a)(s, s_next);
        disc *= mdp.gamma;
        if (jp.encoder.decide(s_next, delta + 1, s_last)) {
            out.channel += disc;
            s_last = s_next;
            delta = 0;
        } else {
            ++delta;
        }
        s = s_next;
    }
    return out;
}

TEST(EvaluateExact, SilentLoopMatchesScalarRecursion) {
    auto mdp = build_counterexample();  // gamma 0.9
    JointPolicy jp;
    jp.architecture = Architecture::push;
    jp.decoder = DecoderPolicy(5, 4, 0);
    jp.encoder = encoder_silent(5, 4);
    const CommunicationCost cost{0.25};
    auto res = evaluate_exact(mdp, cost, jp);
    auto oracle = deterministic_rollout(mdp, jp, 0);
    EXPECT_NEAR(res.reward, oracle.reward, 1e-10);
    EXPECT_NEAR(res.channel_discounted, oracle.channel, 1e-10);
    EXPECT_NEAR(res.r_beta, oracle.reward - 0.25 * oracle.channel, 1e-10);
    // the four-step loop pays exactly once per cycle
    EXPECT_NEAR(res.reward, std::pow(0.9, 3) / (1 - std::pow(0.9, 4)), 1e-12);
    EXPECT_NEAR(res.channel_rate, 0.25, 1e-12);
    EXPECT_NEAR(res.reward_rate, 0.25, 1e-12);
}

TEST(EvaluateExact, ZeroCostCollapsesToReward) {
    auto mdp = densify(generate_deterministic_base(3, 4, 2), 0.5);
    mdp.reward = two_peak_reward(4, 2, 0, 2);
    JointPolicy jp;
    jp.decoder = DecoderPolicy(4, 3, 1);
    jp.encoder = encoder_always(4, 3);
    auto res = evaluate_exact(mdp, CommunicationCost{0.0}, jp);
    EXPECT_DOUBLE_EQ(res.r_beta, res.reward);
    EXPECT_GT(res.channel_discounted, 0.0);
}

TEST(EvaluateExact, MonteCarloAgreesWithinThreeStderr) {
    auto mdp = build_counterexample();
    JointPolicy jp;
    jp.decoder = DecoderPolicy(5, 4, 0);
    jp.decoder.set(0, 0, 1);  // gamble when state 0 is fresh
    jp.encoder = schedule_encoder(5, 4, {2, 2, 2, 2, 2});
    jp.architecture = Architecture::periodic;
    const CommunicationCost cost{0.4};
    auto exact = evaluate_exact(mdp, cost, jp);
    auto mc = simulate(mdp, cost, jp, 2024, SimulateConfig{4000, 32});
    ASSERT_GT(mc.stderr_r_beta, 0.0);
    EXPECT_NEAR(mc.r_beta, exact.r_beta, 3.0 * mc.stderr_r_beta + 1e-3);
    EXPECT_NEAR(mc.channel_rate, exact.channel_rate, 0.02);
}

TEST(Simulate, DeterministicSetupHasZeroVariance) {
    auto mdp = build_counterexample();
    JointPolicy jp;
    jp.decoder = DecoderPolicy(5, 4, 0);
    jp.encoder = schedule_encoder(5, 4, {4, 4, 4, 4, 4});
    auto a = simulate(mdp, CommunicationCost{0.1}, jp, 1, SimulateConfig{3000, 8});
    auto b = simulate(mdp, CommunicationCost{0.1}, jp, 99, SimulateConfig{3000, 8});
    EXPECT_DOUBLE_EQ(a.r_beta, b.r_beta);
    EXPECT_DOUBLE_EQ(a.stderr_r_beta, 0.0);
}

TEST(Simulate, ChannelUseStaysInDiscountedBand) {
    Rng rng(5);
    for (int trial = 0; trial < 5; ++trial) {
        auto mdp = densify(generate_deterministic_base(rng.raw(), 3, 2), 1.0);
        mdp.reward = two_peak_reward(3, 2, 0, 1);
        JointPolicy jp;
        jp.decoder = DecoderPolicy(3, 2, rng.bounded_int(2));
        jp.encoder = EncoderPolicy(3, 2, rng.bounded_int(2));
        auto res = simulate(mdp, CommunicationCost{0.2}, jp, rng.raw(), SimulateConfig{2000, 4});
        EXPECT_GE(res.channel_discounted, 0.0);
        EXPECT_LE(res.channel_discounted, 1.0 / (1.0 - mdp.gamma));
    }
}

TEST(Paoi, PullArchitectureIsPointMassAtSchedule) {
    auto mdp = densify(generate_deterministic_base(17, 4, 2), 1.0);
    mdp.reward = two_peak_reward(4, 2, 0, 2);
    const std::vector<int> tau{1, 3, 2, 3};
    JointPolicy jp;
    jp.architecture = Architecture::pull;
    jp.decoder = DecoderPolicy(4, 3, 0);
    jp.encoder = schedule_encoder(4, 3, tau);
    auto paoi = paoi_profile(mdp, CommunicationCost{0.3}, jp);
    for (int s = 0; s < 4; ++s) {
        if (paoi.row(s).sum() == 0.0) continue;  // state never the anchor
        for (int peak = 1; peak <= 3; ++peak)
            EXPECT_NEAR(paoi(s, peak), peak == tau[static_cast<size_t>(s)] ? 1.0 : 0.0, 1e-12)
                << "s=" << s << " peak=" << peak;
    }
}

TEST(Paoi, AlwaysTransmitIsPointMassAtOne) {
    auto mdp = densify(generate_deterministic_base(19, 3, 2), 1.0);
    mdp.reward = two_peak_reward(3, 2, 0, 1);
    JointPolicy jp;
    jp.decoder = DecoderPolicy(3, 2, 0);
    jp.encoder = encoder_always(3, 2);
    auto paoi = paoi_profile(mdp, CommunicationCost{0.0}, jp);
    for (int s = 0; s < 3; ++s) {
        ASSERT_GT(paoi.row(s).sum(), 0.0);
        EXPECT_NEAR(paoi(s, 1), 1.0, 1e-12);
    }
}

TEST(Paoi, RowsNormalizePerState) {
    auto mdp = build_counterexample();
    JointPolicy jp;
    jp.decoder = DecoderPolicy(5, 3, 0);
    jp.encoder = schedule_encoder(5, 3, {2, 1, 3, 2, 1});
    auto paoi = paoi_profile(mdp, CommunicationCost{0.1}, jp);
    for (int s = 0; s < 5; ++s) {
        const double total = paoi.row(s).sum();
        if (total > 0.0) {
            EXPECT_NEAR(total, 1.0, 1e-12);
        }
    }
}

TEST(PerfectEstimation, RateOneAndCheaperThanAlwaysTransmit) {
    Rng rng(31);
    for (int trial = 0; trial < 4; ++trial) {
        auto base = generate_deterministic_base(rng.raw(), 4, 1);
        auto chain = densify(base, 0.75);
        auto mdp = estimation_mdp(chain.P(0), 0.95);
        auto pep = perfect_estimation_policy(mdp, 5);
        auto res = evaluate_exact(mdp, CommunicationCost{0.5}, pep.joint);
        EXPECT_NEAR(res.reward_rate, 1.0, 1e-9);
        JointPolicy always;
        always.decoder = pep.joint.decoder;
        always.encoder = encoder_always(4, 5);
        auto res_always = evaluate_exact(mdp, CommunicationCost{0.5}, always);
        EXPECT_NEAR(res_always.channel_rate, 1.0, 1e-12);
        EXPECT_LT(res.channel_rate, 1.0 - 1e-6);
        auto mc = simulate(mdp, CommunicationCost{0.5}, pep.joint, rng.raw(),
                           SimulateConfig{20000, 8});
        EXPECT_NEAR(mc.channel_rate, res.channel_rate, 0.02);
        EXPECT_NEAR(mc.reward_rate, 1.0, 1e-12);
    }
}

TEST(EvaluateExact, LongHorizonMonteCarloConvergence) {
    auto mdp = densify(generate_deterministic_base(23, 3, 2), 1.0);
    mdp.reward = two_peak_reward(3, 2, 0, 1);
    JointPolicy jp;
    jp.decoder = DecoderPolicy(3, 3, 1);
    jp.encoder = schedule_encoder(3, 3, {2, 3, 1});
    const CommunicationCost cost{0.7};
    auto exact = evaluate_exact(mdp, cost, jp);
    auto mc = simulate(mdp, cost, jp, 7, SimulateConfig{100000, 32});
    EXPECT_NEAR(mc.r_beta, exact.r_beta, 3.0 * mc.stderr_r_beta + 1e-6);
    EXPECT_NEAR(mc.channel_rate, exact.channel_rate, 5e-3);
    EXPECT_NEAR(mc.reward_rate, exact.reward_rate, 5e-3);
}

}  // namespace
}  // namespace remocom
