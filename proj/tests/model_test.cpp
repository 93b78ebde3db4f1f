#include "remocom/generators.hpp"
#include "remocom/io.hpp"
#include "remocom/model.hpp"

#include <gtest/gtest.h>

namespace remocom {
namespace {

ControlledMarkovProcess identity_mdp(int n) {
    ControlledMarkovProcess mdp;
    mdp.n_states = n;
    mdp.n_actions = 1;
    mdp.gamma = 0.9;
    mdp.transitions = {Eigen::MatrixXd::Identity(n, n)};
    mdp.reward = {Eigen::MatrixXd::Zero(n, n)};
    mdp.initial_dist = Eigen::VectorXd::Zero(n);
    mdp.initial_dist(0) = 1.0;
    return mdp;
}

TEST(Validate, IdentityMatrixIsClean) {
    EXPECT_TRUE(validate(identity_mdp(3)).empty());
}

TEST(Validate, ShortRowIsNamed) {
    auto mdp = identity_mdp(3);
    mdp.transitions[0](1, 1) = 0.9;
    auto bad = validate(mdp);
    ASSERT_EQ(bad.size(), 1u);
    EXPECT_NE(bad[0].find("a=0"), std::string::npos);
    EXPECT_NE(bad[0].find("s=1"), std::string::npos);
}

TEST(Validate, UnitDiscountRejected) {
    auto mdp = identity_mdp(2);
    mdp.gamma = 1.0;
    auto bad = validate(mdp);
    ASSERT_EQ(bad.size(), 1u);
    EXPECT_NE(bad[0].find("gamma"), std::string::npos);
}

TEST(DeterministicBase, EqualSeedsGiveIdenticalTensors) {
    auto a = generate_deterministic_base(7, 5, 2);
    auto b = generate_deterministic_base(7, 5, 2);
    for (int k = 0; k < 2; ++k) EXPECT_TRUE(a.P(k).isApprox(b.P(k), 0.0));
}

TEST(DeterministicBase, DifferentSeedsDiffer) {
    bool any_diff = false;
    for (std::uint64_t s = 1; s < 6 && !any_diff; ++s)
        any_diff = !generate_deterministic_base(s, 6, 2).P(0).isApprox(
            generate_deterministic_base(s + 10, 6, 2).P(0), 0.0);
    EXPECT_TRUE(any_diff);
}

TEST(DeterministicBase, RowsAreOneHotAndDensityMatches) {
    auto mdp = generate_deterministic_base(11, 8, 3);
    int nonzero = 0;
    for (int a = 0; a < 3; ++a)
        for (int s = 0; s < 8; ++s) {
            int ones = 0;
            for (int t = 0; t < 8; ++t) {
                if (mdp.P(a)(s, t) == 1.0) ++ones;
                if (mdp.P(a)(s, t) != 0.0) ++nonzero;
            }
            EXPECT_EQ(ones, 1);
        }
    EXPECT_EQ(nonzero, 3 * 8);  // density 1/|S| per action slice
    EXPECT_TRUE(validate(mdp).empty());
    EXPECT_DOUBLE_EQ(mdp.metadata.density, 1.0 / 8);
}

TEST(DeterministicBase, TooFewStatesRejected) {
    EXPECT_THROW(generate_deterministic_base(1, 1, 1), std::invalid_argument);
}

TEST(Densify, WindowOneIsIdentityOnBase) {
    auto base = generate_deterministic_base(3, 6, 2);
    auto out = densify(base, 1.0 / 6);
    for (int a = 0; a < 2; ++a) EXPECT_TRUE(out.P(a).isApprox(base.P(a), 1e-15));
}

TEST(Densify, WindowThreeWeights) {
    auto base = generate_deterministic_base(4, 7, 1);
    auto out = densify(base, 3.0 / 7);
    for (int s = 0; s < 7; ++s) {
        int center = 0;
        base.P(0).row(s).maxCoeff(&center);
        EXPECT_NEAR(out.P(0)(s, center), 9.0 / 14, 1e-12);
        EXPECT_NEAR(out.P(0)(s, (center + 1) % 7), 5.0 / 28, 1e-12);
        EXPECT_NEAR(out.P(0)(s, (center + 6) % 7), 5.0 / 28, 1e-12);
    }
}

TEST(Densify, OddWindowRawSumIsAlreadyOne) {
    for (int m = 1; m <= 29; m += 2) {
        Eigen::VectorXd w = circular_decay_profile(m, 30, 12);
        EXPECT_NEAR(w.sum(), 1.0, 1e-9) << "m=" << m;
    }
}

TEST(Densify, RowsSumToOneForAllWindows) {
    for (int n : {5, 10, 30}) {
        auto base = generate_deterministic_base(9, n, 2);
        for (int m = 1; m <= n; ++m) {
            auto out = densify(base, static_cast<double>(m) / n);
            for (int a = 0; a < 2; ++a)
                for (int s = 0; s < n; ++s)
                    EXPECT_NEAR(out.P(a).row(s).sum(), 1.0, 1e-12)
                        << "n=" << n << " m=" << m << " a=" << a << " s=" << s;
        }
    }
}

TEST(Densify, SupportWidthMatchesWindow) {
    const int n = 11;
    auto base = generate_deterministic_base(2, n, 1);
    for (int m = 1; m <= n; ++m) {
        auto out = densify(base, static_cast<double>(m) / n);
        const int expect = std::min(m % 2 == 1 ? m : m - 1, n);
        for (int s = 0; s < n; ++s) {
            int nonzero = 0;
            for (int t = 0; t < n; ++t)
                if (out.P(0)(s, t) > 0.0) ++nonzero;
            EXPECT_EQ(nonzero, expect) << "m=" << m;
        }
    }
}

TEST(Densify, OversizedWindowRejected) {
    auto base = generate_deterministic_base(5, 4, 1);
    EXPECT_THROW(densify(base, 1.3), std::invalid_argument);
}

TEST(Densify, NonDeterministicBaseRejected) {
    auto base = generate_deterministic_base(5, 4, 1);
    base.transitions[0].row(0) << 0.5, 0.5, 0.0, 0.0;
    EXPECT_THROW(densify(base, 0.75), std::invalid_argument);
}

TEST(TwoPeakReward, ArrivalValues) {
    auto r = two_peak_reward(10, 2, 0, 5);
    ASSERT_EQ(r.size(), 2u);
    for (int a = 0; a < 2; ++a)
        for (int s = 0; s < 10; ++s) {
            EXPECT_DOUBLE_EQ(r[a](s, 0), 2.0);
            EXPECT_DOUBLE_EQ(r[a](s, 5), 1.0);
            EXPECT_DOUBLE_EQ(r[a](s, 4), 0.5);
            EXPECT_DOUBLE_EQ(r[a](s, 6), 0.5);
            EXPECT_DOUBLE_EQ(r[a](s, 2), 0.0);
        }
}

TEST(TwoPeakReward, EqualPeaksRejected) {
    EXPECT_THROW(two_peak_reward(5, 1, 2, 2), std::invalid_argument);
}

TEST(EstimationMdp, SharesChainAndPaysForCorrectGuess) {
    Eigen::MatrixXd chain(3, 3);
    chain << 0.2, 0.8, 0.0, 0.1, 0.1, 0.8, 0.5, 0.0, 0.5;
    auto mdp = estimation_mdp(chain);
    EXPECT_EQ(mdp.n_actions, 3);
    for (int a = 0; a < 3; ++a) {
        EXPECT_TRUE(mdp.P(a).isApprox(chain, 0.0));
        for (int s = 0; s < 3; ++s)
            for (int t = 0; t < 3; ++t)
                EXPECT_DOUBLE_EQ(mdp.R(a)(s, t), s == a ? 1.0 : 0.0);
    }
    EXPECT_TRUE(mdp.is_estimation());
    EXPECT_TRUE(validate(mdp).empty());
}

TEST(EstimationMdp, MalformedChainRejected) {
    Eigen::MatrixXd chain(2, 2);
    chain << 0.7, 0.7, 0.5, 0.5;
    EXPECT_THROW(estimation_mdp(chain), std::invalid_argument);
}

TEST(Counterexample, MatchesPublishedStructure) {
    auto mdp = build_counterexample();
    EXPECT_TRUE(validate(mdp).empty());
    EXPECT_DOUBLE_EQ(mdp.P(0)(3, 0), 1.0);
    EXPECT_DOUBLE_EQ(mdp.P(0)(0, 1), 1.0);
    EXPECT_DOUBLE_EQ(mdp.P(0)(4, 4), 1.0);
    EXPECT_DOUBLE_EQ(mdp.P(1)(0, 1), 0.5);
    EXPECT_DOUBLE_EQ(mdp.P(1)(0, 4), 0.5);
    EXPECT_DOUBLE_EQ(mdp.P(1)(4, 0), 1.0);
    EXPECT_DOUBLE_EQ(mdp.R(0)(3, 0), 1.0);
    EXPECT_DOUBLE_EQ(mdp.R(0)(1, 2), 0.0);
    EXPECT_DOUBLE_EQ(mdp.R(1)(4, 0), 1.0);
    EXPECT_DOUBLE_EQ(mdp.initial_dist(0), 1.0);
}

TEST(Serialization, RoundTripIsExactAndByteStable) {
    auto base = generate_deterministic_base(13, 6, 2);
    auto mdp = densify(base, 0.5);
    mdp.reward = two_peak_reward(6, 2, 0, 3);
    mdp.metadata.family = "control_two_peak";
    const std::string text = serialize_mdp(mdp);
    EXPECT_EQ(text, serialize_mdp(mdp));
    auto back = parse_mdp(text);
    EXPECT_EQ(serialize_mdp(back), text);
    for (int a = 0; a < 2; ++a) {
        EXPECT_TRUE(back.P(a).isApprox(mdp.P(a), 0.0));
        EXPECT_TRUE(back.R(a).isApprox(mdp.R(a), 0.0));
    }
    EXPECT_EQ(back.metadata.family, "control_two_peak");
    EXPECT_EQ(fingerprint_mdp(back), fingerprint_mdp(mdp));
}

TEST(Serialization, MalformedDocumentRejected) {
    EXPECT_THROW(parse_mdp("{\"n_states\": 2}"), std::invalid_argument);
}

}  // namespace
}  // namespace remocom
