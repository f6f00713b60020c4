#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "iktrack/error.hpp"
#include "iktrack/human_chain.hpp"
#include "iktrack/instantaneous_ik.hpp"
#include "oracles.hpp"

using namespace iktrack;
using fixtures::kPi;

namespace {

TargetSample static_sample(const KinematicModel& model, const Configuration& q) {
    return sample_from_state(model, q, Velocity::zero(model.dofs()), 0.0);
}

Configuration perturbed(Rng& rng, Configuration q, double spread) {
    for (Eigen::Index j = 0; j < q.s.size(); ++j) {
        q.s(j) += rng.uniform(-spread, spread);
    }
    return q;
}

/// base - 4 joints - a - b - 3 joints - c, plus a side branch base - 1 joint - d.
/// Orientation targets base, b, c, d (4 with the base): 3 subsystems.
KinematicModel eight_link_model() {
    using fixtures::revolute;
    std::vector<Link> links;
    for (const char* n : {"base", "l1", "l2", "l3", "b", "l5", "l6", "c", "d"}) {
        links.push_back({n, false});
    }
    std::vector<Joint> joints{
        revolute("j1", 0, 1, Vec3::UnitZ(), Vec3(0, 0, 0.1)),
        revolute("j2", 1, 2, Vec3::UnitX(), Vec3(0, 0, 0.2)),
        revolute("j3", 2, 3, Vec3::UnitY(), Vec3(0, 0, 0.2)),
        revolute("j4", 3, 4, Vec3::UnitZ(), Vec3(0, 0.1, 0.2)),
        revolute("j5", 4, 5, Vec3::UnitX(), Vec3(0, 0, 0.3)),
        revolute("j6", 5, 6, Vec3::UnitY(), Vec3(0, 0, 0.3)),
        revolute("j7", 6, 7, Vec3::UnitZ(), Vec3(0.1, 0, 0.3)),
        revolute("j8", 0, 8, Vec3::UnitY(), Vec3(0.3, 0, 0)),
    };
    return KinematicModel(std::move(links), std::move(joints), 0, {0}, {0, 4, 7, 8});
}

}  // namespace

TEST(WholeBody, ExactSampleNeedsNoIteration) {
    Rng rng(41);
    const auto model = generate_human_chain(66, 1);
    const auto q = fixtures::random_configuration(rng, model, 1.0);
    const auto res = solve_whole_body(model, static_sample(model, q), q);
    EXPECT_EQ(res.iterations, 0u);
    EXPECT_TRUE(res.converged);
    EXPECT_EQ(res.q.s, q.s);
    EXPECT_EQ(res.q.base_pos, q.base_pos);
}

TEST(WholeBody, SingleJointReachesTarget) {
    const auto model = fixtures::one_joint();
    auto truth = Configuration::zero(1);
    truth.s(0) = 0.7;
    InstantaneousConfig cfg;
    cfg.stop_tol = 1e-9;
    const auto res = solve_whole_body(model, static_sample(model, truth), Configuration::zero(1), cfg);
    EXPECT_TRUE(res.converged);
    EXPECT_LE(std::abs(res.q.s(0) - 0.7), 1e-6);
}

TEST(WholeBody, BoundedJointStopsAtLimit) {
    const auto model = fixtures::one_joint(std::make_pair(-0.5, 0.5));
    auto truth = Configuration::zero(1);
    truth.s(0) = 0.9;
    const auto res = solve_whole_body(model.without_limits(), static_sample(model, truth),
                                      Configuration::zero(1));
    EXPECT_NEAR(res.q.s(0), 0.9, 1e-4);
    const auto bounded = solve_whole_body(model, static_sample(model, truth), Configuration::zero(1));
    EXPECT_LE(bounded.q.s(0), 0.5);
    EXPECT_NEAR(bounded.q.s(0), 0.5, 1e-6);
    EXPECT_GT(bounded.error, 0.1);
    EXPECT_FALSE(bounded.converged);
}

TEST(WholeBodyProperty, ErrorNonIncreasingInIterationBudget) {
    Rng rng(42);
    const auto model = generate_human_chain(66, 1);
    for (int trial = 0; trial < 5; ++trial) {
        const auto truth = fixtures::random_configuration(rng, model, 0.8);
        const auto init = perturbed(rng, truth, 0.4);
        const auto sample = static_sample(model, truth);
        double prev = std::numeric_limits<double>::infinity();
        for (std::size_t iters : {0, 1, 2, 3, 5, 8, 20}) {
            InstantaneousConfig cfg;
            cfg.max_iters = iters;
            cfg.stop_tol = 1e-12;
            const auto res = solve_whole_body(model, sample, init, cfg);
            EXPECT_LE(res.error, prev + 1e-15);
            EXPECT_LE(res.iterations, iters);
            prev = res.error;
        }
    }
}

TEST(WholeBodyProperty, RespectsCoupledConstraints) {
    Rng rng(43);
    const auto model = generate_human_chain(48, 1);
    const auto free = model.without_limits();
    const auto& c = model.constraints();
    for (int trial = 0; trial < 5; ++trial) {
        const auto truth = fixtures::random_configuration(rng, free, 2.0);
        const auto res = solve_whole_body(model, static_sample(free, truth),
                                          Configuration::zero(model.dofs()));
        EXPECT_LE((c.A * res.q.s - c.b_q).maxCoeff(), 1e-9);
    }
}

TEST(WholeBody, RejectsBadConfig) {
    const auto model = fixtures::one_joint();
    InstantaneousConfig cfg;
    cfg.stop_tol = 0.0;
    EXPECT_THROW(solve_whole_body(model, static_sample(model, Configuration::zero(1)),
                                  Configuration::zero(1), cfg),
                 std::invalid_argument);
}

TEST(Decompose, SingleJoint) {
    const auto subs = decompose_pairwise(fixtures::one_joint());
    ASSERT_EQ(subs.size(), 1u);
    EXPECT_EQ(subs[0].joint_indices, std::vector<std::size_t>{0});
    EXPECT_EQ(subs[0].root_link, 0u);
    EXPECT_EQ(subs[0].tip_link, 1u);
    EXPECT_EQ(subs[0].root_target, 0u);
    EXPECT_EQ(subs[0].tip_target, 1u);
}

TEST(Decompose, EightLinkModel) {
    const auto subs = decompose_pairwise(eight_link_model());
    ASSERT_EQ(subs.size(), 3u);
    EXPECT_EQ(subs[0].joint_indices, (std::vector<std::size_t>{0, 1, 2, 3}));
    EXPECT_EQ(subs[1].joint_indices, (std::vector<std::size_t>{4, 5, 6}));
    EXPECT_EQ(subs[1].root_link, 4u);
    EXPECT_EQ(subs[2].joint_indices, std::vector<std::size_t>{7});
}

TEST(Decompose, HumanChainPartition) {
    const auto model = generate_human_chain(66, 1);
    const auto subs = decompose_pairwise(model);
    ASSERT_EQ(subs.size(), 22u);
    std::vector<std::size_t> all;
    for (const auto& s : subs) {
        EXPECT_EQ(s.joint_indices.size(), 3u);
        all.insert(all.end(), s.joint_indices.begin(), s.joint_indices.end());
    }
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> expected(66);
    std::iota(expected.begin(), expected.end(), 0);
    EXPECT_EQ(all, expected);
    EXPECT_NO_THROW(decompose_pairwise(generate_human_chain(48, 1)));
}

TEST(Decompose, Errors) {
    using fixtures::revolute;
    // Base lacks an orientation target.
    EXPECT_THROW(decompose_pairwise(KinematicModel({{"base", false}, {"tip", false}},
                                                   {revolute("j", 0, 1, Vec3::UnitZ())}, 0, {0},
                                                   {1})),
                 DecompositionError);
    // Joint leading to a leaf without a target.
    EXPECT_THROW(decompose_pairwise(KinematicModel({{"base", false}, {"tip", false}},
                                                   {revolute("j", 0, 1, Vec3::UnitZ())}, 0, {0},
                                                   {0})),
                 DecompositionError);
    // Coupled row across two subsystems.
    ConstraintRows c;
    c.A = Eigen::MatrixXd::Zero(1, 8);
    c.A(0, 0) = 1.0;
    c.A(0, 7) = 1.0;
    c.b_q = Eigen::VectorXd::Ones(1);
    c.b_nu = Eigen::VectorXd::Ones(1);
    const auto m = eight_link_model();
    const KinematicModel coupled(m.links(), m.joints(), 0, m.position_targets(),
                                 m.orientation_targets(), c);
    EXPECT_THROW(decompose_pairwise(coupled), DecompositionError);
}

TEST(Pairwise, ExactSampleConvergesWithoutIterating) {
    Rng rng(44);
    const auto model = generate_human_chain(66, 1);
    const auto q = fixtures::random_configuration(rng, model, 1.0);
    const auto res = solve_pairwise(model, static_sample(model, q), q);
    for (const auto& r : res.subsystems) {
        EXPECT_EQ(r.iterations, 0u);
        EXPECT_TRUE(r.converged);
    }
    EXPECT_LE((res.q.s - q.s).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Pairwise, MatchesWholeBodyWhenTargetsDetermineSubsystems) {
    Rng rng(45);
    const auto model = generate_human_chain(66, 1);
    InstantaneousConfig cfg;
    cfg.stop_tol = 1e-12;
    for (int trial = 0; trial < 5; ++trial) {
        const auto truth = fixtures::random_configuration(rng, model, 1.0);
        const auto init = perturbed(rng, truth, 0.2);
        const auto sample = static_sample(model, truth);
        const auto pw = solve_pairwise(model, sample, init, cfg);
        const auto wb = solve_whole_body(model, sample, init, cfg);
        EXPECT_LE((pw.q.s - wb.q.s).cwiseAbs().maxCoeff(), 1e-6);
        EXPECT_LE((pw.q.s - truth.s).cwiseAbs().maxCoeff(), 1e-6);
        EXPECT_LE((pw.q.base_pos - wb.q.base_pos).cwiseAbs().maxCoeff(), 1e-6);
    }
}

TEST(PairwiseProperty, PerturbingOneTargetIsLocal) {
    Rng rng(46);
    const auto model = generate_human_chain(66, 1);
    const auto subs = decompose_pairwise(model);
    const auto truth = fixtures::random_configuration(rng, model, 1.0);
    auto sample = static_sample(model, truth);
    const auto base = solve_pairwise(model, subs, sample, truth);
    // Rotate the RightForeArm target: only its own subsystem and the one it roots move.
    const auto fore = std::size_t{9};
    sample.rotations[fore] = Rotation::about_axis(Vec3(1, 1, 0), 0.4) * sample.rotations[fore];
    const auto moved = solve_pairwise(model, subs, sample, truth);
    for (std::size_t i = 0; i < subs.size(); ++i) {
        const bool touched = subs[i].tip_target == fore || subs[i].root_target == fore;
        for (auto j : subs[i].joint_indices) {
            const auto idx = static_cast<Eigen::Index>(j);
            if (touched) {
                continue;
            }
            EXPECT_EQ(moved.q.s(idx), base.q.s(idx)) << "subsystem " << i;
        }
        if (subs[i].tip_target == fore) {
            EXPECT_GT(moved.subsystems[i].iterations, 0u);
        }
    }
}

TEST(Pairwise, InconsistentTargetsReportedLocally) {
    const auto m = eight_link_model();
    auto q = Configuration::zero(8);
    auto sample = static_sample(m, q);
    // A single-axis joint cannot reach a rotation about another axis.
    sample.rotations[3] = Rotation::about_axis(Vec3::UnitX(), 0.5);
    const auto res = solve_pairwise(m, sample, q);
    EXPECT_GT(res.subsystems[2].error, 0.1);
    EXPECT_FALSE(res.subsystems[2].converged);
    EXPECT_TRUE(res.subsystems[0].converged);
    EXPECT_TRUE(res.subsystems[1].converged);
}

TEST(PairwiseProperty, ResultIndependentOfOrderAndThreads) {
    Rng rng(47);
    const auto model = generate_human_chain(66, 1);
    const auto subs = decompose_pairwise(model);
    const auto truth = fixtures::random_configuration(rng, model, 1.0);
    const auto init = perturbed(rng, truth, 0.3);
    const auto sample = static_sample(model, truth);
    const auto ref = solve_pairwise(model, subs, sample, init);
    PairwiseOptions reversed;
    reversed.execution_order.resize(subs.size());
    std::iota(reversed.execution_order.rbegin(), reversed.execution_order.rend(), 0);
    const auto a = solve_pairwise(model, subs, sample, init, {}, reversed);
    PairwiseOptions threaded;
    threaded.threads = 4;
    const auto b = solve_pairwise(model, subs, sample, init, {}, threaded);
    EXPECT_EQ(a.q.s, ref.q.s);
    EXPECT_EQ(b.q.s, ref.q.s);
    for (std::size_t i = 0; i < subs.size(); ++i) {
        EXPECT_EQ(a.subsystems[i].error, ref.subsystems[i].error);
        EXPECT_EQ(b.subsystems[i].iterations, ref.subsystems[i].iterations);
    }
}

TEST(PairwiseProperty, RespectsLimits) {
    Rng rng(48);
    const auto model = generate_human_chain(48, 1);
    const auto free = model.without_limits();
    const auto& c = model.constraints();
    for (int trial = 0; trial < 5; ++trial) {
        const auto truth = fixtures::random_configuration(rng, free, 2.0);
        const auto res = solve_pairwise(model, static_sample(free, truth),
                                        Configuration::zero(model.dofs()));
        EXPECT_LE((c.A * res.q.s - c.b_q).maxCoeff(), 1e-9);
    }
}

TEST(BaselineVelocity, RecoversGroundTruth) {
    Rng rng(49);
    const auto model = generate_human_chain(66, 1);
    const auto q = fixtures::random_configuration(rng, model, 1.0);
    const auto nu = fixtures::random_velocity(rng, model);
    QpSolver solver;
    const auto fit = baseline_velocity(model, q, sample_from_state(model, q, nu, 0.0), 1e-10, solver);
    EXPECT_LE((fit.stacked() - nu.stacked()).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(BaselineVelocity, HonoursVelocityLimits) {
    Rng rng(50);
    const auto model = generate_human_chain(48, 1);
    const auto q = Configuration::zero(model.dofs());
    auto nu = fixtures::random_velocity(rng, model);
    nu.s_dot *= 30.0;
    QpSolver solver;
    const auto fit = baseline_velocity(model, q, sample_from_state(model.without_limits(), q, nu, 0.0),
                                       1e-6, solver);
    const auto& c = model.constraints();
    EXPECT_LE((c.A * fit.s_dot - c.b_nu).maxCoeff(), 1e-9);
}
