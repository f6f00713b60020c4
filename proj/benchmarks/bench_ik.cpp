#include <vector>

#include <benchmark/benchmark.h>

#include "iktrack/dynamical_ik.hpp"
#include "iktrack/human_chain.hpp"
#include "iktrack/instantaneous_ik.hpp"
#include "iktrack/qp.hpp"
#include "iktrack/random.hpp"
#include "iktrack/trajectory.hpp"

using namespace iktrack;

namespace {

const KinematicModel& human(int dofs) {
    static const KinematicModel h66 = generate_human_chain(66, 1);
    static const KinematicModel h48 = generate_human_chain(48, 1);
    return dofs == 66 ? h66 : h48;
}

const GeneratedStream& running_stream(int dofs) {
    static const GeneratedStream s66 = generate_stream(human(66), TrajectorySpec::running(20.0, 1));
    static const GeneratedStream s48 = generate_stream(human(48), TrajectorySpec::running(20.0, 1));
    return dofs == 66 ? s66 : s48;
}

void BM_ForwardKinematics(benchmark::State& state) {
    const auto& model = human(66);
    const auto& q = running_stream(66).q[100];
    LinkPoses poses;
    for (auto _ : state) {
        compute_link_poses(model, q, poses);
        benchmark::DoNotOptimize(poses.position.data());
    }
}
BENCHMARK(BM_ForwardKinematics);

void BM_StackedJacobian(benchmark::State& state) {
    const auto& model = human(66);
    const auto poses = compute_link_poses(model, running_stream(66).q[100]);
    Eigen::MatrixXd J;
    for (auto _ : state) {
        stacked_jacobian(model, poses, J);
        benchmark::DoNotOptimize(J.data());
    }
}
BENCHMARK(BM_StackedJacobian);

void BM_QpSolve(benchmark::State& state) {
    Rng rng(3);
    const auto d = state.range(0);
    LeastSquaresQP p;
    p.J = Eigen::MatrixXd(d - 3, d);
    for (Eigen::Index i = 0; i < p.J.size(); ++i) {
        p.J.data()[i] = rng.normal();
    }
    p.target = Eigen::VectorXd::Constant(d - 3, 2.0);
    p.G.resize(2 * d, d);
    p.G << Eigen::MatrixXd::Identity(d, d), -Eigen::MatrixXd::Identity(d, d);
    p.g = Eigen::VectorXd::Constant(2 * d, 0.5);
    QpSolver solver;
    for (auto _ : state) {
        auto sol = solver.solve(p);
        benchmark::DoNotOptimize(sol.x.data());
    }
}
BENCHMARK(BM_QpSolve)->Arg(24)->Arg(54)->Arg(72);

void BM_DynamicalStep(benchmark::State& state) {
    const int dofs = static_cast<int>(state.range(0));
    const auto& model = human(dofs);
    const auto& stream = running_stream(dofs);
    DynamicalIk ik(model, GainConfig::uniform(model, 0.01));
    auto st = ik.initial_state(stream.q.front(), stream.samples.front().t);
    std::size_t k = 0;
    for (auto _ : state) {
        if (k == stream.samples.size()) {
            state.PauseTiming();
            st = ik.initial_state(stream.q.front(), stream.samples.front().t);
            k = 0;
            state.ResumeTiming();
        }
        auto report = ik.step(st, stream.samples[k++]);
        benchmark::DoNotOptimize(report.residual_r.data());
    }
}
BENCHMARK(BM_DynamicalStep)->Arg(66)->Arg(48);

void BM_WholeBody(benchmark::State& state) {
    const auto& model = human(66);
    const auto& stream = running_stream(66);
    auto q = stream.q.front();
    std::size_t k = 1;
    for (auto _ : state) {
        auto res = solve_whole_body(model, stream.samples[k], q);
        q = res.q;
        k = k + 1 == stream.samples.size() ? 1 : k + 1;
        benchmark::DoNotOptimize(q.s.data());
    }
}
BENCHMARK(BM_WholeBody);

void BM_Pairwise(benchmark::State& state) {
    const auto& model = human(66);
    const auto& stream = running_stream(66);
    const auto subsystems = decompose_pairwise(model);
    PairwiseOptions options;
    options.threads = static_cast<std::size_t>(state.range(0));
    auto q = stream.q.front();
    std::size_t k = 1;
    for (auto _ : state) {
        auto res = solve_pairwise(model, subsystems, stream.samples[k], q, {}, options);
        q = res.q;
        k = k + 1 == stream.samples.size() ? 1 : k + 1;
        benchmark::DoNotOptimize(q.s.data());
    }
}
BENCHMARK(BM_Pairwise)->Arg(1)->Arg(4);

}  // namespace

BENCHMARK_MAIN();
