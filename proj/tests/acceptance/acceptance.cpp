// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

#include "iktrack/benchmark.hpp"
#include "iktrack/dynamical_ik.hpp"
#include "iktrack/human_chain.hpp"
#include "iktrack/metrics.hpp"
#include "iktrack/qp.hpp"
#include "iktrack/random.hpp"
#include "iktrack/so3.hpp"
#include "iktrack/trajectory.hpp"
#include "oracles.hpp"

using namespace iktrack;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDt = 0.01;

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

TargetSample restamped(TargetSample s, double t) {
    s.t = t;
    return s;
}

Configuration random_configuration(Rng& rng, std::size_t dofs, double spread) {
    auto q = Configuration::zero(dofs);
    q.base_pos = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    const Vec3 axis = Vec3(rng.normal(), rng.normal(), rng.normal()).normalized();
    q.base_rot = Rotation::exp(rng.uniform(0, 3.0) * axis);
    for (Eigen::Index j = 0; j < q.s.size(); ++j) {
        q.s(j) = rng.uniform(-spread, spread);
    }
    return q;
}

MatrixXd random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
    MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) {
            m(i, j) = rng.normal();
        }
    }
    return m;
}

VectorXd random_vector(Rng& rng, Eigen::Index n) { return random_matrix(rng, n, 1).col(0); }

Outcome static_pose_convergence() {
    const auto start = std::chrono::steady_clock::now();
    const auto model = generate_human_chain(66, 1);
    const auto target = generate_stream(model, TrajectorySpec::static_pose(kDt, 1)).samples.front();

    auto run = [&](const GainConfig& gains, int steps) {
        DynamicalIk ik(model, gains, BaumgarteConfig{10.0, kDt});
        auto state = ik.initial_state(Configuration::zero(model.dofs()), 0.0);
        std::vector<double> series;
        for (int k = 0; k < steps; ++k) {
            ik.step(state, restamped(target, k * kDt));
            series.push_back(mnte(model, state.q, target));
        }
        return series;
    };
    const auto tracked = run(GainConfig::uniform(model, kDt, 2.0), 300);
    const double at1 = tracked[99];
    const double at3 = tracked[299];
    const auto frozen = run(GainConfig::unguarded_uniform(model, 0.0, 10.0), 500);
    const double initial = mnte(model, Configuration::zero(model.dofs()), target);
    double drift = 0.0;
    for (double v : frozen) {
        drift = std::max(drift, std::abs(v - initial));
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = at1 < 1e-2 && at3 < 1e-4 && drift <= 1e-9 && wall < 5.0;
    return {pass, fmt("MNTE(1s)=%.3g MNTE(3s)=%.3g K=0 drift=%.3g wall=%.2fs", at1, at3, drift,
                      wall)};
}

std::vector<double> base_offset_run(const KinematicModel& model, double K, int steps) {
    DynamicalIk ik(model, GainConfig::unguarded_uniform(model, K, 10.0), BaumgarteConfig{10.0, kDt});
    const auto q0 = Configuration::zero(model.dofs());
    auto target = sample_from_state(model, q0, Velocity::zero(model.dofs()), 0.0);
    const Vec3 offset(0.2, -0.1, 0.05);
    for (std::size_t i = 0; i < target.positions.size(); ++i) {
        target.positions[i] += offset;
    }
    auto state = ik.initial_state(q0, 0.0);
    std::vector<double> norms{offset.norm()};
    for (int k = 0; k < steps; ++k) {
        ik.step(state, restamped(target, k * kDt));
        norms.push_back((target.positions[0] - state.q.base_pos).norm());
    }
    return norms;
}

Outcome gain_stability_boundary() {
    const auto model = generate_human_chain(66, 1).without_limits();
    const auto stable = base_offset_run(model, 1.9 / kDt, 50);
    const auto unstable = base_offset_run(model, 2.5 / kDt, 50);
    int doubled = -1;
    for (std::size_t k = 0; k < unstable.size(); ++k) {
        if (unstable[k] >= 2.0 * unstable.front()) {
            doubled = static_cast<int>(k);
            break;
        }
    }
    const bool decays = stable.back() < stable.front();
    const bool pass = decays && doubled > 0 && doubled <= 50;
    return {pass, fmt("Kdt=1.9 |r| %.3g -> %.3g; Kdt=2.5 doubled at step %.0f", stable.front(),
                      stable.back(), doubled)};
}

Outcome decay_law() {
    const double K = 2.0;
    const auto model = generate_human_chain(66, 1).without_limits();
    const auto norms = base_offset_run(model, K, 50);
    double worst = 0.0;
    for (std::size_t k = 1; k < norms.size() && norms[k - 1] > 1e-6; ++k) {
        const double ratio = norms[k] / norms[k - 1];
        worst = std::max(worst, std::abs(ratio / (1 - K * kDt) - 1));
    }

    const KinematicModel body({{"body", false}}, {}, 0, {0}, {0});
    const Vec3 axis = Vec3(1, 2, -1).normalized();
    auto run_orientation = [&](double theta, int steps, bool& monotone) {
        DynamicalIk ik(body, GainConfig::uniform(body, kDt, K), BaumgarteConfig{10.0, kDt});
        auto target = sample_from_state(body, Configuration::zero(0), Velocity::zero(0), 0.0);
        target.rotations[0] = Rotation::about_axis(axis, theta);
        auto state = ik.initial_state(Configuration::zero(0), 0.0);
        double prev = theta;
        monotone = true;
        for (int k = 0; k < steps && prev >= 1e-3; ++k) {
            ik.step(state, restamped(target, k * kDt));
            const double angle = state.q.base_rot.angle_to(target.rotations[0]);
            monotone = monotone && angle <= prev + 1e-12;
            prev = angle;
        }
        return prev;
    };
    bool monotone = false;
    const double final3 = run_orientation(3.0, 2000, monotone);
    bool ignored = false;
    const double final_pi = run_orientation(kPi, 500, ignored);
    const bool pass = worst <= 0.05 && monotone && final3 < 1e-3 && final_pi > kPi - 1e-6;
    return {pass, fmt("ratio dev %.3g; theta0=3.0 -> %.3g rad (monotone %.0f); theta0=pi stays %.6f",
                      worst, final3, monotone ? 1.0 : 0.0, final_pi)};
}

Outcome constraint_containment() {
    const auto model = generate_human_chain(48, 1);
    const auto free = model.without_limits();
    const auto& c = model.constraints();
    double worst = -1e300;
    int runs_active = 0;
    std::string failure;
    for (std::uint64_t run = 0; run < 10; ++run) {
        auto spec = TrajectorySpec::running(20.0, 100 + run);
        spec.amplitude = 2.0;
        const auto gen = generate_stream(free, spec);
        DynamicalIk ik(model, GainConfig::uniform(model, kDt), BaumgarteConfig{10.0, kDt});
        const auto out = track(ik, gen.samples);
        if (out.error) {
            failure = *out.error;
            break;
        }
        bool active = false;
        for (const auto& step : out.steps) {
            worst = std::max(worst, (c.A * step.q.s - c.b_q).maxCoeff());
            active = active || step.report.any_constraint_active();
        }
        runs_active += active ? 1 : 0;
    }
    if (!failure.empty()) {
        return {false, "run failed: " + failure};
    }
    const bool pass = worst <= 1e-3 && runs_active == 10;
    return {pass, fmt("max(A s - b_q)=%.3g rad; runs with an active row %.0f/10", worst, runs_active)};
}

Outcome jacobian_correctness() {
    const auto model = generate_human_chain(66, 1);
    Rng rng(5);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto q = random_configuration(rng, model.dofs(), kPi);
        const MatrixXd J = stacked_jacobian(model, q);
        const MatrixXd fd = oracle::fd_stacked_jacobian(model, q, 1e-6);
        worst = std::max(worst, (J - fd).cwiseAbs().maxCoeff());
    }
    return {worst <= 1e-5, fmt("max |J - J_fd| = %.3g over 100 configurations", worst)};
}

Outcome orthonormality_under_load() {
    Rng rng(6);
    struct Tone {
        double amp, freq, phase;
    };
    std::vector<std::vector<Tone>> tones(3);
    for (auto& axis : tones) {
        for (int i = 0; i < 4; ++i) {
            axis.push_back({rng.uniform(0.5, 2.0), rng.uniform(0.1, 3.0), rng.uniform(0, 2 * kPi)});
        }
    }
    const BaumgarteConfig cfg{10.0, kDt};
    DriftingRotation R(Rotation::identity());
    double worst = R.orthonormality_error();
    for (int k = 0; k < 100000; ++k) {
        const double t = k * kDt;
        Vec3 w;
        for (int a = 0; a < 3; ++a) {
            w(a) = 0.0;
            for (const auto& tone : tones[a]) {
                w(a) += tone.amp * std::sin(2 * kPi * tone.freq * t + tone.phase);
            }
        }
        R = baumgarte_step(R, w, cfg);
        worst = std::max(worst, R.orthonormality_error());
    }
    return {worst <= 1e-6, fmt("max |R^T R - I|_F = %.3g over 1e5 steps", worst)};
}

Outcome qp_oracle_equivalence() {
    Rng rng(7);
    double worst = 0.0;
    int mismatched_status = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const auto d = 1 + static_cast<Eigen::Index>(rng.next() % 4);
        const auto m = d + static_cast<Eigen::Index>(rng.next() % 3);
        const auto k = static_cast<Eigen::Index>(rng.next() % 4);
        const MatrixXd J = random_matrix(rng, m, d);
        const VectorXd t = random_vector(rng, m);
        const MatrixXd G = random_matrix(rng, k, d);
        VectorXd g = G * random_vector(rng, d);
        for (Eigen::Index i = 0; i < k; ++i) {
            g(i) += trial % 7 == 0 ? rng.uniform(-2.0, 0.2) : rng.uniform(0.0, 1.0);
        }
        const double lambda = trial % 2 == 0 ? 0.0 : 1e-6;
        const auto ref = oracle::enumerate_qp(J, t, G, g, lambda);
        const auto sol = solve(LeastSquaresQP{J, t, G, g, lambda});
        if (!ref) {
            mismatched_status += sol.status == QpStatus::Infeasible ? 0 : 1;
            continue;
        }
        if (sol.status != QpStatus::Solved) {
            ++mismatched_status;
            continue;
        }
        worst = std::max(worst, (sol.x - ref->x).cwiseAbs().maxCoeff());
    }
    double worst_free = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto d = 1 + static_cast<Eigen::Index>(rng.next() % 12);
        const auto m = 1 + static_cast<Eigen::Index>(rng.next() % 12);
        const MatrixXd J = random_matrix(rng, m, d);
        const VectorXd t = random_vector(rng, m);
        const double lambda = m < d ? 1e-3 : 1e-6;
        const VectorXd x = solve_unconstrained(J, t, lambda);
        worst_free = std::max(worst_free,
                              (x - oracle::normal_equations(J, t, lambda)).cwiseAbs().maxCoeff());
    }
    const bool pass = mismatched_status == 0 && worst <= 1e-6 && worst_free <= 1e-8;
    return {pass, fmt("constrained max err %.3g (status mismatches %.0f); unconstrained max err %.3g",
                      worst, mismatched_status, worst_free)};
}

Outcome method_comparison() {
    const auto model = generate_human_chain(66, 1);
    const auto gen = generate_stream(model, TrajectorySpec::running(10.0, 8));
    const auto dyn = run_method(model, gen.samples, Method::Dynamical, {}, kDt);
    const auto wb = run_method(model, gen.samples, Method::WholeBody, {}, kDt);
    if (dyn.error || wb.error) {
        return {false, "run failed: " + dyn.error.value_or("") + wb.error.value_or("")};
    }
    const auto& d = dyn.metrics.time_stats;
    const auto& w = wb.metrics.time_stats;
    const double d_spread = d.iqr() / d.median;
    const double w_spread = w.iqr() / w.median;
    const bool pass = d.median < w.median && d_spread < w_spread && d.median < 10e-3;
    return {pass, fmt("median ms dyn %.3f wb %.3f; IQR/median dyn %.3f wb %.3f", 1e3 * d.median,
                      1e3 * w.median, d_spread, w_spread)};
}

Outcome tracking_accuracy() {
    const auto model = generate_human_chain(66, 1);
    const auto gen = generate_stream(model, TrajectorySpec::walking(10.0, 9));
    const auto dyn = run_method(model, gen.samples, Method::Dynamical, {}, kDt, 2.0);
    const auto wb = run_method(model, gen.samples, Method::WholeBody, {}, kDt, 2.0);
    if (dyn.error || wb.error) {
        return {false, "run failed: " + dyn.error.value_or("") + wb.error.value_or("")};
    }
    const double mnte_median = dyn.metrics.mnte_stats.median;
    const double rmse_dyn = dyn.metrics.rmse_stats.median;
    const double rmse_wb = wb.metrics.rmse_stats.median;
    const bool pass = mnte_median <= 1e-2 && rmse_dyn <= 2.0 * rmse_wb;
    return {pass, fmt("dyn MNTE median %.3g; RMSE median dyn %.3g wb %.3g rad/s", mnte_median,
                      rmse_dyn, rmse_wb)};
}

Outcome fixed_point_and_determinism() {
    const auto model = generate_human_chain(66, 2);
    Rng rng(10);
    const auto q = random_configuration(rng, model.dofs(), 1.0);
    DynamicalIk ik(model, GainConfig::uniform(model, kDt), BaumgarteConfig{10.0, kDt});
    auto state = ik.initial_state(q, 0.0);
    ik.step(state, sample_from_state(model, q, Velocity::zero(model.dofs()), 0.0));
    const double moved = std::max({(state.q.s - q.s).cwiseAbs().maxCoeff(),
                                   (state.q.base_pos - q.base_pos).cwiseAbs().maxCoeff(),
                                   (state.q.base_rot.matrix() - q.base_rot.matrix())
                                       .cwiseAbs()
                                       .maxCoeff()});

    BenchmarkConfig cfg;
    cfg.models.push_back({"h66", std::make_shared<const KinematicModel>(generate_human_chain(66, 1))});
    cfg.models.push_back({"h48", std::make_shared<const KinematicModel>(generate_human_chain(48, 1))});
    cfg.scenarios.push_back({"walk", TrajectorySpec::walking(3.0, 11)});
    cfg.scenarios.push_back({"run", TrajectorySpec::running(3.0, 12)});
    cfg.methods = {Method::Dynamical, Method::WholeBody, Method::Pairwise};
    cfg.transient_discard = 1.0;
    const auto a = run_benchmark(cfg, 1);
    const auto b = run_benchmark(cfg, 2);
    bool identical = a.size() == b.size();
    for (std::size_t i = 0; identical && i < a.size(); ++i) {
        const auto& ma = a[i].metrics;
        const auto& mb = b[i].metrics;
        identical = ma.mnte == mb.mnte && ma.rmse_angvel == mb.rmse_angvel &&
                    ma.mnte_stats.median == mb.mnte_stats.median &&
                    ma.mnte_stats.p95 == mb.mnte_stats.p95 &&
                    ma.rmse_stats.median == mb.rmse_stats.median &&
                    ma.rmse_stats.p95 == mb.rmse_stats.p95 && a[i].steps == b[i].steps &&
                    a[i].failures == b[i].failures;
    }
    const bool pass = moved <= 1e-8 && identical;
    return {pass, fmt("fixed-point drift %.3g; %.0f benchmark records bitwise identical: %.0f", moved,
                      static_cast<double>(a.size()), identical ? 1.0 : 0.0)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"static-pose convergence", static_pose_convergence},
        {"gain-stability boundary", gain_stability_boundary},
        {"decay law", decay_law},
        {"constraint containment", constraint_containment},
        {"jacobian correctness", jacobian_correctness},
        {"orthonormality under load", orthonormality_under_load},
        {"qp oracle equivalence", qp_oracle_equivalence},
        {"method comparison", method_comparison},
        {"tracking accuracy", tracking_accuracy},
        {"fixed point and determinism", fixed_point_and_determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome out{false, ""};
        try {
            out = criteria[i].second();
        } catch (const std::exception& e) {
            out = {false, std::string("threw: ") + e.what()};
        }
        failed += out.pass ? 0 : 1;
        std::printf("%s %zu %s: %s\n", out.pass ? "PASS" : "FAIL", i + 1, criteria[i].first,
                    out.detail.c_str());
        std::fflush(stdout);
    }
    return failed;
}
