#include "iktrack/dynamical_ik.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "iktrack/error.hpp"

namespace iktrack {

using Eigen::Index;

namespace {

void require_positive(const VectorXd& v, const char* what) {
    if (!v.allFinite() || (v.size() > 0 && v.minCoeff() <= 0.0)) {
        throw InvalidGains(std::string(what) + " entries must be positive and finite");
    }
}

}  // namespace

GainConfig GainConfig::uniform(const KinematicModel& model, double dt, double K, double K_g) {
    return guarded(VectorXd::Constant(static_cast<Index>(model.target_rows()), K),
                   VectorXd::Constant(static_cast<Index>(model.constraints().rows()), K_g), dt);
}

GainConfig GainConfig::guarded(VectorXd K, VectorXd K_g, double dt, double b_nu_default) {
    if (!(dt > 0.0)) {
        throw InvalidGains("dt must be positive");
    }
    require_positive(K, "K");
    require_positive(K_g, "K_g");
    if (!(b_nu_default > 0.0) || !std::isfinite(b_nu_default)) {
        throw InvalidGains("b_nu_default must be positive and finite");
    }
    if (K.size() > 0 && K.maxCoeff() * dt > 1.0) {
        throw InvalidGains("K·dt must not exceed 1 (K_max = " + std::to_string(K.maxCoeff()) +
                           ", dt = " + std::to_string(dt) + ")");
    }
    return GainConfig(std::move(K), std::move(K_g), b_nu_default, true);
}

GainConfig GainConfig::unguarded(VectorXd K, VectorXd K_g, double b_nu_default) {
    return GainConfig(std::move(K), std::move(K_g), b_nu_default, false);
}

GainConfig GainConfig::unguarded_uniform(const KinematicModel& model, double K, double K_g) {
    return unguarded(VectorXd::Constant(static_cast<Index>(model.target_rows()), K),
                     VectorXd::Constant(static_cast<Index>(model.constraints().rows()), K_g));
}

void GainConfig::check(const KinematicModel& model, double dt) const {
    if (static_cast<std::size_t>(K_.size()) != model.target_rows()) {
        throw InvalidGains("K has " + std::to_string(K_.size()) + " entries, model has " +
                           std::to_string(model.target_rows()) + " target rows");
    }
    if (static_cast<std::size_t>(K_g_.size()) != model.constraints().rows()) {
        throw InvalidGains("K_g has " + std::to_string(K_g_.size()) + " entries, model has " +
                           std::to_string(model.constraints().rows()) + " constraint rows");
    }
    if (guarded_ && K_.size() > 0 && K_.maxCoeff() * dt > 1.0) {
        throw InvalidGains("K·dt must not exceed 1");
    }
}

void pose_residual(const KinematicModel& model, const LinkPoses& poses,
                   const TargetSample& sample, VectorXd& out) {
    out.resize(static_cast<Index>(model.target_rows()));
    Index row = 0;
    const auto& pt = model.position_targets();
    for (std::size_t i = 0; i < pt.size(); ++i, row += 3) {
        out.segment<3>(row) = sample.positions[i] - poses.position[pt[i]];
    }
    const auto& ot = model.orientation_targets();
    for (std::size_t i = 0; i < ot.size(); ++i, row += 3) {
        out.segment<3>(row) = orientation_residual_inertial(poses.rotation[ot[i]], sample.rotations[i]);
    }
}

VectorXd pose_residual(const KinematicModel& model, const Configuration& q,
                       const TargetSample& sample) {
    check_sample(model, sample);
    VectorXd r;
    pose_residual(model, compute_link_poses(model, q), sample, r);
    return r;
}

VectorXd velocity_residual(const KinematicModel& model, const Configuration& q, const Velocity& nu,
                           const TargetSample& sample) {
    check_sample(model, sample);
    return stacked_velocity(sample) - stacked_jacobian(model, q) * nu.stacked();
}

VectorXd corrected_velocity(const TargetSample& sample, const VectorXd& r, const GainConfig& gains) {
    const VectorXd v = stacked_velocity(sample);
    if (v.size() != r.size() || gains.K().size() != r.size()) {
        throw std::invalid_argument("corrected_velocity: size mismatch");
    }
    return v + gains.K().cwiseProduct(r);
}

void limit_bounds(const KinematicModel& model, const VectorXd& s, const GainConfig& gains,
                  VectorXd& g) {
    const auto& c = model.constraints();
    const auto m = static_cast<Index>(c.rows());
    g.resize(m);
    for (Index i = 0; i < m; ++i) {
        const double b_nu = std::isinf(c.b_nu(i)) ? gains.b_nu_default() : c.b_nu(i);
        const double margin = c.b_q(i) - c.A.row(i).dot(s);
        g(i) = std::tanh(gains.K_g()(i) * margin) * b_nu;
    }
}

LimitConstraints build_limit_constraints(const KinematicModel& model, const Configuration& q,
                                         const GainConfig& gains) {
    const auto& c = model.constraints();
    LimitConstraints out;
    out.G = MatrixXd::Zero(static_cast<Index>(c.rows()),
                           static_cast<Index>(model.velocity_size()));
    out.G.rightCols(static_cast<Index>(model.dofs())) = c.A;
    limit_bounds(model, q.s, gains, out.g);
    return out;
}

bool StepReport::any_constraint_active() const {
    return std::any_of(constraint_active.begin(), constraint_active.end(),
                       [](bool b) { return b; });
}

DynamicalIk::DynamicalIk(const KinematicModel& model, GainConfig gains, BaumgarteConfig baumgarte,
                         QpOptions qp, double damping)
    : model_(model), gains_(std::move(gains)), baumgarte_(baumgarte), qp_options_(qp) {
    baumgarte_.validate();
    gains_.check(model_, baumgarte_.dt);
    const auto& c = model_.constraints();
    qp_.G = MatrixXd::Zero(static_cast<Index>(c.rows()), static_cast<Index>(model_.velocity_size()));
    qp_.G.rightCols(static_cast<Index>(model_.dofs())) = c.A;
    qp_.damping = damping;
}

SolverState DynamicalIk::initial_state(const Configuration& q0, double t_first) const {
    SolverState st;
    st.q = q0;
    st.nu = Velocity::zero(model_.dofs());
    st.t = t_first - dt();
    return st;
}

SolverState DynamicalIk::initial_state(const TargetSample& first) const {
    check_sample(model_, first);
    auto q0 = Configuration::zero(model_.dofs());
    const auto& pt = model_.position_targets();
    for (std::size_t i = 0; i < pt.size(); ++i) {
        if (pt[i] == model_.base_link()) {
            q0.base_pos = first.positions[i];
            break;
        }
    }
    return initial_state(q0, first.t);
}

StepReport DynamicalIk::step(SolverState& state, const TargetSample& sample) {
    const auto start = std::chrono::steady_clock::now();
    if (std::abs(sample.t - state.t - dt()) > 1e-9) {
        throw StaleSample("sample at t = " + std::to_string(sample.t) +
                          " does not follow state at t = " + std::to_string(state.t) +
                          " by dt = " + std::to_string(dt()));
    }
    check_sample(model_, sample);

    compute_link_poses(model_, state.q, poses_);
    pose_residual(model_, poses_, sample, r_);
    stacked_jacobian(model_, poses_, qp_.J);
    qp_.target = stacked_velocity(sample);
    qp_.target.noalias() += gains_.K().cwiseProduct(r_);
    limit_bounds(model_, state.q.s, gains_, qp_.g);

    auto sol = solver_.solve(qp_, qp_options_, state.last_active_set);
    if (sol.status != QpStatus::Solved) {
        throw SolverFailure("step " + std::to_string(state.step_index) + ": QP " +
                            std::string(to_string(sol.status)));
    }

    StepReport report;
    report.residual_r = r_;
    report.residual_u = stacked_velocity(sample) - qp_.J * sol.x;
    report.qp_status = sol.status;
    report.qp_iterations = sol.iterations;
    const auto k = qp_.G.rows();
    report.constraint_active.assign(static_cast<std::size_t>(k), false);
    for (Index i = 0; i < k; ++i) {
        report.constraint_active[static_cast<std::size_t>(i)] =
            std::abs(qp_.G.row(i).dot(sol.x) - qp_.g(i)) <= 1e-6;
    }

    auto nu = Velocity::from_stacked(sol.x);
    const double h = dt();
    const Mat3& R = state.q.base_rot.matrix();
    const auto next_rot = baumgarte_step(R, R.transpose() * nu.base_ang, baumgarte_);
    state.q.base_pos += h * nu.base_lin;
    state.q.s += h * nu.s_dot;
    state.q.base_rot = trusted_rotation(next_rot.m);
    state.nu = std::move(nu);
    state.t = sample.t;
    state.last_active_set = std::move(sol.working_set);
    ++state.step_index;

    report.step_wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

TrackResult track(DynamicalIk& ik, const std::vector<TargetSample>& stream,
                  const std::optional<Configuration>& q0) {
    TrackResult out;
    if (stream.empty()) {
        return out;
    }
    SolverState state;
    try {
        state = q0 ? ik.initial_state(*q0, stream.front().t) : ik.initial_state(stream.front());
    } catch (const Error& e) {
        out.error = e.what();
        return out;
    }
    out.steps.reserve(stream.size());
    for (std::size_t i = 0; i < stream.size(); ++i) {
        try {
            auto report = ik.step(state, stream[i]);
            out.steps.push_back({state.q, state.nu, std::move(report)});
        } catch (const Error& e) {
            out.error = e.what();
            out.failed_index = i;
            break;
        }
    }
    return out;
}

}  // namespace iktrack
