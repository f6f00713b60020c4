#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "iktrack/model.hpp"
#include "iktrack/qp.hpp"
#include "iktrack/so3.hpp"
#include "iktrack/targets.hpp"

namespace iktrack {

/// Feedback gains. K holds one entry per stacked target row (3 per frame,
/// position frames first), K_g one entry per constraint row of the model.
class GainConfig {
public:
    /// Uniform gains with the stability guard K·dt ≤ 1. Throws InvalidGains.
    static GainConfig uniform(const KinematicModel& model, double dt, double K = 2.0,
                              double K_g = 10.0);
    /// Per-row gains with the stability guard. Throws InvalidGains.
    static GainConfig guarded(Eigen::VectorXd K, Eigen::VectorXd K_g, double dt,
                              double b_nu_default = 1e3);
    /// No positivity or stability checks. For gain sweeps and tests only.
    static GainConfig unguarded(Eigen::VectorXd K, Eigen::VectorXd K_g,
                                double b_nu_default = 1e3);
    static GainConfig unguarded_uniform(const KinematicModel& model, double K, double K_g);

    const Eigen::VectorXd& K() const noexcept { return K_; }
    const Eigen::VectorXd& K_g() const noexcept { return K_g_; }
    double b_nu_default() const noexcept { return b_nu_default_; }
    bool is_guarded() const noexcept { return guarded_; }

    /// Throws InvalidGains if guarded and the guard fails for `dt`, or if the
    /// sizes do not match the model.
    void check(const KinematicModel& model, double dt) const;

private:
    GainConfig(Eigen::VectorXd K, Eigen::VectorXd K_g, double b_nu_default, bool guarded)
        : K_(std::move(K)), K_g_(std::move(K_g)), b_nu_default_(b_nu_default), guarded_(guarded) {}

    Eigen::VectorXd K_;
    Eigen::VectorXd K_g_;
    double b_nu_default_;
    bool guarded_;
};

/// Stacked pose residual: position blocks target − estimate, orientation
/// blocks estimate·sk(estimateᵀ·target)ᵛ, i.e. the rotation residual in the
/// inertial frame so that it pairs with inertial angular velocities.
Eigen::VectorXd pose_residual(const KinematicModel& model, const Configuration& q,
                              const TargetSample& sample);
void pose_residual(const KinematicModel& model, const LinkPoses& poses,
                   const TargetSample& sample, Eigen::VectorXd& out);

/// u = v − J(q)·ν.
Eigen::VectorXd velocity_residual(const KinematicModel& model, const Configuration& q,
                                  const Velocity& nu, const TargetSample& sample);

/// v* = v + K∘r.
Eigen::VectorXd corrected_velocity(const TargetSample& sample, const Eigen::VectorXd& r,
                                   const GainConfig& gains);

struct LimitConstraints {
    Eigen::MatrixXd G;  ///< [0 | A], n + 6 columns
    Eigen::VectorXd g;  ///< tanh(K_g∘(b_q − A·s))∘b_nu
};

/// An unbounded b_q saturates the tanh (g = b_nu); unbounded b_nu entries
/// use gains.b_nu_default().
LimitConstraints build_limit_constraints(const KinematicModel& model, const Configuration& q,
                                         const GainConfig& gains);
void limit_bounds(const KinematicModel& model, const Eigen::VectorXd& s, const GainConfig& gains,
                  Eigen::VectorXd& g);

struct SolverState {
    Configuration q;  ///< base_rot is the Baumgarte-maintained integrator state
    Velocity nu;
    double t = 0.0;
    std::vector<std::size_t> last_active_set;
    std::size_t step_index = 0;
};

struct StepReport {
    Eigen::VectorXd residual_r;  ///< r(q_{k−1}, x_k)
    Eigen::VectorXd residual_u;  ///< v_k − J(q_{k−1})·ν_k
    QpStatus qp_status = QpStatus::Solved;
    std::size_t qp_iterations = 0;
    double step_wall_time = 0.0;         ///< s
    std::vector<bool> constraint_active;  ///< G_i·ν = g_i within 1e-6

    bool any_constraint_active() const;
};

/// Per-sample stepper: one stacked Jacobian, one QP solve, one integration.
/// Holds mutable workspace, so one instance per thread.
class DynamicalIk {
public:
    /// Throws InvalidGains (see GainConfig::check) and std::invalid_argument
    /// for an invalid Baumgarte config.
    DynamicalIk(const KinematicModel& model, GainConfig gains, BaumgarteConfig baumgarte = {},
                QpOptions qp = {}, double damping = 1e-6);

    const KinematicModel& model() const noexcept { return model_; }
    const GainConfig& gains() const noexcept { return gains_; }
    const BaumgarteConfig& baumgarte() const noexcept { return baumgarte_; }
    double dt() const noexcept { return baumgarte_.dt; }

    /// Zero joints, identity base at the first base position target (origin
    /// if the base is not a position target), stamped one period before
    /// `first` so that the first sample is stepped.
    SolverState initial_state(const TargetSample& first) const;
    SolverState initial_state(const Configuration& q0, double t_first) const;

    /// Advances `state` by one sample and returns the report computed before
    /// the update. Throws StaleSample if sample.t − state.t ≠ dt (±1e-9),
    /// SchemaMismatch for a sample that does not fit the model, and
    /// SolverFailure if the QP is infeasible or hits its iteration cap.
    /// On error the state is left untouched.
    StepReport step(SolverState& state, const TargetSample& sample);

private:
    const KinematicModel& model_;
    GainConfig gains_;
    BaumgarteConfig baumgarte_;
    QpOptions qp_options_;
    QpSolver solver_;
    LeastSquaresQP qp_;
    LinkPoses poses_;
    Eigen::VectorXd r_;
};

struct TrackedStep {
    Configuration q;  ///< state after the step
    Velocity nu;
    StepReport report;
};

struct TrackResult {
    std::vector<TrackedStep> steps;
    /// Set when a step threw; `steps` holds everything before it.
    std::optional<std::string> error;
    std::size_t failed_index = 0;
};

/// Folds step() over the stream. Without q0 the tracker starts from
/// initial_state(stream.front()).
TrackResult track(DynamicalIk& ik, const std::vector<TargetSample>& stream,
                  const std::optional<Configuration>& q0 = std::nullopt);

}  // namespace iktrack
