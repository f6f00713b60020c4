#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "iktrack/model.hpp"
#include "iktrack/qp.hpp"
#include "iktrack/targets.hpp"

namespace iktrack {

struct InstantaneousConfig {
    double position_weight = 1.0;     ///< K_r on position blocks (1/m)
    double orientation_weight = 1.0;  ///< K_r on orientation blocks
    double stop_tol = 1e-4;           ///< on ‖K_r·r‖₂
    std::size_t max_iters = 100;
    double lm_lambda0 = 1e-3;
    double velocity_damping = 1e-6;   ///< damping of the follow-up velocity QP

    /// Throws std::invalid_argument.
    void validate() const;
};

struct WholeBodyResult {
    Configuration q;
    std::size_t iterations = 0;
    double error = 0.0;  ///< final ‖K_r·r‖₂
    bool converged = false;
};

/// Damped Gauss-Newton (Levenberg-Marquardt) on the stacked pose residual,
/// warm-started from q_init. Joint limits are enforced by projecting every
/// iterate (clamping for box rows, Euclidean projection when coupled rows
/// exist). Only steps that lower the weighted error are accepted.
WholeBodyResult solve_whole_body(const KinematicModel& model, const TargetSample& sample,
                                 const Configuration& q_init, const InstantaneousConfig& cfg = {});

/// Chain of joints between two consecutive orientation targets.
struct Subsystem {
    std::vector<std::size_t> joint_indices;  ///< root first
    std::size_t root_link = 0;
    std::size_t tip_link = 0;
    std::size_t root_target = 0;  ///< index into the model's orientation targets
    std::size_t tip_target = 0;
};

/// Cuts the tree at every orientation-target link. Throws DecompositionError
/// when the base is not both a position and an orientation target, when a
/// joint lies between no target pair, or when a coupled constraint row spans
/// more than one subsystem.
std::vector<Subsystem> decompose_pairwise(const KinematicModel& model);

struct SubsystemReport {
    std::size_t iterations = 0;
    double error = 0.0;
    bool converged = false;
};

struct PairwiseResult {
    Configuration q;
    std::vector<SubsystemReport> subsystems;
};

struct PairwiseOptions {
    std::size_t threads = 1;
    /// Order in which subsystems are started; empty means declaration order.
    std::vector<std::size_t> execution_order;
};

/// Base pose copied from its targets, then every subsystem fitted
/// independently to its relative target pose. The merged configuration does
/// not depend on the execution order or thread count.
PairwiseResult solve_pairwise(const KinematicModel& model, const std::vector<Subsystem>& subsystems,
                              const TargetSample& sample, const Configuration& q_init,
                              const InstantaneousConfig& cfg = {},
                              const PairwiseOptions& options = {});

PairwiseResult solve_pairwise(const KinematicModel& model, const TargetSample& sample,
                              const Configuration& q_init, const InstantaneousConfig& cfg = {},
                              const PairwiseOptions& options = {});

/// Velocity for a solved configuration: argmin ‖v − J(q)·ν‖² + damping‖ν‖²
/// subject to A·ṡ ≤ b_nu on the bounded rows.
Velocity baseline_velocity(const KinematicModel& model, const Configuration& q,
                           const TargetSample& sample, double damping, QpSolver& solver);

}  // namespace iktrack
