#pragma once

#include <vector>

#include "iktrack/model.hpp"

namespace iktrack {

/// Pose and velocity targets for every declared frame at one instant.
/// Positions and linear velocities follow the model's position targets,
/// rotations and angular velocities its orientation targets.
struct TargetSample {
    double t = 0.0;
    std::vector<Vec3> positions;
    std::vector<Rotation> rotations;
    std::vector<Vec3> lin_vels;
    std::vector<Vec3> ang_vels;
};

/// Throws SchemaMismatch when the target counts differ from the model's.
void check_sample(const KinematicModel& model, const TargetSample& sample);

/// Stacked v = (lin_vels, ang_vels).
VectorXd stacked_velocity(const TargetSample& sample);

/// The sample generated exactly by (q, ν): stacked FK and J(q)·ν.
TargetSample sample_from_state(const KinematicModel& model, const Configuration& q,
                               const Velocity& nu, double t);

}  // namespace iktrack
