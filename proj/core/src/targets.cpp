#include "iktrack/targets.hpp"

#include <string>

#include "iktrack/error.hpp"

namespace iktrack {

void check_sample(const KinematicModel& model, const TargetSample& sample) {
    const auto np = model.position_targets().size();
    const auto no = model.orientation_targets().size();
    auto expect = [](const char* what, std::size_t got, std::size_t want) {
        if (got != want) {
            throw SchemaMismatch(std::string("sample has ") + std::to_string(got) + " " + what +
                                 ", model declares " + std::to_string(want));
        }
    };
    expect("positions", sample.positions.size(), np);
    expect("linear velocities", sample.lin_vels.size(), np);
    expect("rotations", sample.rotations.size(), no);
    expect("angular velocities", sample.ang_vels.size(), no);
}

VectorXd stacked_velocity(const TargetSample& sample) {
    VectorXd v(static_cast<Eigen::Index>(3 * (sample.lin_vels.size() + sample.ang_vels.size())));
    Eigen::Index row = 0;
    for (const auto& l : sample.lin_vels) {
        v.segment<3>(row) = l;
        row += 3;
    }
    for (const auto& w : sample.ang_vels) {
        v.segment<3>(row) = w;
        row += 3;
    }
    return v;
}

TargetSample sample_from_state(const KinematicModel& model, const Configuration& q,
                               const Velocity& nu, double t) {
    const auto poses = compute_link_poses(model, q);
    auto stacked = stacked_forward_kinematics(model, poses);
    MatrixXd J;
    stacked_jacobian(model, poses, J);
    const VectorXd v = J * nu.stacked();

    TargetSample s;
    s.t = t;
    s.positions = std::move(stacked.positions);
    s.rotations = std::move(stacked.rotations);
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < s.positions.size(); ++i, row += 3) {
        s.lin_vels.emplace_back(v.segment<3>(row));
    }
    for (std::size_t i = 0; i < s.rotations.size(); ++i, row += 3) {
        s.ang_vels.emplace_back(v.segment<3>(row));
    }
    return s;
}

}  // namespace iktrack
