#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "iktrack/so3.hpp"

namespace iktrack {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kUnbounded = std::numeric_limits<double>::infinity();

struct Link {
    std::string name;
    bool is_dummy = false;  ///< zero-size connector between single-DoF joints
};

/// One revolute degree of freedom. The child link frame is the joint frame
/// rotated by s about `axis`; the joint frame sits at `origin_xyz` with
/// orientation `origin_rpy` in the parent link frame.
struct Joint {
    std::string name;
    Vec3 axis = Vec3::UnitZ();
    std::size_t parent_link = 0;
    std::size_t child_link = 0;
    Vec3 origin_xyz = Vec3::Zero();
    Vec3 origin_rpy = Vec3::Zero();
    std::optional<std::pair<double, double>> pos_limits;  ///< (lower, upper) rad
    std::optional<double> vel_limit;                      ///< rad/s

    Rotation origin_rotation() const {
        return Rotation::from_rpy(origin_rpy.x(), origin_rpy.y(), origin_rpy.z());
    }
};

/// Linear inequality rows A·s ≤ b_q (configuration) with paired velocity
/// bounds b_nu. Unbounded entries are +infinity.
struct ConstraintRows {
    MatrixXd A;
    VectorXd b_q;
    VectorXd b_nu;

    std::size_t rows() const { return static_cast<std::size_t>(A.rows()); }
};

/// Where a row of KinematicModel::constraints() came from.
struct ConstraintOrigin {
    enum class Kind { UpperLimit, LowerLimit, Coupled };
    Kind kind;
    std::size_t index;  ///< joint index for limits, explicit row index for Coupled
};

/// Immutable floating-base kinematic tree. Construction validates the tree,
/// names, axes and constraint dimensions and throws ValidationError.
class KinematicModel {
public:
    KinematicModel(std::vector<Link> links, std::vector<Joint> joints, std::size_t base_link,
                   std::vector<std::size_t> position_targets,
                   std::vector<std::size_t> orientation_targets,
                   ConstraintRows coupled = {});

    std::size_t dofs() const noexcept { return joints_.size(); }
    std::size_t velocity_size() const noexcept { return joints_.size() + 6; }

    const std::vector<Link>& links() const noexcept { return links_; }
    const std::vector<Joint>& joints() const noexcept { return joints_; }
    std::size_t base_link() const noexcept { return base_; }

    const std::vector<std::size_t>& position_targets() const noexcept { return pos_targets_; }
    const std::vector<std::size_t>& orientation_targets() const noexcept { return rot_targets_; }
    std::size_t target_rows() const noexcept {
        return 3 * (pos_targets_.size() + rot_targets_.size());
    }

    /// Throws UnknownFrame.
    std::size_t link_index(std::string_view name) const;
    std::optional<std::size_t> find_link(std::string_view name) const;

    /// Joint whose child is `link`; empty for the base.
    std::optional<std::size_t> parent_joint(std::size_t link) const { return parent_joint_[link]; }
    /// Joints from the base down to `link`, root first.
    const std::vector<std::size_t>& joint_path(std::size_t link) const { return paths_[link]; }
    /// Cached rotation of the joint frame in its parent link frame.
    const Mat3& origin_rotation(std::size_t joint) const { return origin_rot_[joint]; }
    /// Joints ordered so that every parent precedes its children.
    const std::vector<std::size_t>& joint_order() const noexcept { return order_; }

    /// All configuration/velocity limit rows: joint limits first (upper, then
    /// lower, per joint in index order), then the explicit coupled rows.
    const ConstraintRows& constraints() const noexcept { return rows_; }
    const std::vector<ConstraintOrigin>& constraint_origins() const noexcept { return origins_; }
    /// The explicit coupled rows only, as declared.
    const ConstraintRows& coupled_constraints() const noexcept { return coupled_; }

    /// Copy with every position/velocity limit and coupled row removed.
    KinematicModel without_limits() const;

private:
    void validate() const;
    void build_indices();
    void build_constraints();

    std::vector<Link> links_;
    std::vector<Joint> joints_;
    std::size_t base_;
    std::vector<std::size_t> pos_targets_;
    std::vector<std::size_t> rot_targets_;
    ConstraintRows coupled_;

    std::unordered_map<std::string, std::size_t> link_by_name_;
    std::vector<std::optional<std::size_t>> parent_joint_;
    std::vector<std::vector<std::size_t>> paths_;
    std::vector<std::size_t> order_;
    std::vector<Mat3> origin_rot_;
    ConstraintRows rows_;
    std::vector<ConstraintOrigin> origins_;
};

/// q = (base position, base rotation, joint positions).
struct Configuration {
    Vec3 base_pos = Vec3::Zero();
    Rotation base_rot;
    VectorXd s;

    static Configuration zero(std::size_t dofs) {
        return Configuration{Vec3::Zero(), Rotation::identity(), VectorXd::Zero(static_cast<Eigen::Index>(dofs))};
    }
};

/// ν = (base linear velocity, base angular velocity, joint velocities), all
/// base quantities in the inertial frame.
struct Velocity {
    Vec3 base_lin = Vec3::Zero();
    Vec3 base_ang = Vec3::Zero();
    VectorXd s_dot;

    static Velocity zero(std::size_t dofs) {
        return Velocity{Vec3::Zero(), Vec3::Zero(), VectorXd::Zero(static_cast<Eigen::Index>(dofs))};
    }
    /// Stacked (base_lin, base_ang, s_dot).
    VectorXd stacked() const;
    static Velocity from_stacked(const VectorXd& nu);
};

struct Pose {
    Vec3 position = Vec3::Zero();
    Rotation rotation;
};

/// World poses of every link for one configuration.
struct LinkPoses {
    std::vector<Vec3> position;
    std::vector<Rotation> rotation;
};

LinkPoses compute_link_poses(const KinematicModel& model, const Configuration& q);
void compute_link_poses(const KinematicModel& model, const Configuration& q, LinkPoses& out);

/// Throws UnknownFrame.
Pose forward_kinematics(const KinematicModel& model, const Configuration& q,
                        std::string_view frame);

using Jacobian6 = Eigen::Matrix<double, 6, Eigen::Dynamic>;

/// Mixed-representation frame Jacobian: rows (linear; angular), columns
/// (base_lin, base_ang, s). Throws UnknownFrame.
Jacobian6 jacobian(const KinematicModel& model, const Configuration& q, std::string_view frame);
Jacobian6 jacobian(const KinematicModel& model, const LinkPoses& poses, std::size_t link);

/// Target-frame poses in declaration order: positions of the position targets,
/// then rotations of the orientation targets.
struct StackedPose {
    std::vector<Vec3> positions;
    std::vector<Rotation> rotations;
};

StackedPose stacked_forward_kinematics(const KinematicModel& model, const Configuration& q);
StackedPose stacked_forward_kinematics(const KinematicModel& model, const LinkPoses& poses);

/// (3·n_p + 3·n_o) × (n + 6): linear rows of the position targets, then
/// angular rows of the orientation targets.
MatrixXd stacked_jacobian(const KinematicModel& model, const Configuration& q);
void stacked_jacobian(const KinematicModel& model, const LinkPoses& poses, MatrixXd& out);

/// q ⊕ dt·ν: Euler step on base position and joints, exponential map on the
/// base rotation (ν's angular part is inertial).
Configuration integrate(const Configuration& q, const Velocity& nu, double dt);

}  // namespace iktrack
