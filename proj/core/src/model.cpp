#include "iktrack/model.hpp"

#include <cmath>
#include <deque>
#include <unordered_set>

#include "iktrack/error.hpp"

namespace iktrack {

namespace {

bool finite3(const Vec3& v) { return v.allFinite(); }

}  // namespace

KinematicModel::KinematicModel(std::vector<Link> links, std::vector<Joint> joints,
                               std::size_t base_link, std::vector<std::size_t> position_targets,
                               std::vector<std::size_t> orientation_targets,
                               ConstraintRows coupled)
    : links_(std::move(links)),
      joints_(std::move(joints)),
      base_(base_link),
      pos_targets_(std::move(position_targets)),
      rot_targets_(std::move(orientation_targets)),
      coupled_(std::move(coupled)) {
    const auto n = static_cast<Eigen::Index>(joints_.size());
    if (coupled_.A.size() == 0 && coupled_.b_q.size() == 0 && coupled_.b_nu.size() == 0) {
        coupled_.A.resize(0, n);
    }
    validate();
    build_indices();
    build_constraints();
}

void KinematicModel::validate() const {
    if (links_.empty()) {
        throw ValidationError("empty model", "a model needs at least the base link");
    }
    std::unordered_set<std::string> names;
    for (const auto& link : links_) {
        if (link.name.empty()) {
            throw ValidationError("empty name", "links must be named");
        }
        if (!names.insert(link.name).second) {
            throw ValidationError("duplicate link", link.name);
        }
    }
    if (base_ >= links_.size()) {
        throw ValidationError("base link", "base index out of range");
    }

    std::unordered_set<std::string> joint_names;
    std::vector<int> parents(links_.size(), 0);
    for (const auto& j : joints_) {
        if (j.name.empty()) {
            throw ValidationError("empty name", "joints must be named");
        }
        if (!joint_names.insert(j.name).second) {
            throw ValidationError("duplicate joint", j.name);
        }
        if (j.parent_link >= links_.size() || j.child_link >= links_.size()) {
            throw ValidationError("joint link index", j.name);
        }
        if (j.parent_link == j.child_link) {
            throw ValidationError("cycle", "joint '" + j.name + "' connects a link to itself");
        }
        if (!finite3(j.axis) || std::abs(j.axis.norm() - 1.0) > 1e-9) {
            throw ValidationError("non-unit axis", j.name);
        }
        if (!finite3(j.origin_xyz) || !finite3(j.origin_rpy)) {
            throw ValidationError("non-finite origin", j.name);
        }
        if (j.pos_limits) {
            const auto [lo, hi] = *j.pos_limits;
            if (std::isnan(lo) || std::isnan(hi) || lo > hi || lo == kUnbounded ||
                hi == -kUnbounded) {
                throw ValidationError("limit order", j.name);
            }
        }
        if (j.vel_limit && !(*j.vel_limit > 0.0)) {
            throw ValidationError("velocity limit", j.name);
        }
        ++parents[j.child_link];
    }
    for (std::size_t l = 0; l < links_.size(); ++l) {
        if (l == base_) {
            if (parents[l] != 0) {
                throw ValidationError("base has parent", links_[l].name);
            }
        } else if (parents[l] == 0) {
            throw ValidationError("missing parent", links_[l].name);
        } else if (parents[l] > 1) {
            throw ValidationError("multiple parents", links_[l].name);
        }
    }

    // every non-base link has one parent; unreachable links therefore sit on a cycle
    std::vector<std::vector<std::size_t>> children(links_.size());
    for (const auto& j : joints_) {
        children[j.parent_link].push_back(j.child_link);
    }
    std::vector<bool> seen(links_.size(), false);
    std::deque<std::size_t> queue{base_};
    seen[base_] = true;
    std::size_t reached = 1;
    while (!queue.empty()) {
        const auto l = queue.front();
        queue.pop_front();
        for (auto c : children[l]) {
            if (!seen[c]) {
                seen[c] = true;
                ++reached;
                queue.push_back(c);
            }
        }
    }
    if (reached != links_.size()) {
        throw ValidationError("cycle", "links unreachable from the base");
    }

    std::unordered_set<std::size_t> targets;
    for (auto t : pos_targets_) {
        if (t >= links_.size()) {
            throw ValidationError("unknown target", "position target index out of range");
        }
        if (!targets.insert(t).second) {
            throw ValidationError("duplicate target", links_[t].name);
        }
    }
    targets.clear();
    for (auto t : rot_targets_) {
        if (t >= links_.size()) {
            throw ValidationError("unknown target", "orientation target index out of range");
        }
        if (!targets.insert(t).second) {
            throw ValidationError("duplicate target", links_[t].name);
        }
    }

    const auto n = static_cast<Eigen::Index>(joints_.size());
    const auto m = coupled_.A.rows();
    if (coupled_.A.cols() != n || coupled_.b_q.size() != m || coupled_.b_nu.size() != m) {
        throw ValidationError("constraint dimensions",
                              "A must be m×n with b_q and b_nu of length m");
    }
    if (!coupled_.A.allFinite()) {
        throw ValidationError("constraint finite", "A has non-finite entries");
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        if (std::isnan(coupled_.b_q(i)) || coupled_.b_q(i) == -kUnbounded) {
            throw ValidationError("constraint finite", "b_q row " + std::to_string(i));
        }
        if (!(coupled_.b_nu(i) > 0.0)) {
            throw ValidationError("constraint finite",
                                  "b_nu row " + std::to_string(i) + " must be positive");
        }
    }
}

void KinematicModel::build_indices() {
    for (std::size_t l = 0; l < links_.size(); ++l) {
        link_by_name_.emplace(links_[l].name, l);
    }
    parent_joint_.assign(links_.size(), std::nullopt);
    std::vector<std::vector<std::size_t>> child_joints(links_.size());
    for (std::size_t j = 0; j < joints_.size(); ++j) {
        parent_joint_[joints_[j].child_link] = j;
        child_joints[joints_[j].parent_link].push_back(j);
    }
    origin_rot_.clear();
    origin_rot_.reserve(joints_.size());
    for (const auto& j : joints_) {
        origin_rot_.push_back(j.origin_rotation().matrix());
    }
    paths_.assign(links_.size(), {});
    order_.clear();
    order_.reserve(joints_.size());
    std::deque<std::size_t> queue{base_};
    while (!queue.empty()) {
        const auto l = queue.front();
        queue.pop_front();
        for (auto j : child_joints[l]) {
            order_.push_back(j);
            const auto c = joints_[j].child_link;
            paths_[c] = paths_[l];
            paths_[c].push_back(j);
            queue.push_back(c);
        }
    }
}

void KinematicModel::build_constraints() {
    const auto n = static_cast<Eigen::Index>(joints_.size());
    std::vector<ConstraintOrigin> origins;
    std::vector<std::pair<double, double>> bounds;  // (b_q, b_nu)
    std::vector<Eigen::Index> joint_col;
    std::vector<double> sign;
    for (std::size_t j = 0; j < joints_.size(); ++j) {
        const auto& joint = joints_[j];
        if (!joint.pos_limits && !joint.vel_limit) {
            continue;
        }
        const double vel = joint.vel_limit.value_or(kUnbounded);
        const double upper = joint.pos_limits ? joint.pos_limits->second : kUnbounded;
        const double lower = joint.pos_limits ? joint.pos_limits->first : -kUnbounded;
        origins.push_back({ConstraintOrigin::Kind::UpperLimit, j});
        bounds.emplace_back(upper, vel);
        joint_col.push_back(static_cast<Eigen::Index>(j));
        sign.push_back(1.0);
        origins.push_back({ConstraintOrigin::Kind::LowerLimit, j});
        bounds.emplace_back(-lower, vel);
        joint_col.push_back(static_cast<Eigen::Index>(j));
        sign.push_back(-1.0);
    }
    const auto limit_rows = static_cast<Eigen::Index>(origins.size());
    const auto m = limit_rows + coupled_.A.rows();
    rows_.A = MatrixXd::Zero(m, n);
    rows_.b_q.resize(m);
    rows_.b_nu.resize(m);
    for (Eigen::Index i = 0; i < limit_rows; ++i) {
        rows_.A(i, joint_col[static_cast<std::size_t>(i)]) = sign[static_cast<std::size_t>(i)];
        rows_.b_q(i) = bounds[static_cast<std::size_t>(i)].first;
        rows_.b_nu(i) = bounds[static_cast<std::size_t>(i)].second;
    }
    for (Eigen::Index i = 0; i < coupled_.A.rows(); ++i) {
        rows_.A.row(limit_rows + i) = coupled_.A.row(i);
        rows_.b_q(limit_rows + i) = coupled_.b_q(i);
        rows_.b_nu(limit_rows + i) = coupled_.b_nu(i);
        origins.push_back({ConstraintOrigin::Kind::Coupled, static_cast<std::size_t>(i)});
    }
    origins_ = std::move(origins);
}

std::size_t KinematicModel::link_index(std::string_view name) const {
    if (auto idx = find_link(name)) {
        return *idx;
    }
    throw UnknownFrame(std::string(name));
}

std::optional<std::size_t> KinematicModel::find_link(std::string_view name) const {
    auto it = link_by_name_.find(std::string(name));
    if (it == link_by_name_.end()) {
        return std::nullopt;
    }
    return it->second;
}

KinematicModel KinematicModel::without_limits() const {
    auto joints = joints_;
    for (auto& j : joints) {
        j.pos_limits.reset();
        j.vel_limit.reset();
    }
    return KinematicModel(links_, std::move(joints), base_, pos_targets_, rot_targets_);
}

VectorXd Velocity::stacked() const {
    VectorXd nu(6 + s_dot.size());
    nu << base_lin, base_ang, s_dot;
    return nu;
}

Velocity Velocity::from_stacked(const VectorXd& nu) {
    Velocity v;
    v.base_lin = nu.head<3>();
    v.base_ang = nu.segment<3>(3);
    v.s_dot = nu.tail(nu.size() - 6);
    return v;
}

void compute_link_poses(const KinematicModel& model, const Configuration& q, LinkPoses& out) {
    const auto& links = model.links();
    out.position.resize(links.size());
    out.rotation.resize(links.size());
    out.position[model.base_link()] = q.base_pos;
    out.rotation[model.base_link()] = q.base_rot;
    const auto& joints = model.joints();
    for (auto j : model.joint_order()) {
        const auto& joint = joints[j];
        const auto& parent_rot = out.rotation[joint.parent_link].matrix();
        out.position[joint.child_link] =
            out.position[joint.parent_link] + parent_rot * joint.origin_xyz;
        const Mat3 joint_frame = parent_rot * model.origin_rotation(j);
        const Mat3 motion =
            Rotation::exp(joint.axis * q.s(static_cast<Eigen::Index>(j))).matrix();
        out.rotation[joint.child_link] = trusted_rotation(joint_frame * motion);
    }
}

LinkPoses compute_link_poses(const KinematicModel& model, const Configuration& q) {
    LinkPoses poses;
    compute_link_poses(model, q, poses);
    return poses;
}

Pose forward_kinematics(const KinematicModel& model, const Configuration& q,
                        std::string_view frame) {
    const auto link = model.link_index(frame);
    if (link == model.base_link()) {
        return Pose{q.base_pos, q.base_rot};
    }
    const auto poses = compute_link_poses(model, q);
    return Pose{poses.position[link], poses.rotation[link]};
}

Jacobian6 jacobian(const KinematicModel& model, const LinkPoses& poses, std::size_t link) {
    const auto n = static_cast<Eigen::Index>(model.dofs());
    Jacobian6 jac = Jacobian6::Zero(6, n + 6);
    const Vec3& p = poses.position[link];
    const Vec3 lever = p - poses.position[model.base_link()];
    jac.block<3, 3>(0, 0).setIdentity();
    jac.block<3, 3>(0, 3) = -skew(lever);
    jac.block<3, 3>(3, 3).setIdentity();
    const auto& joints = model.joints();
    for (auto j : model.joint_path(link)) {
        const auto& joint = joints[j];
        const Vec3 axis = poses.rotation[joint.child_link] * joint.axis;
        const Vec3& origin = poses.position[joint.child_link];
        const auto col = 6 + static_cast<Eigen::Index>(j);
        jac.block<3, 1>(0, col) = axis.cross(p - origin);
        jac.block<3, 1>(3, col) = axis;
    }
    return jac;
}

Jacobian6 jacobian(const KinematicModel& model, const Configuration& q, std::string_view frame) {
    const auto link = model.link_index(frame);
    return jacobian(model, compute_link_poses(model, q), link);
}

StackedPose stacked_forward_kinematics(const KinematicModel& model, const LinkPoses& poses) {
    StackedPose out;
    out.positions.reserve(model.position_targets().size());
    out.rotations.reserve(model.orientation_targets().size());
    for (auto l : model.position_targets()) {
        out.positions.push_back(poses.position[l]);
    }
    for (auto l : model.orientation_targets()) {
        out.rotations.push_back(poses.rotation[l]);
    }
    return out;
}

StackedPose stacked_forward_kinematics(const KinematicModel& model, const Configuration& q) {
    return stacked_forward_kinematics(model, compute_link_poses(model, q));
}

void stacked_jacobian(const KinematicModel& model, const LinkPoses& poses, MatrixXd& out) {
    const auto n = static_cast<Eigen::Index>(model.dofs());
    const auto rows = static_cast<Eigen::Index>(model.target_rows());
    out.setZero(rows, n + 6);
    const auto& joints = model.joints();
    const Vec3& base_p = poses.position[model.base_link()];
    Eigen::Index row = 0;
    for (auto l : model.position_targets()) {
        const Vec3& p = poses.position[l];
        out.block<3, 3>(row, 0).setIdentity();
        out.block<3, 3>(row, 3) = -skew(p - base_p);
        for (auto j : model.joint_path(l)) {
            const auto& joint = joints[j];
            const Vec3 axis = poses.rotation[joint.child_link] * joint.axis;
            out.block<3, 1>(row, 6 + static_cast<Eigen::Index>(j)) =
                axis.cross(p - poses.position[joint.child_link]);
        }
        row += 3;
    }
    for (auto l : model.orientation_targets()) {
        out.block<3, 3>(row, 3).setIdentity();
        for (auto j : model.joint_path(l)) {
            const auto& joint = joints[j];
            out.block<3, 1>(row, 6 + static_cast<Eigen::Index>(j)) =
                poses.rotation[joint.child_link] * joint.axis;
        }
        row += 3;
    }
}

MatrixXd stacked_jacobian(const KinematicModel& model, const Configuration& q) {
    MatrixXd out;
    stacked_jacobian(model, compute_link_poses(model, q), out);
    return out;
}

Configuration integrate(const Configuration& q, const Velocity& nu, double dt) {
    Configuration out;
    out.base_pos = q.base_pos + dt * nu.base_lin;
    out.base_rot = Rotation::exp(dt * nu.base_ang) * q.base_rot;
    out.s = q.s + dt * nu.s_dot;
    return out;
}

}  // namespace iktrack
