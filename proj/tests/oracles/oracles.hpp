#pragma once

// Reference implementations that share no code with the library beyond the
// model data types. Deliberately slow and literal.

#include <optional>
#include <utility>

#include <Eigen/Core>

#include "iktrack/model.hpp"

namespace oracle {

struct Pose {
    Eigen::Vector3d p;
    Eigen::Matrix3d R;
};

/// Recursive composition of 4x4 homogeneous transforms, finding each parent
/// joint by linear search.
Pose naive_fk(const iktrack::KinematicModel& model, const iktrack::Configuration& q,
              std::size_t link);

/// Central differences of naive_fk along each velocity coordinate. Base
/// angular perturbations rotate about inertial axes.
Eigen::Matrix<double, 6, Eigen::Dynamic> fd_jacobian(const iktrack::KinematicModel& model,
                                                     const iktrack::Configuration& q,
                                                     std::size_t link, double h = 1e-6);

/// Stacked version following the model's target declaration order.
Eigen::MatrixXd fd_stacked_jacobian(const iktrack::KinematicModel& model,
                                    const iktrack::Configuration& q, double h = 1e-6);

struct QpAnswer {
    Eigen::VectorXd x;
    double objective;
};

/// Solves the KKT system for every subset of rows held as equalities and
/// keeps the feasible, dual-feasible point with the lowest objective.
/// Empty when no subset qualifies (infeasible problem).
std::optional<QpAnswer> enumerate_qp(const Eigen::MatrixXd& J, const Eigen::VectorXd& target,
                                     const Eigen::MatrixXd& G, const Eigen::VectorXd& g,
                                     double lambda);

/// (JᵀJ + λI)⁻¹·Jᵀ·target through the normal equations.
Eigen::VectorXd normal_equations(const Eigen::MatrixXd& J, const Eigen::VectorXd& target,
                                 double lambda);

/// Rotation about a unit axis by angle (Eigen::AngleAxis).
Eigen::Matrix3d rot(const Eigen::Vector3d& axis, double angle);

/// Relative rotation angle in [0, π].
double angle_between(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

}  // namespace oracle
