#include "iktrack/so3.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "iktrack/error.hpp"

namespace iktrack {

Mat3 skew(const Vec3& v) {
    Mat3 s;
    s << 0.0, -v.z(), v.y(),
         v.z(), 0.0, -v.x(),
         -v.y(), v.x(), 0.0;
    return s;
}

Vec3 vee(const Mat3& a) {
    const double asym = (a + a.transpose()).norm();
    if (!(asym <= 1e-9)) {
        throw NotSkewSymmetric("vee: ‖A + Aᵀ‖_F = " + std::to_string(asym));
    }
    return Vec3(a(2, 1), a(0, 2), a(1, 0));
}

Mat3 sk(const Mat3& a) { return 0.5 * (a - a.transpose()); }

double orthonormality_error(const Mat3& m) {
    return (m.transpose() * m - Mat3::Identity()).norm();
}

Rotation::Rotation(const Mat3& m, double tolerance) : m_(m) {
    if (!m.allFinite()) {
        throw InvalidRotation("rotation has non-finite entries");
    }
    const double err = orthonormality_error(m);
    if (!(err <= tolerance)) {
        throw InvalidRotation("‖RᵀR − I‖_F = " + std::to_string(err) + " exceeds " +
                              std::to_string(tolerance));
    }
    if (!(m.determinant() > 0.0)) {
        throw InvalidRotation("rotation has non-positive determinant");
    }
}

Rotation Rotation::about_axis(const Vec3& axis, double angle) {
    const double n = axis.norm();
    if (!(n > 0.0)) {
        throw std::invalid_argument("about_axis: zero axis");
    }
    return exp(axis / n * angle);
}

Rotation Rotation::exp(const Vec3& w) {
    const double theta = w.norm();
    const Mat3 k = skew(w);
    if (theta < 1e-8) {
        // second-order Taylor expansion, exact to machine precision here
        return Rotation(Mat3::Identity() + k + 0.5 * k * k, Trusted{});
    }
    const double a = std::sin(theta) / theta;
    const double b = (1.0 - std::cos(theta)) / (theta * theta);
    return Rotation(Mat3::Identity() + a * k + b * k * k, Trusted{});
}

Rotation Rotation::from_rpy(double roll, double pitch, double yaw) {
    const Mat3 rx = exp(Vec3::UnitX() * roll).matrix();
    const Mat3 ry = exp(Vec3::UnitY() * pitch).matrix();
    const Mat3 rz = exp(Vec3::UnitZ() * yaw).matrix();
    return Rotation(rz * ry * rx, Trusted{});
}

double Rotation::angle_to(const Rotation& other) const {
    const double c = 0.5 * ((m_.transpose() * other.m_).trace() - 1.0);
    return std::acos(std::clamp(c, -1.0, 1.0));
}

Vec3 Rotation::rpy() const {
    const double pitch = std::asin(std::clamp(-m_(2, 0), -1.0, 1.0));
    const double roll = std::atan2(m_(2, 1), m_(2, 2));
    const double yaw = std::atan2(m_(1, 0), m_(0, 0));
    return Vec3(roll, pitch, yaw);
}

Rotation trusted_rotation(const Mat3& m) noexcept { return Rotation(m, Rotation::Trusted{}); }

Vec3 orientation_residual(const Rotation& estimate, const Rotation& target) {
    const Mat3 s = sk(estimate.matrix().transpose() * target.matrix());
    return Vec3(s(2, 1), s(0, 2), s(1, 0));
}

Vec3 orientation_residual_inertial(const Rotation& estimate, const Rotation& target) {
    const Mat3 s = sk(target.matrix() * estimate.matrix().transpose());
    return Vec3(s(2, 1), s(0, 2), s(1, 0));
}

void BaumgarteConfig::validate() const {
    if (!(rho > 0.0) || !std::isfinite(rho)) {
        throw std::invalid_argument("BaumgarteConfig: rho must be positive");
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw std::invalid_argument("BaumgarteConfig: dt must be positive");
    }
}

Mat3 baumgarte_correction(const Mat3& r_prev, double rho) {
    const Mat3 gram = r_prev.transpose() * r_prev;
    if (gram == Mat3::Identity()) {
        return Mat3::Zero();
    }
    Eigen::FullPivLU<Mat3> lu(gram);
    if (!lu.isInvertible()) {
        throw SingularMatrix("baumgarte: RᵀR is not invertible");
    }
    return 0.5 * rho * (lu.inverse() - Mat3::Identity());
}

DriftingRotation baumgarte_step(const Mat3& r_prev, const Vec3& omega,
                                const BaumgarteConfig& cfg) {
    if (!(std::abs(r_prev.determinant()) > 1e-12)) {
        throw SingularMatrix("baumgarte: previous rotation is singular");
    }
    const Mat3 a = baumgarte_correction(r_prev, cfg.rho);
    switch (cfg.scheme) {
        case BaumgarteConfig::Scheme::ForwardEuler:
            return DriftingRotation(r_prev + cfg.dt * r_prev * (skew(omega) + a));
        case BaumgarteConfig::Scheme::ExponentialSplit:
            break;
    }
    const Mat3 flow = Rotation::exp(cfg.dt * omega).matrix();
    return DriftingRotation(r_prev * (flow + cfg.dt * a));
}

Rotation project_to_so3(const Mat3& a) {
    if (!a.allFinite() || !(a.determinant() > 0.0)) {
        throw DegenerateMatrix("project_to_so3: determinant must be positive");
    }
    Eigen::JacobiSVD<Mat3> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 sv = svd.singularValues();
    if (!(sv(2) > 1e-12 * std::max(1.0, sv(0)))) {
        throw DegenerateMatrix("project_to_so3: near-singular matrix");
    }
    return trusted_rotation(svd.matrixU() * svd.matrixV().transpose());
}

}  // namespace iktrack
