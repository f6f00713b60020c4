#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace iktrack {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Frobenius tolerance on RᵀR − I accepted by the checked Rotation constructor.
inline constexpr double kRotationTolerance = 1e-9;

/// S(v): the matrix with S(v)·u = v × u.
Mat3 skew(const Vec3& v);

/// Inverse of skew(). Throws NotSkewSymmetric when ‖a + aᵀ‖_F > 1e-9.
Vec3 vee(const Mat3& a);

/// sk(A) = (A − Aᵀ)/2.
Mat3 sk(const Mat3& a);

/// ‖mᵀm − I‖_F.
double orthonormality_error(const Mat3& m);

/// An element of SO(3). The public constructor validates; products and
/// transposes of valid rotations are trusted without re-checking.
class Rotation {
public:
    Rotation() noexcept : m_(Mat3::Identity()) {}

    /// Throws InvalidRotation unless ‖mᵀm − I‖_F ≤ tolerance and det(m) > 0.
    explicit Rotation(const Mat3& m, double tolerance = kRotationTolerance);

    static Rotation identity() noexcept { return Rotation(); }
    /// Rotation of `angle` rad about `axis` (normalized internally).
    static Rotation about_axis(const Vec3& axis, double angle);
    /// Exponential map of a rotation vector (Rodrigues).
    static Rotation exp(const Vec3& rotation_vector);
    /// Fixed-axis roll/pitch/yaw, R = Rz(yaw)·Ry(pitch)·Rx(roll).
    static Rotation from_rpy(double roll, double pitch, double yaw);

    const Mat3& matrix() const noexcept { return m_; }

    Rotation transpose() const noexcept { return Rotation(m_.transpose(), Trusted{}); }
    Rotation operator*(const Rotation& rhs) const noexcept {
        return Rotation(m_ * rhs.m_, Trusted{});
    }
    Vec3 operator*(const Vec3& v) const noexcept { return m_ * v; }

    /// Angle in [0, π] of the relative rotation thisᵀ·other.
    double angle_to(const Rotation& other) const;

    /// Inverse of from_rpy for |pitch| < π/2.
    Vec3 rpy() const;

    bool operator==(const Rotation& rhs) const noexcept { return m_ == rhs.m_; }

private:
    struct Trusted {};
    Rotation(const Mat3& m, Trusted) noexcept : m_(m) {}

    friend Rotation trusted_rotation(const Mat3& m) noexcept;

    Mat3 m_;
};

/// Wraps `m` as a Rotation without checking it. Only for matrices that are
/// rotations by construction, or integrator states kept near SO(3) by
/// Baumgarte stabilization.
Rotation trusted_rotation(const Mat3& m) noexcept;

/// Integrator state: a 3×3 matrix that may drift off SO(3) between
/// Baumgarte corrections.
struct DriftingRotation {
    Mat3 m = Mat3::Identity();

    DriftingRotation() = default;
    explicit DriftingRotation(const Mat3& matrix) : m(matrix) {}
    explicit DriftingRotation(const Rotation& r) : m(r.matrix()) {}

    double orthonormality_error() const { return iktrack::orthonormality_error(m); }
};

/// sk(estimateᵀ·target)ᵛ. For a relative rotation of θ about the unit axis n
/// (in the estimate's frame) this equals sin(θ)·n; it vanishes at θ = π.
Vec3 orientation_residual(const Rotation& estimate, const Rotation& target);

/// The same residual re-expressed in the inertial frame:
/// estimate·sk(estimateᵀ·target)ᵛ = sk(target·estimateᵀ)ᵛ.
Vec3 orientation_residual_inertial(const Rotation& estimate, const Rotation& target);

struct BaumgarteConfig {
    enum class Scheme {
        /// R⁺ = R + dt·R·(S(ω) + A).
        ForwardEuler,
        /// R⁺ = R·(exp(dt·S(ω)) + dt·A): the S(ω) flow is integrated exactly,
        /// the stabilization term explicitly.
        ExponentialSplit,
    };

    double rho = 10.0;  ///< 1/s, pull toward orthonormality
    double dt = 0.01;   ///< s
    Scheme scheme = Scheme::ExponentialSplit;

    /// Throws std::invalid_argument unless rho > 0 and dt > 0.
    void validate() const;
};

/// A = (ρ/2)·((RᵀR)⁻¹ − I). Exactly zero when RᵀR == I.
/// Throws SingularMatrix when RᵀR is not invertible.
Mat3 baumgarte_correction(const Mat3& r_prev, double rho);

/// One integration step of Ṙ = R·(S(ω) + A). `omega` is the angular velocity
/// in the rotating frame (for an inertial ω_I pass r_prevᵀ·ω_I).
/// Throws SingularMatrix when det(r_prev) ≤ 1e-12.
DriftingRotation baumgarte_step(const Mat3& r_prev, const Vec3& omega,
                                const BaumgarteConfig& cfg);

inline DriftingRotation baumgarte_step(const DriftingRotation& r_prev, const Vec3& omega,
                                       const BaumgarteConfig& cfg) {
    return baumgarte_step(r_prev.m, omega, cfg);
}

inline DriftingRotation baumgarte_step(const Rotation& r_prev, const Vec3& omega,
                                       const BaumgarteConfig& cfg) {
    return baumgarte_step(r_prev.matrix(), omega, cfg);
}

/// Nearest rotation in Frobenius norm (polar factor). Diagnostics and output
/// sanitation only. Throws DegenerateMatrix for det ≤ 0 or near-singular input.
Rotation project_to_so3(const Mat3& a);

}  // namespace iktrack
