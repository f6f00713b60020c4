#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace iktrack {

/// minimize ½‖target − J·x‖² + ½·damping·‖x‖²  subject to  G·x ≤ g.
/// Rows with g = +inf are ignored.
struct LeastSquaresQP {
    Eigen::MatrixXd J;
    Eigen::VectorXd target;
    Eigen::MatrixXd G;
    Eigen::VectorXd g;
    double damping = 1e-6;
};

enum class QpStatus { Solved, MaxIterations, Infeasible };

std::string_view to_string(QpStatus status);

struct QPSolution {
    Eigen::VectorXd x;
    double objective = 0.0;
    /// Rows with g_i − G_i·x ≤ tol.
    std::vector<std::size_t> active_set;
    /// Rows the solver held as equalities at exit; feed back as a warm start.
    std::vector<std::size_t> working_set;
    /// One multiplier per row of G (zero for inactive rows).
    Eigen::VectorXd multipliers;
    std::size_t iterations = 0;
    QpStatus status = QpStatus::Solved;
};

struct QpOptions {
    double tol = 1e-8;
    /// 0 selects 10·(d + k).
    std::size_t max_iter = 0;
};

/// Dense strictly convex QP solver (dual active-set, Goldfarb-Idnani form).
/// Owns its workspace: keep one instance per thread and reuse it.
class QpSolver {
public:
    /// Throws RankDeficient when JᵀJ + damping·I is not positive definite,
    /// std::invalid_argument on inconsistent dimensions or negative damping.
    QPSolution solve(const LeastSquaresQP& problem, const QpOptions& options = {},
                     std::span<const std::size_t> warm_start = {});

private:
    void start_from(std::span<const std::size_t> warm_start);
    bool solve_gram(const std::vector<std::size_t>& set, const Eigen::VectorXd& rhs,
                    Eigen::VectorXd& out);

    Eigen::MatrixXd H_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
    Eigen::MatrixXd Z_;        // L⁻¹·Gᵀ, one column per row of G
    Eigen::VectorXd y0_;       // L⁻¹·Jᵀ·target
    Eigen::VectorXd y_;
    Eigen::VectorXd mu_;
    Eigen::VectorXd g_;
    std::vector<std::size_t> active_;
    std::vector<bool> in_active_;
    Eigen::MatrixXd gram_;
    Eigen::LDLT<Eigen::MatrixXd> gram_ldlt_;
};

/// Convenience wrapper around a temporary QpSolver.
QPSolution solve(const LeastSquaresQP& problem, double tol = 1e-8, std::size_t max_iter = 0);

/// (JᵀJ + λI)⁻¹·Jᵀ·target via Householder QR of the stacked system [J; √λ·I].
/// Throws RankDeficient when λ = 0 and J lacks full column rank.
Eigen::VectorXd solve_unconstrained(const Eigen::MatrixXd& J, const Eigen::VectorXd& target,
                                    double lambda);

}  // namespace iktrack
