#include "iktrack/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/QR>

#include "iktrack/error.hpp"

namespace iktrack {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_dimensions(const LeastSquaresQP& p) {
    if (p.target.size() != p.J.rows()) {
        throw std::invalid_argument("qp: target size does not match J rows");
    }
    if (p.G.rows() != p.g.size()) {
        throw std::invalid_argument("qp: g size does not match G rows");
    }
    if (p.G.rows() > 0 && p.G.cols() != p.J.cols()) {
        throw std::invalid_argument("qp: G and J column counts differ");
    }
    if (!(p.damping >= 0.0)) {
        throw std::invalid_argument("qp: damping must be non-negative");
    }
}

}  // namespace

std::string_view to_string(QpStatus status) {
    switch (status) {
        case QpStatus::Solved: return "solved";
        case QpStatus::MaxIterations: return "max_iterations";
        case QpStatus::Infeasible: return "infeasible";
    }
    return "unknown";
}

bool QpSolver::solve_gram(const std::vector<std::size_t>& set, const VectorXd& rhs,
                          VectorXd& out) {
    const auto m = static_cast<Index>(set.size());
    gram_.resize(m, m);
    for (Index a = 0; a < m; ++a) {
        for (Index b = 0; b <= a; ++b) {
            const double v = Z_.col(static_cast<Index>(set[a]))
                                 .dot(Z_.col(static_cast<Index>(set[b])));
            gram_(a, b) = v;
            gram_(b, a) = v;
        }
    }
    gram_ldlt_.compute(gram_);
    if (gram_ldlt_.info() != Eigen::Success) {
        return false;
    }
    const auto& d = gram_ldlt_.vectorD();
    const double scale = std::max(1.0, gram_.diagonal().cwiseAbs().maxCoeff());
    if (d.size() > 0 && d.cwiseAbs().minCoeff() <= 1e-12 * scale) {
        return false;
    }
    out = gram_ldlt_.solve(rhs);
    return true;
}

void QpSolver::start_from(std::span<const std::size_t> warm_start) {
    active_.clear();
    const auto k = static_cast<std::size_t>(Z_.cols());
    for (auto i : warm_start) {
        if (i < k && std::isfinite(g_(static_cast<Index>(i))) && !in_active_[i]) {
            active_.push_back(i);
            in_active_[i] = true;
        }
    }
    // Equality-constrained solution on the guessed set, dropping rows whose
    // multipliers come out negative until the set is dual feasible.
    VectorXd rhs;
    VectorXd mu;
    while (!active_.empty()) {
        const auto m = static_cast<Index>(active_.size());
        rhs.resize(m);
        for (Index a = 0; a < m; ++a) {
            const auto i = static_cast<Index>(active_[a]);
            rhs(a) = Z_.col(i).dot(y0_) - g_(i);
        }
        if (!solve_gram(active_, rhs, mu)) {
            for (auto i : active_) {
                in_active_[i] = false;
            }
            active_.clear();
            break;
        }
        Index worst = 0;
        const double most_negative = mu.minCoeff(&worst);
        if (most_negative >= 0.0) {
            y_ = y0_;
            for (Index a = 0; a < m; ++a) {
                const auto i = static_cast<Index>(active_[a]);
                y_.noalias() -= mu(a) * Z_.col(i);
                mu_(i) = mu(a);
            }
            return;
        }
        in_active_[active_[static_cast<std::size_t>(worst)]] = false;
        active_.erase(active_.begin() + worst);
    }
    y_ = y0_;
}

QPSolution QpSolver::solve(const LeastSquaresQP& p, const QpOptions& options,
                           std::span<const std::size_t> warm_start) {
    check_dimensions(p);
    const Index d = p.J.cols();
    const Index k = p.G.rows();
    const std::size_t max_iter =
        options.max_iter > 0 ? options.max_iter : 10 * static_cast<std::size_t>(d + k);
    const double tol = options.tol;

    H_.resize(d, d);
    H_.setZero();
    H_.selfadjointView<Eigen::Lower>().rankUpdate(p.J.transpose());
    H_.diagonal().array() += p.damping;
    llt_.compute(H_);
    if (llt_.info() != Eigen::Success) {
        throw RankDeficient("qp: JᵀJ + damping·I is not positive definite");
    }
    const auto L = llt_.matrixL();
    y0_.noalias() = p.J.transpose() * p.target;
    L.solveInPlace(y0_);
    Z_ = p.G.transpose();
    if (k > 0) {
        L.solveInPlace(Z_);
    }
    g_ = p.g;

    mu_.setZero(k);
    in_active_.assign(static_cast<std::size_t>(k), false);
    start_from(warm_start);

    QPSolution sol;
    sol.status = QpStatus::Solved;
    std::size_t iterations = 0;
    VectorXd rhs;
    VectorXd r;
    VectorXd z(d);

    while (true) {
        // Most violated inactive row.
        Index p_row = -1;
        double worst = tol;
        for (Index i = 0; i < k; ++i) {
            if (in_active_[static_cast<std::size_t>(i)] || !std::isfinite(g_(i))) {
                continue;
            }
            const double v = Z_.col(i).dot(y_) - g_(i);
            if (v > worst) {
                worst = v;
                p_row = i;
            }
        }
        if (p_row < 0) {
            break;
        }

        const auto n_p = Z_.col(p_row);
        double slack = n_p.dot(y_) - g_(p_row);
        bool added = false;
        while (!added) {
            if (iterations >= max_iter) {
                sol.status = QpStatus::MaxIterations;
                break;
            }
            ++iterations;

            const auto m = static_cast<Index>(active_.size());
            z = n_p;
            r.resize(m);
            if (m > 0) {
                rhs.resize(m);
                for (Index a = 0; a < m; ++a) {
                    rhs(a) = Z_.col(static_cast<Index>(active_[a])).dot(n_p);
                }
                if (!solve_gram(active_, rhs, r)) {
                    r.setZero();
                }
                for (Index a = 0; a < m; ++a) {
                    z.noalias() -= r(a) * Z_.col(static_cast<Index>(active_[a]));
                }
            }

            const double zz = z.dot(n_p);
            const double full =
                zz > 1e-12 * std::max(1.0, n_p.squaredNorm()) ? slack / zz : kInf;
            double partial = kInf;
            Index blocking = -1;
            for (Index a = 0; a < m; ++a) {
                if (r(a) > 1e-12) {
                    const double ratio = mu_(static_cast<Index>(active_[a])) / r(a);
                    if (ratio < partial) {
                        partial = ratio;
                        blocking = a;
                    }
                }
            }

            if (!std::isfinite(full) && !std::isfinite(partial)) {
                sol.status = QpStatus::Infeasible;
                break;
            }

            const double step = std::min(full, partial);
            y_.noalias() -= step * z;
            for (Index a = 0; a < m; ++a) {
                auto& mu = mu_(static_cast<Index>(active_[a]));
                mu = std::max(0.0, mu - step * r(a));
            }
            mu_(p_row) += step;

            if (full <= partial) {
                active_.push_back(static_cast<std::size_t>(p_row));
                in_active_[static_cast<std::size_t>(p_row)] = true;
                added = true;
            } else {
                const auto drop = active_[static_cast<std::size_t>(blocking)];
                mu_(static_cast<Index>(drop)) = 0.0;
                in_active_[drop] = false;
                active_.erase(active_.begin() + blocking);
                slack = n_p.dot(y_) - g_(p_row);
                if (slack <= tol) {
                    // Dropping the blocker already restored feasibility of p.
                    if (mu_(p_row) > 0.0) {
                        active_.push_back(static_cast<std::size_t>(p_row));
                        in_active_[static_cast<std::size_t>(p_row)] = true;
                    }
                    added = true;
                }
            }
        }
        if (sol.status != QpStatus::Solved) {
            break;
        }
    }

    sol.x = y_;
    llt_.matrixU().solveInPlace(sol.x);
    const VectorXd resid = p.target - p.J * sol.x;
    sol.objective = 0.5 * resid.squaredNorm() + 0.5 * p.damping * sol.x.squaredNorm();
    sol.multipliers = mu_;
    sol.working_set = active_;
    std::sort(sol.working_set.begin(), sol.working_set.end());
    for (Index i = 0; i < k; ++i) {
        if (std::isfinite(p.g(i)) && p.g(i) - p.G.row(i).dot(sol.x) <= tol) {
            sol.active_set.push_back(static_cast<std::size_t>(i));
        }
    }
    sol.iterations = iterations;
    return sol;
}

QPSolution solve(const LeastSquaresQP& problem, double tol, std::size_t max_iter) {
    QpSolver solver;
    return solver.solve(problem, QpOptions{tol, max_iter});
}

VectorXd solve_unconstrained(const MatrixXd& J, const VectorXd& target, double lambda) {
    if (target.size() != J.rows()) {
        throw std::invalid_argument("solve_unconstrained: target size does not match J rows");
    }
    if (!(lambda >= 0.0)) {
        throw std::invalid_argument("solve_unconstrained: lambda must be non-negative");
    }
    const Index d = J.cols();
    if (lambda == 0.0) {
        Eigen::ColPivHouseholderQR<MatrixXd> qr(J);
        if (qr.rank() < d) {
            throw RankDeficient("solve_unconstrained: J lacks full column rank");
        }
        return qr.solve(target);
    }
    MatrixXd a(J.rows() + d, d);
    a.topRows(J.rows()) = J;
    a.bottomRows(d) = std::sqrt(lambda) * MatrixXd::Identity(d, d);
    VectorXd b = VectorXd::Zero(J.rows() + d);
    b.head(J.rows()) = target;
    return Eigen::HouseholderQR<MatrixXd>(a).solve(b);
}

}  // namespace iktrack
