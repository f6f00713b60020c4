#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>

#include <Eigen/Cholesky>
#include <Eigen/Core>

namespace iktrack::detail {

struct LmOptions {
    double stop_tol = 1e-4;
    std::size_t max_iters = 100;
    double lambda0 = 1e-3;
};

struct LmOutcome {
    std::size_t iterations = 0;
    double error = 0.0;
    bool converged = false;
};

// residual(x, r)        fills the weighted residual at x
// jacobian(x, r, Jr)    fills d r(x ⊕ δ)/dδ at δ = 0
// retract(x, δ) -> X    x ⊕ δ, projected onto the feasible set
template <class State, class Residual, class Jacobian, class Retract>
LmOutcome levenberg_marquardt(State& x, Residual&& residual, Jacobian&& jacobian,
                              Retract&& retract, const LmOptions& opt) {
    Eigen::VectorXd r;
    Eigen::VectorXd r_trial;
    Eigen::MatrixXd Jr;
    Eigen::MatrixXd H;
    Eigen::VectorXd grad;
    Eigen::LLT<Eigen::MatrixXd> llt;

    residual(x, r);
    LmOutcome out;
    out.error = r.norm();
    double mu = opt.lambda0;

    bool stalled = false;
    while (!stalled && out.error > opt.stop_tol && out.iterations < opt.max_iters) {
        ++out.iterations;
        jacobian(x, r, Jr);
        H.noalias() = Jr.transpose() * Jr;
        grad.noalias() = Jr.transpose() * r;
        const double scale = std::max(1.0, H.diagonal().maxCoeff());

        bool accepted = false;
        while (!accepted && !stalled) {
            Eigen::MatrixXd damped = H;
            damped.diagonal().array() += mu * scale;
            llt.compute(damped);
            const Eigen::VectorXd delta = -llt.solve(grad);
            if (!delta.allFinite() || delta.norm() < 1e-14) {
                stalled = true;
                break;
            }
            State trial = retract(x, delta);
            residual(trial, r_trial);
            const double e = r_trial.norm();
            if (e < out.error) {
                x = std::move(trial);
                r.swap(r_trial);
                out.error = e;
                mu = std::max(mu / 3.0, 1e-12);
                accepted = true;
            } else {
                mu *= 4.0;
                stalled = mu > 1e10;
            }
        }
    }
    out.converged = out.error <= opt.stop_tol;
    return out;
}

}  // namespace iktrack::detail
