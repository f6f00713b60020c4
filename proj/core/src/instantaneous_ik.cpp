#include "iktrack/instantaneous_ik.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <optional>
#include <stdexcept>
#include <thread>

#include "iktrack/error.hpp"
#include "levenberg_marquardt.hpp"

namespace iktrack {

using Eigen::Index;

namespace {

// ½(tr(M)·I − Mᵀ): derivative of sk(M·(I − S(δ)))ᵛ is −B(M)·δ.
Mat3 residual_slope(const Mat3& m) {
    return 0.5 * (m.trace() * Mat3::Identity() - m.transpose());
}

// Euclidean projection of s onto {A·s ≤ b_q} over the rows with a finite bound.
// Box-only row sets are clamped directly.
class JointProjector {
public:
    JointProjector(const MatrixXd& A, const VectorXd& b_q, const std::vector<Index>& columns) {
        // Rows supported entirely on `columns`.
        std::vector<bool> member(static_cast<std::size_t>(A.cols()), false);
        for (auto c : columns) {
            member[static_cast<std::size_t>(c)] = true;
        }
        std::vector<Index> rows;
        for (Index i = 0; i < A.rows(); ++i) {
            bool inside = false;
            bool outside = false;
            for (Index c = 0; c < A.cols(); ++c) {
                if (A(i, c) != 0.0) {
                    (member[static_cast<std::size_t>(c)] ? inside : outside) = true;
                }
            }
            if (std::isfinite(b_q(i)) && inside && !outside) {
                rows.push_back(i);
            }
        }
        const auto n = static_cast<Index>(columns.size());
        lower_ = VectorXd::Constant(n, -kUnbounded);
        upper_ = VectorXd::Constant(n, kUnbounded);
        qp_.G.resize(static_cast<Index>(rows.size()), n);
        qp_.g.resize(static_cast<Index>(rows.size()));
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const auto i = rows[r];
            Index nonzero = 0;
            Index last = 0;
            for (Index c = 0; c < n; ++c) {
                const double a = A(i, columns[static_cast<std::size_t>(c)]);
                qp_.G(static_cast<Index>(r), c) = a;
                if (a != 0.0) {
                    ++nonzero;
                    last = c;
                }
            }
            qp_.g(static_cast<Index>(r)) = b_q(i);
            const double a = qp_.G(static_cast<Index>(r), last);
            if (nonzero == 1 && std::abs(a) == 1.0) {
                if (a > 0.0) {
                    upper_(last) = std::min(upper_(last), b_q(i));
                } else {
                    lower_(last) = std::max(lower_(last), -b_q(i));
                }
            } else {
                coupled_ = true;
            }
        }
        if (coupled_) {
            qp_.J = MatrixXd::Identity(n, n);
            qp_.damping = 0.0;
        }
    }

    void project(Eigen::Ref<VectorXd> s) {
        if (coupled_) {
            qp_.target = s;
            auto sol = solver_.solve(qp_, QpOptions{1e-12, 0});
            if (sol.status == QpStatus::Infeasible) {
                throw SolverFailure("joint projection: constraint set is empty");
            }
            s = sol.x;
            // Remove round-off so that the returned point is feasible exactly.
            s = s.cwiseMax(lower_).cwiseMin(upper_);
        } else {
            s = s.cwiseMax(lower_).cwiseMin(upper_);
        }
    }

private:
    LeastSquaresQP qp_;
    QpSolver solver_;
    VectorXd lower_;
    VectorXd upper_;
    bool coupled_ = false;
};

std::vector<Index> all_columns(std::size_t n) {
    std::vector<Index> c(n);
    for (std::size_t i = 0; i < n; ++i) {
        c[i] = static_cast<Index>(i);
    }
    return c;
}

detail::LmOptions lm_options(const InstantaneousConfig& cfg) {
    return detail::LmOptions{cfg.stop_tol, cfg.max_iters, cfg.lm_lambda0};
}

}  // namespace

void InstantaneousConfig::validate() const {
    if (!(position_weight > 0.0) || !(orientation_weight > 0.0)) {
        throw std::invalid_argument("instantaneous config: weights must be positive");
    }
    if (!(stop_tol > 0.0)) {
        throw std::invalid_argument("instantaneous config: stop_tol must be positive");
    }
    if (!(lm_lambda0 > 0.0)) {
        throw std::invalid_argument("instantaneous config: lm_lambda0 must be positive");
    }
    if (!(velocity_damping >= 0.0)) {
        throw std::invalid_argument("instantaneous config: velocity_damping must be non-negative");
    }
}

WholeBodyResult solve_whole_body(const KinematicModel& model, const TargetSample& sample,
                                 const Configuration& q_init, const InstantaneousConfig& cfg) {
    cfg.validate();
    check_sample(model, sample);
    const auto& pt = model.position_targets();
    const auto& ot = model.orientation_targets();
    const auto np3 = static_cast<Index>(3 * pt.size());
    const auto& c = model.constraints();
    JointProjector projector(c.A, c.b_q, all_columns(model.dofs()));
    LinkPoses poses;

    auto residual = [&](const Configuration& q, VectorXd& r) {
        compute_link_poses(model, q, poses);
        r.resize(static_cast<Index>(model.target_rows()));
        for (std::size_t i = 0; i < pt.size(); ++i) {
            r.segment<3>(static_cast<Index>(3 * i)) =
                cfg.position_weight * (sample.positions[i] - poses.position[pt[i]]);
        }
        for (std::size_t i = 0; i < ot.size(); ++i) {
            r.segment<3>(np3 + static_cast<Index>(3 * i)) =
                cfg.orientation_weight *
                orientation_residual_inertial(poses.rotation[ot[i]], sample.rotations[i]);
        }
    };
    auto jacobian = [&](const Configuration& q, const VectorXd&, MatrixXd& Jr) {
        compute_link_poses(model, q, poses);
        stacked_jacobian(model, poses, Jr);
        Jr.topRows(np3) *= -cfg.position_weight;
        for (std::size_t i = 0; i < ot.size(); ++i) {
            const Mat3 m = sample.rotations[i].matrix() * poses.rotation[ot[i]].matrix().transpose();
            auto block = Jr.middleRows<3>(np3 + static_cast<Index>(3 * i));
            block = (-cfg.orientation_weight * residual_slope(m) * block).eval();
        }
    };
    auto retract = [&](const Configuration& q, const VectorXd& delta) {
        auto out = integrate(q, Velocity::from_stacked(delta), 1.0);
        projector.project(out.s);
        return out;
    };

    WholeBodyResult result;
    result.q = q_init;
    projector.project(result.q.s);
    const auto lm = detail::levenberg_marquardt(result.q, residual, jacobian, retract, lm_options(cfg));
    result.iterations = lm.iterations;
    result.error = lm.error;
    result.converged = lm.converged;
    return result;
}

std::vector<Subsystem> decompose_pairwise(const KinematicModel& model) {
    const auto& ot = model.orientation_targets();
    const auto& pt = model.position_targets();
    const auto base = model.base_link();
    const auto base_in = [&](const std::vector<std::size_t>& v) {
        return std::find(v.begin(), v.end(), base) != v.end();
    };
    if (!base_in(pt) || !base_in(ot)) {
        throw DecompositionError("the base needs both a position and an orientation target");
    }
    std::vector<std::optional<std::size_t>> target_of(model.links().size());
    for (std::size_t i = 0; i < ot.size(); ++i) {
        target_of[ot[i]] = i;
    }

    const auto& joints = model.joints();
    std::vector<Subsystem> out;
    std::vector<int> owner(model.dofs(), -1);
    for (std::size_t i = 0; i < ot.size(); ++i) {
        if (ot[i] == base) {
            continue;
        }
        Subsystem sub;
        sub.tip_link = ot[i];
        sub.tip_target = i;
        auto link = ot[i];
        do {
            const auto j = *model.parent_joint(link);
            sub.joint_indices.push_back(j);
            link = joints[j].parent_link;
        } while (!target_of[link]);
        sub.root_link = link;
        sub.root_target = *target_of[link];
        std::reverse(sub.joint_indices.begin(), sub.joint_indices.end());
        for (auto j : sub.joint_indices) {
            owner[j] = static_cast<int>(out.size());
        }
        out.push_back(std::move(sub));
    }
    for (std::size_t j = 0; j < owner.size(); ++j) {
        if (owner[j] < 0) {
            throw DecompositionError("joint '" + joints[j].name + "' lies between no target pair");
        }
    }
    const auto& coupled = model.coupled_constraints();
    for (Index r = 0; r < coupled.A.rows(); ++r) {
        int sub = -1;
        for (Index j = 0; j < coupled.A.cols(); ++j) {
            if (coupled.A(r, j) == 0.0) {
                continue;
            }
            const int o = owner[static_cast<std::size_t>(j)];
            if (sub >= 0 && o != sub) {
                throw DecompositionError("coupled constraint row " + std::to_string(r) +
                                         " spans more than one subsystem");
            }
            sub = o;
        }
    }
    return out;
}

namespace {

SubsystemReport solve_subsystem(const KinematicModel& model, const Subsystem& sub,
                                const TargetSample& sample, VectorXd& s_sub,
                                const InstantaneousConfig& cfg) {
    const auto& joints = model.joints();
    const auto m = static_cast<Index>(sub.joint_indices.size());

    const auto& pt = model.position_targets();
    auto position_target = [&](std::size_t link) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < pt.size(); ++i) {
            if (pt[i] == link) {
                return i;
            }
        }
        return std::nullopt;
    };
    const auto root_pos = position_target(sub.root_link);
    const auto tip_pos = position_target(sub.tip_link);
    const bool with_position = root_pos && tip_pos;

    const Mat3& root_rot = sample.rotations[sub.root_target].matrix();
    const Mat3 target_rot = root_rot.transpose() * sample.rotations[sub.tip_target].matrix();
    Vec3 target_pos = Vec3::Zero();
    if (with_position) {
        target_pos = root_rot.transpose() * (sample.positions[*tip_pos] - sample.positions[*root_pos]);
    }

    std::vector<Index> columns;
    for (auto j : sub.joint_indices) {
        columns.push_back(static_cast<Index>(j));
    }
    const auto& c = model.constraints();
    JointProjector projector(c.A, c.b_q, columns);

    std::vector<Vec3> axis(static_cast<std::size_t>(m));
    std::vector<Vec3> origin(static_cast<std::size_t>(m));
    Mat3 tip_rot;
    Vec3 tip_p;
    auto chain = [&](const VectorXd& s) {
        Mat3 R = Mat3::Identity();
        Vec3 p = Vec3::Zero();
        for (Index k = 0; k < m; ++k) {
            const auto j = sub.joint_indices[static_cast<std::size_t>(k)];
            p += R * joints[j].origin_xyz;
            R = R * model.origin_rotation(j) * Rotation::exp(joints[j].axis * s(k)).matrix();
            axis[static_cast<std::size_t>(k)] = R * joints[j].axis;
            origin[static_cast<std::size_t>(k)] = p;
        }
        tip_rot = R;
        tip_p = p;
    };
    const Index rows = with_position ? 6 : 3;
    auto residual = [&](const VectorXd& s, VectorXd& r) {
        chain(s);
        r.resize(rows);
        r.head<3>() = cfg.orientation_weight *
                      vee(sk(target_rot * tip_rot.transpose()));
        if (with_position) {
            r.tail<3>() = cfg.position_weight * (target_pos - tip_p);
        }
    };
    auto jacobian = [&](const VectorXd& s, const VectorXd&, MatrixXd& Jr) {
        chain(s);
        Jr.resize(rows, m);
        const Mat3 slope = residual_slope(target_rot * tip_rot.transpose());
        for (Index k = 0; k < m; ++k) {
            const auto& z = axis[static_cast<std::size_t>(k)];
            Jr.block<3, 1>(0, k) = -cfg.orientation_weight * slope * z;
            if (with_position) {
                Jr.block<3, 1>(3, k) =
                    -cfg.position_weight * z.cross(tip_p - origin[static_cast<std::size_t>(k)]);
            }
        }
    };
    auto retract = [&](const VectorXd& s, const VectorXd& delta) {
        VectorXd out = s + delta;
        projector.project(out);
        return out;
    };

    projector.project(s_sub);
    const auto lm = detail::levenberg_marquardt(s_sub, residual, jacobian, retract, lm_options(cfg));
    return SubsystemReport{lm.iterations, lm.error, lm.converged};
}

}  // namespace

PairwiseResult solve_pairwise(const KinematicModel& model, const std::vector<Subsystem>& subsystems,
                              const TargetSample& sample, const Configuration& q_init,
                              const InstantaneousConfig& cfg, const PairwiseOptions& options) {
    cfg.validate();
    check_sample(model, sample);
    const auto base = model.base_link();
    const auto& pt = model.position_targets();
    const auto& ot = model.orientation_targets();

    PairwiseResult result;
    result.q = q_init;
    for (std::size_t i = 0; i < pt.size(); ++i) {
        if (pt[i] == base) {
            result.q.base_pos = sample.positions[i];
        }
    }
    for (std::size_t i = 0; i < ot.size(); ++i) {
        if (ot[i] == base) {
            result.q.base_rot = sample.rotations[i];
        }
    }

    const auto count = subsystems.size();
    std::vector<std::size_t> order = options.execution_order;
    if (order.empty()) {
        order.resize(count);
        for (std::size_t i = 0; i < count; ++i) {
            order[i] = i;
        }
    }
    if (order.size() != count) {
        throw std::invalid_argument("solve_pairwise: execution order must list every subsystem");
    }

    std::vector<VectorXd> slices(count);
    std::vector<SubsystemReport> reports(count);
    auto run = [&](std::size_t i) {
        const auto& sub = subsystems[i];
        VectorXd s(static_cast<Index>(sub.joint_indices.size()));
        for (std::size_t k = 0; k < sub.joint_indices.size(); ++k) {
            s(static_cast<Index>(k)) = q_init.s(static_cast<Index>(sub.joint_indices[k]));
        }
        reports[i] = solve_subsystem(model, sub, sample, s, cfg);
        slices[i] = std::move(s);
    };

    const auto workers = std::min(options.threads, count);
    if (workers <= 1) {
        for (auto i : order) {
            run(i);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(workers);
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (auto k = next++; k < count; k = next++) {
                        run(order[k]);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) {
            t.join();
        }
        for (auto& e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
    }

    for (std::size_t i = 0; i < count; ++i) {
        const auto& sub = subsystems[i];
        for (std::size_t k = 0; k < sub.joint_indices.size(); ++k) {
            result.q.s(static_cast<Index>(sub.joint_indices[k])) = slices[i](static_cast<Index>(k));
        }
    }
    result.subsystems = std::move(reports);
    return result;
}

PairwiseResult solve_pairwise(const KinematicModel& model, const TargetSample& sample,
                              const Configuration& q_init, const InstantaneousConfig& cfg,
                              const PairwiseOptions& options) {
    return solve_pairwise(model, decompose_pairwise(model), sample, q_init, cfg, options);
}

Velocity baseline_velocity(const KinematicModel& model, const Configuration& q,
                           const TargetSample& sample, double damping, QpSolver& solver) {
    check_sample(model, sample);
    const auto& c = model.constraints();
    const auto n = static_cast<Index>(model.dofs());
    LeastSquaresQP qp;
    qp.J = stacked_jacobian(model, q);
    qp.target = stacked_velocity(sample);
    qp.damping = damping;
    Index rows = 0;
    for (Index i = 0; i < c.A.rows(); ++i) {
        rows += std::isfinite(c.b_nu(i)) ? 1 : 0;
    }
    qp.G = MatrixXd::Zero(rows, n + 6);
    qp.g.resize(rows);
    Index r = 0;
    for (Index i = 0; i < c.A.rows(); ++i) {
        if (std::isfinite(c.b_nu(i))) {
            qp.G.row(r).tail(n) = c.A.row(i);
            qp.g(r) = c.b_nu(i);
            ++r;
        }
    }
    auto sol = solver.solve(qp);
    if (sol.status != QpStatus::Solved) {
        throw SolverFailure("baseline velocity QP " + std::string(to_string(sol.status)));
    }
    return Velocity::from_stacked(sol.x);
}

}  // namespace iktrack
