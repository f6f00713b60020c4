#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <utility>
#include <string>
#include <vector>

#include "iktrack/model.hpp"
#include "iktrack/random.hpp"

namespace fixtures {

using iktrack::Joint;
using iktrack::KinematicModel;
using iktrack::Link;
using iktrack::Vec3;

inline constexpr double kPi = std::numbers::pi;

inline Joint revolute(std::string name, std::size_t parent, std::size_t child, Vec3 axis,
                      Vec3 xyz = Vec3::Zero(), Vec3 rpy = Vec3::Zero()) {
    Joint j;
    j.name = std::move(name);
    j.parent_link = parent;
    j.child_link = child;
    j.axis = axis;
    j.origin_xyz = xyz;
    j.origin_rpy = rpy;
    return j;
}

/// A single base link, position and orientation target.
inline KinematicModel base_only() {
    return KinematicModel({{"base", false}}, {}, 0, {0}, {0});
}

/// base -(z at origin)-> link1 -(z at [1,0,0])-> link2.
inline KinematicModel planar_two_joint() {
    return KinematicModel({{"base", false}, {"link1", false}, {"link2", false}},
                          {revolute("j1", 0, 1, Vec3::UnitZ()),
                           revolute("j2", 1, 2, Vec3::UnitZ(), Vec3(1, 0, 0))},
                          0, {0, 2}, {0, 1, 2});
}

/// base -(axis z)-> tip with the joint origin at [1,0,0]; targets: base
/// position and orientation, tip orientation.
inline KinematicModel one_joint(std::optional<std::pair<double, double>> limits = std::nullopt) {
    auto j = revolute("j", 0, 1, Vec3::UnitZ(), Vec3(1, 0, 0));
    j.pos_limits = limits;
    return KinematicModel({{"base", false}, {"tip", false}}, {j}, 0, {0}, {0, 1});
}

inline Vec3 random_unit(iktrack::Rng& rng) {
    Vec3 v(rng.normal(), rng.normal(), rng.normal());
    return v.normalized();
}

/// Random tree: each new link hangs off a random earlier link through a
/// joint with random axis, offset and origin rotation. Every link is an
/// orientation target, every other link a position target.
inline KinematicModel random_tree(iktrack::Rng& rng, std::size_t joints) {
    std::vector<Link> links{{"base", false}};
    std::vector<Joint> js;
    for (std::size_t i = 0; i < joints; ++i) {
        const auto parent = static_cast<std::size_t>(rng.next() % links.size());
        links.push_back({"l" + std::to_string(i + 1), false});
        js.push_back(revolute("j" + std::to_string(i + 1), parent, links.size() - 1,
                              random_unit(rng),
                              Vec3(rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5),
                                   rng.uniform(-0.5, 0.5)),
                              Vec3(rng.uniform(-kPi, kPi), rng.uniform(-1.5, 1.5),
                                   rng.uniform(-kPi, kPi))));
    }
    std::vector<std::size_t> pos;
    std::vector<std::size_t> rot;
    for (std::size_t l = 0; l < links.size(); ++l) {
        rot.push_back(l);
        if (l % 2 == 0) {
            pos.push_back(l);
        }
    }
    return KinematicModel(std::move(links), std::move(js), 0, std::move(pos), std::move(rot));
}

inline iktrack::Configuration random_configuration(iktrack::Rng& rng, const KinematicModel& model,
                                                   double spread = kPi) {
    auto q = iktrack::Configuration::zero(model.dofs());
    q.base_pos = Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
    q.base_rot = iktrack::Rotation::exp(rng.uniform(0, 3.0) * random_unit(rng));
    for (Eigen::Index j = 0; j < q.s.size(); ++j) {
        q.s(j) = rng.uniform(-spread, spread);
    }
    return q;
}

inline iktrack::Velocity random_velocity(iktrack::Rng& rng, const KinematicModel& model) {
    auto nu = iktrack::Velocity::zero(model.dofs());
    nu.base_lin = Vec3(rng.normal(), rng.normal(), rng.normal());
    nu.base_ang = Vec3(rng.normal(), rng.normal(), rng.normal());
    for (Eigen::Index j = 0; j < nu.s_dot.size(); ++j) {
        nu.s_dot(j) = rng.normal();
    }
    return nu;
}

}  // namespace fixtures
