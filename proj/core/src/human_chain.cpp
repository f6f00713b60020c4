#include "iktrack/human_chain.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "iktrack/random.hpp"

namespace iktrack {

namespace {

constexpr double kStature = 1.75;

struct Range {
    double lo;
    double hi;
};

// One connection between a segment and its parent. Offsets are in metres at
// the reference stature, in the parent frame (x forward, y left, z up) with the
// body in a T-pose at zero configuration.
struct Segment {
    std::string_view name;
    std::string_view parent;
    Vec3 offset;
    // 48-DoF variant: which of the z, x, y axes are kept, and their limits
    std::array<bool, 3> reduced_axes;
    std::array<Range, 3> limits;
};

const std::array<Range, 3> kSpine{{{-0.5, 0.5}, {-0.4, 0.4}, {-0.5, 0.6}}};
const std::array<Range, 3> kNeck{{{-1.0, 1.0}, {-0.6, 0.6}, {-0.7, 0.7}}};
const std::array<Range, 3> kClavicle{{{-0.4, 0.4}, {-0.4, 0.4}, {-0.3, 0.3}}};
const std::array<Range, 3> kShoulder{{{-1.5, 1.5}, {-1.6, 1.6}, {-1.2, 1.2}}};
const std::array<Range, 3> kElbow{{{-0.1, 2.4}, {-0.3, 0.3}, {-1.4, 1.4}}};
const std::array<Range, 3> kWrist{{{-0.5, 0.5}, {-1.0, 1.0}, {-0.4, 0.4}}};
const std::array<Range, 3> kHip{{{-0.7, 0.7}, {-0.5, 0.7}, {-1.6, 0.5}}};
const std::array<Range, 3> kKnee{{{-0.2, 0.2}, {-0.2, 0.2}, {-0.1, 2.3}}};
const std::array<Range, 3> kAnkle{{{-0.3, 0.3}, {-0.4, 0.4}, {-0.8, 0.5}}};
const std::array<Range, 3> kToe{{{-0.2, 0.2}, {-0.2, 0.2}, {-0.5, 0.8}}};

std::vector<Segment> segments() {
    return {
        {"L5", "Pelvis", {0.0, 0.0, 0.10}, {true, true, true}, kSpine},
        {"L3", "L5", {0.0, 0.0, 0.10}, {false, true, true}, kSpine},
        {"T12", "L3", {0.0, 0.0, 0.10}, {false, true, true}, kSpine},
        {"T8", "T12", {0.0, 0.0, 0.10}, {true, true, true}, kSpine},
        {"Neck", "T8", {0.0, 0.0, 0.20}, {true, true, true}, kNeck},
        {"Head", "Neck", {0.0, 0.0, 0.10}, {true, true, true}, kNeck},
        {"RightShoulder", "T8", {0.0, -0.03, 0.15}, {true, true, false}, kClavicle},
        {"RightUpperArm", "RightShoulder", {0.0, -0.17, 0.0}, {true, true, true}, kShoulder},
        {"RightForeArm", "RightUpperArm", {0.0, -0.30, 0.0}, {true, false, true}, kElbow},
        {"RightHand", "RightForeArm", {0.0, -0.25, 0.0}, {true, true, false}, kWrist},
        {"LeftShoulder", "T8", {0.0, 0.03, 0.15}, {true, true, false}, kClavicle},
        {"LeftUpperArm", "LeftShoulder", {0.0, 0.17, 0.0}, {true, true, true}, kShoulder},
        {"LeftForeArm", "LeftUpperArm", {0.0, 0.30, 0.0}, {true, false, true}, kElbow},
        {"LeftHand", "LeftForeArm", {0.0, 0.25, 0.0}, {true, true, false}, kWrist},
        {"RightUpperLeg", "Pelvis", {0.0, -0.09, 0.0}, {true, true, true}, kHip},
        {"RightLowerLeg", "RightUpperLeg", {0.0, 0.0, -0.43}, {false, false, true}, kKnee},
        {"RightFoot", "RightLowerLeg", {0.0, 0.0, -0.43}, {false, true, true}, kAnkle},
        {"RightToe", "RightFoot", {0.15, 0.0, -0.08}, {false, false, true}, kToe},
        {"LeftUpperLeg", "Pelvis", {0.0, 0.09, 0.0}, {true, true, true}, kHip},
        {"LeftLowerLeg", "LeftUpperLeg", {0.0, 0.0, -0.43}, {false, false, true}, kKnee},
        {"LeftFoot", "LeftLowerLeg", {0.0, 0.0, -0.43}, {false, true, true}, kAnkle},
        {"LeftToe", "LeftFoot", {0.15, 0.0, -0.08}, {false, false, true}, kToe},
    };
}

constexpr std::array<char, 3> kAxisName{'z', 'x', 'y'};

Vec3 axis_vector(std::size_t k) {
    switch (k) {
        case 0: return Vec3::UnitZ();
        case 1: return Vec3::UnitX();
        default: return Vec3::UnitY();
    }
}

constexpr double kVelocityLimit = 8.0;  // rad/s

}  // namespace

KinematicModel generate_human_chain(int dofs, std::uint64_t seed) {
    if (dofs != 66 && dofs != 48) {
        throw std::invalid_argument("generate_human_chain: dofs must be 66 or 48");
    }
    const bool reduced = dofs == 48;
    Rng rng(seed);

    std::vector<Link> links{{"Pelvis", false}};
    std::vector<Joint> joints;
    std::vector<std::size_t> physical{0};
    auto find_physical = [&](std::string_view name) {
        for (auto l : physical) {
            if (links[l].name == name) {
                return l;
            }
        }
        throw std::logic_error("human chain: unknown parent segment");
    };

    std::optional<std::size_t> shoulder_z;
    std::optional<std::size_t> shoulder_x;

    for (const auto& seg : segments()) {
        const double scale = kStature / 1.75 * (1.0 + rng.uniform(-0.03, 0.03));
        const auto parent = find_physical(seg.parent);
        std::vector<std::size_t> axes;
        for (std::size_t k = 0; k < 3; ++k) {
            if (!reduced || seg.reduced_axes[k]) {
                axes.push_back(k);
            }
        }
        auto prev = parent;
        for (std::size_t i = 0; i < axes.size(); ++i) {
            const auto k = axes[i];
            const bool last = i + 1 == axes.size();
            const std::string child_name =
                last ? std::string(seg.name)
                     : std::string(seg.name) + "_f" + std::to_string(i + 1);
            links.push_back({child_name, !last});
            const auto child = links.size() - 1;

            Joint j;
            j.name = "j" + std::string(seg.name) + "_rot" + kAxisName[k];
            j.axis = axis_vector(k);
            j.parent_link = prev;
            j.child_link = child;
            j.origin_xyz = i == 0 ? Vec3(seg.offset * scale) : Vec3::Zero();
            if (reduced) {
                j.pos_limits = std::make_pair(seg.limits[k].lo, seg.limits[k].hi);
                j.vel_limit = kVelocityLimit;
            }
            if (reduced && seg.name == "RightUpperArm") {
                if (k == 0) {
                    shoulder_z = joints.size();
                } else if (k == 1) {
                    shoulder_x = joints.size();
                }
            }
            joints.push_back(std::move(j));
            prev = child;
        }
        physical.push_back(prev);
    }

    std::vector<std::size_t> rot_targets;
    for (auto name : kHumanSegments) {
        rot_targets.push_back(find_physical(name));
    }

    ConstraintRows coupled;
    coupled.A = MatrixXd::Zero(0, static_cast<Eigen::Index>(joints.size()));
    if (reduced) {
        coupled.A = MatrixXd::Zero(1, static_cast<Eigen::Index>(joints.size()));
        coupled.A(0, static_cast<Eigen::Index>(*shoulder_z)) = 1.0;
        coupled.A(0, static_cast<Eigen::Index>(*shoulder_x)) = 1.0;
        coupled.b_q = VectorXd::Constant(1, 2.0);
        coupled.b_nu = VectorXd::Constant(1, kVelocityLimit);
    }

    return KinematicModel(std::move(links), std::move(joints), 0, {0}, std::move(rot_targets),
                          std::move(coupled));
}

}  // namespace iktrack
