#include "iktrack/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

#include "iktrack/error.hpp"
#include "iktrack/random.hpp"

namespace iktrack {

using Eigen::Index;
using nlohmann::json;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kLimitMargin = 0.05;

struct Component {
    double amplitude;
    double omega;  // rad/s
    double phase;
};

// x(t) = centre + Σ a·sin(ωt + φ), with the components built so that Σ|a| = peak.
struct Signal {
    double centre = 0.0;
    std::vector<Component> parts;

    double value(double t) const {
        double v = centre;
        for (const auto& c : parts) {
            v += c.amplitude * std::sin(c.omega * t + c.phase);
        }
        return v;
    }
    double rate(double t) const {
        double v = 0.0;
        for (const auto& c : parts) {
            v += c.amplitude * c.omega * std::cos(c.omega * t + c.phase);
        }
        return v;
    }
};

Signal make_signal(Rng& rng, const TrajectorySpec& spec, double centre, double peak) {
    Signal s;
    s.centre = centre;
    if (spec.kind == TrajectorySpec::Kind::StaticPose) {
        s.centre += peak * rng.uniform(-1.0, 1.0);
        return s;
    }
    const int count = spec.kind == TrajectorySpec::Kind::Sinusoidal ? 1 : 5;
    std::vector<double> weights(static_cast<std::size_t>(count));
    double total = 0.0;
    for (auto& w : weights) {
        w = rng.uniform(0.2, 1.0);
        total += w;
    }
    for (int k = 0; k < count; ++k) {
        Component c;
        c.amplitude = peak * weights[static_cast<std::size_t>(k)] / total;
        c.omega = kTwoPi * rng.uniform(spec.freq_lo, spec.freq_hi);
        c.phase = kTwoPi * rng.uniform();
        s.parts.push_back(c);
    }
    return s;
}

double number(const json& v, const char* key) {
    if (!v.is_number()) {
        throw ValidationError("schema", std::string("trajectory spec '") + key + "' must be a number");
    }
    return v.get<double>();
}

}  // namespace

void TrajectorySpec::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw std::invalid_argument("trajectory spec: dt must be positive");
    }
    if (!(duration >= dt) || !std::isfinite(duration)) {
        throw std::invalid_argument("trajectory spec: duration must be at least dt");
    }
    if (!(amplitude >= 0.0) || !(base_amplitude >= 0.0) || !(noise >= 0.0)) {
        throw std::invalid_argument("trajectory spec: amplitudes and noise must be non-negative");
    }
    if (kind != Kind::StaticPose && !(freq_lo > 0.0 && freq_lo <= freq_hi)) {
        throw std::invalid_argument("trajectory spec: band must satisfy 0 < lo <= hi");
    }
}

TrajectorySpec TrajectorySpec::static_pose(double duration, std::uint64_t seed) {
    TrajectorySpec s;
    s.kind = Kind::StaticPose;
    s.duration = duration;
    s.seed = seed;
    return s;
}

TrajectorySpec TrajectorySpec::walking(double duration, std::uint64_t seed) {
    TrajectorySpec s;
    s.kind = Kind::RandomSmooth;
    s.duration = duration;
    s.seed = seed;
    s.freq_lo = 0.5;
    s.freq_hi = 1.5;
    return s;
}

TrajectorySpec TrajectorySpec::running(double duration, std::uint64_t seed) {
    auto s = walking(duration, seed);
    s.freq_lo = 1.5;
    s.freq_hi = 3.0;
    return s;
}

std::string_view to_string(TrajectorySpec::Kind kind) {
    switch (kind) {
        case TrajectorySpec::Kind::StaticPose: return "static_pose";
        case TrajectorySpec::Kind::Sinusoidal: return "sinusoidal";
        case TrajectorySpec::Kind::RandomSmooth: return "random_smooth";
    }
    return "unknown";
}

TrajectorySpec parse_trajectory_spec(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("trajectory spec: ") + e.what(), e.byte, ParseError::Unit::Byte);
    }
    if (!doc.is_object()) {
        throw ValidationError("schema", "trajectory spec must be an object");
    }
    TrajectorySpec spec;
    for (const auto& [key, v] : doc.items()) {
        if (key == "kind") {
            const auto k = v.is_string() ? v.get<std::string>() : std::string();
            if (k == "static_pose") {
                spec.kind = TrajectorySpec::Kind::StaticPose;
            } else if (k == "sinusoidal") {
                spec.kind = TrajectorySpec::Kind::Sinusoidal;
            } else if (k == "random_smooth") {
                spec.kind = TrajectorySpec::Kind::RandomSmooth;
            } else {
                throw ValidationError("schema", "unknown trajectory kind '" + k + "'");
            }
        } else if (key == "duration") {
            spec.duration = number(v, "duration");
        } else if (key == "dt") {
            spec.dt = number(v, "dt");
        } else if (key == "amplitude") {
            spec.amplitude = number(v, "amplitude");
        } else if (key == "band") {
            if (!v.is_array() || v.size() != 2) {
                throw ValidationError("schema", "trajectory spec 'band' must be [lo, hi]");
            }
            spec.freq_lo = number(v[0], "band");
            spec.freq_hi = number(v[1], "band");
        } else if (key == "seed") {
            if (!v.is_number_unsigned()) {
                throw ValidationError("schema", "trajectory spec 'seed' must be a non-negative integer");
            }
            spec.seed = v.get<std::uint64_t>();
        } else if (key == "base_amplitude") {
            spec.base_amplitude = number(v, "base_amplitude");
        } else if (key == "noise") {
            spec.noise = number(v, "noise");
        } else {
            throw ValidationError("unknown key", "'" + key + "' in trajectory spec");
        }
    }
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ValidationError("trajectory spec", e.what());
    }
    return spec;
}

std::string serialize_trajectory_spec(const TrajectorySpec& spec) {
    json doc{{"kind", std::string(to_string(spec.kind))},
             {"duration", spec.duration},
             {"dt", spec.dt},
             {"amplitude", spec.amplitude},
             {"band", json::array({spec.freq_lo, spec.freq_hi})},
             {"seed", spec.seed},
             {"base_amplitude", spec.base_amplitude},
             {"noise", spec.noise}};
    return doc.dump(2) + "\n";
}

GeneratedStream generate_stream(const KinematicModel& model, const TrajectorySpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const auto n = model.dofs();

    std::vector<Signal> joints;
    joints.reserve(n);
    for (std::size_t j = 0; j < n; ++j) {
        const auto& joint = model.joints()[j];
        double centre = 0.0;
        if (joint.pos_limits) {
            const auto [lo, hi] = *joint.pos_limits;
            const double range = std::isfinite(hi - lo) ? hi - lo : 0.0;
            const double min_c = lo + kLimitMargin * range + spec.amplitude;
            const double max_c = hi - kLimitMargin * range - spec.amplitude;
            if (min_c > max_c) {
                throw SpecInfeasible("amplitude " + std::to_string(spec.amplitude) +
                                     " rad does not fit the limits of joint '" + joint.name + "'");
            }
            centre = std::clamp(0.0, min_c, max_c);
        }
        joints.push_back(make_signal(rng, spec, centre, spec.amplitude));
    }
    std::array<Signal, 3> base_pos;
    std::array<Signal, 3> base_rpy;
    const std::array<double, 3> base_centre{0.0, 0.0, 1.0};
    for (std::size_t k = 0; k < 3; ++k) {
        base_pos[k] = make_signal(rng, spec, base_centre[k], spec.base_amplitude);
    }
    for (auto& s : base_rpy) {
        s = make_signal(rng, spec, 0.0, spec.base_amplitude);
    }

    const auto count = static_cast<std::size_t>(std::llround(spec.duration / spec.dt));
    GeneratedStream out;
    out.q.reserve(count);
    out.nu.reserve(count);
    out.samples.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        const double t = static_cast<double>(k) * spec.dt;
        Configuration q = Configuration::zero(n);
        Velocity nu = Velocity::zero(n);
        for (std::size_t j = 0; j < n; ++j) {
            q.s(static_cast<Index>(j)) = joints[j].value(t);
            nu.s_dot(static_cast<Index>(j)) = joints[j].rate(t);
        }
        for (Index a = 0; a < 3; ++a) {
            q.base_pos(a) = base_pos[static_cast<std::size_t>(a)].value(t);
            nu.base_lin(a) = base_pos[static_cast<std::size_t>(a)].rate(t);
        }
        const double roll = base_rpy[0].value(t);
        const double pitch = base_rpy[1].value(t);
        const double yaw = base_rpy[2].value(t);
        q.base_rot = Rotation::from_rpy(roll, pitch, yaw);
        // R = Rz(yaw)·Ry(pitch)·Rx(roll), so ω = ẏaw·z + Rz·(ṗitch·y) + Rz·Ry·(ṙoll·x).
        const Mat3 rz = Rotation::about_axis(Vec3::UnitZ(), yaw).matrix();
        const Mat3 ry = Rotation::about_axis(Vec3::UnitY(), pitch).matrix();
        nu.base_ang = base_rpy[2].rate(t) * Vec3::UnitZ() + rz * (base_rpy[1].rate(t) * Vec3::UnitY()) +
                      rz * ry * (base_rpy[0].rate(t) * Vec3::UnitX());

        auto sample = sample_from_state(model, q, nu, t);
        if (spec.noise > 0.0) {
            auto gauss = [&] {
                return Vec3(spec.noise * rng.normal(), spec.noise * rng.normal(),
                            spec.noise * rng.normal());
            };
            for (auto& p : sample.positions) {
                p += gauss();
            }
            for (auto& r : sample.rotations) {
                r = Rotation::exp(gauss()) * r;
            }
            for (auto& v : sample.lin_vels) {
                v += gauss();
            }
            for (auto& w : sample.ang_vels) {
                w += gauss();
            }
        }
        out.q.push_back(std::move(q));
        out.nu.push_back(std::move(nu));
        out.samples.push_back(std::move(sample));
    }
    return out;
}

}  // namespace iktrack
