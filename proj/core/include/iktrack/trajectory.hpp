#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "iktrack/model.hpp"
#include "iktrack/targets.hpp"

namespace iktrack {

struct TrajectorySpec {
    enum class Kind { StaticPose, Sinusoidal, RandomSmooth };

    Kind kind = Kind::Sinusoidal;
    double duration = 10.0;   ///< s
    double dt = 0.01;         ///< s
    double amplitude = 0.3;   ///< rad, peak joint excursion around the centre
    double freq_lo = 0.5;     ///< Hz
    double freq_hi = 1.5;     ///< Hz
    std::uint64_t seed = 1;
    double base_amplitude = 0.05;  ///< m and rad, base excursion
    /// Standard deviation of Gaussian noise added to the targets (m, rad,
    /// m/s, rad/s alike). Ground truth is left clean.
    double noise = 0.0;

    /// Throws std::invalid_argument.
    void validate() const;

    static TrajectorySpec static_pose(double duration, std::uint64_t seed);
    /// 0.5–1.5 Hz band.
    static TrajectorySpec walking(double duration, std::uint64_t seed);
    /// 1.5–3 Hz band.
    static TrajectorySpec running(double duration, std::uint64_t seed);
};

std::string_view to_string(TrajectorySpec::Kind kind);

/// JSON object with keys kind ("static_pose" | "sinusoidal" | "random_smooth"),
/// duration, dt, amplitude, band ([lo, hi] Hz), seed, base_amplitude, noise;
/// all but kind optional. Throws ParseError / ValidationError("schema").
TrajectorySpec parse_trajectory_spec(std::string_view text);
std::string serialize_trajectory_spec(const TrajectorySpec& spec);

struct GeneratedStream {
    std::vector<Configuration> q;
    std::vector<Velocity> nu;
    std::vector<TargetSample> samples;
};

/// Sums of sinusoids on every joint (one component per joint for Sinusoidal,
/// five for RandomSmooth) and on the base position and roll/pitch/yaw.
/// Targets come from stacked FK and J·ν of the ground truth, so they are
/// exactly consistent before noise. Bounded joints stay 5% of their range
/// inside the limits. Throws SpecInfeasible when the amplitude cannot fit.
GeneratedStream generate_stream(const KinematicModel& model, const TrajectorySpec& spec);

}  // namespace iktrack
