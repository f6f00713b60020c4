#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "iktrack/model.hpp"
#include "iktrack/targets.hpp"

namespace iktrack {

/// (1/n_o)·Σ tr(I − R̂ᵀR)/2 over the orientation targets. Each term is
/// 1 − cos θ, so the value lies in [0, 2].
double mnte(const KinematicModel& model, const Configuration& q, const TargetSample& sample);
double mnte(const KinematicModel& model, const LinkPoses& poses, const TargetSample& sample);

/// sqrt((1/n_o)·Σ ‖ω − J^a(q)·ν‖²/3) over the orientation targets, rad/s.
double rmse_angvel(const KinematicModel& model, const Configuration& q, const Velocity& nu,
                   const TargetSample& sample);

struct SeriesStats {
    std::size_t count = 0;
    double mean = 0.0;
    double median = 0.0;
    double p25 = 0.0;
    double p75 = 0.0;
    double p95 = 0.0;
    double max = 0.0;

    double iqr() const { return p75 - p25; }
};

/// Percentiles by linear interpolation between order statistics. NaN
/// fields for an empty series.
SeriesStats describe(std::span<const double> values);

/// Number of leading samples that fall inside the transient window:
/// those with t − t.front() < discard.
std::size_t transient_count(std::span<const double> t, double discard);

struct MetricsSummary {
    std::vector<double> t;
    std::vector<double> mnte;
    std::vector<double> rmse_angvel;
    std::vector<double> step_time;  ///< s
    double transient_discard = 2.0;  ///< s

    SeriesStats mnte_stats;
    SeriesStats rmse_stats;
    SeriesStats time_stats;
};

/// Fills the *_stats fields from the series after the transient window.
/// Throws std::invalid_argument if the series lengths differ.
void finalize(MetricsSummary& summary);

}  // namespace iktrack
