#include "iktrack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace iktrack {

double mnte(const KinematicModel& model, const LinkPoses& poses, const TargetSample& sample) {
    const auto& ot = model.orientation_targets();
    if (ot.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < ot.size(); ++i) {
        const Mat3 rel = poses.rotation[ot[i]].matrix().transpose() * sample.rotations[i].matrix();
        sum += (3.0 - rel.trace()) / 2.0;
    }
    return sum / static_cast<double>(ot.size());
}

double mnte(const KinematicModel& model, const Configuration& q, const TargetSample& sample) {
    check_sample(model, sample);
    return mnte(model, compute_link_poses(model, q), sample);
}

double rmse_angvel(const KinematicModel& model, const Configuration& q, const Velocity& nu,
                   const TargetSample& sample) {
    check_sample(model, sample);
    const auto& ot = model.orientation_targets();
    if (ot.empty()) {
        return 0.0;
    }
    const auto poses = compute_link_poses(model, q);
    const VectorXd stacked = nu.stacked();
    double sum = 0.0;
    for (std::size_t i = 0; i < ot.size(); ++i) {
        const Vec3 w_hat = jacobian(model, poses, ot[i]).bottomRows<3>() * stacked;
        sum += (sample.ang_vels[i] - w_hat).squaredNorm() / 3.0;
    }
    return std::sqrt(sum / static_cast<double>(ot.size()));
}

namespace {

double percentile(const std::vector<double>& sorted, double p) {
    const double pos = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

SeriesStats describe(std::span<const double> values) {
    SeriesStats s;
    s.count = values.size();
    if (values.empty()) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        s.mean = s.median = s.p25 = s.p75 = s.p95 = s.max = nan;
        return s;
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    s.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
    s.median = percentile(sorted, 0.5);
    s.p25 = percentile(sorted, 0.25);
    s.p75 = percentile(sorted, 0.75);
    s.p95 = percentile(sorted, 0.95);
    s.max = sorted.back();
    return s;
}

std::size_t transient_count(std::span<const double> t, double discard) {
    if (t.empty()) {
        return 0;
    }
    const double t0 = t.front();
    std::size_t k = 0;
    // Half a microsecond of slack absorbs round-off in accumulated timestamps.
    while (k < t.size() && t[k] - t0 < discard - 5e-7) {
        ++k;
    }
    return k;
}

void finalize(MetricsSummary& m) {
    const auto n = m.t.size();
    if (m.mnte.size() != n || m.rmse_angvel.size() != n || m.step_time.size() != n) {
        throw std::invalid_argument("metrics: series lengths differ");
    }
    const auto skip = transient_count(m.t, m.transient_discard);
    auto tail = [&](const std::vector<double>& v) {
        return std::span<const double>(v).subspan(skip);
    };
    m.mnte_stats = describe(tail(m.mnte));
    m.rmse_stats = describe(tail(m.rmse_angvel));
    m.time_stats = describe(tail(m.step_time));
}

}  // namespace iktrack
