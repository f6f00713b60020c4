#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "iktrack/instantaneous_ik.hpp"
#include "iktrack/metrics.hpp"
#include "iktrack/model.hpp"
#include "iktrack/so3.hpp"
#include "iktrack/targets.hpp"
#include "iktrack/trajectory.hpp"

namespace iktrack {

enum class Method { Dynamical, WholeBody, Pairwise };

/// "dynamical", "whole-body", "pairwise".
std::string_view to_string(Method method);
/// Accepts the names above ("whole_body" too). Throws std::invalid_argument.
Method parse_method(std::string_view name);

struct MethodConfig {
    double gain = 2.0;         ///< K, 1/s
    double gain_limit = 10.0;  ///< K_g, 1/rad
    double rho = 10.0;         ///< Baumgarte gain, 1/s
    double damping = 1e-6;     ///< QP damping
    InstantaneousConfig instantaneous;
    std::size_t pairwise_threads = 1;
};

enum class FailureKind { None, Data, Solver };

struct RunRecord {
    Method method = Method::Dynamical;
    std::string model_id;
    std::string scenario_id;
    MethodConfig config;
    double dt = 0.0;
    MetricsSummary metrics;
    std::size_t steps = 0;     ///< samples processed
    std::size_t failures = 0;  ///< samples that threw or missed their stopping rule
    std::optional<std::string> error;
    FailureKind failure_kind = FailureKind::None;
    /// Filled when requested: configuration and velocity reported per sample.
    std::vector<Configuration> states;
    std::vector<Velocity> velocities;
};

/// Runs one method over a stream with fixed period dt. Wall time is measured
/// around the per-sample solve only. For the dynamical method the metrics of
/// sample k pair x(t_k) with the configuration the step started from and the
/// velocity it produced, as in its step report; the instantaneous methods
/// report the configuration solved for sample k and the velocity fitted at it.
/// A dynamical run stops at its first error; instantaneous runs record
/// failed samples and carry on from the last good configuration.
RunRecord run_method(const KinematicModel& model, const std::vector<TargetSample>& stream,
                     Method method, const MethodConfig& config, double dt,
                     double transient_discard = 2.0, bool keep_states = false);

struct ModelEntry {
    std::string id;
    std::shared_ptr<const KinematicModel> model;
};

struct ScenarioEntry {
    std::string id;
    TrajectorySpec spec;
};

struct BenchmarkConfig {
    std::vector<ModelEntry> models;
    std::vector<ScenarioEntry> scenarios;
    std::vector<Method> methods;
    MethodConfig method_config;
    double transient_discard = 2.0;
};

/// Worker slots: IKTRACK_THREADS if set to a positive integer, otherwise the
/// hardware concurrency (at least 1).
std::size_t worker_slots();

/// Every (model, scenario, method) cell, in declaration order (model-major,
/// method-minor). Cells run in parallel on up to `threads` workers (0 means
/// worker_slots()). A failing cell is recorded and does not stop the sweep.
std::vector<RunRecord> run_benchmark(const BenchmarkConfig& config, std::size_t threads = 0);

/// Bench config JSON:
///   {"models": [{"id", "file"} | {"id", "generate": {"dofs", "seed"}}],
///    "scenarios": [{"id", "spec": {trajectory spec}}],
///    "methods": [...],
///    "dynamical": {"gain", "gain_limit", "rho", "damping"},
///    "instantaneous": {"position_weight", "orientation_weight", "stop_tol",
///                      "max_iters", "lm_lambda0", "velocity_damping", "threads"},
///    "transient_discard": s}
/// Relative model paths resolve against `base_dir`.
/// Throws ParseError, ValidationError, and whatever loading a model throws.
BenchmarkConfig parse_benchmark_config(std::string_view text,
                                       const std::filesystem::path& base_dir = {});

inline constexpr std::string_view kResultsHeader =
    "method,model,scenario,mnte_median,mnte_p95,rmse_median,rmse_p95,time_median_ms,"
    "time_p95_ms,steps,failures";

void write_results_csv(std::ostream& out, const std::vector<RunRecord>& records);
/// Columns t,mnte,rmse_angvel,step_time_ms.
void write_series_csv(std::ostream& out, const RunRecord& record);
/// JSON snapshot of the settings a record was produced with.
std::string config_snapshot(const RunRecord& record, const TrajectorySpec* spec = nullptr);

}  // namespace iktrack
