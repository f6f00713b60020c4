#include "iktrack/benchmark.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "iktrack/dynamical_ik.hpp"
#include "iktrack/error.hpp"
#include "iktrack/human_chain.hpp"
#include "iktrack/model_io.hpp"

namespace iktrack {

using nlohmann::json;

std::string_view to_string(Method method) {
    switch (method) {
        case Method::Dynamical: return "dynamical";
        case Method::WholeBody: return "whole-body";
        case Method::Pairwise: return "pairwise";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    if (name == "dynamical") {
        return Method::Dynamical;
    }
    if (name == "whole-body" || name == "whole_body") {
        return Method::WholeBody;
    }
    if (name == "pairwise") {
        return Method::Pairwise;
    }
    throw std::invalid_argument("unknown method '" + std::string(name) + "'");
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

Configuration start_configuration(const KinematicModel& model, const TargetSample& first) {
    auto q = Configuration::zero(model.dofs());
    const auto& pt = model.position_targets();
    for (std::size_t i = 0; i < pt.size(); ++i) {
        if (pt[i] == model.base_link()) {
            q.base_pos = first.positions[i];
        }
    }
    return q;
}

void record_error(RunRecord& rec, const std::exception& e) {
    rec.error = e.what();
    const bool solver = dynamic_cast<const SolverFailure*>(&e) != nullptr ||
                        dynamic_cast<const RankDeficient*>(&e) != nullptr ||
                        dynamic_cast<const DecompositionError*>(&e) != nullptr;
    rec.failure_kind = solver ? FailureKind::Solver : FailureKind::Data;
}

void push_metrics(RunRecord& rec, double t, double m, double r, double time) {
    rec.metrics.t.push_back(t);
    rec.metrics.mnte.push_back(m);
    rec.metrics.rmse_angvel.push_back(r);
    rec.metrics.step_time.push_back(time);
}

void run_dynamical(RunRecord& rec, const KinematicModel& model,
                   const std::vector<TargetSample>& stream, bool keep) {
    const auto& cfg = rec.config;
    BaumgarteConfig baumgarte;
    baumgarte.rho = cfg.rho;
    baumgarte.dt = rec.dt;
    DynamicalIk ik(model, GainConfig::uniform(model, rec.dt, cfg.gain, cfg.gain_limit), baumgarte,
                   QpOptions{}, cfg.damping);
    auto state = ik.initial_state(stream.front());
    for (const auto& sample : stream) {
        const Configuration q_prev = state.q;
        const auto start = Clock::now();
        try {
            ik.step(state, sample);
        } catch (const Error& e) {
            ++rec.failures;
            record_error(rec, e);
            return;
        }
        const double elapsed = seconds_since(start);
        ++rec.steps;
        push_metrics(rec, sample.t, mnte(model, q_prev, sample),
                     rmse_angvel(model, q_prev, state.nu, sample), elapsed);
        if (keep) {
            rec.states.push_back(state.q);
            rec.velocities.push_back(state.nu);
        }
    }
}

template <class Solve>
void run_instantaneous(RunRecord& rec, const KinematicModel& model,
                       const std::vector<TargetSample>& stream, bool keep, Solve&& solve) {
    QpSolver solver;
    auto q = start_configuration(model, stream.front());
    for (const auto& sample : stream) {
        const auto start = Clock::now();
        Configuration q_next;
        Velocity nu;
        bool ok = true;
        try {
            ok = solve(sample, q, q_next);
            nu = baseline_velocity(model, q_next, sample, rec.config.instantaneous.velocity_damping,
                                   solver);
        } catch (const Error& e) {
            ++rec.failures;
            if (!rec.error) {
                record_error(rec, e);
            }
            ++rec.steps;
            continue;
        }
        const double elapsed = seconds_since(start);
        if (!ok) {
            ++rec.failures;
        }
        ++rec.steps;
        q = q_next;
        push_metrics(rec, sample.t, mnte(model, q, sample), rmse_angvel(model, q, nu, sample),
                     elapsed);
        if (keep) {
            rec.states.push_back(q);
            rec.velocities.push_back(nu);
        }
    }
}

}  // namespace

RunRecord run_method(const KinematicModel& model, const std::vector<TargetSample>& stream,
                     Method method, const MethodConfig& config, double dt,
                     double transient_discard, bool keep_states) {
    RunRecord rec;
    rec.method = method;
    rec.config = config;
    rec.dt = dt;
    rec.metrics.transient_discard = transient_discard;
    if (stream.empty()) {
        finalize(rec.metrics);
        return rec;
    }
    try {
        check_sample(model, stream.front());
        switch (method) {
            case Method::Dynamical:
                run_dynamical(rec, model, stream, keep_states);
                break;
            case Method::WholeBody:
                run_instantaneous(rec, model, stream, keep_states,
                                  [&](const TargetSample& s, const Configuration& q,
                                      Configuration& out) {
                                      auto r = solve_whole_body(model, s, q, config.instantaneous);
                                      out = std::move(r.q);
                                      return r.converged;
                                  });
                break;
            case Method::Pairwise: {
                const auto subsystems = decompose_pairwise(model);
                PairwiseOptions options;
                options.threads = config.pairwise_threads;
                run_instantaneous(rec, model, stream, keep_states,
                                  [&](const TargetSample& s, const Configuration& q,
                                      Configuration& out) {
                                      auto r = solve_pairwise(model, subsystems, s, q,
                                                              config.instantaneous, options);
                                      out = std::move(r.q);
                                      return std::all_of(r.subsystems.begin(), r.subsystems.end(),
                                                         [](const auto& s) { return s.converged; });
                                  });
                break;
            }
        }
    } catch (const Error& e) {
        record_error(rec, e);
    } catch (const std::invalid_argument& e) {
        rec.error = e.what();
        rec.failure_kind = FailureKind::Data;
    }
    finalize(rec.metrics);
    return rec;
}

std::size_t worker_slots() {
    if (const char* env = std::getenv("IKTRACK_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) {
            return static_cast<std::size_t>(v);
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<RunRecord> run_benchmark(const BenchmarkConfig& config, std::size_t threads) {
    struct Cell {
        std::size_t model;
        std::size_t scenario;
        Method method;
    };
    std::vector<Cell> cells;
    for (std::size_t m = 0; m < config.models.size(); ++m) {
        for (std::size_t s = 0; s < config.scenarios.size(); ++s) {
            for (auto method : config.methods) {
                cells.push_back({m, s, method});
            }
        }
    }
    std::vector<RunRecord> records(cells.size());
    if (cells.empty()) {
        return records;
    }

    // Streams are shared by the methods of a (model, scenario) pair.
    const auto n_pairs = config.models.size() * config.scenarios.size();
    std::vector<std::vector<TargetSample>> streams(n_pairs);
    std::vector<std::optional<std::string>> stream_errors(n_pairs);
    for (std::size_t m = 0; m < config.models.size(); ++m) {
        for (std::size_t s = 0; s < config.scenarios.size(); ++s) {
            const auto idx = m * config.scenarios.size() + s;
            try {
                streams[idx] =
                    generate_stream(*config.models[m].model, config.scenarios[s].spec).samples;
            } catch (const std::exception& e) {
                stream_errors[idx] = e.what();
            }
        }
    }

    auto run_cell = [&](std::size_t i) {
        const auto& cell = cells[i];
        const auto idx = cell.model * config.scenarios.size() + cell.scenario;
        const auto& scenario = config.scenarios[cell.scenario];
        RunRecord rec;
        if (stream_errors[idx]) {
            rec.method = cell.method;
            rec.config = config.method_config;
            rec.dt = scenario.spec.dt;
            rec.error = *stream_errors[idx];
            rec.failure_kind = FailureKind::Data;
            rec.metrics.transient_discard = config.transient_discard;
            finalize(rec.metrics);
        } else {
            rec = run_method(*config.models[cell.model].model, streams[idx], cell.method,
                             config.method_config, scenario.spec.dt, config.transient_discard);
        }
        rec.model_id = config.models[cell.model].id;
        rec.scenario_id = scenario.id;
        records[i] = std::move(rec);
    };

    const auto workers = std::min(threads == 0 ? worker_slots() : threads, cells.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            run_cell(i);
        }
        return records;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (auto i = next++; i < cells.size(); i = next++) {
                run_cell(i);
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    return records;
}

namespace {

const json& optional_object(const json& doc, const char* key) {
    static const json empty = json::object();
    auto it = doc.find(key);
    if (it == doc.end()) {
        return empty;
    }
    if (!it->is_object()) {
        throw ValidationError("schema", std::string("bench config '") + key + "' must be an object");
    }
    return *it;
}

double number_or(const json& obj, const char* key, double fallback) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        return fallback;
    }
    if (!it->is_number()) {
        throw ValidationError("schema", std::string("bench config '") + key + "' must be a number");
    }
    return it->get<double>();
}

std::size_t count_or(const json& obj, const char* key, std::size_t fallback) {
    auto it = obj.find(key);
    if (it == obj.end()) {
        return fallback;
    }
    if (!it->is_number_unsigned()) {
        throw ValidationError("schema",
                              std::string("bench config '") + key + "' must be a non-negative integer");
    }
    return it->get<std::size_t>();
}

void only_keys(const json& obj, std::initializer_list<std::string_view> keys, const char* where) {
    for (const auto& [key, value] : obj.items()) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw ValidationError("unknown key", "'" + key + "' in " + where);
        }
    }
}

std::string id_of(const json& entry, const char* where) {
    auto it = entry.find("id");
    if (it == entry.end() || !it->is_string()) {
        throw ValidationError("schema", std::string(where) + " entries need a string 'id'");
    }
    return it->get<std::string>();
}

}  // namespace

BenchmarkConfig parse_benchmark_config(std::string_view text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("bench config: ") + e.what(), e.byte, ParseError::Unit::Byte);
    }
    if (!doc.is_object()) {
        throw ValidationError("schema", "bench config must be an object");
    }
    only_keys(doc, {"models", "scenarios", "methods", "dynamical", "instantaneous", "transient_discard"},
              "bench config");

    BenchmarkConfig cfg;
    auto array = [&](const char* key) -> const json& {
        auto it = doc.find(key);
        if (it == doc.end() || !it->is_array()) {
            throw ValidationError("schema", std::string("bench config '") + key + "' must be an array");
        }
        return *it;
    };

    for (const auto& m : array("models")) {
        if (!m.is_object()) {
            throw ValidationError("schema", "model entries must be objects");
        }
        only_keys(m, {"id", "file", "generate"}, "model entry");
        ModelEntry entry;
        entry.id = id_of(m, "model");
        if (auto f = m.find("file"); f != m.end()) {
            if (!f->is_string()) {
                throw ValidationError("schema", "model 'file' must be a string");
            }
            std::filesystem::path p = f->get<std::string>();
            if (p.is_relative()) {
                p = base_dir / p;
            }
            entry.model = std::make_shared<const KinematicModel>(load_model_file(p));
        } else if (auto g = m.find("generate"); g != m.end()) {
            if (!g->is_object()) {
                throw ValidationError("schema", "model 'generate' must be an object");
            }
            only_keys(*g, {"dofs", "seed"}, "model generate");
            const auto dofs = count_or(*g, "dofs", 66);
            if (dofs != 66 && dofs != 48) {
                throw ValidationError("schema", "generated models have 66 or 48 dofs");
            }
            entry.model = std::make_shared<const KinematicModel>(
                generate_human_chain(static_cast<int>(dofs), count_or(*g, "seed", 1)));
        } else {
            throw ValidationError("schema", "model entry '" + entry.id + "' needs 'file' or 'generate'");
        }
        cfg.models.push_back(std::move(entry));
    }

    for (const auto& s : array("scenarios")) {
        if (!s.is_object()) {
            throw ValidationError("schema", "scenario entries must be objects");
        }
        only_keys(s, {"id", "spec"}, "scenario entry");
        ScenarioEntry entry;
        entry.id = id_of(s, "scenario");
        auto spec = s.find("spec");
        if (spec == s.end()) {
            throw ValidationError("schema", "scenario '" + entry.id + "' needs a 'spec'");
        }
        entry.spec = parse_trajectory_spec(spec->dump());
        cfg.scenarios.push_back(std::move(entry));
    }

    for (const auto& m : array("methods")) {
        if (!m.is_string()) {
            throw ValidationError("schema", "methods must be strings");
        }
        try {
            cfg.methods.push_back(parse_method(m.get<std::string>()));
        } catch (const std::invalid_argument& e) {
            throw ValidationError("schema", e.what());
        }
    }

    const auto& dyn = optional_object(doc, "dynamical");
    only_keys(dyn, {"gain", "gain_limit", "rho", "damping"}, "dynamical");
    auto& mc = cfg.method_config;
    mc.gain = number_or(dyn, "gain", mc.gain);
    mc.gain_limit = number_or(dyn, "gain_limit", mc.gain_limit);
    mc.rho = number_or(dyn, "rho", mc.rho);
    mc.damping = number_or(dyn, "damping", mc.damping);

    const auto& inst = optional_object(doc, "instantaneous");
    only_keys(inst,
              {"position_weight", "orientation_weight", "stop_tol", "max_iters", "lm_lambda0",
               "velocity_damping", "threads"},
              "instantaneous");
    auto& ic = mc.instantaneous;
    ic.position_weight = number_or(inst, "position_weight", ic.position_weight);
    ic.orientation_weight = number_or(inst, "orientation_weight", ic.orientation_weight);
    ic.stop_tol = number_or(inst, "stop_tol", ic.stop_tol);
    ic.max_iters = count_or(inst, "max_iters", ic.max_iters);
    ic.lm_lambda0 = number_or(inst, "lm_lambda0", ic.lm_lambda0);
    ic.velocity_damping = number_or(inst, "velocity_damping", ic.velocity_damping);
    mc.pairwise_threads = count_or(inst, "threads", mc.pairwise_threads);
    try {
        ic.validate();
    } catch (const std::invalid_argument& e) {
        throw ValidationError("instantaneous", e.what());
    }

    cfg.transient_discard = number_or(doc, "transient_discard", cfg.transient_discard);
    if (!(cfg.transient_discard >= 0.0)) {
        throw ValidationError("schema", "transient_discard must be non-negative");
    }
    return cfg;
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void write_results_csv(std::ostream& out, const std::vector<RunRecord>& records) {
    out << kResultsHeader << '\n';
    for (const auto& r : records) {
        const auto& m = r.metrics;
        out << to_string(r.method) << ',' << r.model_id << ',' << r.scenario_id << ','
            << fmt(m.mnte_stats.median) << ',' << fmt(m.mnte_stats.p95) << ','
            << fmt(m.rmse_stats.median) << ',' << fmt(m.rmse_stats.p95) << ','
            << fmt(1e3 * m.time_stats.median) << ',' << fmt(1e3 * m.time_stats.p95) << ','
            << r.steps << ',' << r.failures << '\n';
    }
}

void write_series_csv(std::ostream& out, const RunRecord& record) {
    const auto& m = record.metrics;
    out << "t,mnte,rmse_angvel,step_time_ms\n";
    for (std::size_t i = 0; i < m.t.size(); ++i) {
        out << fmt(m.t[i]) << ',' << fmt(m.mnte[i]) << ',' << fmt(m.rmse_angvel[i]) << ','
            << fmt(1e3 * m.step_time[i]) << '\n';
    }
}

std::string config_snapshot(const RunRecord& record, const TrajectorySpec* spec) {
    const auto& c = record.config;
    json doc{{"method", std::string(to_string(record.method))},
             {"model", record.model_id},
             {"scenario", record.scenario_id},
             {"dt", record.dt},
             {"transient_discard", record.metrics.transient_discard},
             {"dynamical",
              {{"gain", c.gain}, {"gain_limit", c.gain_limit}, {"rho", c.rho}, {"damping", c.damping}}},
             {"instantaneous",
              {{"position_weight", c.instantaneous.position_weight},
               {"orientation_weight", c.instantaneous.orientation_weight},
               {"stop_tol", c.instantaneous.stop_tol},
               {"max_iters", c.instantaneous.max_iters},
               {"lm_lambda0", c.instantaneous.lm_lambda0},
               {"velocity_damping", c.instantaneous.velocity_damping},
               {"threads", c.pairwise_threads}}}};
    if (spec) {
        doc["spec"] = json::parse(serialize_trajectory_spec(*spec));
    }
    if (record.error) {
        doc["error"] = *record.error;
    }
    return doc.dump(2) + "\n";
}

}  // namespace iktrack
