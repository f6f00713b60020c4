// iktrack: solve, generate and benchmark streams from the command line.
//
// Exit codes: 0 success, 1 usage or invalid gains, 2 bad input data,
// 3 solver failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "iktrack/benchmark.hpp"
#include "iktrack/dynamical_ik.hpp"
#include "iktrack/error.hpp"
#include "iktrack/human_chain.hpp"
#include "iktrack/model_io.hpp"
#include "iktrack/stream_io.hpp"
#include "iktrack/trajectory.hpp"

namespace fs = std::filesystem;
using namespace iktrack;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kSolver = 3 };

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot write '" + path.string() + "'");
    }
    return out;
}

struct SolveArgs {
    std::string model;
    std::string stream;
    std::string method = "dynamical";
    double gain = 2.0;
    double gain_limit = 10.0;
    std::optional<double> dt;
    double rho = 10.0;
    double discard = 2.0;
    std::string out;
};

int run_solve(const SolveArgs& a) {
    const auto model = load_model_file(a.model);
    const auto stream = load_stream(a.stream, model);
    if (stream.empty()) {
        throw SchemaMismatch("stream '" + a.stream + "' has no samples");
    }
    double dt = 0.0;
    if (a.dt) {
        dt = *a.dt;
    } else if (stream.size() > 1) {
        dt = stream[1].t - stream[0].t;
    } else {
        throw SchemaMismatch("a single-sample stream needs --dt");
    }
    const auto method = parse_method(a.method);
    MethodConfig cfg;
    cfg.gain = a.gain;
    cfg.gain_limit = a.gain_limit;
    cfg.rho = a.rho;
    if (method == Method::Dynamical) {
        // Surface gain problems as usage errors before any work is done.
        GainConfig::uniform(model, dt, cfg.gain, cfg.gain_limit);
    }
    const auto rec = run_method(model, stream, method, cfg, dt, a.discard, true);

    std::ostream* out = &std::cout;
    std::ofstream file;
    if (!a.out.empty()) {
        file = open_out(a.out);
        out = &file;
    }
    *out << "t,mnte,rmse_angvel,step_time_ms";
    for (std::size_t j = 0; j < model.dofs(); ++j) {
        *out << ",s_" << model.joints()[j].name;
    }
    *out << '\n';
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        *out << buf;
    };
    const auto& m = rec.metrics;
    for (std::size_t i = 0; i < m.t.size(); ++i) {
        put(m.t[i]);
        *out << ',';
        put(m.mnte[i]);
        *out << ',';
        put(m.rmse_angvel[i]);
        *out << ',';
        put(1e3 * m.step_time[i]);
        for (Eigen::Index j = 0; j < rec.states[i].s.size(); ++j) {
            *out << ',';
            put(rec.states[i].s(j));
        }
        *out << '\n';
    }
    std::fprintf(stderr, "%s: %zu steps, %zu failures, MNTE median %.3g, step median %.3g ms\n",
                 std::string(to_string(method)).c_str(), rec.steps, rec.failures,
                 m.mnte_stats.median, 1e3 * m.time_stats.median);
    if (rec.error) {
        std::fprintf(stderr, "error: %s\n", rec.error->c_str());
        return rec.failure_kind == FailureKind::Solver ? kSolver : kData;
    }
    return kOk;
}

int run_gen(const std::string& model_path, const std::string& spec_path,
            std::optional<std::uint64_t> seed, const std::string& out) {
    const auto model = load_model_file(model_path);
    auto spec = parse_trajectory_spec(read_file(spec_path));
    if (seed) {
        spec.seed = *seed;
    }
    const auto gen = generate_stream(model, spec);
    if (out.empty()) {
        write_stream(std::cout, gen.samples);
    } else {
        save_stream(out, gen.samples);
    }
    return kOk;
}

int run_bench(const std::string& config_path, const std::string& out_dir, std::size_t threads) {
    const fs::path cfg_path = config_path;
    const auto cfg = parse_benchmark_config(read_file(cfg_path), cfg_path.parent_path());
    const auto records = run_benchmark(cfg, threads);
    const fs::path dir = out_dir;
    fs::create_directories(dir / "series");
    fs::create_directories(dir / "configs");
    {
        auto out = open_out(dir / "results.csv");
        write_results_csv(out, records);
    }
    bool solver_failure = false;
    bool data_failure = false;
    for (const auto& r : records) {
        const auto stem = std::string(to_string(r.method)) + "__" + r.model_id + "__" + r.scenario_id;
        {
            auto out = open_out(dir / "series" / (stem + ".csv"));
            write_series_csv(out, r);
        }
        const TrajectorySpec* spec = nullptr;
        for (const auto& s : cfg.scenarios) {
            if (s.id == r.scenario_id) {
                spec = &s.spec;
            }
        }
        auto out = open_out(dir / "configs" / (stem + ".json"));
        out << config_snapshot(r, spec);
        if (r.error) {
            std::fprintf(stderr, "%s: %s\n", stem.c_str(), r.error->c_str());
            solver_failure = solver_failure || r.failure_kind == FailureKind::Solver;
            data_failure = data_failure || r.failure_kind == FailureKind::Data;
        }
    }
    std::fprintf(stderr, "%zu records written to %s\n", records.size(), dir.string().c_str());
    if (solver_failure) {
        return kSolver;
    }
    return data_failure ? kData : kOk;
}

int run_gen_human(int dofs, std::uint64_t seed, const std::string& out) {
    if (dofs != 66 && dofs != 48) {
        std::fprintf(stderr, "error: --dofs must be 66 or 48\n");
        return kUsage;
    }
    const auto model = generate_human_chain(dofs, seed);
    if (out.empty()) {
        std::cout << serialize_model(model);
    } else {
        save_model_file(model, out);
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Real-time inverse kinematics tracking toolkit"};
    app.require_subcommand(1);

    SolveArgs solve;
    auto* solve_cmd = app.add_subcommand("solve", "Track a target stream and write per-sample CSV");
    solve_cmd->add_option("--model", solve.model, "Model JSON")->required()->check(CLI::ExistingFile);
    solve_cmd->add_option("--stream", solve.stream, "Target stream (NDJSON)")
        ->required()
        ->check(CLI::ExistingFile);
    solve_cmd->add_option("--method", solve.method, "dynamical | whole-body | pairwise")
        ->check(CLI::IsMember({"dynamical", "whole-body", "whole_body", "pairwise"}));
    solve_cmd->add_option("--gain", solve.gain, "Feedback gain K (1/s)");
    solve_cmd->add_option("--gain-limit", solve.gain_limit, "Limit shaping gain K_g (1/rad)");
    solve_cmd->add_option("--dt", solve.dt, "Sample period (s); default from the stream");
    solve_cmd->add_option("--rho", solve.rho, "Baumgarte gain (1/s)");
    solve_cmd->add_option("--discard", solve.discard, "Transient excluded from the summary (s)");
    solve_cmd->add_option("--out", solve.out, "Output CSV (default stdout)");

    std::string gen_model;
    std::string gen_spec;
    std::optional<std::uint64_t> gen_seed;
    std::string gen_out;
    auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic target stream");
    gen_cmd->add_option("--model", gen_model, "Model JSON")->required()->check(CLI::ExistingFile);
    gen_cmd->add_option("--spec", gen_spec, "Trajectory spec JSON")
        ->required()
        ->check(CLI::ExistingFile);
    gen_cmd->add_option("--seed", gen_seed, "Override the spec seed");
    gen_cmd->add_option("--out", gen_out, "Output NDJSON (default stdout)");

    std::string bench_config;
    std::string bench_out = "bench_out";
    std::size_t bench_threads = 0;
    auto* bench_cmd = app.add_subcommand("bench", "Run a benchmark sweep");
    bench_cmd->add_option("--config", bench_config, "Bench config JSON")
        ->required()
        ->check(CLI::ExistingFile);
    bench_cmd->add_option("--out", bench_out, "Output directory");
    bench_cmd->add_option("--threads", bench_threads, "Worker threads (0: IKTRACK_THREADS or all cores)");

    int human_dofs = 66;
    std::uint64_t human_seed = 1;
    std::string human_out;
    auto* models_cmd = app.add_subcommand("models", "Model utilities");
    models_cmd->require_subcommand(1);
    auto* human_cmd = models_cmd->add_subcommand("gen-human", "Write a generated human chain");
    human_cmd->add_option("--dofs", human_dofs, "66 or 48");
    human_cmd->add_option("--seed", human_seed, "Segment length jitter seed");
    human_cmd->add_option("--out", human_out, "Output JSON (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*solve_cmd) {
            return run_solve(solve);
        }
        if (*gen_cmd) {
            return run_gen(gen_model, gen_spec, gen_seed, gen_out);
        }
        if (*bench_cmd) {
            return run_bench(bench_config, bench_out, bench_threads);
        }
        if (*human_cmd) {
            return run_gen_human(human_dofs, human_seed, human_out);
        }
    } catch (const InvalidGains& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kUsage;
    } catch (const SolverFailure& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kSolver;
    } catch (const RankDeficient& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kSolver;
    } catch (const DecompositionError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kSolver;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kData;
    }
    return kUsage;
}
