#pragma once

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "hh/audit.hpp"
#include "hh/harness/benchmarks.hpp"
#include "hh/harness/stats.hpp"

namespace hh {

enum class LogLevel { Error, Info, Debug };

inline LogLevel log_level() {
    const char* env = std::getenv("HH_LOG");
    std::string v = env ? env : "error";
    if (v == "debug")
        return LogLevel::Debug;
    if (v == "info")
        return LogLevel::Info;
    return LogLevel::Error;
}

inline void log(LogLevel level, const std::string& msg) {
    static const LogLevel threshold = log_level();
    static const char* names[] = {"error", "info", "debug"};
    if (level <= threshold)
        std::cerr << "hh[" << names[static_cast<int>(level)] << "] " << msg << "\n";
}

struct BenchmarkConfig {
    std::string name;
    std::uint64_t size = 0;   // 0 picks the benchmark default
    std::uint64_t grain = 0;  // 0 picks the benchmark default
    unsigned workers = 1;
    std::uint64_t seed = 1;
    AuditMode audit = AuditMode::Off;
    std::uint64_t gc_threshold = 64 * 4096;
    bool deterministic = false;
    std::string trace_path;
    std::string graph_path;
    std::uint64_t graph_degree = 10;
};

struct BenchmarkRun {
    StatsReport stats;
    AuditReport first_failure;
    bool audit_failed = false;
    int exit_code() const { return audit_failed || !stats.verified ? 1 : 0; }
};

/// Runs one benchmark end to end: builds the runtime, installs the requested
/// audits, verifies the output and collects statistics.
inline BenchmarkRun run_benchmark(const BenchmarkConfig& cfg) {
    const bench::BenchInfo* info = bench::find(cfg.name);
    if (!info)
        throw std::invalid_argument("unknown benchmark '" + cfg.name + "'");

    bench::BenchParams params;
    params.size = cfg.size ? cfg.size : info->default_size;
    params.grain = cfg.grain ? cfg.grain : info->default_grain;
    params.seed = cfg.seed;
    std::optional<graph::Csr> g;
    if (info->graph) {
        if (!cfg.graph_path.empty()) {
            g = graph::load_edge_list(cfg.graph_path);
            params.size = g->vertices;
        } else {
            g = graph::random_digraph(params.size, cfg.graph_degree, cfg.seed);
        }
        params.graph = &*g;
        log(LogLevel::Info, "graph: " + std::to_string(g->vertices) + " vertices, " +
                                std::to_string(g->edges()) + " edges");
    }

    RuntimeConfig rc;
    rc.workers = cfg.workers;
    rc.seed = cfg.seed;
    rc.deterministic = cfg.deterministic;
    rc.gc_threshold = cfg.gc_threshold;
    rc.audit = cfg.audit;
    rc.trace = !cfg.trace_path.empty();
    auto rt = std::make_unique<Runtime>(rc);

    BenchmarkRun run;
    auto audit_now = [&] {
        rt->exclusive([&] {
            AuditReport r = audit_all(rt->hierarchy());
            ++run.stats.audits_run;
            if (!r.passed()) {
                ++run.stats.audit_failures;
                if (!run.audit_failed) {
                    run.first_failure = r;
                    run.audit_failed = true;
                }
            }
        });
    };
    if (cfg.audit == AuditMode::Joins)
        rt->set_join_hook(audit_now);
    if (cfg.audit == AuditMode::EveryOp) {
        rt->set_join_hook(audit_now);
        rt->set_after_op(audit_now);
    }

    log(LogLevel::Info, std::string("running ") + info->name + " n=" + std::to_string(params.size) +
                            " grain=" + std::to_string(params.grain) + " workers=" + std::to_string(cfg.workers));
    auto start = std::chrono::steady_clock::now();
    bench::BenchOutcome outcome = info->fn(*rt, params);
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rt->set_after_op(nullptr);
    if (cfg.audit != AuditMode::Off)
        audit_now();

    StatsReport& s = run.stats;
    s.bench = info->name;
    s.size = params.size;
    s.grain = params.grain;
    s.workers = cfg.workers;
    s.seed = cfg.seed;
    s.deterministic = cfg.deterministic;
    s.audit_mode = to_string(cfg.audit);
    s.gc_threshold = cfg.gc_threshold;
    s.totals = rt->instrumentation().totals();
    s.max_occupancy = rt->store().max_bytes_in_use();
    s.wall_seconds = wall;
    double busy = wall * cfg.workers;
    s.collection_time_fraction =
        busy > 0 ? std::min(1.0, static_cast<double>(s.totals.gc_nanos) * 1e-9 / busy) : 0.0;
    s.lock_order_violations = rt->instrumentation().lock_order_violations();
    s.verified = outcome.verified;
    s.verify_detail = outcome.detail;
    s.checksum = outcome.checksum;

    if (!cfg.trace_path.empty()) {
        std::ofstream out(cfg.trace_path);
        if (!out)
            throw std::runtime_error("cannot open trace file " + cfg.trace_path);
        write_trace(out, rt->instrumentation().trace_events());
        if (!out)
            throw std::runtime_error("failed writing trace file " + cfg.trace_path);
    }
    if (run.audit_failed)
        log(LogLevel::Error, "audit failure:\n" + [&] {
            std::ostringstream os;
            os << run.first_failure;
            return os.str();
        }());
    if (!outcome.verified)
        log(LogLevel::Error, "verification failed: " + outcome.detail);
    return run;
}

} // namespace hh
