// Command-line driver for the benchmark harness.
//
//   hh run --bench msort --size 100000 --workers 4 --audit joins --stats out.txt
//   hh list
//
// Exit codes: 0 success, 1 audit or verification failure, 2 usage error.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "hh/harness/harness.hpp"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot open " + path);
    out << body;
    if (!out)
        throw std::runtime_error("failed writing " + path);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical-heap runtime benchmark harness"};
    app.require_subcommand(1);

    std::vector<std::string> names;
    for (const auto& b : hh::bench::catalog())
        names.emplace_back(b.name);

    hh::BenchmarkConfig cfg;
    std::string audit = "off";
    std::string stats_path, json_path;
    bool quiet = false;

    CLI::App* run = app.add_subcommand("run", "Run one benchmark");
    run->add_option("--bench", cfg.name, "Benchmark name")->required()->check(CLI::IsMember(names));
    run->add_option("--size", cfg.size, "Input size n (default per benchmark)")->check(CLI::PositiveNumber);
    run->add_option("--grain", cfg.grain, "Sequential threshold (default per benchmark)")->check(CLI::PositiveNumber);
    run->add_option("--workers", cfg.workers, "Worker threads")->check(CLI::Range(1u, 256u));
    run->add_option("--seed", cfg.seed, "Input and scheduler seed");
    run->add_option("--audit", audit, "When to audit the heap hierarchy")
        ->check(CLI::IsMember({"off", "joins", "every-op"}));
    run->add_option("--gc-threshold", cfg.gc_threshold, "Leaf heap bytes before a collection is considered")
        ->check(CLI::PositiveNumber);
    run->add_flag("--deterministic", cfg.deterministic, "Serialize workers for a replayable schedule");
    run->add_option("--trace", cfg.trace_path, "Write the event trace (JSON lines) here");
    run->add_option("--stats", stats_path, "Write the key = value report here");
    run->add_option("--stats-json", json_path, "Write the JSON report here");
    run->add_option("--graph", cfg.graph_path, "Edge list for graph benchmarks")->check(CLI::ExistingFile);
    run->add_option("--degree", cfg.graph_degree, "Out-degree of the synthetic graph")->check(CLI::PositiveNumber);
    run->add_flag("-q,--quiet", quiet, "Do not print the report to stdout");

    CLI::App* list = app.add_subcommand("list", "List benchmarks and their defaults");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    if (*list) {
        for (const auto& b : hh::bench::catalog())
            std::cout << b.name << " size=" << b.default_size << " grain=" << b.default_grain
                      << (b.pure ? " pure" : "") << (b.graph ? " graph" : "") << "\n";
        return 0;
    }

    cfg.audit = audit == "joins"      ? hh::AuditMode::Joins
                : audit == "every-op" ? hh::AuditMode::EveryOp
                                      : hh::AuditMode::Off;
    try {
        hh::BenchmarkRun result = hh::run_benchmark(cfg);
        std::ostringstream text;
        hh::write_text(text, result.stats);
        if (!quiet)
            std::cout << text.str();
        if (!stats_path.empty())
            write_file(stats_path, text.str());
        if (!json_path.empty())
            write_file(json_path, hh::to_json(result.stats).dump(2) + "\n");
        return result.exit_code() == 0 ? 0 : kExitFailure;
    } catch (const hh::ContractViolation& e) {
        std::cerr << "hh: runtime fault: " << e.what() << "\n";
        return kExitFailure;
    } catch (const hh::StructuralError& e) {
        std::cerr << "hh: runtime fault: " << e.what() << "\n";
        return kExitFailure;
    } catch (const hh::EntanglementError& e) {
        std::cerr << "hh: runtime fault: " << e.what() << "\n";
        return kExitFailure;
    } catch (const std::invalid_argument& e) {
        std::cerr << "hh: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::runtime_error& e) {
        // bad graph files and unwritable outputs are input problems
        std::cerr << "hh: " << e.what() << "\n";
        return kExitUsage;
    }
}
