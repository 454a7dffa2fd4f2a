// dppm: run experiments, compare reports, check trace files.
//
//   dppm run <config>
//   dppm compare <report.json>... [--csv out.csv]
//   dppm check <trace.csv> --problem kind[:key=value,...] [--solver dppm] [--t 1000] [--scalar-tol 1e-10]
//
// Exit status: 0 success, 1 a check failed, 2 configuration or I/O error.

#include "dppm/dppm.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>

namespace {

constexpr int kExitFail = 1;
constexpr int kExitError = 2;

void print_checks(const std::string& solver, const std::vector<dppm::CheckReport>& checks) {
    for (const auto& c : checks) {
        std::printf("  %-12s %-46s %s  worst=%.3e tol=%.1e%s%s%s\n", solver.c_str(), c.check_name.c_str(),
                    c.pass ? "pass" : "FAIL", c.worst_violation, c.tolerance, c.inconclusive ? " (inconclusive)" : "",
                    c.proxy ? " [proxy]" : "", c.note.empty() ? "" : ("  " + c.note).c_str());
    }
}

int cmd_run(const std::string& config_path) {
    const dppm::RunConfig cfg = dppm::load_config(config_path);
    const dppm::ExperimentResult result = dppm::run_experiment(cfg);
    std::printf("problem %s, output in %s\n", std::string(dppm::to_string(cfg.problem.kind)).c_str(),
                result.output_dir.string().c_str());
    for (const auto& s : result.solvers) {
        if (!s.error.empty()) {
            std::printf("%-12s error: %s\n", s.name.c_str(), s.error.c_str());
            continue;
        }
        std::printf("%-12s %-16s iters=%zu f=%.10g best=%.10g median=%.3f ms\n", s.name.c_str(),
                    std::string(dppm::to_string(s.trace.termination)).c_str(), s.trace.iterations(),
                    s.trace.final_value(), s.trace.best_value(), s.median_wall_ns / 1e6);
        print_checks(s.name, s.checks);
    }
    return result.all_checks_pass() ? 0 : kExitFail;
}

int cmd_compare(const std::vector<std::string>& paths, const std::string& csv_path) {
    std::vector<nlohmann::json> reports;
    for (const auto& p : paths) reports.push_back(dppm::load_report(p));
    const dppm::ComparisonTable table = dppm::compare(reports);
    std::cout << table.text;
    if (!csv_path.empty()) {
        std::ofstream out(csv_path);
        if (!(out << table.csv)) throw dppm::IoError("cannot write '" + csv_path + "'");
    }
    return 0;
}

int cmd_check(const std::string& trace_path, const std::string& problem_text, const std::string& solver, double t,
              double scalar_tol) {
    const dppm::Problem problem = dppm::build_problem(dppm::parse_problem_spec(problem_text));
    dppm::Trace trace = dppm::read_trace_csv(trace_path);
    trace.solver = solver;
    trace.problem_label = problem.label;
    trace.t = t;
    trace.scalar_tol = scalar_tol;
    const auto checks = dppm::run_checks(problem, trace);
    print_checks(solver, checks);
    const bool ok = std::all_of(checks.begin(), checks.end(), [](const dppm::CheckReport& c) { return c.pass; });
    return ok ? 0 : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Direction proximal point experiments"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "run the solvers of a configuration file");
    run->add_option("config", config_path, "configuration file")->required();

    std::vector<std::string> report_paths;
    std::string csv_path;
    auto* cmp = app.add_subcommand("compare", "tabulate terminated values and times of report.json files");
    cmp->add_option("reports", report_paths, "report files")->required();
    cmp->add_option("--csv", csv_path, "also write the table as CSV");

    std::string trace_path;
    std::string problem_text;
    std::string solver = "dppm";
    double t = 1000.0;
    double scalar_tol = 1e-10;
    auto* chk = app.add_subcommand("check", "run the invariant checks on a trace CSV");
    chk->add_option("trace", trace_path, "trace file")->required();
    chk->add_option("--problem", problem_text, "problem, e.g. matyas or compressed_sensing:seed=7")->required();
    chk->add_option("--solver", solver, "solver that produced the trace")
        ->check(CLI::IsMember({"dppm", "dppm_accelerated", "subgradient", "gd_backtracking", "ppm"}));
    chk->add_option("--t", t, "prox parameter of the run")->check(CLI::PositiveNumber);
    chk->add_option("--scalar-tol", scalar_tol, "scalar solver tolerance of the run")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitError;
    }

    try {
        if (*run) return cmd_run(config_path);
        if (*cmp) return cmd_compare(report_paths, csv_path);
        return cmd_check(trace_path, problem_text, solver, t, scalar_tol);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "dppm: %s\n", e.what());
    }
    return kExitError;
}
