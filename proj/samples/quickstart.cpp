// Minimize the Matyas function and 2|x| + |y| from (10, 10) and print the runs.

#include "dppm/dppm.hpp"

#include <cstdio>

int main() {
    using namespace dppm;

    const Problem matyas = build_problem({.kind = ProblemKind::matyas});
    SolverConfig smooth;
    smooth.strategy.kind = DirectionKind::neg_gradient;
    const Trace a = run_dppm(matyas, Vector::Constant(2, 10.0), smooth);
    std::printf("matyas: %s after %zu iterations, f = %.3e\n", std::string(to_string(a.termination)).c_str(),
                a.iterations(), a.final_value());

    const Problem abs21 = build_problem({.kind = ProblemKind::abs21});
    SolverConfig nonsmooth;
    nonsmooth.strategy.kind = DirectionKind::sampled_subgradient;
    nonsmooth.scalar_cfg.method = ScalarMethod::golden_section;
    const Trace b = run_dppm(abs21, Vector::Constant(2, 10.0), nonsmooth);
    std::printf("abs21:  %s after %zu iterations, f = %.3e\n", std::string(to_string(b.termination)).c_str(),
                b.iterations(), b.final_value());

    for (const Trace* t : {&a, &b}) {
        const Problem& p = t == &a ? matyas : abs21;
        for (const CheckReport& c : run_checks(p, *t)) {
            std::printf("  %-7s %-46s %s\n", t->problem_label.c_str(), c.check_name.c_str(), c.pass ? "pass" : "FAIL");
        }
    }
    return 0;
}
