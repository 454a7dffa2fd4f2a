#include "dppm/dppm_solver.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace dppm;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double d : v) x[i++] = d;
    return x;
}

SolverConfig config(double t, DirectionKind kind = DirectionKind::neg_gradient) {
    SolverConfig c;
    c.t = t;
    c.strategy.kind = kind;
    return c;
}

}  // namespace

TEST(SolverConfig, Validation) {
    EXPECT_NO_THROW(SolverConfig{}.validate());
    EXPECT_EQ(SolverConfig{}.t, 1000.0);
    EXPECT_EQ(SolverConfig{}.eps_stop, 1e-12);
    SolverConfig c;
    c.t = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.eps_stop = -1;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.strategy.kind = DirectionKind::momentum;
    c.strategy.beta = 1.0;
    EXPECT_THROW(c.validate(), ConfigError);
    c.strategy.beta = 0.5;
    c.strategy.inner = DirectionKind::momentum;
    EXPECT_THROW(c.validate(), ConfigError);
    c = {};
    c.strategy.kind = DirectionKind::sampled_subgradient;
    c.strategy.sample_count = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_THROW(parse_direction_kind("newton"), ConfigError);
    EXPECT_EQ(parse_direction_kind("momentum"), DirectionKind::momentum);
}

TEST(DirectionEnvelope, QuadraticClosedForm) {
    const Problem p = half_square_1d();
    for (double t : {1.0, 3.0, 0.1, 1000.0}) {
        const EnvelopeResult e = direction_envelope(p, vec({1}), vec({-1}), t, {});
        EXPECT_NEAR(e.w_star, t / (1 + t), 1e-9) << t;
        EXPECT_NEAR(e.value, 1.0 / (2 * (1 + t)), 1e-12) << t;
    }
    const EnvelopeResult e1 = direction_envelope(p, vec({1}), vec({-1}), 1.0, {});
    EXPECT_NEAR(e1.value, 0.25, 1e-12);
    const EnvelopeResult e3 = direction_envelope(p, vec({1}), vec({-1}), 3.0, {});
    EXPECT_NEAR(e3.value, 0.125, 1e-12);
    EXPECT_NEAR(e3.w_star, 0.75, 1e-10);
}

TEST(DirectionEnvelope, QuadraticAgainstGridOracle) {
    const Problem p = half_square_1d();
    const double t = 1.0;
    const double w = oracle::grid_argmin([&](double s) { return s * s / (2 * t) + 0.5 * (1 - s) * (1 - s); }, 0, 1);
    EXPECT_NEAR(w, 0.5, 1e-5);
    ScalarSolverConfig g;
    g.method = ScalarMethod::golden_section;
    EXPECT_NEAR(direction_envelope(p, vec({1}), vec({-1}), t, g).w_star, 0.5, 1e-7);
}

TEST(DirectionEnvelope, AscentDirectionGivesZeroStep) {
    const Problem p = half_square_1d();
    const EnvelopeResult e = direction_envelope(p, vec({1}), vec({1}), 1.0, {});
    EXPECT_EQ(e.w_star, 0.0);
    EXPECT_EQ(e.value, 0.5);
}

TEST(DirectionEnvelope, Errors) {
    const Problem p = half_square_1d();
    EXPECT_THROW(direction_envelope(p, vec({1}), vec({-0.5}), 1.0, {}), ArgumentError);
    EXPECT_THROW(direction_envelope(p, vec({1}), vec({-1}), 0.0, {}), ArgumentError);
    Problem bad = p;
    bad.value_oracle = [](const Vector& x) { return x[0] < 0.9 ? NAN : 0.5 * x[0] * x[0]; };
    ScalarSolverConfig g;
    g.method = ScalarMethod::golden_section;
    EXPECT_THROW(direction_envelope(bad, vec({1}), vec({-1}), 1.0, g), NumericError);
}

TEST(DppmStep, QuadraticExample) {
    const StepResult s = dppm_step(half_square_1d(), vec({1}), vec({-1}), config(1.0));
    EXPECT_NEAR(s.w_star, 0.5, 1e-10);
    EXPECT_NEAR(s.next[0], 0.5, 1e-10);
    EXPECT_EQ(s.next[0], 1.0 + s.w_star * -1.0);
    EXPECT_NEAR(s.dir_dot_subgrad_next, -0.5, 1e-10);
    EXPECT_NEAR(s.w_star, -1.0 * s.dir_dot_subgrad_next, 1e-10);
    EXPECT_EQ(s.dir_dot_subgrad, -1.0);
    EXPECT_LE(s.envelope_value, 0.5);
}

TEST(DppmStep, AtMinimizerEveryDirectionGivesZeroStep) {
    const Problem p = build_problem({.kind = ProblemKind::matyas});
    for (double ang = 0; ang < 6.28; ang += 0.5) {
        for (double t : {0.01, 1.0, 1000.0}) {
            const StepResult s = dppm_step(p, vec({0, 0}), vec({std::cos(ang), std::sin(ang)}), config(t));
            EXPECT_EQ(s.w_star, 0.0);
            EXPECT_EQ(s.next, vec({0, 0}));
        }
    }
}

TEST(DppmStep, AscentDirection) {
    const StepResult s = dppm_step(half_square_1d(), vec({1}), vec({1}), config(1.0));
    EXPECT_EQ(s.w_star, 0.0);
    EXPECT_EQ(s.next, vec({1}));
}

TEST(DppmStep, StationarityDescentAndStepBoundOnRandomQuadratics) {
    Xoshiro256 rng(8);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 1 + static_cast<int>(rng.below(4));
        Matrix b(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) b(i, j) = rng.normal();
        const Matrix a = b * b.transpose() / n + 0.1 * Matrix::Identity(n, n);
        Vector c(n), x(n), d(n);
        for (int i = 0; i < n; ++i) {
            c[i] = rng.uniform(-1, 1);
            x[i] = rng.uniform(-5, 5);
            d[i] = rng.normal();
        }
        const Problem p = quadratic_problem(a, c);
        d.normalize();
        const double t = std::pow(10.0, rng.uniform(-2, 3));
        const SolverConfig cfg = config(t);
        const StepResult s = dppm_step(p, x, d, cfg);
        const double tol = cfg.scalar_cfg.tol;
        EXPECT_GE(s.w_star, 0.0);
        EXPECT_LE(s.next_value, value(p, x));
        EXPECT_LE(s.w_star, t * std::abs(d.dot(subgradient(p, x))) + tol);
        if (s.w_star > 0) {
            const double lip = a.norm();
            // bisection residual, scaled by the curvature along d
            EXPECT_LE(std::abs(s.w_star / t + s.dir_dot_subgrad_next), tol * (1 + 1 / t) * std::max(1.0, lip));
        } else {
            EXPECT_GE(d.dot(subgradient(p, x)), -tol);
        }
    }
}

TEST(DppmStep, NonsmoothStationarySlope) {
    // abs21 from (1, -2) toward the origin hits the x-kink at w = |x| / |p_x|
    const Problem p = build_problem({.kind = ProblemKind::abs21});
    const Vector x = vec({1, -2});
    const Vector d = -subgradient(p, x).normalized();
    const SolverConfig cfg = config(1000.0, DirectionKind::neg_subgradient);
    const StepResult s = dppm_step(p, x, d, cfg);
    EXPECT_LE(s.next_value, value(p, x));
    EXPECT_LE(s.next_value, value(p, x) - cfg.t * s.dir_dot_subgrad_next * s.dir_dot_subgrad_next + 1e-8);
    EXPECT_LE(s.w_star, cfg.t * std::abs(s.dir_dot_subgrad_next) + 1e-6);
}

TEST(SelectDirection, Examples) {
    const Problem m = build_problem({.kind = ProblemKind::matyas});
    DirectionStrategy s;
    const auto d = select_direction(s, m, vec({1, 1}));
    ASSERT_TRUE(d);
    EXPECT_NEAR((*d)[0], -1 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR((*d)[1], -1 / std::sqrt(2.0), 1e-15);

    const Problem a = build_problem({.kind = ProblemKind::abs21});
    s.kind = DirectionKind::neg_subgradient;
    const auto e = select_direction(s, a, vec({1, -2}));
    EXPECT_TRUE(e->isApprox(-vec({2, -1}) / std::sqrt(5.0)));
}

TEST(SelectDirection, MomentumBetaZeroIsFreshDirection) {
    const Problem a = build_problem({.kind = ProblemKind::abs21});
    DirectionStrategy m;
    m.kind = DirectionKind::momentum;
    m.beta = 0.0;
    DirectionStrategy plain;
    plain.kind = DirectionKind::neg_subgradient;
    const Vector prev = vec({0.6, 0.8});
    EXPECT_TRUE(select_direction(m, a, vec({1, -2}), &prev)->isApprox(*select_direction(plain, a, vec({1, -2}))));
}

TEST(SelectDirection, MomentumBlendsAndNormalizes) {
    const Problem a = build_problem({.kind = ProblemKind::abs21});
    DirectionStrategy m;
    m.kind = DirectionKind::momentum;
    m.beta = 0.5;
    const Vector prev = vec({0, -1});
    const Vector fresh = -vec({2, -1}).normalized();
    const Vector expected = (0.5 * prev + 0.5 * fresh).normalized();
    const auto d = select_direction(m, a, vec({1, -2}), &prev);
    EXPECT_TRUE(d->isApprox(expected));
    EXPECT_NEAR(d->norm(), 1.0, 1e-15);
    // first iteration without a previous direction
    EXPECT_TRUE(select_direction(m, a, vec({1, -2}))->isApprox(fresh));
}

TEST(SelectDirection, CriticalPoint) {
    const Problem m = build_problem({.kind = ProblemKind::matyas});
    EXPECT_FALSE(select_direction({}, m, vec({0, 0})).has_value());
    const Problem a = build_problem({.kind = ProblemKind::abs21});
    DirectionStrategy s;
    s.kind = DirectionKind::neg_subgradient;
    EXPECT_FALSE(select_direction(s, a, vec({0, 0})).has_value());
}

TEST(SelectDirection, SampledIsUnitAndReproducible) {
    const Problem a = build_problem({.kind = ProblemKind::abs21});
    DirectionStrategy s;
    s.kind = DirectionKind::sampled_subgradient;
    const auto d1 = select_direction(s, a, vec({1e-4, 3}), nullptr, 5);
    const auto d2 = select_direction(s, a, vec({1e-4, 3}), nullptr, 5);
    ASSERT_TRUE(d1 && d2);
    EXPECT_EQ(*d1, *d2);
    EXPECT_NEAR(d1->norm(), 1.0, 1e-15);
}

TEST(RunDppm, QuadraticHalvingIterates) {
    SolverConfig cfg = config(1.0);
    cfg.max_iters = 20;
    const Trace tr = run_dppm(half_square_1d(), vec({1}), cfg);
    ASSERT_EQ(tr.records.size(), 21u);
    for (int k = 0; k <= 20; ++k) EXPECT_NEAR(tr.records[k].x[0], std::ldexp(1.0, -k), 1e-10 * std::ldexp(1.0, -k));
    EXPECT_EQ(tr.termination, Termination::max_iters);
    EXPECT_EQ(tr.solver, "dppm");
    EXPECT_EQ(tr.t, 1.0);
    EXPECT_EQ(tr.metadata.at("generator"), std::string(kGeneratorName));
}

TEST(RunDppm, StartAtMinimizer) {
    const Problem m = build_problem({.kind = ProblemKind::matyas});
    const Trace tr = run_dppm(m, vec({0, 0}), {});
    EXPECT_EQ(tr.records.size(), 1u);
    EXPECT_EQ(tr.termination, Termination::critical_point);
}

TEST(RunDppm, MatyasConverges) {
    const Problem m = build_problem({.kind = ProblemKind::matyas});
    SolverConfig cfg = config(1000.0);
    cfg.eps_stop = 1e-14;
    const Trace tr = run_dppm(m, vec({1, 1}), cfg);
    EXPECT_LE(tr.final_value(), 1e-10);
    EXPECT_LE(tr.final_record().dist_to_opt, 1e-4);
}

TEST(RunDppm, TraceInvariants) {
    const Problem m = build_problem({.kind = ProblemKind::matyas});
    const Trace tr = run_dppm(m, vec({10, 3}), {});
    ASSERT_GT(tr.records.size(), 3u);
    for (std::size_t k = 0; k + 1 < tr.records.size(); ++k) {
        const IterRecord& r = tr.records[k];
        const IterRecord& n = tr.records[k + 1];
        EXPECT_LE(n.f, r.f);
        EXPECT_LE(r.elapsed_ns, n.elapsed_ns);
        EXPECT_EQ(n.k, r.k + 1);
        EXPECT_TRUE(r.has_step());
        EXPECT_NEAR(r.step_norm, (n.x - r.x).norm(), 1e-12);
        EXPECT_NEAR(r.step_norm, r.step_w, 1e-12 * (1 + r.step_w));
        EXPECT_NEAR(r.dist_to_opt, r.x.norm(), 1e-15);
    }
    EXPECT_FALSE(tr.final_record().has_step());
}

TEST(RunDppm, ZeroIterationsRecordsOnlyTheStart) {
    SolverConfig cfg;
    cfg.max_iters = 0;
    const Trace tr = run_dppm(build_problem({.kind = ProblemKind::matyas}), vec({10, 10}), cfg);
    EXPECT_EQ(tr.records.size(), 1u);
    EXPECT_EQ(tr.termination, Termination::max_iters);
}

TEST(RunDppm, TargetValueStops) {
    SolverConfig cfg = config(1.0);
    cfg.target_value = 1e-3;
    const Trace tr = run_dppm(half_square_1d(), vec({1}), cfg);
    EXPECT_EQ(tr.termination, Termination::target_reached);
    EXPECT_LE(tr.final_value(), 1e-3);
    EXPECT_GT(tr.records[tr.records.size() - 2].f, 1e-3);
}

TEST(RunDppm, NumericErrorIsRecorded) {
    Problem p = half_square_1d();
    p.value_oracle = [](const Vector& x) { return x[0] < 0.3 ? NAN : 0.5 * x[0] * x[0]; };
    SolverConfig cfg = config(1.0);
    cfg.scalar_cfg.method = ScalarMethod::golden_section;
    const Trace tr = run_dppm(p, vec({1}), cfg);
    EXPECT_EQ(tr.termination, Termination::numeric_error);
    EXPECT_FALSE(tr.error_message.empty());
}

TEST(RunDppm, Errors) {
    const Problem m = build_problem({.kind = ProblemKind::matyas});
    EXPECT_THROW(run_dppm(m, vec({1}), {}), ArgumentError);
    EXPECT_THROW(run_dppm(m, vec({1, NAN}), {}), ArgumentError);
    SolverConfig bad;
    bad.t = -1;
    EXPECT_THROW(run_dppm(m, vec({1, 1}), bad), ConfigError);
}

TEST(RunDppm, Deterministic) {
    const Problem cs = build_problem({.kind = ProblemKind::compressed_sensing, .seed = 7});
    SolverConfig cfg;
    cfg.strategy.kind = DirectionKind::momentum;
    cfg.max_iters = 50;
    Xoshiro256 rng(11);
    Vector x0(50);
    for (int i = 0; i < 50; ++i) x0[i] = rng.uniform(-1, 1);
    const Trace a = run_dppm(cs, x0, cfg);
    const Trace b = run_dppm(cs, x0, cfg);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t k = 0; k < a.records.size(); ++k) {
        EXPECT_EQ(a.records[k].f, b.records[k].f);
        EXPECT_TRUE(a.records[k].x == b.records[k].x);
    }
}

TEST(Accelerated, ThetaSchedule) {
    EXPECT_EQ(accel_theta(1), 1.0);
    EXPECT_EQ(accel_theta(3), 0.5);
    for (int k = 1; k < 100; ++k) {
        EXPECT_GT(accel_theta(k), 0.0);
        EXPECT_LE(accel_theta(k), 1.0);
    }
    AccelState s;
    s.theta = 1.0;
    s.x = vec({3, 4});
    s.extrapolate(vec({1, 2}));
    EXPECT_EQ(s.v, vec({1, 2}));
    s.theta = 0.5;
    s.extrapolate(vec({1, 2}));
    EXPECT_EQ(s.v, vec({-1, 0}));
}

TEST(Accelerated, QuadraticBound) {
    SolverConfig cfg = config(1.0);
    cfg.max_iters = 1000;
    const Trace tr = run_accelerated_dppm(half_square_1d(), vec({1}), cfg);
    for (const IterRecord& r : tr.records) {
        if (r.k < 1) continue;
        const double theta = accel_theta(r.k);
        EXPECT_LE(r.f, theta * theta + 1e-8) << r.k;
    }
    EXPECT_EQ(tr.solver, "dppm_accelerated");
    EXPECT_FALSE(tr.metadata.count("experimental"));
}

TEST(Accelerated, FirstStepIsPlainStep) {
    SolverConfig cfg = config(1.0);
    cfg.max_iters = 1;
    const Trace tr = run_accelerated_dppm(half_square_1d(), vec({1}), cfg);
    ASSERT_EQ(tr.records.size(), 2u);
    EXPECT_NEAR(tr.records[1].x[0], 0.5, 1e-10);
    EXPECT_EQ(tr.records[1].extrapolated, tr.records[1].x);
}

TEST(Accelerated, NonsmoothIsFlaggedExperimental) {
    SolverConfig cfg = config(1000.0, DirectionKind::sampled_subgradient);
    cfg.max_iters = 20;
    const Trace tr = run_accelerated_dppm(build_problem({.kind = ProblemKind::abs21}), vec({10, 10}), cfg);
    EXPECT_EQ(tr.metadata.at("experimental"), "true");
}

TEST(Accelerated, RestartKeepsMatyasConvergent) {
    SolverConfig cfg = config(1000.0);
    const Trace tr = run_accelerated_dppm(build_problem({.kind = ProblemKind::matyas}), vec({10, 3}), cfg);
    EXPECT_LE(tr.best_value(), 1e-10);
}
