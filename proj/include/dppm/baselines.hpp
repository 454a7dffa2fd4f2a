#pragma once

// Comparison solvers: subgradient method with t_k = 1/(k+1), gradient
// descent with Armijo backtracking, and the classical proximal point method
// with an inner (sub)gradient loop.

#include "dppm/core.hpp"
#include "dppm/trace.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <string_view>

namespace dppm {

enum class BaselineKind { subgradient, gd_backtracking, ppm };

inline std::string_view to_string(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::subgradient: return "subgradient";
        case BaselineKind::gd_backtracking: return "gd_backtracking";
        case BaselineKind::ppm: return "ppm";
    }
    return "?";
}

enum class PpmInnerMode {
    schedule,   // inner_iters steps of size 1 / i^inner_step_exponent
    converged,  // backtracking gradient descent until ||grad|| <= inner_tol
};

struct BaselineConfig {
    BaselineKind kind = BaselineKind::subgradient;
    int max_iters = 10000;
    double eps_stop = 1e-12;  // |f(x_{k+1}) - f(x_k)| rule; unused by the subgradient method
    std::optional<double> target_value;
    bool record_distances = true;

    // subgradient: average of sampled subgradients instead of s(x)
    bool sampled = false;
    double sample_radius = 1e-3;
    int sample_count = 10;
    std::uint64_t sample_seed = 1;

    // gd_backtracking
    double armijo_c = 1e-4;
    double shrink = 0.5;
    double initial_step = 1.0;

    // ppm
    double t = 1000.0;
    int inner_iters = 150;
    double inner_step_exponent = 1.5;
    PpmInnerMode inner_mode = PpmInnerMode::schedule;
    double inner_tol = 1e-12;
    int inner_cap = 100000;

    void validate() const {
        if (max_iters < 0) throw ConfigError("max_iters must be non-negative");
        if (!(eps_stop >= 0.0)) throw ConfigError("eps_stop must be non-negative");
        if (sampled && (!(sample_radius > 0.0) || sample_count < 1)) {
            throw ConfigError("sampled subgradient needs radius > 0 and at least one sample");
        }
        if (!(armijo_c > 0.0 && armijo_c < 1.0)) throw ConfigError("armijo_c must lie in (0, 1)");
        if (!(shrink > 0.0 && shrink < 1.0)) throw ConfigError("shrink must lie in (0, 1)");
        if (!(initial_step > 0.0)) throw ConfigError("initial_step must be positive");
        if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("prox parameter t must be positive");
        if (inner_iters < 1) throw ConfigError("inner_iters must be at least 1");
        if (!(inner_step_exponent > 0.0)) throw ConfigError("inner_step_exponent must be positive");
        if (!(inner_tol > 0.0)) throw ConfigError("inner_tol must be positive");
        if (inner_cap < 1) throw ConfigError("inner_cap must be at least 1");
    }

    bool operator==(const BaselineConfig&) const = default;
};

/// t_k = 1 / (k + 1)
constexpr double subgradient_step(int k) noexcept { return 1.0 / (k + 1.0); }

/// Inner PPM step 1 / i^exponent at inner iteration i >= 1.
inline double ppm_inner_step(int i, double exponent) { return std::pow(static_cast<double>(i), -exponent); }

namespace detail {

inline Trace baseline_trace(const char* name, const Problem& problem) {
    Trace trace;
    trace.solver = name;
    trace.problem_label = problem.label;
    trace.metadata["generator"] = kGeneratorName;
    return trace;
}

inline bool hit_target(const BaselineConfig& cfg, double fx) { return cfg.target_value && fx <= *cfg.target_value; }

}  // namespace detail

/// x_{k+1} = x_k - s(x_k) / (k + 1). Not a descent method; `best_f` tracks
/// the best value seen.
inline Trace run_subgradient(const Problem& problem, const Vector& x0, const BaselineConfig& cfg) {
    if (cfg.kind != BaselineKind::subgradient) throw ArgumentError("run_subgradient: config kind is not subgradient");
    cfg.validate();
    detail::require_start(problem, x0, "run_subgradient");
    detail::Stopwatch clock;
    Trace trace = detail::baseline_trace("subgradient", problem);
    if (cfg.sampled) trace.metadata["subgradient"] = "sampled";

    Vector x = x0;
    double fx = value(problem, x);
    trace.records.push_back(detail::start_record(problem, x, fx, cfg.record_distances));
    if (detail::hit_target(cfg, fx)) {
        trace.termination = Termination::target_reached;
        return trace;
    }
    trace.termination = Termination::max_iters;
    for (int k = 0; k < cfg.max_iters; ++k) {
        const Vector s = cfg.sampled ? sampled_subgradient(problem, x, cfg.sample_radius, cfg.sample_count,
                                                           derive_seed(cfg.sample_seed, static_cast<std::uint64_t>(k)))
                                     : subgradient(problem, x);
        const double norm = s.norm();
        if (!std::isfinite(norm)) {
            trace.termination = Termination::numeric_error;
            trace.error_message = "non-finite subgradient";
            break;
        }
        if (norm <= 1e-14) {
            trace.termination = Termination::critical_point;
            break;
        }
        const double step = subgradient_step(k);
        IterRecord& cur = trace.records.back();
        cur.step_w = step * norm;
        cur.direction = -s / norm;
        cur.step_norm = step * norm;
        x -= step * s;
        fx = problem.value_oracle(x);
        if (!std::isfinite(fx)) {
            trace.termination = Termination::numeric_error;
            trace.error_message = "non-finite objective";
            break;
        }
        trace.records.push_back(detail::next_record(problem, cur, x, fx, cfg.record_distances, clock.elapsed_ns()));
        if (detail::hit_target(cfg, fx)) {
            trace.termination = Termination::target_reached;
            break;
        }
    }
    return trace;
}

/// Gradient descent; each step starts at initial_step and shrinks until
/// f(x - a g) <= f(x) - c a ||g||^2.
inline Trace run_gd_backtracking(const Problem& problem, const Vector& x0, const BaselineConfig& cfg) {
    if (cfg.kind != BaselineKind::gd_backtracking) {
        throw ArgumentError("run_gd_backtracking: config kind is not gd_backtracking");
    }
    if (!problem.grad_available) throw ArgumentError("run_gd_backtracking: problem is not differentiable");
    cfg.validate();
    detail::require_start(problem, x0, "run_gd_backtracking");
    detail::Stopwatch clock;
    Trace trace = detail::baseline_trace("gd_backtracking", problem);

    Vector x = x0;
    double fx = value(problem, x);
    trace.records.push_back(detail::start_record(problem, x, fx, cfg.record_distances));
    if (detail::hit_target(cfg, fx)) {
        trace.termination = Termination::target_reached;
        return trace;
    }
    trace.termination = Termination::max_iters;
    for (int k = 0; k < cfg.max_iters; ++k) {
        const Vector g = subgradient(problem, x);
        const double gg = g.squaredNorm();
        if (std::sqrt(gg) <= 1e-14) {
            trace.termination = Termination::critical_point;
            break;
        }
        double alpha = cfg.initial_step;
        Vector trial = x - alpha * g;
        double ft = problem.value_oracle(trial);
        // ft < fx rejects steps that only pass the test through rounding
        while (!(ft <= fx - cfg.armijo_c * alpha * gg && ft < fx)) {
            alpha *= cfg.shrink;
            if (alpha < 1e-16) break;
            trial = x - alpha * g;
            ft = problem.value_oracle(trial);
        }
        if (alpha < 1e-16) {
            trace.termination = Termination::stalled;
            break;
        }
        IterRecord& cur = trace.records.back();
        cur.step_w = alpha * std::sqrt(gg);
        cur.direction = -g / std::sqrt(gg);
        cur.step_norm = cur.step_w;
        const double delta = std::abs(fx - ft);
        x = std::move(trial);
        fx = ft;
        trace.records.push_back(detail::next_record(problem, cur, x, fx, cfg.record_distances, clock.elapsed_ns()));
        if (detail::hit_target(cfg, fx)) {
            trace.termination = Termination::target_reached;
            break;
        }
        if (delta <= cfg.eps_stop) {
            trace.termination = Termination::eps_reached;
            break;
        }
    }
    return trace;
}

/// Approximate prox_{tf}(x): minimizes f(u) + ||u - x||^2 / (2t) starting at u = x.
inline Vector ppm_inner_solve(const Problem& problem, const Vector& x, const BaselineConfig& cfg) {
    Vector u = x;
    if (cfg.inner_mode == PpmInnerMode::schedule) {
        for (int i = 1; i <= cfg.inner_iters; ++i) {
            const Vector g = problem.subgrad_oracle(u) + (u - x) / cfg.t;
            u -= ppm_inner_step(i, cfg.inner_step_exponent) * g;
        }
        return u;
    }
    auto h = [&](const Vector& z) { return problem.value_oracle(z) + (z - x).squaredNorm() / (2.0 * cfg.t); };
    auto grad = [&](const Vector& z) -> Vector { return problem.subgrad_oracle(z) + (z - x) / cfg.t; };
    double hu = h(u);
    Vector g = grad(u);
    for (int i = 0; i < cfg.inner_cap; ++i) {
        const double gn = g.norm();
        if (gn <= cfg.inner_tol) break;
        // Near the minimizer the decrease in h drops below the rounding of h, so
        // a strict drop in the gradient norm also accepts the step.
        double alpha = cfg.initial_step;
        Vector trial, gt;
        double ht = 0.0;
        for (; alpha >= 1e-16; alpha *= cfg.shrink) {
            trial = u - alpha * g;
            ht = h(trial);
            gt = grad(trial);
            if ((ht <= hu - cfg.armijo_c * alpha * gn * gn && ht < hu) || gt.norm() < gn) break;
        }
        if (alpha < 1e-16 || trial == u) break;
        u = std::move(trial);
        hu = ht;
        g = std::move(gt);
    }
    return u;
}

/// Proximal point method; the record of iterate k carries the prox residual
/// ||(x_k - x_{k+1})/t - s(x_{k+1})|| of its step.
inline Trace run_ppm(const Problem& problem, const Vector& x0, const BaselineConfig& cfg) {
    if (cfg.kind != BaselineKind::ppm) throw ArgumentError("run_ppm: config kind is not ppm");
    cfg.validate();
    detail::require_start(problem, x0, "run_ppm");
    detail::Stopwatch clock;
    Trace trace = detail::baseline_trace("ppm", problem);
    trace.t = cfg.t;

    Vector x = x0;
    double fx = value(problem, x);
    trace.records.push_back(detail::start_record(problem, x, fx, cfg.record_distances));
    if (detail::hit_target(cfg, fx)) {
        trace.termination = Termination::target_reached;
        return trace;
    }
    trace.termination = Termination::max_iters;
    for (int k = 0; k < cfg.max_iters; ++k) {
        Vector next = ppm_inner_solve(problem, x, cfg);
        const double fn = problem.value_oracle(next);
        if (!next.allFinite() || !std::isfinite(fn)) {
            trace.termination = Termination::numeric_error;
            trace.error_message = "non-finite prox iterate";
            break;
        }
        IterRecord& cur = trace.records.back();
        const Vector disp = next - x;
        cur.step_norm = disp.norm();
        cur.step_w = cur.step_norm;
        if (cur.step_norm > 0.0) cur.direction = disp / cur.step_norm;
        cur.prox_residual = ((x - next) / cfg.t - problem.subgrad_oracle(next)).norm();
        const double delta = std::abs(fn - fx);
        x = std::move(next);
        fx = fn;
        trace.records.push_back(detail::next_record(problem, cur, x, fx, cfg.record_distances, clock.elapsed_ns()));
        if (detail::hit_target(cfg, fx)) {
            trace.termination = Termination::target_reached;
            break;
        }
        if (delta <= cfg.eps_stop) {
            trace.termination = Termination::eps_reached;
            break;
        }
    }
    return trace;
}

inline Trace run_baseline(const Problem& problem, const Vector& x0, const BaselineConfig& cfg) {
    switch (cfg.kind) {
        case BaselineKind::subgradient: return run_subgradient(problem, x0, cfg);
        case BaselineKind::gd_backtracking: return run_gd_backtracking(problem, x0, cfg);
        case BaselineKind::ppm: return run_ppm(problem, x0, cfg);
    }
    throw ArgumentError("run_baseline: invalid kind");
}

}  // namespace dppm
