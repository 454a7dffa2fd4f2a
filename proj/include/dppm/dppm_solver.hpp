#pragma once

// Direction PPM: x_{k+1} = x_k + w*_k p_k where
//
//     w*_k = argmin_{w >= 0}  w^2 / (2t) + f(x_k + w p_k),
//
// plus direction strategies and the accelerated (extrapolated) variant.

#include "dppm/core.hpp"
#include "dppm/scalar_search.hpp"
#include "dppm/trace.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace dppm {

enum class DirectionKind { neg_gradient, neg_subgradient, sampled_subgradient, momentum };

inline std::string_view to_string(DirectionKind kind) {
    switch (kind) {
        case DirectionKind::neg_gradient: return "neg_gradient";
        case DirectionKind::neg_subgradient: return "neg_subgradient";
        case DirectionKind::sampled_subgradient: return "sampled_subgradient";
        case DirectionKind::momentum: return "momentum";
    }
    return "?";
}

inline DirectionKind parse_direction_kind(std::string_view text) {
    for (auto k : {DirectionKind::neg_gradient, DirectionKind::neg_subgradient, DirectionKind::sampled_subgradient,
                   DirectionKind::momentum}) {
        if (text == to_string(k)) return k;
    }
    throw ConfigError("unknown direction strategy '" + std::string(text) + "'");
}

/// How the search direction p_k is chosen. For `momentum`, `inner` selects
/// the strategy whose direction is blended with the previous one.
struct DirectionStrategy {
    DirectionKind kind = DirectionKind::neg_gradient;
    DirectionKind inner = DirectionKind::neg_subgradient;
    double beta = 0.5;
    double sample_radius = 1e-3;
    int sample_count = 10;
    std::uint64_t sample_seed = 1;

    void validate() const {
        if (kind == DirectionKind::momentum) {
            if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("momentum beta must lie in [0, 1)");
            if (inner == DirectionKind::momentum) throw ConfigError("momentum inner strategy cannot be momentum");
        }
        if (uses_sampling() && (!(sample_radius > 0.0) || sample_count < 1)) {
            throw ConfigError("sampled subgradient needs radius > 0 and at least one sample");
        }
    }

    bool uses_sampling() const noexcept {
        return kind == DirectionKind::sampled_subgradient ||
               (kind == DirectionKind::momentum && inner == DirectionKind::sampled_subgradient);
    }

    bool operator==(const DirectionStrategy&) const = default;
};

struct SolverConfig {
    double t = 1000.0;
    DirectionStrategy strategy;
    ScalarSolverConfig scalar_cfg;
    double eps_stop = 1e-12;
    int max_iters = 10000;
    bool record_distances = true;
    std::optional<double> target_value;  // stop once f(x_k) <= target
    bool accel_restart = true;           // accelerated variant only

    void validate() const {
        if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("prox parameter t must be positive");
        if (!(eps_stop >= 0.0)) throw ConfigError("eps_stop must be non-negative");
        if (max_iters < 0) throw ConfigError("max_iters must be non-negative");
        strategy.validate();
        scalar_cfg.validate();
    }

    bool operator==(const SolverConfig&) const = default;
};

struct EnvelopeResult {
    double value = 0.0;   // inf_{w >= 0} w^2/(2t) + f(x + w p)
    double w_star = 0.0;
    double slope = 0.0;   // p^T s(x)
    int evals = 0;
    bool converged = true;
};

struct StepResult {
    double w_star = 0.0;
    double envelope_value = 0.0;
    Vector next;
    double dir_dot_subgrad = 0.0;       // p^T s(x)
    double dir_dot_subgrad_next = 0.0;  // p^T s(next), stationarity-consistent for nonsmooth f
    double next_value = 0.0;
    bool converged_flag = true;
};

inline constexpr double kCriticalNorm = 1e-14;

/// Value of the direction envelope at x and its minimizing step.
inline EnvelopeResult direction_envelope(const Problem& problem, const Vector& x, const Vector& direction, double t,
                                         const ScalarSolverConfig& scalar_cfg) {
    require_unit(direction, "direction_envelope");
    if (!(t > 0.0)) throw ArgumentError("direction_envelope: t must be positive");
    const double fx = value(problem, x);
    if (!std::isfinite(fx)) throw NumericError("direction_envelope: f(x) is not finite");

    EnvelopeResult out;
    out.value = fx;
    out.slope = direction.dot(subgradient(problem, x));
    if (!std::isfinite(out.slope)) throw NumericError("direction_envelope: non-finite subgradient");
    if (out.slope >= 0.0) return out;

    const Bracket bracket = bracket_from_slope(out.slope, t);
    auto phi = [&](double w) -> double {
        const Vector u = x + w * direction;
        return w * w / (2.0 * t) + problem.value_oracle(u);
    };

    if (resolve_method(scalar_cfg, problem) == ScalarMethod::bisection) {
        auto g = [&](double w) -> double {
            const Vector u = x + w * direction;
            return w / t + direction.dot(problem.subgrad_oracle(u));
        };
        const ScalarResult root = bisection_root(g, bracket, scalar_cfg);
        out.w_star = root.point;
        out.evals = root.evals;
        out.converged = root.converged;
        const double env = phi(out.w_star);
        if (!std::isfinite(env)) throw NumericError("direction_envelope: non-finite objective at the step");
        if (env > fx) {
            // rounding at a vanishing step; w = 0 is at least as good
            out.w_star = 0.0;
        } else {
            out.value = env;
        }
    } else {
        const ScalarResult best = golden_section(phi, bracket, scalar_cfg);
        out.w_star = best.point;
        out.value = best.value;
        out.evals = best.evals;
        out.converged = best.converged;
    }
    return out;
}

namespace detail {

// p^T s(u) at u = x + w p. For nonsmooth f the selected subgradient at u need
// not be the one certifying optimality of w, so the value is taken as the
// element of [p^T s(x + (w - d) p), p^T s(x + (w + d) p)] closest to -w/t,
// with d = 2 tol. That interval brackets the directional subdifferentials of
// every point within tol of w (p^T s(x + w p) is non-decreasing in w).
inline double stationary_slope(const Problem& problem, const Vector& x, const Vector& direction, double w, double t,
                               double tol) {
    if (problem.grad_available) return direction.dot(problem.subgrad_oracle(x + w * direction));
    const double d = 2.0 * tol;
    const double lo = direction.dot(problem.subgrad_oracle(x + std::max(0.0, w - d) * direction));
    const double hi = direction.dot(problem.subgrad_oracle(x + (w + d) * direction));
    return std::clamp(-w / t, std::min(lo, hi), std::max(lo, hi));
}

}  // namespace detail

/// One directional proximal step from x along the unit direction.
inline StepResult dppm_step(const Problem& problem, const Vector& x, const Vector& direction, const SolverConfig& cfg) {
    const EnvelopeResult env = direction_envelope(problem, x, direction, cfg.t, cfg.scalar_cfg);
    StepResult out;
    out.w_star = env.w_star;
    out.envelope_value = env.value;
    out.next = x + env.w_star * direction;
    out.dir_dot_subgrad = env.slope;
    out.converged_flag = env.converged;
    out.next_value = problem.value_oracle(out.next);
    if (!std::isfinite(out.next_value)) throw NumericError("dppm_step: f is not finite at the next iterate");
    out.dir_dot_subgrad_next = env.w_star == 0.0 && problem.grad_available
                                   ? env.slope
                                   : detail::stationary_slope(problem, x, direction, env.w_star, cfg.t,
                                                              cfg.scalar_cfg.tol);
    return out;
}

namespace detail {

inline std::optional<Vector> base_direction(DirectionKind kind, const DirectionStrategy& strategy,
                                            const Problem& problem, const Vector& x, std::uint64_t iteration) {
    Vector s = kind == DirectionKind::sampled_subgradient
                   ? sampled_subgradient(problem, x, strategy.sample_radius, strategy.sample_count,
                                         derive_seed(strategy.sample_seed, iteration))
                   : subgradient(problem, x);
    if (!s.allFinite()) throw NumericError("select_direction: non-finite subgradient");
    const double norm = s.norm();
    if (norm <= kCriticalNorm) return std::nullopt;
    return Vector(-s / norm);
}

}  // namespace detail

/// Unit search direction at x, or nullopt when x is a critical point
/// (||s(x)|| <= 1e-14 for the chosen subgradient).
///
/// `iteration` decorrelates the perturbations of sampled subgradients
/// between iterations while keeping runs reproducible.
inline std::optional<Vector> select_direction(const DirectionStrategy& strategy, const Problem& problem, const Vector& x,
                                              const Vector* prev_dir = nullptr, std::uint64_t iteration = 0) {
    if (strategy.kind != DirectionKind::momentum) {
        return detail::base_direction(strategy.kind, strategy, problem, x, iteration);
    }
    auto fresh = detail::base_direction(strategy.inner, strategy, problem, x, iteration);
    if (!fresh || prev_dir == nullptr || prev_dir->size() == 0) return fresh;
    Vector blend = strategy.beta * *prev_dir + (1.0 - strategy.beta) * *fresh;
    const double norm = blend.norm();
    if (!(norm > kCriticalNorm)) return fresh;
    return Vector(blend / norm);
}

namespace detail {

inline void fill_step(IterRecord& rec, const Vector& direction, const StepResult& step) {
    rec.step_w = step.w_star;
    rec.direction = direction;
    rec.dir_dot_sgrad = step.dir_dot_subgrad;
    rec.dir_dot_sgrad_next = step.dir_dot_subgrad_next;
}

inline void describe(Trace& trace, const SolverConfig& cfg, const Problem& problem) {
    trace.t = cfg.t;
    trace.scalar_tol = cfg.scalar_cfg.tol;
    trace.problem_label = problem.label;
    trace.metadata["generator"] = kGeneratorName;
    trace.metadata["direction"] = std::string(to_string(cfg.strategy.kind));
    trace.metadata["scalar_method"] = std::string(to_string(resolve_method(cfg.scalar_cfg, problem)));
}

}  // namespace detail

/// Runs Direction PPM from x0.
///
/// Stops when |f(x_{k+1}) - f(x_k)| <= eps_stop, when the direction strategy
/// reports a critical point, on reaching target_value, or after max_iters.
inline Trace run_dppm(const Problem& problem, const Vector& x0, const SolverConfig& cfg) {
    cfg.validate();
    detail::require_start(problem, x0, "run_dppm");
    detail::Stopwatch clock;

    Trace trace;
    trace.solver = "dppm";
    detail::describe(trace, cfg, problem);

    Vector x = x0;
    double fx = value(problem, x);
    trace.records.push_back(detail::start_record(problem, x, fx, cfg.record_distances));
    if (cfg.target_value && fx <= *cfg.target_value) {
        trace.termination = Termination::target_reached;
        return trace;
    }

    Vector prev_dir;
    bool stopped = false;
    try {
        for (int k = 0; k < cfg.max_iters; ++k) {
            auto dir = select_direction(cfg.strategy, problem, x, prev_dir.size() ? &prev_dir : nullptr,
                                        static_cast<std::uint64_t>(k));
            if (!dir) {
                trace.termination = Termination::critical_point;
                stopped = true;
                break;
            }
            const StepResult step = dppm_step(problem, x, *dir, cfg);
            IterRecord& cur = trace.records.back();
            detail::fill_step(cur, *dir, step);
            cur.step_norm = (step.next - x).norm();

            trace.records.push_back(detail::next_record(problem, trace.records.back(), step.next, step.next_value,
                                                        cfg.record_distances, clock.elapsed_ns()));
            const double delta = std::abs(step.next_value - fx);
            x = step.next;
            fx = step.next_value;
            prev_dir = std::move(*dir);
            if (cfg.target_value && fx <= *cfg.target_value) {
                trace.termination = Termination::target_reached;
                stopped = true;
                break;
            }
            if (delta <= cfg.eps_stop) {
                trace.termination = Termination::eps_reached;
                stopped = true;
                break;
            }
        }
    } catch (const NumericError& e) {
        trace.termination = Termination::numeric_error;
        trace.error_message = e.what();
        stopped = true;
    }
    if (!stopped) trace.termination = Termination::max_iters;
    return trace;
}

/// theta_k = 2 / (k + 1)
constexpr double accel_theta(int k) noexcept { return 2.0 / (k + 1.0); }

/// State of the accelerated iteration after k updates.
struct AccelState {
    int k = 0;           // updates since the last (re)start
    double theta = 1.0;
    Vector x;            // base point the last step was taken from
    Vector v;            // extrapolated point

    /// v = (1 - 1/theta) x + (1/theta) u
    void extrapolate(const Vector& u) {
        v = (1.0 - 1.0 / theta) * x + (1.0 / theta) * u;
    }
};

/// Accelerated Direction PPM. Each update takes a directional prox step from
/// the extrapolated point v^{k-1} to obtain x^k, then extrapolates
///
///     v^k = (1 - 1/theta_k) v^{k-1} + (1/theta_k) x^k,  theta_k = 2/(k+1),
///
/// starting from v^0 = x^0. With accel_restart, an extrapolation that lands
/// above f(x^k) is discarded (v^k = x^k) and the theta schedule restarts.
inline Trace run_accelerated_dppm(const Problem& problem, const Vector& x0, const SolverConfig& cfg) {
    cfg.validate();
    detail::require_start(problem, x0, "run_accelerated_dppm");
    detail::Stopwatch clock;

    Trace trace;
    trace.solver = "dppm_accelerated";
    detail::describe(trace, cfg, problem);
    if (!problem.grad_available) trace.metadata["experimental"] = "true";
    int restarts = 0;

    double fx = value(problem, x0);
    trace.records.push_back(detail::start_record(problem, x0, fx, cfg.record_distances));
    trace.records.back().extrapolated = x0;
    if (cfg.target_value && fx <= *cfg.target_value) {
        trace.termination = Termination::target_reached;
        return trace;
    }

    AccelState state;
    state.v = x0;
    Vector prev_dir;
    bool stopped = false;
    try {
        for (int iter = 1; iter <= cfg.max_iters; ++iter) {
            state.k += 1;
            state.theta = accel_theta(state.k);
            state.x = state.v;

            auto dir = select_direction(cfg.strategy, problem, state.x, prev_dir.size() ? &prev_dir : nullptr,
                                        static_cast<std::uint64_t>(iter));
            if (!dir) {
                // the extrapolated point itself is critical
                const double fv = problem.value_oracle(state.x);
                if (fv < fx) {
                    IterRecord& cur = trace.records.back();
                    cur.step_norm = (state.x - cur.x).norm();
                    trace.records.push_back(detail::next_record(problem, cur, state.x, fv, cfg.record_distances,
                                                                clock.elapsed_ns()));
                    trace.records.back().extrapolated = state.x;
                }
                trace.termination = Termination::critical_point;
                stopped = true;
                break;
            }

            const StepResult step = dppm_step(problem, state.x, *dir, cfg);
            const Vector& u = step.next;
            state.extrapolate(u);
            if (cfg.accel_restart && !(problem.value_oracle(state.v) <= step.next_value)) {
                state.v = u;
                state.k = 0;
                ++restarts;
            }

            IterRecord& cur = trace.records.back();
            detail::fill_step(cur, *dir, step);
            cur.step_norm = (u - cur.x).norm();
            trace.records.push_back(
                detail::next_record(problem, cur, u, step.next_value, cfg.record_distances, clock.elapsed_ns()));
            trace.records.back().extrapolated = state.v;

            const double delta = std::abs(step.next_value - fx);
            fx = step.next_value;
            prev_dir = std::move(*dir);
            if (cfg.target_value && fx <= *cfg.target_value) {
                trace.termination = Termination::target_reached;
                stopped = true;
                break;
            }
            if (delta <= cfg.eps_stop) {
                trace.termination = Termination::eps_reached;
                stopped = true;
                break;
            }
        }
    } catch (const NumericError& e) {
        trace.termination = Termination::numeric_error;
        trace.error_message = e.what();
        stopped = true;
    }
    if (!stopped) trace.termination = Termination::max_iters;
    trace.metadata["restarts"] = std::to_string(restarts);
    return trace;
}

}  // namespace dppm
