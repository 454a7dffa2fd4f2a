#pragma once

// One-dimensional solvers for the step-size subproblem
//
//     min_{w >= 0}  w^2 / (2t) + f(x + w p)
//
// golden_section() needs only function values and therefore also handles
// nonsmooth objectives; bisection_root() solves the stationarity equation
// w/t + p^T grad f(x + w p) = 0 for differentiable f.

#include "dppm/core.hpp"

#include <cmath>
#include <limits>
#include <string_view>

namespace dppm {

enum class ScalarMethod { automatic, golden_section, bisection };

inline std::string_view to_string(ScalarMethod method) {
    switch (method) {
        case ScalarMethod::automatic: return "auto";
        case ScalarMethod::golden_section: return "golden_section";
        case ScalarMethod::bisection: return "bisection";
    }
    return "?";
}

inline ScalarMethod parse_scalar_method(std::string_view text) {
    for (auto m : {ScalarMethod::automatic, ScalarMethod::golden_section, ScalarMethod::bisection}) {
        if (text == to_string(m)) return m;
    }
    throw ConfigError("unknown scalar method '" + std::string(text) + "'");
}

struct ScalarSolverConfig {
    ScalarMethod method = ScalarMethod::automatic;  // bisection when the gradient exists
    double tol = 1e-10;
    int max_evals = 200;

    void validate() const {
        if (!(tol > 0.0) || !std::isfinite(tol)) throw ConfigError("scalar tol must be positive");
        if (max_evals < 3) throw ConfigError("scalar max_evals must be at least 3");
    }

    bool operator==(const ScalarSolverConfig&) const = default;
};

/// Resolves `automatic`: bisection for differentiable problems, golden section otherwise.
inline ScalarMethod resolve_method(const ScalarSolverConfig& cfg, const Problem& problem) {
    if (cfg.method != ScalarMethod::automatic) return cfg.method;
    return problem.grad_available ? ScalarMethod::bisection : ScalarMethod::golden_section;
}

struct Bracket {
    double lo = 0.0;
    double hi = 0.0;

    double width() const noexcept { return hi - lo; }
};

struct ScalarResult {
    double point = 0.0;
    double value = 0.0;  // phi(point) for golden_section, g(point) for bisection_root
    int evals = 0;
    bool converged = true;
};

inline constexpr double kUnitNormTolerance = 1e-12;

inline void require_unit(const Vector& direction, const char* where) {
    if (!direction.allFinite() || std::abs(direction.norm() - 1.0) > kUnitNormTolerance) {
        throw ArgumentError(std::string(where) + ": direction must have unit norm");
    }
}

/// [0, t |p^T s(x)|] given the slope p^T s(x). Contains the optimal step.
inline Bracket bracket_from_slope(double slope, double t) {
    if (!(t > 0.0)) throw ArgumentError("make_bracket: t must be positive");
    if (!std::isfinite(slope)) throw NumericError("make_bracket: non-finite directional slope");
    return {0.0, t * std::abs(slope)};
}

inline Bracket make_bracket(const Problem& problem, const Vector& x, const Vector& direction, double t) {
    require_unit(direction, "make_bracket");
    if (!(t > 0.0)) throw ArgumentError("make_bracket: t must be positive");
    return bracket_from_slope(direction.dot(subgradient(problem, x)), t);
}

/// Fallback bracket when s(x) is unavailable or expensive: start at
/// `initial` and double until phi stops decreasing.
template <class Phi>
Bracket doubling_bracket(Phi&& phi, double initial = 1.0, int max_doublings = 60) {
    if (!(initial > 0.0)) throw ArgumentError("doubling_bracket: initial width must be positive");
    double prev = phi(0.0);
    double hi = initial;
    for (int i = 0; i < max_doublings; ++i) {
        const double cur = phi(hi);
        if (!std::isfinite(cur)) throw NumericError("doubling_bracket: non-finite objective");
        if (cur >= prev) return {0.0, hi};
        prev = cur;
        hi *= 2.0;
    }
    return {0.0, hi};
}

/// Golden-section search for the minimizer of a unimodal phi on [lo, hi].
///
/// The bracket endpoint `lo` is evaluated so that a minimizer sitting on the
/// boundary (w* = 0) is returned exactly. On equal interior values the left
/// sub-bracket is kept.
template <class Phi>
ScalarResult golden_section(Phi&& phi, Bracket bracket, const ScalarSolverConfig& cfg) {
    if (bracket.lo > bracket.hi) throw ArgumentError("golden_section: empty bracket");
    cfg.validate();
    constexpr double kInvPhi = 0.61803398874989484820;  // 1 / golden ratio

    auto eval = [&](double w) {
        const double v = phi(w);
        if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
            throw NumericError("golden_section: non-finite objective value");
        }
        return v;
    };

    ScalarResult best;
    best.point = bracket.lo;
    best.value = eval(bracket.lo);
    best.evals = 1;
    if (bracket.width() <= 0.0) return best;

    auto consider = [&](double w, double v) {
        if (v < best.value) {
            best.point = w;
            best.value = v;
        }
    };

    double a = bracket.lo;
    double c = bracket.hi;
    double left = c - kInvPhi * (c - a);
    double right = a + kInvPhi * (c - a);
    double f_left = eval(left);
    double f_right = eval(right);
    best.evals += 2;
    consider(left, f_left);
    consider(right, f_right);

    while (true) {
        if (f_left <= f_right) {
            c = right;
            right = left;
            f_right = f_left;
            if (c - a <= cfg.tol) break;
            if (best.evals >= cfg.max_evals) {
                best.converged = false;
                break;
            }
            left = c - kInvPhi * (c - a);
            f_left = eval(left);
            ++best.evals;
            consider(left, f_left);
        } else {
            a = left;
            left = right;
            f_left = f_right;
            if (c - a <= cfg.tol) break;
            if (best.evals >= cfg.max_evals) {
                best.converged = false;
                break;
            }
            right = a + kInvPhi * (c - a);
            f_right = eval(right);
            ++best.evals;
            consider(right, f_right);
        }
    }
    return best;
}

/// Root of a non-decreasing g on [lo, hi].
///
/// g(lo) > 0 returns lo (no descent along the direction); g(hi) <= 0 returns
/// hi. Otherwise halves the bracket until its width is at most tol.
template <class G>
ScalarResult bisection_root(G&& g, Bracket bracket, const ScalarSolverConfig& cfg) {
    if (bracket.lo > bracket.hi) throw ArgumentError("bisection_root: empty bracket");
    cfg.validate();

    auto eval = [&](double w) {
        const double v = g(w);
        if (!std::isfinite(v)) throw NumericError("bisection_root: non-finite residual");
        return v;
    };

    ScalarResult out;
    double a = bracket.lo;
    double c = bracket.hi;
    const double ga = eval(a);
    out.evals = 1;
    if (ga >= 0.0 || bracket.width() <= 0.0) {
        out.point = a;
        out.value = ga;
        return out;
    }
    const double gc = eval(c);
    ++out.evals;
    if (gc <= 0.0) {
        out.point = c;
        out.value = gc;
        return out;
    }
    while (true) {
        const double mid = 0.5 * (a + c);
        const double gm = eval(mid);
        ++out.evals;
        if (gm == 0.0) {
            out.point = mid;
            out.value = gm;
            return out;
        }
        const bool no_progress = mid <= a || mid >= c;  // bracket at floating-point resolution
        if (gm > 0.0) {
            c = mid;
        } else {
            a = mid;
        }
        if (c - a <= cfg.tol || no_progress || out.evals + 1 >= cfg.max_evals) {
            out.converged = c - a <= cfg.tol || no_progress;
            out.point = 0.5 * (a + c);
            out.value = eval(out.point);
            ++out.evals;
            return out;
        }
    }
}

}  // namespace dppm
