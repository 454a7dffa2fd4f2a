#pragma once

#include "dppm/core.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace dppm {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

enum class Termination { eps_reached, max_iters, stalled, critical_point, target_reached, numeric_error };

inline std::string_view to_string(Termination reason) {
    switch (reason) {
        case Termination::eps_reached: return "eps_reached";
        case Termination::max_iters: return "max_iters";
        case Termination::stalled: return "stalled";
        case Termination::critical_point: return "critical_point";
        case Termination::target_reached: return "target_reached";
        case Termination::numeric_error: return "numeric_error";
    }
    return "?";
}

/// State at iterate k together with the step that leaves it. Step fields of
/// the final record are NaN (there is no outgoing step). Fields that a solver
/// does not produce stay NaN / empty.
struct IterRecord {
    int k = 0;
    Vector x;
    double f = kNaN;
    double best_f = kNaN;
    double step_w = kNaN;           // w*_k
    Vector direction;               // unit search direction p_k
    double dir_dot_sgrad = kNaN;    // p_k^T s(x_k)
    double dir_dot_sgrad_next = kNaN;  // p_k^T s(x_{k+1})
    double step_norm = kNaN;        // ||x_{k+1} - x_k||
    double dist_to_opt = kNaN;      // ||x_k - x*||
    double prox_residual = kNaN;    // PPM only
    Vector extrapolated;            // accelerated variant: v^k
    std::int64_t elapsed_ns = 0;

    bool has_step() const noexcept { return !std::isnan(step_w); }
};

struct Trace {
    std::string solver;  // dppm, dppm_accelerated, subgradient, gd_backtracking, ppm
    std::string problem_label;
    double t = kNaN;     // prox parameter; NaN for solvers without one
    double scalar_tol = kNaN;
    Termination termination = Termination::max_iters;
    std::string error_message;
    std::vector<IterRecord> records;
    std::map<std::string, std::string> metadata;

    std::size_t iterations() const noexcept { return records.empty() ? 0 : records.size() - 1; }
    const IterRecord& final_record() const { return records.back(); }
    double final_value() const { return records.empty() ? kNaN : records.back().f; }
    double best_value() const { return records.empty() ? kNaN : records.back().best_f; }
};

namespace detail {

class Stopwatch {
public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}

    std::int64_t elapsed_ns() const {
        return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

inline IterRecord start_record(const Problem& problem, const Vector& x, double fx, bool record_distances) {
    IterRecord r;
    r.k = 0;
    r.x = x;
    r.f = fx;
    r.best_f = fx;
    if (record_distances && problem.known_optimum) r.dist_to_opt = (x - problem.known_optimum->point).norm();
    return r;
}

inline IterRecord next_record(const Problem& problem, const IterRecord& prev, const Vector& x, double fx,
                              bool record_distances, std::int64_t elapsed) {
    IterRecord r;
    r.k = prev.k + 1;
    r.x = x;
    r.f = fx;
    r.best_f = std::min(prev.best_f, fx);
    if (record_distances && problem.known_optimum) r.dist_to_opt = (x - problem.known_optimum->point).norm();
    r.elapsed_ns = elapsed;
    return r;
}

inline void require_start(const Problem& problem, const Vector& x0, const char* where) {
    if (x0.size() != problem.dimension) throw ArgumentError(std::string(where) + ": x0 has the wrong length");
    if (!x0.allFinite()) throw ArgumentError(std::string(where) + ": x0 must be finite");
}

}  // namespace detail

}  // namespace dppm
