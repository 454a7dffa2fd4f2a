#pragma once

// Objective model and the seeded benchmark generators.
//
// A Problem bundles a value oracle and a deterministic subgradient oracle.
// At kinks of |.| terms the selected coordinate subgradient is 0, which is
// the minimum-norm element for separable sums of absolute values.

#include "dppm/errors.hpp"
#include "dppm/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace dppm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct KnownOptimum {
    Vector point;
    double value = 0.0;
};

/// Randomly generated data behind a benchmark instance, kept for inspection
/// and reproducibility checks. Empty for the closed-form problems.
struct ProblemData {
    Matrix sensing;        // A (compressed sensing)
    Vector measurements;   // b
    Vector sparse_signal;  // the planted sparse vector
    Matrix features;       // one sample per row (logistic)
    Vector labels;         // +1 / -1
};

struct Problem {
    int dimension = 0;
    std::function<double(const Vector&)> value_oracle;
    std::function<Vector(const Vector&)> subgrad_oracle;
    bool grad_available = false;
    std::optional<KnownOptimum> known_optimum;
    std::optional<double> subgrad_bound;
    std::string label;
    std::shared_ptr<const ProblemData> data;
};

enum class ProblemKind { matyas, abs21, compressed_sensing, logistic_l1 };

inline std::string_view to_string(ProblemKind kind) {
    switch (kind) {
        case ProblemKind::matyas: return "matyas";
        case ProblemKind::abs21: return "abs21";
        case ProblemKind::compressed_sensing: return "compressed_sensing";
        case ProblemKind::logistic_l1: return "logistic_l1";
    }
    return "?";
}

inline ProblemKind parse_problem_kind(std::string_view text) {
    for (auto kind : {ProblemKind::matyas, ProblemKind::abs21, ProblemKind::compressed_sensing,
                      ProblemKind::logistic_l1}) {
        if (text == to_string(kind)) return kind;
    }
    throw ConfigError("unknown problem kind '" + std::string(text) + "'");
}

struct ProblemSpec {
    ProblemKind kind = ProblemKind::matyas;
    std::uint64_t seed = 0;
    double lambda = 50.0;  // logistic only
    int m_rows = 10;       // compressed sensing only
    int n_cols = 50;
    int sparsity = 5;
    int n_samples = 100;   // logistic only
    int x_dim = 10;

    bool operator==(const ProblemSpec&) const = default;
};

namespace detail {

inline double sign0(double z) noexcept { return z > 0.0 ? 1.0 : (z < 0.0 ? -1.0 : 0.0); }

inline Vector sign0(const Vector& v) { return v.unaryExpr([](double z) { return sign0(z); }); }

/// log(1 + exp(z)) without overflow.
inline double softplus(double z) noexcept { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

inline double logistic_sigmoid(double z) noexcept {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

inline void require_point(const Problem& problem, const Vector& x, const char* where) {
    if (x.size() != problem.dimension) {
        throw ArgumentError(std::string(where) + ": point has length " + std::to_string(x.size()) +
                            ", problem dimension is " + std::to_string(problem.dimension));
    }
    if (!x.allFinite()) throw ArgumentError(std::string(where) + ": point has non-finite entries");
}

}  // namespace detail

/// f(x) with argument validation.
inline double value(const Problem& problem, const Vector& x) {
    detail::require_point(problem, x, "value");
    return problem.value_oracle(x);
}

/// The selected element of the subdifferential at x. Deterministic.
inline Vector subgradient(const Problem& problem, const Vector& x) {
    detail::require_point(problem, x, "subgradient");
    return problem.subgrad_oracle(x);
}

/// Average of subgradients at n_samples points drawn uniformly from the ball
/// of the given radius around x.
inline Vector sampled_subgradient(const Problem& problem, const Vector& x, double radius, int n_samples,
                                  std::uint64_t seed) {
    if (!(radius > 0.0)) throw ArgumentError("sampled_subgradient: radius must be positive");
    if (n_samples < 1) throw ArgumentError("sampled_subgradient: n_samples must be at least 1");
    detail::require_point(problem, x, "sampled_subgradient");

    Xoshiro256 rng(seed);
    const int n = problem.dimension;
    Vector sum = Vector::Zero(n);
    Vector offset(n);
    for (int i = 0; i < n_samples; ++i) {
        double norm = 0.0;
        do {
            for (int j = 0; j < n; ++j) offset[j] = rng.normal();
            norm = offset.norm();
        } while (norm == 0.0);
        const double r = radius * std::pow(rng.uniform01(), 1.0 / n);
        offset *= r / norm;
        sum += problem.subgrad_oracle(x + offset);
    }
    return sum / n_samples;
}

/// f(x) = 1/2 (x - c)^T A (x - c) with A symmetric positive definite.
inline Problem quadratic_problem(const Matrix& hessian, const Vector& center, std::string label = "quadratic") {
    if (hessian.rows() != hessian.cols() || hessian.rows() != center.size() || center.size() == 0) {
        throw ConfigError("quadratic_problem: shape mismatch");
    }
    auto data = std::make_shared<const std::pair<Matrix, Vector>>(hessian, center);
    Problem p;
    p.dimension = static_cast<int>(center.size());
    p.value_oracle = [data](const Vector& x) {
        const Vector d = x - data->second;
        return 0.5 * d.dot(data->first * d);
    };
    p.subgrad_oracle = [data](const Vector& x) -> Vector { return data->first * (x - data->second); };
    p.grad_available = true;
    p.known_optimum = KnownOptimum{center, 0.0};
    p.label = std::move(label);
    return p;
}

/// f(x) = x^2 / 2 in one dimension.
inline Problem half_square_1d() { return quadratic_problem(Matrix::Identity(1, 1), Vector::Zero(1), "half_square_1d"); }

/// f(x) = |x| in one dimension.
inline Problem abs_1d() {
    Problem p;
    p.dimension = 1;
    p.value_oracle = [](const Vector& x) { return std::abs(x[0]); };
    p.subgrad_oracle = [](const Vector& x) -> Vector { return detail::sign0(x); };
    p.grad_available = false;
    p.known_optimum = KnownOptimum{Vector::Zero(1), 0.0};
    p.label = "abs_1d";
    return p;
}

namespace detail {

inline Problem make_matyas() {
    Problem p;
    p.dimension = 2;
    p.value_oracle = [](const Vector& x) { return 0.26 * (x[0] * x[0] + x[1] * x[1]) - 0.48 * x[0] * x[1]; };
    p.subgrad_oracle = [](const Vector& x) -> Vector {
        Vector g(2);
        g[0] = 0.52 * x[0] - 0.48 * x[1];
        g[1] = 0.52 * x[1] - 0.48 * x[0];
        return g;
    };
    p.grad_available = true;
    p.known_optimum = KnownOptimum{Vector::Zero(2), 0.0};
    p.label = "matyas";
    return p;
}

inline Problem make_abs21() {
    Problem p;
    p.dimension = 2;
    p.value_oracle = [](const Vector& x) { return 2.0 * std::abs(x[0]) + std::abs(x[1]); };
    p.subgrad_oracle = [](const Vector& x) -> Vector {
        Vector g(2);
        g[0] = 2.0 * sign0(x[0]);
        g[1] = sign0(x[1]);
        return g;
    };
    p.grad_available = false;
    p.known_optimum = KnownOptimum{Vector::Zero(2), 0.0};
    p.label = "abs21";
    return p;
}

// f(x) = ||A x - b||_1 + 10 ||x||_1
inline Problem make_compressed_sensing(const ProblemSpec& spec) {
    if (spec.m_rows <= 0 || spec.n_cols <= 0) throw ConfigError("compressed_sensing: dimensions must be positive");
    if (spec.sparsity < 0 || spec.sparsity > spec.n_cols) {
        throw ConfigError("compressed_sensing: sparsity must lie in [0, n_cols]");
    }
    Xoshiro256 rng(spec.seed);
    auto data = std::make_shared<ProblemData>();
    const double stddev = std::sqrt(1.0 / 50.0);
    data->sensing.resize(spec.m_rows, spec.n_cols);
    for (int i = 0; i < spec.m_rows; ++i)
        for (int j = 0; j < spec.n_cols; ++j) data->sensing(i, j) = stddev * rng.normal();

    // Partial Fisher-Yates picks the support.
    std::vector<int> index(spec.n_cols);
    for (int j = 0; j < spec.n_cols; ++j) index[j] = j;
    data->sparse_signal = Vector::Zero(spec.n_cols);
    for (int s = 0; s < spec.sparsity; ++s) {
        const auto pick = s + static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.n_cols - s)));
        std::swap(index[s], index[pick]);
        data->sparse_signal[index[s]] = rng.uniform(-0.5, 0.5);
    }
    data->measurements = data->sensing * data->sparse_signal;

    std::shared_ptr<const ProblemData> shared = data;
    Problem p;
    p.dimension = spec.n_cols;
    p.value_oracle = [shared](const Vector& x) {
        return (shared->sensing * x - shared->measurements).lpNorm<1>() + 10.0 * x.lpNorm<1>();
    };
    p.subgrad_oracle = [shared](const Vector& x) -> Vector {
        const Vector residual = shared->sensing * x - shared->measurements;
        return shared->sensing.transpose() * sign0(residual) + 10.0 * sign0(x);
    };
    p.grad_available = false;
    p.label = "compressed_sensing";
    p.data = shared;
    return p;
}

// f(w) = (1/n) sum_i log(1 + exp(-y_i w^T x_i)) + lambda ||w||_1
inline Problem make_logistic_l1(const ProblemSpec& spec) {
    if (spec.n_samples <= 0 || spec.x_dim <= 0) throw ConfigError("logistic_l1: dimensions must be positive");
    if (!(spec.lambda >= 0.0) || !std::isfinite(spec.lambda)) throw ConfigError("logistic_l1: lambda must be >= 0");
    Xoshiro256 rng(spec.seed);
    auto data = std::make_shared<ProblemData>();
    data->features.resize(spec.n_samples, spec.x_dim);
    data->labels.resize(spec.n_samples);
    for (int i = 0; i < spec.n_samples; ++i) {
        for (int j = 0; j < spec.x_dim; ++j) data->features(i, j) = rng.uniform(-5.0, 5.0);
        data->labels[i] = rng.coin() ? 1.0 : -1.0;
    }

    std::shared_ptr<const ProblemData> shared = data;
    const double lambda = spec.lambda;
    Problem p;
    p.dimension = spec.x_dim;
    p.value_oracle = [shared, lambda](const Vector& w) {
        const Vector margins = (shared->features * w).cwiseProduct(shared->labels);
        double loss = 0.0;
        for (Eigen::Index i = 0; i < margins.size(); ++i) loss += softplus(-margins[i]);
        return loss / static_cast<double>(margins.size()) + lambda * w.lpNorm<1>();
    };
    p.subgrad_oracle = [shared, lambda](const Vector& w) -> Vector {
        const Vector margins = (shared->features * w).cwiseProduct(shared->labels);
        Vector weights(margins.size());
        for (Eigen::Index i = 0; i < margins.size(); ++i) {
            weights[i] = -shared->labels[i] * logistic_sigmoid(-margins[i]);
        }
        return shared->features.transpose() * weights / static_cast<double>(margins.size()) + lambda * sign0(w);
    };
    p.grad_available = false;
    p.label = "logistic_l1";
    p.data = shared;
    return p;
}

}  // namespace detail

/// Builds one of the four benchmark problems. Same spec, same data, bit for bit.
inline Problem build_problem(const ProblemSpec& spec) {
    switch (spec.kind) {
        case ProblemKind::matyas: return detail::make_matyas();
        case ProblemKind::abs21: return detail::make_abs21();
        case ProblemKind::compressed_sensing: return detail::make_compressed_sensing(spec);
        case ProblemKind::logistic_l1: return detail::make_logistic_l1(spec);
    }
    throw ConfigError("build_problem: invalid problem kind");
}

}  // namespace dppm
