#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "nphc/errors.hpp"

namespace nphc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Margin applied to the strict stability requirement (spectral radius < 1).
inline constexpr double kStabilityMargin = 1e-6;

// ---------------------------------------------------------------------------
// Event data
// ---------------------------------------------------------------------------

/// Per-node sorted event timestamps on [0, horizon].
///
/// Each per-node sequence is strictly increasing: simultaneous events within
/// one node are rejected at construction. Ties across nodes are fine; the
/// cumulant estimators use half-open windows so they stay well defined.
/// Counting convention used throughout: N^i_t = #{tau in Z^i : tau <= t}.
struct EventSequences {
    double horizon = 0.0;
    std::vector<std::vector<double>> events;

    static EventSequences create(double horizon, std::vector<std::vector<double>> ev) {
        if (!(horizon > 0.0) || !std::isfinite(horizon))
            throw ValidationError("horizon must be positive and finite, got " + std::to_string(horizon));
        if (ev.empty())
            throw ValidationError("at least one node is required");
        for (std::size_t i = 0; i < ev.size(); ++i) {
            const auto& z = ev[i];
            for (std::size_t k = 0; k < z.size(); ++k) {
                if (!std::isfinite(z[k]) || z[k] < 0.0 || z[k] > horizon)
                    throw ValidationError("node " + std::to_string(i) + ": timestamp " +
                                          std::to_string(z[k]) + " outside [0, horizon]");
                if (k > 0 && !(z[k] > z[k - 1]))
                    throw ValidationError("node " + std::to_string(i) +
                                          ": timestamps must be strictly increasing (duplicate or out of order at t=" +
                                          std::to_string(z[k]) + ")");
            }
        }
        EventSequences out;
        out.horizon = horizon;
        out.events = std::move(ev);
        return out;
    }

    int dim() const { return static_cast<int>(events.size()); }

    std::size_t total_events() const {
        std::size_t n = 0;
        for (const auto& z : events) n += z.size();
        return n;
    }

    std::size_t max_events_per_node() const {
        std::size_t n = 0;
        for (const auto& z : events) n = std::max(n, z.size());
        return n;
    }
};

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

enum class KernelShape { Zero, Exponential, Rectangular, PowerLaw };

inline const char* to_string(KernelShape s) {
    switch (s) {
        case KernelShape::Zero: return "zero";
        case KernelShape::Exponential: return "exponential";
        case KernelShape::Rectangular: return "rectangular";
        case KernelShape::PowerLaw: return "power_law";
    }
    return "?";
}

/// One excitation kernel phi(t), t >= 0.
///
///   Exponential:  alpha * beta * exp(-beta t)
///   Rectangular:  alpha * beta * 1[gamma, gamma + 1/beta)(t)
///   PowerLaw:     alpha * beta * gamma * (1 + beta t)^-(1+gamma)
///
/// All three integrate to alpha over [0, inf). gamma is a delay for the
/// rectangular shape and the tail exponent for the power law.
struct KernelSpec {
    KernelShape shape = KernelShape::Zero;
    double alpha = 0.0;
    double beta = 1.0;
    double gamma = 0.0;

    static KernelSpec zero() { return KernelSpec{}; }

    static KernelSpec exponential(double alpha, double beta) {
        KernelSpec k{KernelShape::Exponential, alpha, beta, 0.0};
        k.validate();
        return k;
    }

    static KernelSpec rectangular(double alpha, double beta, double gamma) {
        KernelSpec k{KernelShape::Rectangular, alpha, beta, gamma};
        k.validate();
        return k;
    }

    static KernelSpec power_law(double alpha, double beta, double gamma) {
        KernelSpec k{KernelShape::PowerLaw, alpha, beta, gamma};
        k.validate();
        return k;
    }

    void validate() const {
        if (shape == KernelShape::Zero) return;
        if (!(alpha >= 0.0) || !std::isfinite(alpha))
            throw ValidationError("kernel alpha must be >= 0");
        if (!(beta > 0.0) || !std::isfinite(beta))
            throw ValidationError("kernel beta must be > 0");
        if (shape == KernelShape::Rectangular && !(gamma >= 0.0))
            throw ValidationError("rectangular kernel needs gamma >= 0");
        if (shape == KernelShape::PowerLaw && !(gamma > 0.0))
            throw ValidationError("power-law kernel needs gamma > 0");
    }

    /// Total mass over [0, inf); equals alpha for every shape.
    double integral() const { return shape == KernelShape::Zero ? 0.0 : alpha; }

    /// phi(u); zero for u < 0.
    double operator()(double u) const {
        if (u < 0.0) return 0.0;
        switch (shape) {
            case KernelShape::Zero:
                return 0.0;
            case KernelShape::Exponential:
                return alpha * beta * std::exp(-beta * u);
            case KernelShape::Rectangular:
                return (u >= gamma && u < gamma + 1.0 / beta) ? alpha * beta : 0.0;
            case KernelShape::PowerLaw: {
                const double v = 1.0 + beta * u;
                return alpha * beta * gamma * std::pow(v, -(1.0 + gamma));
            }
        }
        return 0.0;
    }

    /// sup_{s >= age} phi(s). Exponential and power-law kernels are
    /// non-increasing so this is phi(age); the delayed rectangle keeps its
    /// plateau value until the support has fully passed.
    double sup_after(double age) const {
        if (age < 0.0) age = 0.0;
        switch (shape) {
            case KernelShape::Zero:
                return 0.0;
            case KernelShape::Exponential:
            case KernelShape::PowerLaw:
                return (*this)(age);
            case KernelShape::Rectangular:
                return age < gamma + 1.0 / beta ? alpha * beta : 0.0;
        }
        return 0.0;
    }

    /// Age beyond which the remaining kernel mass is at most eps * alpha.
    /// Infinity-scale for heavy power-law tails; callers must cope.
    double tail_age(double eps) const {
        switch (shape) {
            case KernelShape::Zero:
                return 0.0;
            case KernelShape::Exponential:
                return std::log(1.0 / eps) / beta;
            case KernelShape::Rectangular:
                return gamma + 1.0 / beta;
            case KernelShape::PowerLaw:
                return (std::pow(eps, -1.0 / gamma) - 1.0) / beta;
        }
        return 0.0;
    }
};

// ---------------------------------------------------------------------------
// Spectral radius and the G/R duality
// ---------------------------------------------------------------------------

/// Largest absolute eigenvalue. Power iteration from a deterministic start,
/// with a dense eigensolver fallback when the iteration does not settle
/// (complex or tied dominant eigenvalues).
inline double spectral_radius(const Matrix& M, int max_iters = 5000, double tol = 1e-12) {
    if (M.rows() != M.cols()) throw ShapeMismatch("spectral_radius needs a square matrix");
    const auto n = M.rows();
    if (n == 0) return 0.0;
    if (!M.allFinite()) throw ValidationError("spectral_radius: matrix has non-finite entries");
    if (M.isZero(0.0)) return 0.0;

    Vector x = Vector::Ones(n) / std::sqrt(static_cast<double>(n));
    double est = -1.0;
    int settled = 0;
    for (int it = 0; it < max_iters; ++it) {
        Vector y = M * x;
        const double ny = y.norm();
        if (ny == 0.0) break;  // start vector hit a kernel direction
        if (est >= 0.0 && std::abs(ny - est) <= tol * std::max(ny, 1e-300)) {
            if (++settled >= 4) return ny;
        } else {
            settled = 0;
        }
        est = ny;
        x = y / ny;
    }

    Eigen::EigenSolver<Matrix> es(M, /*computeEigenvectors=*/false);
    if (es.info() != Eigen::Success)
        throw NonConvergence("spectral_radius: eigensolver failed to converge");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// R = (I - G)^-1. Requires spectral radius of G below 1 - margin.
inline Matrix g_to_r(const Matrix& G, double margin = kStabilityMargin) {
    if (G.rows() != G.cols()) throw ShapeMismatch("g_to_r needs a square matrix");
    const auto d = G.rows();
    const double rho = spectral_radius(G);
    if (rho >= 1.0 - margin)
        throw StabilityViolation("g_to_r: spectral radius " + std::to_string(rho) +
                                 " >= " + std::to_string(1.0 - margin));
    const Matrix ImG = Matrix::Identity(d, d) - G;
    Eigen::PartialPivLU<Matrix> lu(ImG);
    const Matrix R = lu.inverse();
    const double resid = (R * ImG - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
    if (!std::isfinite(resid) || resid > 1e-10 * static_cast<double>(d))
        throw SingularMatrix("g_to_r: inversion residual " + std::to_string(resid));
    return R;
}

/// G = I - R^-1. The inverse of g_to_r for stable G.
inline Matrix r_to_g(const Matrix& R) {
    if (R.rows() != R.cols()) throw ShapeMismatch("r_to_g needs a square matrix");
    const auto d = R.rows();
    Eigen::PartialPivLU<Matrix> lu(R);
    const Matrix Rinv = lu.inverse();
    const double resid = (R * Rinv - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
    if (!std::isfinite(resid) || resid > 1e-8 * static_cast<double>(d))
        throw SingularMatrix("r_to_g: R is numerically singular (residual " +
                             std::to_string(resid) + ")");
    return Matrix::Identity(d, d) - Rinv;
}

/// 1-norm condition number estimate of a square matrix.
inline double condition_number(const Matrix& A) {
    Eigen::PartialPivLU<Matrix> lu(A);
    const Matrix Ainv = lu.inverse();
    if (!Ainv.allFinite()) return std::numeric_limits<double>::infinity();
    const double n1 = A.cwiseAbs().colwise().sum().maxCoeff();
    const double n2 = Ainv.cwiseAbs().colwise().sum().maxCoeff();
    return n1 * n2;
}

// ---------------------------------------------------------------------------
// Hawkes model
// ---------------------------------------------------------------------------

/// Baseline vector mu plus a d x d grid of kernels; entry (i, j) is the
/// impact of one event of node j on the intensity of node i.
struct HawkesModel {
    Vector mu;
    std::vector<std::vector<KernelSpec>> kernels;

    static HawkesModel create(Vector mu, std::vector<std::vector<KernelSpec>> kernels) {
        const auto d = static_cast<std::size_t>(mu.size());
        if (d == 0) throw ValidationError("model must have at least one node");
        if ((mu.array() < 0.0).any() || !mu.allFinite())
            throw ValidationError("baseline intensities must be finite and >= 0");
        if (kernels.size() != d)
            throw ShapeMismatch("kernel grid rows do not match mu");
        for (const auto& row : kernels) {
            if (row.size() != d) throw ShapeMismatch("kernel grid must be square");
            for (const auto& k : row) k.validate();
        }
        return HawkesModel{std::move(mu), std::move(kernels)};
    }

    int dim() const { return static_cast<int>(mu.size()); }

    /// Matrix of kernel integrals G, g(i,j) = integral of kernels[i][j].
    Matrix integral_matrix() const {
        const int d = dim();
        Matrix G(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) G(i, j) = kernels[i][j].integral();
        return G;
    }

    bool stable(double margin = kStabilityMargin) const {
        return spectral_radius(integral_matrix()) < 1.0 - margin;
    }
};

/// The pair (G, R) with R = (I - G)^-1 kept consistent by construction.
struct CausalityMatrices {
    Matrix G;
    Matrix R;

    static CausalityMatrices from_g(const Matrix& G) { return { G, g_to_r(G) }; }
    static CausalityMatrices from_r(const Matrix& R) { return { r_to_g(R), R }; }
};

/// Lambda = R mu, the stationary mean intensity vector.
inline Vector theoretical_mean_intensity(const HawkesModel& model) {
    return g_to_r(model.integral_matrix()) * model.mu;
}

}  // namespace nphc
