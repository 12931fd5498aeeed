#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "nphc/cumulants.hpp"
#include "nphc/model.hpp"

namespace nphc {

struct SolveConfig {
    int max_iters = 20000;
    double learning_rate = 0.1;
    double adagrad_epsilon = 1e-8;
    double grad_tol = 1e-8;  // stop once the gradient Frobenius norm drops below
    std::optional<double> kappa_override;
    std::uint64_t seed = 0;  // reserved for randomized restarts
    int trace_stride = 1;

    void validate() const {
        if (max_iters < 1) throw ValidationError("max_iters must be >= 1");
        if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be > 0");
        if (!(adagrad_epsilon > 0.0)) throw ValidationError("adagrad_epsilon must be > 0");
        if (!(grad_tol >= 0.0)) throw ValidationError("grad_tol must be >= 0");
        if (trace_stride < 1) throw ValidationError("trace_stride must be >= 1");
        if (kappa_override && !(*kappa_override >= 0.0 && *kappa_override <= 1.0))
            throw ValidationError("kappa_override must be in [0, 1]");
    }
};

struct SolveResult {
    Matrix R_hat;
    Matrix G_hat;
    Vector mu_hat;
    double kappa = 0.0;
    std::vector<std::pair<int, double>> loss_trace;  // (iteration, loss)
    double final_grad_norm = 0.0;
    double condition_number_R = 0.0;
    int iterations_used = 0;
    int clipped_eigenvalues = 0;  // negative eigenvalues clipped at the starting point
};

// ---------------------------------------------------------------------------
// Forward maps
// ---------------------------------------------------------------------------

/// C(R) = R diag(Lambda) R^T.
inline Matrix forward_covariance(const Matrix& R, const Vector& Lambda) {
    return R * Lambda.asDiagonal() * R.transpose();
}

/// Kc(R) = R(.^2) C^T + 2 [R o (C - R diag(Lambda))] R^T, where `o` is the
/// entrywise product. Matches the triple-sum identity for K^{iij} entrywise
/// for any C plugged into it.
inline Matrix forward_skewness_contracted(const Matrix& R, const Matrix& C, const Vector& Lambda) {
    if (R.rows() != C.rows() || R.cols() != C.cols() || R.rows() != Lambda.size())
        throw ShapeMismatch("forward_skewness_contracted: shapes disagree");
    const Matrix RL = R * Lambda.asDiagonal();
    return R.cwiseProduct(R) * C.transpose() + 2.0 * (R.cwiseProduct(C - RL)) * R.transpose();
}

/// kappa = ||Kc||_F^2 / (||Kc||_F^2 + ||C||_F^2), the scalar surrogate for
/// the optimal moment weighting.
inline double compute_kappa(const Matrix& C_hat, const Matrix& Kc_hat) {
    const double k2 = Kc_hat.squaredNorm();
    const double c2 = C_hat.squaredNorm();
    if (k2 + c2 <= 0.0)
        throw DegenerateCumulants("compute_kappa: both cumulant norms are zero");
    return k2 / (k2 + c2);
}

// ---------------------------------------------------------------------------
// Loss and gradient
// ---------------------------------------------------------------------------

/// (1-kappa) ||Kc(R) - Kc_hat||_F^2 + kappa ||R L R^T - C_hat||_F^2.
/// The skewness forward map is evaluated with the estimated covariance
/// inside, so the objective is a degree-6 polynomial in R with data-only
/// coefficients.
inline double loss(const Matrix& R, const IntegratedCumulants& cum, double kappa) {
    const Matrix EC = forward_covariance(R, cum.Lambda) - cum.C;
    const Matrix EK = forward_skewness_contracted(R, cum.C, cum.Lambda) - cum.Kc;
    return (1.0 - kappa) * EK.squaredNorm() + kappa * EC.squaredNorm();
}

/// Exact gradient of `loss` with respect to R.
inline Matrix loss_gradient(const Matrix& R, const IntegratedCumulants& cum, double kappa) {
    const auto& Chat = cum.C;
    const Matrix RL = R * cum.Lambda.asDiagonal();
    const Matrix D = Chat - RL;
    const Matrix EC = RL * R.transpose() - Chat;
    const Matrix EK =
        R.cwiseProduct(R) * Chat.transpose() + 2.0 * R.cwiseProduct(D) * R.transpose() - cum.Kc;

    const Matrix EKR = EK * R;
    Matrix gK = R.cwiseProduct(EK * Chat) + D.cwiseProduct(EKR) +
                EK.transpose() * R.cwiseProduct(D) -
                (R.cwiseProduct(EKR)) * cum.Lambda.asDiagonal();
    Matrix gC = (EC + EC.transpose()) * RL;
    return 4.0 * (1.0 - kappa) * gK + 2.0 * kappa * gC;
}

// ---------------------------------------------------------------------------
// Initialization and solve
// ---------------------------------------------------------------------------

/// Starting point R0 = C_psd^{1/2} diag(Lambda)^{-1/2}, where C_psd clips
/// negative eigenvalues of the symmetrized covariance at zero. Satisfies
/// R0 L R0^T = C_psd. Reports how many eigenvalues were clipped.
inline Matrix initial_point(const IntegratedCumulants& cum, int* clipped_count = nullptr) {
    const auto d = cum.C.rows();
    if ((cum.Lambda.array() <= 0.0).any())
        throw DegenerateCumulants("initial_point: all mean intensities must be positive");

    const Matrix Csym = 0.5 * (cum.C + cum.C.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(Csym);
    if (es.info() != Eigen::Success)
        throw NonConvergence("initial_point: eigendecomposition failed");

    Vector evals = es.eigenvalues();
    int clipped = 0;
    for (Eigen::Index k = 0; k < d; ++k)
        if (evals[k] < 0.0) {
            evals[k] = 0.0;
            ++clipped;
        }
    if (clipped_count) *clipped_count = clipped;

    const Matrix sqrtC =
        es.eigenvectors() * evals.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
    return sqrtC * cum.Lambda.cwiseInverse().cwiseSqrt().asDiagonal();
}

/// Full-batch AdaGrad on the moment-matching loss, started from the spectral
/// initialization. Deterministic given the config. Returns R_hat together
/// with G_hat = I - R_hat^{-1} and mu_hat = R_hat^{-1} Lambda_hat.
inline SolveResult solve(const IntegratedCumulants& cum, const SolveConfig& cfg = {}) {
    cfg.validate();
    const auto d = cum.C.rows();
    if (cum.Kc.rows() != d || cum.Lambda.size() != d)
        throw ShapeMismatch("solve: cumulant shapes disagree");

    SolveResult res;
    res.kappa = cfg.kappa_override ? *cfg.kappa_override : compute_kappa(cum.C, cum.Kc);

    Matrix R = initial_point(cum, &res.clipped_eigenvalues);
    Matrix accum = Matrix::Zero(d, d);

    double grad_norm = 0.0;
    int it = 0;
    for (; it < cfg.max_iters; ++it) {
        const double value = loss(R, cum, res.kappa);
        if (!std::isfinite(value))
            throw NonFinite("solve: loss diverged at iteration " + std::to_string(it));
        if (it % cfg.trace_stride == 0) res.loss_trace.emplace_back(it, value);

        const Matrix g = loss_gradient(R, cum, res.kappa);
        if (!g.allFinite())
            throw NonFinite("solve: gradient diverged at iteration " + std::to_string(it));
        grad_norm = g.norm();
        if (grad_norm <= cfg.grad_tol) break;

        accum += g.cwiseProduct(g);
        R -= cfg.learning_rate *
             g.cwiseQuotient(accum.cwiseSqrt() + Matrix::Constant(d, d, cfg.adagrad_epsilon));
    }

    res.iterations_used = it;
    res.final_grad_norm = grad_norm;
    if (res.loss_trace.empty() || res.loss_trace.back().first != it)
        res.loss_trace.emplace_back(it, loss(R, cum, res.kappa));

    Eigen::PartialPivLU<Matrix> lu(R);
    const Matrix Rinv = lu.inverse();
    if (!Rinv.allFinite() ||
        (R * Rinv - Matrix::Identity(d, d)).cwiseAbs().maxCoeff() > 1e-6 * static_cast<double>(d))
        throw SingularMatrix("solve: recovered R_hat is numerically singular");

    res.R_hat = R;
    res.G_hat = Matrix::Identity(d, d) - Rinv;
    res.mu_hat = Rinv * cum.Lambda;
    res.condition_number_R = condition_number(R);
    return res;
}

}  // namespace nphc
