#pragma once

#include "nphc/model.hpp"

namespace nphc {

/// Entrywise relative error between a truth matrix and an estimate.
/// Entries with |truth| <= zero_tol use the absolute value of the estimate.
inline double rel_err(const Matrix& truth, const Matrix& estimate, double zero_tol = 1e-12) {
    if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols() ||
        truth.rows() != truth.cols())
        throw ShapeMismatch("rel_err: matrices must be square with equal shapes");
    const auto d = truth.rows();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) {
            const double a = truth(i, j), b = estimate(i, j);
            acc += std::abs(a) <= zero_tol ? std::abs(b) : std::abs(a - b) / std::abs(a);
        }
    return acc / static_cast<double>(d * d);
}

/// Mean Kendall rank correlation, row by row. No tie correction: tied pairs
/// count toward neither the concordant nor the discordant tally, so rows
/// with repeated entries shrink the score toward zero and constant rows
/// contribute exactly zero.
inline double mean_rank_corr(const Matrix& truth, const Matrix& estimate) {
    if (truth.rows() != estimate.rows() || truth.cols() != estimate.cols() ||
        truth.rows() != truth.cols())
        throw ShapeMismatch("mean_rank_corr: matrices must be square with equal shapes");
    const auto d = truth.rows();
    if (d < 2) throw DimensionTooSmall("mean_rank_corr needs d >= 2");

    double acc = 0.0;
    for (Eigen::Index i = 0; i < d; ++i) {
        long concordant = 0, discordant = 0;
        for (Eigen::Index p = 0; p < d; ++p)
            for (Eigen::Index q = p + 1; q < d; ++q) {
                const double da = truth(i, p) - truth(i, q);
                const double db = estimate(i, p) - estimate(i, q);
                const double s = da * db;
                if (s > 0.0) ++concordant;
                else if (s < 0.0) ++discordant;
            }
        acc += 2.0 * static_cast<double>(concordant - discordant) /
               (static_cast<double>(d) * static_cast<double>(d - 1));
    }
    return acc / static_cast<double>(d);
}

}  // namespace nphc
