#pragma once

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

#include "nphc/model.hpp"

namespace nphc {

/// Window handling at the ends of [0, T].
///   PaperExact: every event is a window center and sums are normalized by T.
///   Trimmed:    centers are restricted to [H, T-H] and central sums are
///               normalized by T-2H, which removes the edge bias; window
///               means and pair sums still use the full record.
enum class BoundaryMode { PaperExact, Trimmed };

inline const char* to_string(BoundaryMode m) {
    return m == BoundaryMode::PaperExact ? "paper_exact" : "trimmed";
}

struct CumulantConfig {
    double half_width = 0.0;  // H; windows are (tau - H, tau + H]
    BoundaryMode boundary = BoundaryMode::Trimmed;
    bool symmetrize = true;
    int threads = 0;  // 0 = NPHC_THREADS env or hardware concurrency

    void validate(double horizon) const {
        if (!(half_width > 0.0) || !std::isfinite(half_width))
            throw InvalidWindow("window half-width H must be positive");
        if (!(2.0 * half_width < horizon))
            throw InvalidWindow("need 2H < horizon, got H=" + std::to_string(half_width) +
                                " with horizon " + std::to_string(horizon));
    }
};

struct IntegratedCumulants {
    Vector Lambda;  // mean intensities
    Matrix C;       // integrated covariance
    Matrix Kc;      // contracted integrated skewness, entry (i,j) estimates K^{iij}
    double H_used = 0.0;
    double T_used = 0.0;
};

/// Mean intensity per node, N^i_T / T.
inline Vector estimate_mean(const EventSequences& ev) {
    const int d = ev.dim();
    Vector out(d);
    for (int i = 0; i < d; ++i)
        out[i] = static_cast<double>(ev.events[i].size()) / ev.horizon;
    return out;
}

namespace detail {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("NPHC_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc ? static_cast<int>(hc) : 1;
}

// Runs f(0..n_tasks) on a small pool. Tasks write disjoint outputs, so the
// result is identical for any thread count.
template <class F>
void parallel_for(int n_tasks, int threads, F&& f) {
    threads = std::min(threads, n_tasks);
    if (threads <= 1) {
        for (int t = 0; t < n_tasks; ++t) f(t);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (int t; (t = next.fetch_add(1)) < n_tasks;) f(t);
        });
    for (auto& th : pool) th.join();
}

// Per-mode constants shared by the estimators.
struct ModeContext {
    double T;
    double H;
    double norm;                       // divisor of the central sums
    Vector lambda_window;              // mean used inside the window centering (global)
    Vector lambda_lead;                // mean multiplying the pair-sum correction
    std::vector<std::size_t> c_begin;  // per node: first center index
    std::vector<std::size_t> c_end;    // per node: one past the last center index
};

inline ModeContext make_context(const EventSequences& ev, const CumulantConfig& cfg) {
    const int d = ev.dim();
    ModeContext ctx;
    ctx.T = ev.horizon;
    ctx.H = cfg.half_width;
    ctx.lambda_window = estimate_mean(ev);
    ctx.c_begin.resize(d);
    ctx.c_end.resize(d);

    if (cfg.boundary == BoundaryMode::PaperExact) {
        ctx.norm = ctx.T;
        ctx.lambda_lead = ctx.lambda_window;
        for (int i = 0; i < d; ++i) {
            ctx.c_begin[i] = 0;
            ctx.c_end[i] = ev.events[i].size();
        }
    } else {
        ctx.norm = ctx.T - 2.0 * ctx.H;
        ctx.lambda_lead.resize(d);
        for (int i = 0; i < d; ++i) {
            const auto& z = ev.events[i];
            ctx.c_begin[i] = std::lower_bound(z.begin(), z.end(), ctx.H) - z.begin();
            ctx.c_end[i] = std::upper_bound(z.begin(), z.end(), ctx.T - ctx.H) - z.begin();
            ctx.lambda_lead[i] = static_cast<double>(ctx.c_end[i] - ctx.c_begin[i]) / ctx.norm;
        }
    }
    return ctx;
}

struct PairAccum {
    double sum_cy = 0.0;    // sum of centered window counts of y
    double sum_cxcy = 0.0;  // sum of products of centered counts of x and y
    double sum_cycy = 0.0;  // sum of squared centered counts of y
};

// One pass over the centers of node x, maintaining half-open window
// (tau - H, tau + H] counts into both x's and y's event lists.
inline PairAccum sweep_pair(const std::vector<double>& zx, std::size_t cb, std::size_t ce,
                            const std::vector<double>& zy, double H, double mx, double my) {
    PairAccum a;
    std::size_t lox = 0, hix = 0, loy = 0, hiy = 0;
    for (std::size_t c = cb; c < ce; ++c) {
        const double tau = zx[c];
        while (hix < zx.size() && zx[hix] <= tau + H) ++hix;
        while (lox < zx.size() && zx[lox] <= tau - H) ++lox;
        while (hiy < zy.size() && zy[hiy] <= tau + H) ++hiy;
        while (loy < zy.size() && zy[loy] <= tau - H) ++loy;
        const double cx = static_cast<double>(hix - lox) - mx;
        const double cy = static_cast<double>(hiy - loy) - my;
        a.sum_cy += cy;
        a.sum_cxcy += cx * cy;
        a.sum_cycy += cy * cy;
    }
    return a;
}

// sum over (tau, tau') in Z^j x Z^k of (2H - |tau - tau'|)^+ via a merge
// sweep with prefix sums over Z^k.
inline double pair_interaction_sum(const std::vector<double>& zj, const std::vector<double>& zk,
                                   const std::vector<double>& prefix_k, double H) {
    double s = 0.0;
    const double w = 2.0 * H;
    std::size_t lo = 0, hi = 0, mid = 0;
    for (const double tau : zj) {
        while (hi < zk.size() && zk[hi] < tau + w) ++hi;
        while (lo < zk.size() && zk[lo] <= tau - w) ++lo;
        while (mid < zk.size() && zk[mid] <= tau) ++mid;
        const double cntL = static_cast<double>(mid - lo);
        const double sumL = prefix_k[mid] - prefix_k[lo];
        const double cntR = static_cast<double>(hi - mid);
        const double sumR = prefix_k[hi] - prefix_k[mid];
        s += cntL * (w - tau) + sumL + cntR * (w + tau) - sumR;
    }
    return s;
}

struct RawCumulants {
    Matrix C;  // C(x,y): raw covariance estimator
    Matrix A;  // A(x,y): raw skewness at index pattern (x,x,y)
    Matrix P;  // P(x,y): raw skewness at index pattern (x,y,y)
};

inline RawCumulants raw_cumulants(const EventSequences& ev, const CumulantConfig& cfg, bool want_skew) {
    const int d = ev.dim();
    const ModeContext ctx = make_context(ev, cfg);
    const double H = ctx.H;
    const int threads = resolve_threads(cfg.threads);

    Matrix S;
    std::vector<std::vector<double>> prefix;
    if (want_skew) {
        prefix.resize(d);
        for (int j = 0; j < d; ++j) {
            const auto& z = ev.events[j];
            prefix[j].resize(z.size() + 1, 0.0);
            for (std::size_t k = 0; k < z.size(); ++k) prefix[j][k + 1] = prefix[j][k] + z[k];
        }
        S = Matrix::Zero(d, d);
        std::vector<std::pair<int, int>> pairs;
        for (int x = 0; x < d; ++x)
            for (int y = x; y < d; ++y) pairs.emplace_back(x, y);
        parallel_for(static_cast<int>(pairs.size()), threads, [&](int t) {
            const auto [x, y] = pairs[t];
            S(x, y) = pair_interaction_sum(ev.events[x], ev.events[y], prefix[y], H);
        });
        for (int x = 0; x < d; ++x)
            for (int y = 0; y < x; ++y) S(x, y) = S(y, x);
    }

    RawCumulants out;
    out.C = Matrix::Zero(d, d);
    if (want_skew) {
        out.A = Matrix::Zero(d, d);
        out.P = Matrix::Zero(d, d);
    }

    parallel_for(d * d, threads, [&](int t) {
        const int x = t / d;
        const int y = t % d;
        const double mx = 2.0 * H * ctx.lambda_window[x];
        const double my = 2.0 * H * ctx.lambda_window[y];
        const PairAccum a =
            sweep_pair(ev.events[x], ctx.c_begin[x], ctx.c_end[x], ev.events[y], H, mx, my);
        out.C(x, y) = a.sum_cy / ctx.norm;
        if (want_skew) {
            const double lead = ctx.lambda_lead[x];
            out.A(x, y) = a.sum_cxcy / ctx.norm - lead * S(x, y) / ctx.T +
                          4.0 * H * H * lead * ctx.lambda_window[x] * ctx.lambda_window[y];
            out.P(x, y) = a.sum_cycy / ctx.norm - lead * S(y, y) / ctx.T +
                          4.0 * H * H * lead * ctx.lambda_window[y] * ctx.lambda_window[y];
        }
    });
    return out;
}

inline Matrix symmetrize_covariance(const Matrix& C) { return 0.5 * (C + C.transpose()); }

// Contracted skewness matrix from the raw index patterns. For i != j the
// symmetrized entry averages the estimator at patterns (i,i,j), (i,j,i) and
// (j,i,i); the first two coincide by construction.
inline Matrix contract_skewness(const Matrix& A, const Matrix& P, bool symmetrize) {
    if (!symmetrize) return A;
    const auto d = A.rows();
    Matrix K(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            K(i, j) = (i == j) ? A(i, i) : (2.0 * A(i, j) + P(j, i)) / 3.0;
    return K;
}

}  // namespace detail

/// Mean intensity under the configured boundary mode.
inline Vector estimate_mean(const EventSequences& ev, const CumulantConfig& cfg) {
    cfg.validate(ev.horizon);
    if (cfg.boundary == BoundaryMode::PaperExact) return estimate_mean(ev);
    return detail::make_context(ev, cfg).lambda_lead;
}

/// Integrated covariance estimator.
inline Matrix estimate_covariance(const EventSequences& ev, const CumulantConfig& cfg) {
    cfg.validate(ev.horizon);
    Matrix C = detail::raw_cumulants(ev, cfg, /*want_skew=*/false).C;
    return cfg.symmetrize ? detail::symmetrize_covariance(C) : C;
}

/// Contracted third-cumulant estimator; only the d^2 entries K^{iij}.
inline Matrix estimate_skewness_contracted(const EventSequences& ev, const CumulantConfig& cfg) {
    cfg.validate(ev.horizon);
    const auto raw = detail::raw_cumulants(ev, cfg, /*want_skew=*/true);
    return detail::contract_skewness(raw.A, raw.P, cfg.symmetrize);
}

/// All three integrated cumulants in one pass.
inline IntegratedCumulants estimate_cumulants(const EventSequences& ev, const CumulantConfig& cfg) {
    cfg.validate(ev.horizon);
    const auto raw = detail::raw_cumulants(ev, cfg, /*want_skew=*/true);
    IntegratedCumulants out;
    out.Lambda = estimate_mean(ev, cfg);
    out.C = cfg.symmetrize ? detail::symmetrize_covariance(raw.C) : raw.C;
    out.Kc = detail::contract_skewness(raw.A, raw.P, cfg.symmetrize);
    out.H_used = cfg.half_width;
    out.T_used = ev.horizon;
    return out;
}

/// O(n^2) oracle computing the same quantities with plain double loops.
/// Kept deliberately independent of the sweep implementation; guarded to
/// small inputs.
inline IntegratedCumulants brute_force_cumulants(const EventSequences& ev, const CumulantConfig& cfg) {
    cfg.validate(ev.horizon);
    if (ev.total_events() > 10'000)
        throw TooLarge("brute_force_cumulants: more than 1e4 events");

    const int d = ev.dim();
    const double T = ev.horizon;
    const double H = cfg.half_width;
    const bool trimmed = cfg.boundary == BoundaryMode::Trimmed;
    const double norm = trimmed ? T - 2.0 * H : T;

    auto window_count = [&](int y, double tau) {
        double w = 0.0;
        for (double tp : ev.events[y])
            if (tp > tau - H && tp <= tau + H) w += 1.0;
        return w;
    };
    auto is_center = [&](double tau) { return !trimmed || (tau >= H && tau <= T - H); };

    Vector lambda_global(d), lambda_lead(d);
    for (int i = 0; i < d; ++i) {
        lambda_global[i] = static_cast<double>(ev.events[i].size()) / T;
        double nc = 0.0;
        for (double tau : ev.events[i])
            if (is_center(tau)) nc += 1.0;
        lambda_lead[i] = trimmed ? nc / norm : lambda_global[i];
    }

    Matrix S(d, d);
    for (int x = 0; x < d; ++x)
        for (int y = 0; y < d; ++y) {
            double s = 0.0;
            for (double a : ev.events[x])
                for (double b : ev.events[y]) s += std::max(2.0 * H - std::abs(a - b), 0.0);
            S(x, y) = s;
        }

    Matrix C = Matrix::Zero(d, d), A = Matrix::Zero(d, d), P = Matrix::Zero(d, d);
    for (int x = 0; x < d; ++x) {
        for (int y = 0; y < d; ++y) {
            double sum_cy = 0.0, sum_cxcy = 0.0, sum_cycy = 0.0;
            for (double tau : ev.events[x]) {
                if (!is_center(tau)) continue;
                const double cx = window_count(x, tau) - 2.0 * H * lambda_global[x];
                const double cy = window_count(y, tau) - 2.0 * H * lambda_global[y];
                sum_cy += cy;
                sum_cxcy += cx * cy;
                sum_cycy += cy * cy;
            }
            C(x, y) = sum_cy / norm;
            A(x, y) = sum_cxcy / norm - lambda_lead[x] * S(x, y) / T +
                      4.0 * H * H * lambda_lead[x] * lambda_global[x] * lambda_global[y];
            P(x, y) = sum_cycy / norm - lambda_lead[x] * S(y, y) / T +
                      4.0 * H * H * lambda_lead[x] * lambda_global[y] * lambda_global[y];
        }
    }

    IntegratedCumulants out;
    out.Lambda = trimmed ? lambda_lead : lambda_global;
    out.H_used = H;
    out.T_used = T;
    if (cfg.symmetrize) {
        out.C = 0.5 * (C + C.transpose());
        out.Kc.resize(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j)
                out.Kc(i, j) = (i == j) ? A(i, i) : (2.0 * A(i, j) + P(j, i)) / 3.0;
    } else {
        out.C = C;
        out.Kc = A;
    }
    return out;
}

}  // namespace nphc
