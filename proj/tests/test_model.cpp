#include <catch_amalgamated.hpp>

#include "nphc/model.hpp"
#include "nphc/rng.hpp"

using namespace nphc;

namespace {

// Random stable non-negative G with entries in U[0, 0.8/d].
Matrix random_stable_g(int d, SplitMix64& rng) {
    Matrix G(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) G(i, j) = rng.uniform01() * 0.8 / d;
    return G;
}

// Midpoint-rule quadrature of a kernel over [0, upper].
double kernel_quadrature(const KernelSpec& k, double upper, long n) {
    const double h = upper / static_cast<double>(n);
    double acc = 0.0;
    for (long i = 0; i < n; ++i) acc += k((static_cast<double>(i) + 0.5) * h);
    return acc * h;
}

}  // namespace

TEST_CASE("g_to_r on the worked examples", "[model]") {
    CHECK(g_to_r(Matrix::Zero(3, 3)).isApprox(Matrix::Identity(3, 3), 1e-12));

    Matrix G(2, 2);
    G << 0.0, 0.5, 0.0, 0.0;
    Matrix R_expect(2, 2);
    R_expect << 1.0, 0.5, 0.0, 1.0;
    CHECK(g_to_r(G).isApprox(R_expect, 1e-12));

    CHECK(g_to_r(Matrix::Constant(1, 1, 0.5))(0, 0) == Catch::Approx(2.0).margin(1e-12));
}

TEST_CASE("r_to_g on the worked examples", "[model]") {
    CHECK(r_to_g(Matrix::Identity(2, 2)).isApprox(Matrix::Zero(2, 2), 1e-12));
    CHECK(r_to_g(Matrix::Constant(1, 1, 2.0))(0, 0) == Catch::Approx(0.5).margin(1e-12));

    Matrix R(2, 2);
    R << 1.0, 0.5, 0.0, 1.0;
    Matrix G_expect(2, 2);
    G_expect << 0.0, 0.5, 0.0, 0.0;
    CHECK(r_to_g(R).isApprox(G_expect, 1e-12));
}

TEST_CASE("g_to_r rejects unstable and r_to_g rejects singular input", "[model]") {
    CHECK_THROWS_AS(g_to_r(Matrix::Identity(2, 2)), StabilityViolation);
    CHECK_THROWS_AS(g_to_r(Matrix::Constant(1, 1, 1.0 - 1e-9)), StabilityViolation);
    CHECK_THROWS_AS(r_to_g(Matrix::Zero(2, 2)), SingularMatrix);
}

TEST_CASE("roundtrip r_to_g(g_to_r(G)) over random stable matrices", "[model]") {
    SplitMix64 rng(2024);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 1 + static_cast<int>(rng.next_u64() % 8);
        const Matrix G = random_stable_g(d, rng);
        const Matrix back = r_to_g(g_to_r(G));
        REQUIRE((back - G).cwiseAbs().maxCoeff() < 1e-8);
    }
}

TEST_CASE("Neumann positivity of R - I for non-negative stable G", "[model]") {
    SplitMix64 rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        const int d = 2 + static_cast<int>(rng.next_u64() % 5);
        const Matrix R = g_to_r(random_stable_g(d, rng));
        REQUIRE(((R - Matrix::Identity(d, d)).array() >= -1e-10).all());
    }
}

TEST_CASE("spectral radius on the worked examples", "[model]") {
    CHECK(spectral_radius(Matrix::Zero(4, 4)) == 0.0);

    Matrix D = Matrix::Zero(2, 2);
    D(0, 0) = 0.3;
    D(1, 1) = 0.7;
    CHECK(spectral_radius(D) == Catch::Approx(0.7).epsilon(1e-8));

    // eigenvalues +-0.5; the power iteration alone cannot settle here
    Matrix M(2, 2);
    M << 0.0, 1.0, 0.25, 0.0;
    CHECK(spectral_radius(M) == Catch::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("spectral radius rejects non-finite input", "[model]") {
    Matrix M = Matrix::Zero(2, 2);
    M(0, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(spectral_radius(M), ValidationError);
}

TEST_CASE("theoretical mean intensity", "[model]") {
    // Poisson case
    auto poisson = HawkesModel::create((Vector(2) << 1.0, 2.0).finished(),
                                       {{KernelSpec::zero(), KernelSpec::zero()},
                                        {KernelSpec::zero(), KernelSpec::zero()}});
    CHECK(theoretical_mean_intensity(poisson).isApprox((Vector(2) << 1.0, 2.0).finished(), 1e-12));

    // d=1: mu/(1-g)
    auto scalar = HawkesModel::create(Vector::Ones(1), {{KernelSpec::exponential(0.5, 1.0)}});
    CHECK(theoretical_mean_intensity(scalar)(0) == Catch::Approx(2.0).margin(1e-12));

    // d=2 with nilpotent G
    auto two = HawkesModel::create(Vector::Ones(2),
                                   {{KernelSpec::zero(), KernelSpec::exponential(0.5, 1.0)},
                                    {KernelSpec::zero(), KernelSpec::zero()}});
    CHECK(theoretical_mean_intensity(two).isApprox((Vector(2) << 1.5, 1.0).finished(), 1e-12));
}

TEST_CASE("kernel integrals match quadrature", "[model][kernels]") {
    const double alpha = 0.7;
    for (double beta : {0.1, 1.0, 10.0}) {
        const double upper = 1e3 / beta;
        const long n = 4'000'000;

        const auto exp_k = KernelSpec::exponential(alpha, beta);
        CHECK(kernel_quadrature(exp_k, upper, n) == Catch::Approx(alpha).epsilon(1e-3));

        const auto rect_k = KernelSpec::rectangular(alpha, beta, 0.5);
        CHECK(kernel_quadrature(rect_k, upper, n) == Catch::Approx(alpha).epsilon(1e-3));

        const auto pl_k = KernelSpec::power_law(alpha, beta, 0.5);
        const double tail = alpha * std::pow(1.0 + beta * upper, -0.5);
        CHECK(kernel_quadrature(pl_k, upper, n) + tail == Catch::Approx(alpha).epsilon(1e-3));
    }
}

TEST_CASE("kernel validation", "[model][kernels]") {
    CHECK_THROWS_AS(KernelSpec::exponential(-0.1, 1.0), ValidationError);
    CHECK_THROWS_AS(KernelSpec::exponential(0.5, 0.0), ValidationError);
    CHECK_THROWS_AS(KernelSpec::rectangular(0.5, 1.0, -0.1), ValidationError);
    CHECK_THROWS_AS(KernelSpec::power_law(0.5, 1.0, 0.0), ValidationError);
    CHECK(KernelSpec::zero().integral() == 0.0);
    CHECK(KernelSpec::power_law(0.3, 2.0, 0.5).integral() == 0.3);
}

TEST_CASE("event sequences enforce ordering and range", "[model][events]") {
    CHECK_THROWS_AS(EventSequences::create(10.0, {{1.0, 1.0}}), ValidationError);
    CHECK_THROWS_AS(EventSequences::create(10.0, {{3.0, 2.0}}), ValidationError);
    CHECK_THROWS_AS(EventSequences::create(10.0, {{-1.0}}), ValidationError);
    CHECK_THROWS_AS(EventSequences::create(10.0, {{11.0}}), ValidationError);
    CHECK_THROWS_AS(EventSequences::create(0.0, {{}}), ValidationError);

    // ties across nodes are fine
    const auto ev = EventSequences::create(10.0, {{1.0, 5.0}, {5.0}});
    CHECK(ev.dim() == 2);
    CHECK(ev.total_events() == 3);
}

TEST_CASE("causality matrices stay consistent", "[model]") {
    Matrix G(2, 2);
    G << 0.2, 0.3, 0.1, 0.4;
    const auto cm = CausalityMatrices::from_g(G);
    CHECK((cm.R * (Matrix::Identity(2, 2) - cm.G)).isApprox(Matrix::Identity(2, 2), 1e-10));
    const auto cm2 = CausalityMatrices::from_r(cm.R);
    CHECK(cm2.G.isApprox(G, 1e-10));
}
