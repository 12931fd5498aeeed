#include <catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "nphc/simulate.hpp"

using namespace nphc;

namespace {

HawkesModel scalar_exp_model(double mu, double g, double beta = 1.0) {
    return HawkesModel::create(Vector::Constant(1, mu), {{KernelSpec::exponential(g, beta)}});
}

HawkesModel two_node_exp_model() {
    // cross-exciting pair, spectral radius ~ 0.48
    std::vector<std::vector<KernelSpec>> k{
        {KernelSpec::exponential(0.30, 1.0), KernelSpec::exponential(0.15, 2.0)},
        {KernelSpec::exponential(0.20, 1.5), KernelSpec::exponential(0.25, 1.0)}};
    return HawkesModel::create((Vector(2) << 0.6, 0.4).finished(), std::move(k));
}

}  // namespace

TEST_CASE("intensity on the worked examples", "[simulate]") {
    SECTION("empty history gives the baseline") {
        const auto model = two_node_exp_model();
        const auto ev = EventSequences::create(10.0, {{}, {}});
        CHECK(intensity_at(model, ev, 3.0).isApprox(model.mu, 1e-14));
    }
    SECTION("exponential kernel decay") {
        const auto model = scalar_exp_model(1.0, 0.5);
        const auto ev = EventSequences::create(10.0, {{0.0}});
        CHECK(intensity_at(model, ev, std::log(2.0))(0) == Catch::Approx(1.25).margin(1e-14));
    }
    SECTION("delayed rectangle not yet active") {
        auto model = HawkesModel::create(Vector::Ones(1), {{KernelSpec::rectangular(0.5, 1.0, 1.0)}});
        const auto ev = EventSequences::create(10.0, {{0.0}});
        CHECK(intensity_at(model, ev, 0.5)(0) == Catch::Approx(1.0).margin(1e-14));
        // inside the support [1, 2)
        CHECK(intensity_at(model, ev, 1.5)(0) == Catch::Approx(1.5).margin(1e-14));
    }
    SECTION("events at exactly t are excluded") {
        const auto model = scalar_exp_model(1.0, 0.5);
        const auto ev = EventSequences::create(10.0, {{2.0}});
        CHECK(intensity_at(model, ev, 2.0)(0) == Catch::Approx(1.0).margin(1e-14));
    }
}

TEST_CASE("dominating bound on the worked examples", "[simulate]") {
    SECTION("monotone kernels: bound equals current total intensity") {
        const auto model = two_node_exp_model();
        const auto ev = EventSequences::create(10.0, {{0.5, 2.0}, {1.0}});
        const double t = 3.0;
        CHECK(dominating_bound(model, ev, t) ==
              Catch::Approx(intensity_at(model, ev, t).sum()).margin(1e-12));
    }
    SECTION("rectangular plateau is counted before it turns on") {
        auto model = HawkesModel::create(Vector::Ones(1), {{KernelSpec::rectangular(0.5, 1.0, 1.0)}});
        const auto ev = EventSequences::create(10.0, {{0.0}});
        CHECK(dominating_bound(model, ev, 0.5) == Catch::Approx(1.5).margin(1e-14));
        // after the support [1, 2) has passed the event stops counting
        CHECK(dominating_bound(model, ev, 2.5) == Catch::Approx(1.0).margin(1e-14));
    }
    SECTION("empty history") {
        const auto model = two_node_exp_model();
        const auto ev = EventSequences::create(10.0, {{}, {}});
        CHECK(dominating_bound(model, ev, 4.0) == Catch::Approx(1.0).margin(1e-14));
    }
}

TEST_CASE("zero baseline produces no events", "[simulate]") {
    auto model = HawkesModel::create(Vector::Zero(2),
                                     {{KernelSpec::exponential(0.3, 1.0), KernelSpec::zero()},
                                      {KernelSpec::zero(), KernelSpec::exponential(0.3, 1.0)}});
    SimulationConfig cfg;
    cfg.horizon = 1000.0;
    cfg.seed = 5;
    CHECK(simulate(model, cfg).events.total_events() == 0);
}

TEST_CASE("unstable models are rejected", "[simulate]") {
    auto model = scalar_exp_model(1.0, 1.2);
    SimulationConfig cfg;
    cfg.horizon = 10.0;
    CHECK_THROWS_AS(simulate(model, cfg), UnstableModel);
}

TEST_CASE("Poisson count statistics at T=1e5", "[simulate][slow]") {
    auto model = HawkesModel::create(Vector::Ones(1), {{KernelSpec::zero()}});
    SimulationConfig cfg;
    cfg.horizon = 1e5;
    cfg.seed = 11;
    const auto res = simulate(model, cfg);
    const double n = static_cast<double>(res.events.total_events());
    CHECK(std::abs(n - 1e5) <= 4.0 * std::sqrt(1e5));
    CHECK(res.max_accept_ratio <= 1.0 + 1e-9);
}

TEST_CASE("self-exciting count matches Lambda with variance from C", "[simulate][slow]") {
    // d=1, g=0.5, mu=1: Lambda = 2 and integrated covariance C = 8, so
    // Var(N_T / T) ~ C / T.
    const auto model = scalar_exp_model(1.0, 0.5);
    SimulationConfig cfg;
    cfg.horizon = 1e5;
    cfg.seed = 13;
    const auto res = simulate(model, cfg);
    const double rate = static_cast<double>(res.events.total_events()) / cfg.horizon;
    CHECK(std::abs(rate - 2.0) <= 4.0 * std::sqrt(8.0 / cfg.horizon));
    CHECK(res.max_accept_ratio <= 1.0 + 1e-9);
}

TEST_CASE("identical configs give bit-identical paths", "[simulate]") {
    const auto model = two_node_exp_model();
    SimulationConfig cfg;
    cfg.horizon = 500.0;
    cfg.seed = 99;
    const auto a = simulate(model, cfg);
    const auto b = simulate(model, cfg);
    REQUIRE(a.events.events == b.events.events);
    SimulationConfig other = cfg;
    other.seed = 100;
    CHECK(simulate(model, other).events.events != a.events.events);
}

TEST_CASE("empirical rates match R mu over seeded runs", "[simulate][slow]") {
    const auto model = two_node_exp_model();
    const Vector lambda = theoretical_mean_intensity(model);
    const int runs = 20;
    const double T = 1e4;

    Eigen::MatrixXd rates(runs, 2);
    for (int s = 0; s < runs; ++s) {
        SimulationConfig cfg;
        cfg.horizon = T;
        cfg.seed = 1000 + static_cast<std::uint64_t>(s);
        const auto res = simulate(model, cfg);
        for (int i = 0; i < 2; ++i)
            rates(s, i) = static_cast<double>(res.events.events[i].size()) / T;
        REQUIRE(res.max_accept_ratio <= 1.0 + 1e-9);
    }
    for (int i = 0; i < 2; ++i) {
        const double mean = rates.col(i).mean();
        const double sd = std::sqrt((rates.col(i).array() - mean).square().sum() / (runs - 1));
        const double se = sd / std::sqrt(static_cast<double>(runs));
        CHECK(std::abs(mean - lambda[i]) <= 5.0 * se);
    }
}

TEST_CASE("mixed kernel shapes still reproduce the mean intensities", "[simulate][slow]") {
    // one column each of exponential, rectangular and power-law excitation
    std::vector<std::vector<KernelSpec>> k{
        {KernelSpec::exponential(0.25, 2.0), KernelSpec::rectangular(0.2, 1.0, 0.5),
         KernelSpec::power_law(0.2, 1.0, 1.5)},
        {KernelSpec::zero(), KernelSpec::rectangular(0.3, 0.5, 0.0), KernelSpec::zero()},
        {KernelSpec::exponential(0.2, 1.0), KernelSpec::zero(), KernelSpec::power_law(0.25, 2.0, 1.2)}};
    const auto model = HawkesModel::create((Vector(3) << 0.5, 0.4, 0.3).finished(), std::move(k));
    const Vector lambda = theoretical_mean_intensity(model);

    const int runs = 10;
    const double T = 4000.0;
    Eigen::MatrixXd rates(runs, 3);
    for (int s = 0; s < runs; ++s) {
        SimulationConfig cfg;
        cfg.horizon = T;
        cfg.seed = 40 + static_cast<std::uint64_t>(s);
        const auto res = simulate(model, cfg);
        for (int i = 0; i < 3; ++i)
            rates(s, i) = static_cast<double>(res.events.events[i].size()) / T;
        REQUIRE(res.max_accept_ratio <= 1.0 + 1e-9);
    }
    for (int i = 0; i < 3; ++i) {
        const double mean = rates.col(i).mean();
        const double sd = std::sqrt((rates.col(i).array() - mean).square().sum() / (runs - 1));
        const double se = sd / std::sqrt(static_cast<double>(runs));
        CHECK(std::abs(mean - lambda[i]) <= 5.0 * se);
    }
}

TEST_CASE("ancestry ratios recover the kernel integrals", "[simulate][slow]") {
    const auto model = two_node_exp_model();
    const Matrix G = model.integral_matrix();

    SimulationConfig cfg;
    cfg.horizon = 1e4;
    cfg.seed = 321;
    cfg.track_ancestry = true;
    const auto res = simulate(model, cfg);
    REQUIRE(res.ancestry.size() == res.events.total_events());

    Eigen::Matrix2d counts = Eigen::Matrix2d::Zero();
    for (const auto& rec : res.ancestry)
        if (rec.ancestor_node >= 0) counts(rec.node, rec.ancestor_node) += 1.0;

    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            const double nj = static_cast<double>(res.events.events[j].size());
            const double ratio = counts(i, j) / nj;
            const double se = std::sqrt(std::max(counts(i, j), 1.0)) / nj;
            INFO("pair (" << i << "," << j << ") ratio " << ratio << " target " << G(i, j));
            CHECK(std::abs(ratio - G(i, j)) <= 5.0 * se);
        }
}

TEST_CASE("event cap surfaces as a truncated flag", "[simulate]") {
    const auto model = scalar_exp_model(1.0, 0.5);
    SimulationConfig cfg;
    cfg.horizon = 1e4;
    cfg.seed = 8;
    cfg.max_events = 100;
    const auto res = simulate(model, cfg);
    CHECK(res.truncated);
    CHECK(res.events.total_events() == 100);
}

TEST_CASE("block model layout", "[simulate][preset]") {
    SECTION("d=10 preset") {
        const auto model = make_block_model(10, KernelShape::Rectangular, 1.0 / 6.0,
                                            {0.1, 1.0, 10.0}, 0.5);
        const Matrix G = model.integral_matrix();
        int nonzero = 0;
        for (int i = 0; i < 10; ++i)
            for (int j = 0; j < 10; ++j)
                if (G(i, j) != 0.0) {
                    ++nonzero;
                    CHECK(G(i, j) == Catch::Approx(1.0 / 6.0).margin(1e-15));
                }
        // blocks (3..5)x(0..2), (6..9)x(0..2), (6..9)x(3..5)
        CHECK(nonzero == 9 + 12 + 12);
        CHECK(G.block(3, 0, 3, 3).minCoeff() > 0.0);
        CHECK(G.block(6, 0, 4, 3).minCoeff() > 0.0);
        CHECK(G.block(6, 3, 4, 3).minCoeff() > 0.0);
        CHECK(G.block(0, 0, 3, 10).cwiseAbs().maxCoeff() == 0.0);
        CHECK(spectral_radius(G) < 1.0);
        // betas by block: square block beta1, lower-left beta0, bottom-middle beta2
        CHECK(model.kernels[3][0].beta == 1.0);
        CHECK(model.kernels[6][0].beta == 0.1);
        CHECK(model.kernels[6][3].beta == 10.0);
    }
    SECTION("alpha = 0 degenerates to Poisson") {
        const auto model = make_block_model(10, KernelShape::Exponential, 0.0, {0.1, 1.0, 10.0}, 0.5);
        CHECK(model.integral_matrix().cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("d=100 preset stays stable") {
        const auto model = make_block_model(100, KernelShape::Exponential, 0.1, {0.1, 1.0, 10.0}, 0.5);
        CHECK(spectral_radius(model.integral_matrix()) < 1.0);
    }
    SECTION("tiny dimension is rejected") {
        CHECK_THROWS_AS(make_block_model(3, KernelShape::Exponential, 0.1, {0.1, 1.0, 10.0}, 0.5),
                        ValidationError);
    }
}
