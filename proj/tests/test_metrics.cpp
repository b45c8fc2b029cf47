#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "mgtn/metrics.hpp"
#include "mgtn/rng.hpp"
#include "oracles.hpp"

using namespace mgtn;

TEST_CASE("equity curve compounds log-returns") {
    EquityCurve curve({0.001, -0.002, 0.0005});
    const auto e = curve.equity();
    REQUIRE(e.size() == 4);
    CHECK(e[0] == 1000.0);
    CHECK(e[3] == doctest::Approx(1000.0 * std::exp(-0.0005)).epsilon(1e-12));
    CHECK_THROWS_AS(EquityCurve({}, -5.0), std::invalid_argument);
}

TEST_CASE("total return worked examples") {
    CHECK(total_return_pct(EquityCurve({0.0, 0.0})) == 0.0);
    CHECK(total_return_pct(EquityCurve({0.001, 0.001})) ==
          doctest::Approx(100.0 * (std::exp(0.002) - 1.0)).epsilon(1e-12));
    CHECK(total_return_pct(EquityCurve({})) == 0.0);
}

TEST_CASE("sharpe: symmetry, degeneracy, and the two-pass oracle") {
    CHECK(*sharpe(std::vector<double>{0.01, -0.01}) == doctest::Approx(0.0));
    CHECK_FALSE(sharpe(std::vector<double>{0.01, 0.01, 0.01}).has_value());
    CHECK_FALSE(sharpe(std::vector<double>{0.01}).has_value());

    Rng rng(601);
    std::vector<double> returns(257);
    for (double& r : returns) r = rng.uniform(-0.01, 0.02);
    const double want = oracle::two_pass_mean(returns) / oracle::two_pass_pop_std(returns);
    CHECK(*sharpe(returns) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("sortino worked example and degeneracies") {
    const std::vector<double> returns{0.02, -0.01, -0.03};
    const auto s = sortino(returns);
    REQUIRE(s.has_value());
    CHECK(*s == doctest::Approx(-0.6667).epsilon(1e-3));

    // All negatives equal: sigma_d = 0 -> undefined.
    CHECK_FALSE(sortino(std::vector<double>{-0.01, -0.01}).has_value());
    // No negatives -> undefined.
    CHECK_FALSE(sortino(std::vector<double>{0.01, 0.02}).has_value());

    // Sharpe and Sortino share the numerator's sign.
    Rng rng(607);
    std::vector<double> mixed(100);
    for (double& r : mixed) r = rng.uniform(-0.02, 0.01);
    const auto sh = sharpe(mixed);
    const auto so = sortino(mixed);
    REQUIRE((sh && so));
    CHECK(std::signbit(*sh) == std::signbit(*so));
}

TEST_CASE("sharpe and sortino are scale-invariant") {
    Rng rng(613);
    std::vector<double> r(64);
    for (double& x : r) x = rng.uniform(-0.03, 0.02);
    std::vector<double> scaled(r);
    for (double& x : scaled) x *= 4.0;
    CHECK(*sharpe(r) == doctest::Approx(*sharpe(scaled)).epsilon(1e-12));
    CHECK(*sortino(r) == doctest::Approx(*sortino(scaled)).epsilon(1e-12));
}

TEST_CASE("max drawdown worked examples") {
    // Monotone equity: zero drawdown.
    CHECK(max_drawdown_pct(EquityCurve({0.01, 0.02, 0.0})) == 0.0);
    // 100 -> 110 -> 99 -> 120: peak 110, trough 99, 10%.
    EquityCurve curve({std::log(110.0 / 100.0), std::log(99.0 / 110.0),
                       std::log(120.0 / 99.0)},
                      100.0);
    CHECK(max_drawdown_pct(curve) == doctest::Approx(10.0).epsilon(1e-12));
    // Single point: no interval.
    CHECK(max_drawdown_pct(EquityCurve({})) == 0.0);
}

TEST_CASE("max drawdown equals the brute-force pairwise scan") {
    Rng rng(617);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 2 + rng.uniform_int(199);
        std::vector<double> returns(n);
        for (double& r : returns) r = rng.uniform(-0.05, 0.05);
        EquityCurve curve(returns);
        CHECK(max_drawdown_pct(curve) ==
              doctest::Approx(oracle::brute_force_drawdown_pct(curve.equity()))
                  .epsilon(1e-10));
    }
}

TEST_CASE("hit rate counting conventions") {
    CHECK(*hit_rate_pct(std::vector<double>{1, -1, 1, 1}) == doctest::Approx(75.0));
    CHECK(*hit_rate_pct(std::vector<double>{1, 2, 3}) == doctest::Approx(100.0));
    // Zeros excluded from both counts.
    CHECK(*hit_rate_pct(std::vector<double>{1, 0, -1}) == doctest::Approx(50.0));
    // All zero: undefined.
    CHECK_FALSE(hit_rate_pct(std::vector<double>{0, 0}).has_value());
    CHECK_THROWS_AS(hit_rate_pct(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("metrics invariant under appended zero-return steps") {
    // Holds for total return (sum unchanged), drawdown (flat extension) and
    // hit rate (zeros excluded); Sharpe/Sortino dilute their mean by
    // construction and are exempt.
    Rng rng(619);
    std::vector<double> r(40);
    for (double& x : r) x = rng.uniform(-0.02, 0.02);
    std::vector<double> padded(r);
    padded.insert(padded.end(), 5, 0.0);

    EquityCurve a(r), b(padded);
    CHECK(total_return_pct(a) == doctest::Approx(total_return_pct(b)).epsilon(1e-12));
    CHECK(max_drawdown_pct(a) == doctest::Approx(max_drawdown_pct(b)).epsilon(1e-12));
    CHECK(*hit_rate_pct(r) == doctest::Approx(*hit_rate_pct(padded)).epsilon(1e-12));

    // Drawdown stays within [0, 100).
    CHECK(max_drawdown_pct(a) >= 0.0);
    CHECK(max_drawdown_pct(a) < 100.0);
}
