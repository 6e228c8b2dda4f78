#include "scenarios.hpp"

#include <jumpcredit/pricing.hpp>

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace jumpcredit;
using Catch::Approx;

namespace {

    constexpr ModelKind kAll[] = {ModelKind::Merton, ModelKind::NegGamma, ModelKind::NegIG, ModelKind::SymVG};

    const auto kGetVG = ModelParams::sym_vg(0.2402, 3.2453);
    const DebtSpec kGetDebt{4998.0, 1.0, 0.0};
    constexpr double kGetVA = 11666.7;

    double black_scholes(double s, double k, double T, double r, double sigma) {
        const double v = sigma * std::sqrt(T);
        const double d1 = (std::log(s / k) + (r + 0.5 * sigma * sigma) * T) / v;
        return s * std_normal_cdf(d1) - k * std::exp(-r * T) * std_normal_cdf(d1 - v);
    }

}

TEST_CASE("debt spec validation") {
    CHECK_THROWS_AS((DebtSpec{0.0, 1.0, 0.0}.validate()), DomainError);
    CHECK_THROWS_AS((DebtSpec{1.0, -1.0, 0.0}.validate()), DomainError);
    CHECK(DebtSpec{100.0, 2.0, 0.05}.discounted_face() == Approx(100.0 * std::exp(-0.1)).epsilon(1e-15));
}

TEST_CASE("distance to default") {
    const auto g = ModelParams::neg_gamma(3.280, 0.888);
    CHECK(distance_input(g, 180913.0, {16196.0, 1.0, 0.0}, 0.0) == Approx(2.6496).margin(1e-4));
    CHECK(distance_input(ModelParams::merton(1e-9), 150.0, {100.0, 2.0, 0.0}, 0.0) == Approx(std::log(1.5)).epsilon(1e-12));
    const double w = martingale_adjustment(g);
    CHECK(distance_input(g, 100.0, {100.0, 3.0, -w}, -w) == Approx(0.0).margin(1e-15));
    CHECK_THROWS_AS(distance_input(g, 0.0, {100.0, 1.0, 0.0}, 0.0), DomainError);
}

TEST_CASE("symVG series truncation sequence") {
    const double v7 = equity_value(kGetVG, kGetVA, kGetDebt, {7});
    const double v10 = equity_value(kGetVG, kGetVA, kGetDebt, {10});
    const double v15 = equity_value(kGetVG, kGetVA, kGetDebt, {15});
    const double v20 = equity_value(kGetVG, kGetVA, kGetDebt, {20});
    CHECK(v7 == Approx(6693.990).margin(1e-3));
    CHECK(v10 == Approx(6676.968).margin(1e-3));
    CHECK(v15 == Approx(6676.847).margin(1e-3));
    CHECK(std::fabs(v20 - v15) / v15 <= 1e-7);
    CHECK(v20 == Approx(equity_value_quadrature(kGetVG, kGetVA, kGetDebt)).epsilon(1e-12));
    CHECK(equity_value(kGetVG, kGetVA, kGetDebt) == v15);
}

TEST_CASE("symVG coefficient properties") {
    const double t_nu = 1.0 / 3.2453 - 0.5;
    // (-n1 + n2)/2 + 1 at a pole: the first term vanishes, only the second remains
    const double X = -0.3, Y = 0.25;
    const double c = symvg_coefficient(4, 2, X, Y, t_nu);
    const double ratio = -X / Y;
    const double second = 2.0 * std::tgamma(-8.0 - 2.0 - 1.0 - 2.0 * t_nu) / std::tgamma(-4.0 + 0.5 - t_nu) / 24.0
                          * std::pow(ratio, 9.0 + 2.0 * t_nu) * std::pow(-X, 2);
    CHECK(c == Approx(second).epsilon(1e-12));
    // X < 0 < Y: first-term sign is (-1)^n1 times the sign of its Gamma ratio
    const double y = 0.3;
    for (int n1 = 0; n1 < 6; ++n1) {
        const double a = symvg_coefficient(n1, 1, -1e-12, y, t_nu);  // second term negligible
        const double g = std::tgamma((-n1 + 2) / 2.0 + t_nu) / std::tgamma((-n1 + 1) / 2.0 + 1.0);
        CHECK((a > 0.0) == ((n1 % 2 == 0) == (g > 0.0)));
    }
    CHECK_THROWS_AS(symvg_coefficient(0, 0, 0.1, 0.1, t_nu), DomainError);
    CHECK_THROWS_AS(symvg_coefficient(0, 1, 0.1, 0.0, t_nu), DomainError);
    // Gamma(-2 n1 - n2 - 1 - 2 T_nu) at a pole
    CHECK_THROWS_AS(symvg_coefficient(0, 1, -0.1, 0.1, 0.5), PoleProximity);
}

TEST_CASE("series evaluation matches a direct double sum of coefficients") {
    const double nu = 3.2453, sigma = 0.2402;
    const double t_nu = 1.0 / nu - 0.5;
    const double s_nu = sigma * std::sqrt(nu / 2.0);
    const double w = martingale_adjustment(kGetVG);
    for (double va : {3000.0, 4000.0, kGetVA}) {
        const double k = std::log(va / 4998.0) + w;
        const double pre = 4998.0 / (2.0 * std::tgamma(1.0 / nu));
        double sum = 0.0;
        for (int n1 = 0; n1 <= 15; ++n1)
            for (int n2 = 1; n2 <= 15; ++n2)
                sum += k <= 0.0 ? symvg_coefficient(n1, n2, k, s_nu, t_nu) : symvg_coefficient(n1, n2, k, -s_nu, t_nu);
        const double direct = k <= 0.0 ? pre * sum : va - 4998.0 - pre * sum;
        INFO(va);
        CHECK(equity_value(kGetVG, va, kGetDebt) == Approx(direct).epsilon(1e-11));
    }
}

TEST_CASE("pole proximity moves the maturity") {
    // T/nu - 1/2 = 1/2 puts second_arg(n1, n2) on nonpositive integers
    const auto v = ModelParams::sym_vg(0.2, 2.0);
    const auto val = equity_valuation(v, 120.0, {100.0, 2.0, 0.0});
    CHECK(val.perturbed);
    CHECK(val.maturity_used > 2.0);
    CHECK(val.maturity_used - 2.0 < 1e-6);
    CHECK(val.value == Approx(equity_value_quadrature(v, 120.0, {100.0, 2.0, 0.0})).epsilon(1e-6));
    CHECK_FALSE(equity_valuation(kGetVG, kGetVA, kGetDebt).perturbed);
}

TEST_CASE("one-sided models price to zero at or below the boundary") {
    for (const auto& p : {ModelParams::neg_gamma(3.0, 0.8), ModelParams::neg_ig(2.0, 0.5)}) {
        const DebtSpec debt{100.0, 1.0, 0.02};
        const double boundary = 100.0 * std::exp(-(0.02 + martingale_adjustment(p)));
        CHECK(equity_value(p, boundary, debt) <= 1e-12);
        CHECK(equity_value(p, 0.9 * boundary, debt) == 0.0);
        CHECK(equity_value(p, 1.01 * boundary, debt) > 0.0);
        CHECK(equity_value_quadrature(p, 0.5 * boundary, debt) == 0.0);
    }
}

TEST_CASE("closed forms agree with the quadrature pricer") {
    std::mt19937_64 rng(20);
    for (auto kind : kAll) {
        for (int i = 0; i < 40; ++i) {
            const auto s = testing::random_scenario(kind, rng);
            const double cf = equity_value(s.params, s.asset_value, s.debt, s.ctrl);
            const double q = equity_value_quadrature(s.params, s.asset_value, s.debt);
            INFO(to_string(kind) << " V=" << s.asset_value << " K=" << s.debt.face_value << " T=" << s.debt.maturity);
            CHECK(std::fabs(cf - q) <= 1e-8 * cf + 1e-10 * s.debt.face_value);
        }
    }
    // SAP inputs
    const auto g = ModelParams::neg_gamma(3.280, 0.888);
    const DebtSpec sap{16196.0, 1.0, 0.0};
    CHECK(equity_value(g, 180913.0, sap) == Approx(equity_value_quadrature(g, 180913.0, sap)).epsilon(1e-8));
}

TEST_CASE("Merton closed form is Black-Scholes") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 100; ++i) {
        const auto s = testing::random_scenario(ModelKind::Merton, rng);
        const double sigma = s.params.as<MertonParams>().sigma;
        const double bs = black_scholes(s.asset_value, s.debt.face_value, s.debt.maturity, s.debt.rate, sigma);
        CHECK(equity_value(s.params, s.asset_value, s.debt) == Approx(bs).epsilon(1e-12));
        CHECK(equity_value_quadrature(s.params, s.asset_value, s.debt) == Approx(bs).epsilon(1e-9));
    }
}

TEST_CASE("quadrature pricer with vanishing debt returns the asset value") {
    for (auto p : {ModelParams::merton(0.3), ModelParams::neg_gamma(3.0, 0.8), ModelParams::neg_ig(2.0, 0.5), kGetVG}) {
        const double va = 1000.0;
        CHECK(equity_value_quadrature(p, va, {1e-9 * va, 1.0, 0.0}) == Approx(va).epsilon(1e-6));
    }
}

TEST_CASE("price bounds and monotonicity in the asset value") {
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (auto kind : kAll) {
        for (int i = 0; i < 250; ++i) {
            const auto s = testing::random_scenario(kind, rng);
            const EquityPricer pricer(s.params, s.debt, s.ctrl);
            const double v1 = s.asset_value;
            const double v2 = v1 * (1.0 + 0.2 * u(rng) + 1e-6);
            const double p1 = pricer.value(v1);
            const double p2 = pricer.value(v2);
            INFO(to_string(kind));
            CHECK(p2 > p1);
            CHECK(p1 <= v1);
            if (kind == ModelKind::SymVG || kind == ModelKind::Merton)
                CHECK(p1 >= v1 - s.debt.discounted_face() - 1e-9 * v1);
        }
    }
}

TEST_CASE("delta is the derivative of the price") {
    std::mt19937_64 rng(23);
    for (auto kind : kAll) {
        for (int i = 0; i < 20; ++i) {
            const auto s = testing::random_scenario(kind, rng, 1e-2);
            const EquityPricer pricer(s.params, s.debt, s.ctrl);
            const double h = 1e-5 * s.asset_value;
            const double fd = (pricer.value(s.asset_value + h) - pricer.value(s.asset_value - h)) / (2.0 * h);
            CHECK(pricer.delta(s.asset_value) == Approx(fd).epsilon(1e-5).margin(1e-8));
        }
    }
}

TEST_CASE("inversion round trips") {
    std::mt19937_64 rng(24);
    for (auto kind : kAll) {
        for (int i = 0; i < 100; ++i) {
            const auto s = testing::random_scenario(kind, rng);
            SeriesControl ctrl = s.ctrl;
            const double e0 = equity_value(s.params, s.asset_value, s.debt, ctrl);
            if (!(e0 > 0.0)) continue;
            if (kind == ModelKind::SymVG) {  // the search brackets [E, E + K e^{-rT}]
                try {
                    ctrl.n_max = sufficient_series_terms(s.params.as<SymVGParams>(), s.debt, e0,
                                                         e0 + s.debt.discounted_face(), ctrl);
                } catch (const NoSolution&) {
                    continue;  // bracket end too far from the money for the series
                }
            }
            const EquityPricer pricer(s.params, s.debt, ctrl);
            const double e = pricer.value(s.asset_value);
            INFO(to_string(kind) << " V=" << s.asset_value << " K=" << s.debt.face_value);
            CHECK(pricer.invert(e) == Approx(s.asset_value).epsilon(1e-8));
        }
    }
    CHECK_THROWS_AS(invert_equity(ModelParams::merton(0.2), -1.0, {100.0, 1.0, 0.0}), DomainError);
}

TEST_CASE("inversion at the one-sided boundary") {
    const auto g = ModelParams::neg_gamma(3.0, 0.8);
    const DebtSpec debt{100.0, 1.0, 0.0};
    const EquityPricer pricer(g, debt);
    const double b = pricer.boundary();
    CHECK(b == Approx(100.0 * std::exp(-martingale_adjustment(g))).epsilon(1e-15));
    const double tiny = pricer.value(b * (1.0 + 1e-9));
    const double v = pricer.invert(std::max(tiny, 1e-300));
    CHECK(v == Approx(b).epsilon(1e-6));
}

TEST_CASE("Merton implied asset value for SAP-like inputs") {
    const auto m = ModelParams::merton(0.2873);
    const DebtSpec debt{16196.0, 1.0, 0.0};
    const double e = equity_value(m, 180914.0, debt);
    CHECK(invert_equity(m, e, debt) == Approx(180914.0).epsilon(1e-10));
}

TEST_CASE("variance gamma with tiny nu prices like Black-Scholes") {
    const auto v = ModelParams::sym_vg(0.3, 1e-4);
    for (double va : {80.0, 100.0, 150.0}) {
        const DebtSpec debt{100.0, 1.0, 0.0};
        const double bs = black_scholes(va, 100.0, 1.0, 0.0, 0.3);
        CHECK(equity_value_quadrature(v, va, debt) == Approx(bs).epsilon(1e-3));
    }
}

TEST_CASE("series terms needed grow with moneyness") {
    const auto& p = kGetVG.as<SymVGParams>();
    const int n_get = sufficient_series_terms(p, kGetDebt, kGetVA, kGetVA);
    CHECK(n_get >= 15);
    CHECK(n_get <= 35);
    CHECK(equity_value(kGetVG, kGetVA, kGetDebt, {n_get})
          == Approx(equity_value_quadrature(kGetVG, kGetVA, kGetDebt)).epsilon(1e-10));
    const DebtSpec sap{16196.0, 1.0, 0.0};
    const auto sap_vg = ModelParams::sym_vg(0.2873, 2.2526);
    const int n = sufficient_series_terms(sap_vg.as<SymVGParams>(), sap, 180904.0, 180904.0);
    CHECK(n > 15);
    CHECK(equity_value(sap_vg, 180904.0, sap, {n}) == Approx(equity_value_quadrature(sap_vg, 180904.0, sap)).epsilon(1e-10));
}
