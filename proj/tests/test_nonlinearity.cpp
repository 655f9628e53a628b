#include <doctest.h>

#include <cmath>

#include "fcald/nonlinearity.hpp"
#include "fcald/profiles.hpp"

using namespace fcald;

namespace {

NonlinearitySpec single_term(const GridSpec& g, double r, double qval = 1.0) {
    NonlinearitySpec s;
    s.terms.push_back({ScalarField(g, qval), r, std::nullopt});
    return s;
}

/// Test-side oracle: iterated Richardson central differences for the kth
/// derivative of |y|^{r-1} y; independent of dky_power.
double fd_dky(double r, int k, double y, double h) {
    auto phi = [&](double t) { return std::pow(std::abs(t), r - 1.0) * t; };
    // k-th central difference with step h, then one Richardson step (h vs h/2)
    auto kth = [&](double step) {
        double sum = 0.0;
        for (int m = 0; m <= k; ++m) {
            const double binom = std::tgamma(k + 1.0) / (std::tgamma(m + 1.0) * std::tgamma(k - m + 1.0));
            sum += ((k - m) % 2 ? -1.0 : 1.0) * binom * phi(y + (m - k / 2.0) * step);
        }
        return sum / std::pow(step, k);
    };
    const double c1 = kth(h), c2 = kth(h / 2);
    return (4.0 * c2 - c1) / 3.0;  // O(h^4)
}

}  // namespace

TEST_CASE("homogeneity constants and the c_r recursion") {
    const HomogeneityConstants h = homogeneity_constants(2.5);
    CHECK(h.k == 2);
    CHECK(h.alpha == doctest::Approx(0.5));
    CHECK(h.c_r == doctest::Approx(-2.5 * 1.5));
    CHECK(homogeneity_constants(1.5).c_r == doctest::Approx(-1.5));  // k=1: c_r = -r
    // recursion c_{r,k} = c_{r,k-1} (r - (k-1))
    double c = -3.5;
    for (int k = 2; k <= 3; ++k) c *= (3.5 - (k - 1));
    CHECK(homogeneity_constants(3.5).c_r == doctest::Approx(c));
}

TEST_CASE("dky_power closed form") {
    CHECK(dky_power(2.5, 2, 1.0) == doctest::Approx(3.75));
    CHECK(dky_power(2.5, 2, -1.0) == doctest::Approx(-3.75));
    CHECK(dky_power(1.5, 1, 4.0) == doctest::Approx(3.0));
    CHECK_THROWS_AS(dky_power(2.5, 3, 1.0), ConfigError);  // k > floor(r)
    CHECK_THROWS_AS(dky_power(2.5, 2, 0.0), ConfigError);  // Hoelder-only point
    CHECK(dky_power(3.5, 1, 0.0) == 0.0);                  // k < floor(r): continuous zero
}

TEST_CASE("dky_power matches the FD oracle") {
    for (double y : {-2.0, -1.0, -0.5, 0.5, 1.0, 2.0}) {
        CHECK(dky_power(1.5, 1, y) == doctest::Approx(fd_dky(1.5, 1, y, 1e-3 * std::abs(y))).epsilon(1e-6));
        CHECK(dky_power(2.5, 2, y) == doctest::Approx(fd_dky(2.5, 2, y, 2e-3 * std::abs(y))).epsilon(1e-6));
        CHECK(dky_power(3.5, 3, y) ==
              doctest::Approx(fd_dky(3.5, 3, y, 5e-3 * std::abs(y))).epsilon(1e-5));
    }
}

TEST_CASE("eval_a values and sign convention") {
    const GridSpec g = build_grid_unit(9);
    SUBCASE("u = 2, r = 2.5: 2^2.5") {
        const ScalarField a = eval_a(single_term(g, 2.5), ScalarField(g, 2.0));
        CHECK(a(4, 4) == doctest::Approx(std::pow(2.0, 2.5)).epsilon(1e-14));
    }
    SUBCASE("f(-1) = -1 for r = 1.5") {
        const ScalarField a = eval_a(single_term(g, 1.5), ScalarField(g, -1.0));
        CHECK(a(4, 4) == doctest::Approx(-1.0).epsilon(1e-14));
    }
    SUBCASE("u = 0 gives 0") {
        const ScalarField a = eval_a(single_term(g, 1.5), ScalarField(g, 0.0));
        CHECK(max_abs(a) == 0.0);
    }
}

TEST_CASE("eval_dy_a values") {
    const GridSpec g = build_grid_unit(9);
    const ScalarField d = eval_dy_a(single_term(g, 1.5), ScalarField(g, 4.0));
    CHECK(d(4, 4) == doctest::Approx(3.0).epsilon(1e-14));  // 1.5 * 4^0.5
    const ScalarField d0 = eval_dy_a(single_term(g, 1.5), ScalarField(g, 0.0));
    CHECK(max_abs(d0) == 0.0);
}

TEST_CASE("eval_dy_a matches a centered difference of eval_a") {
    const GridSpec g = build_grid_unit(9);
    const NonlinearitySpec s = single_term(g, 1.5);
    const double u0 = 0.3, h = 1e-5;
    const ScalarField ap = eval_a(s, ScalarField(g, u0 + h));
    const ScalarField am = eval_a(s, ScalarField(g, u0 - h));
    const ScalarField d = eval_dy_a(s, ScalarField(g, u0));
    CHECK(d(4, 4) == doctest::Approx((ap(4, 4) - am(4, 4)) / (2 * h)).epsilon(1e-7));
}

TEST_CASE("odd symmetry and positive homogeneity") {
    const GridSpec g = build_grid_unit(9);
    const NonlinearitySpec s = single_term(g, 1.7);
    const ScalarField u = sample(g, [](double x, double y) { return std::sin(3 * x + y) - 0.4; });
    ScalarField mu = u;
    for (double& t : mu.v) t = -t;
    const ScalarField a1 = eval_a(s, u), a2 = eval_a(s, mu);
    for (size_t t = 0; t < a1.v.size(); ++t) CHECK(a1.v[t] == -a2.v[t]);  // exact

    const double lam = 2.3;
    ScalarField lu = u;
    for (double& t : lu.v) t *= lam;
    const ScalarField al = eval_a(s, lu);
    for (size_t t = 0; t < a1.v.size(); ++t)
        CHECK(al.v[t] == doctest::Approx(std::pow(lam, 1.7) * a1.v[t]).epsilon(1e-12));
}

TEST_CASE("two-sided terms represent f(1) != -f(-1)") {
    const GridSpec g = build_grid_unit(9);
    NonlinearitySpec s;
    PowerTerm t;
    t.q = ScalarField(g, 2.0);       // y > 0 branch
    t.q_neg = ScalarField(g, 0.5);   // y < 0 branch
    t.r = 1.5;
    s.terms.push_back(std::move(t));
    CHECK(eval_a(s, ScalarField(g, 1.0))(4, 4) == doctest::Approx(2.0));
    CHECK(eval_a(s, ScalarField(g, -1.0))(4, 4) == doctest::Approx(-0.5));
}

TEST_CASE("spec validation rejects bad exponent ladders") {
    const GridSpec g = build_grid_unit(9);
    NonlinearitySpec s;
    s.terms.push_back({ScalarField(g, 1.0), 2.5, std::nullopt});
    s.terms.push_back({ScalarField(g, 1.0), 1.5, std::nullopt});
    CHECK_THROWS_AS(s.validate(g), ConfigError);
}

TEST_CASE("remainder bound check") {
    const GridSpec g = build_grid_unit(9);
    NonlinearitySpec s;
    s.terms.push_back({ScalarField(g, 1.0), 1.5, std::nullopt});
    s.terms.push_back({ScalarField(g, 0.7), 2.5, std::nullopt});
    std::vector<double> ys;
    for (int i = 1; i <= 24; ++i) ys.push_back(i / 25.0);

    SUBCASE("N beyond all terms: remainder identically zero") {
        const RemainderReport rep = remainder_bound_check(s, 3, ys);
        CHECK(rep.fitted_constant == 0.0);
    }
    SUBCASE("N = 2: remainder is the r = 2.5 term") {
        const RemainderReport rep = remainder_bound_check(s, 2, ys);
        CHECK(rep.target_exponent == doctest::Approx(2.5));
        // value + derivative parts give C in [max|q2|, (1 + r) max|q2|]
        CHECK(rep.fitted_constant >= 0.7);
        CHECK(rep.fitted_constant <= 0.7 * 3.5 + 1e-12);
        CHECK(rep.fitted_exponent == doctest::Approx(2.5).epsilon(0.05));
        CHECK(rep.bound_holds);
    }
}

TEST_CASE("spec json parsing") {
    const GridSpec g = build_grid_unit(9);
    const nlohmann::json j = {
        {"terms", {{{"r", 1.5}, {"q", "constant:1.0"}}, {{"r", 2.5}, {"q", "gaussian:center=(0.5,0.5),sigma=0.2,amp=0.5"}}}}};
    const NonlinearitySpec s = spec_from_json(g, j);
    CHECK(s.terms.size() == 2);
    CHECK(s.leading_exponent() == doctest::Approx(1.5));
    CHECK(s.max_coeff_norm() == doctest::Approx(1.0));
}
