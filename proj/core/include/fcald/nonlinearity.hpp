#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fcald/grid.hpp"

namespace fcald {

/// r = k + alpha with k >= 1 integer and alpha in (0,1), and the constant
/// c_r = -r(r-1)...(r-(k-1)) from the kth-derivative closed form
/// d^k/dy^k |y|^{r-1}y = -c_r |y|^{r-1} y^{1-k}.
struct HomogeneityConstants {
    double r = 0;
    int k = 0;
    double alpha = 0;
    double c_r = 0;
};

HomogeneityConstants homogeneity_constants(double r);

/// kth y-derivative of |y|^{r-1}y, valid for 1 <= k <= floor(r); the k =
/// floor(r) derivative is Hoelder-only at y = 0 and requires y != 0.
double dky_power(double r, int k, double y);

/// One positively homogeneous term q(x)|y|^{r-1}y. A two-sided variant with
/// q_neg != q represents general homogeneous b(x,y) determined by f(1), f(-1):
/// b = q |y|^{r-1} y for y > 0 and q_neg |y|^{r-1} y for y < 0.
struct PowerTerm {
    ScalarField q;
    double r = 0;
    std::optional<ScalarField> q_neg;  ///< absent: symmetric form

    bool symmetric() const { return !q_neg.has_value(); }
};

/// a(x,y) = sum_l q_l(x)|y|^{r_l-1}y with strictly increasing exponents
/// 1 < r_1 < r_2 < ...; automatically a(x,0) = d_y a(x,0) = 0.
struct NonlinearitySpec {
    std::vector<PowerTerm> terms;

    bool empty() const { return terms.empty(); }
    double leading_exponent() const;
    double max_coeff_norm() const;
    void validate(const GridSpec& g) const;

    nlohmann::json to_json() const;  ///< profile strings are not retained; emits q stats only
};

/// Parse {"terms":[{"r": float, "q": <profile-or-csv>}]} against a grid.
NonlinearitySpec spec_from_json(const GridSpec& g, const nlohmann::json& j);

/// Pointwise a(x, u(x)); zero where u = 0.
ScalarField eval_a(const NonlinearitySpec& spec, const ScalarField& u);

/// Pointwise d_y a(x, u(x)) = sum r_l q_l |u|^{r_l-1}; zero where u = 0.
ScalarField eval_dy_a(const NonlinearitySpec& spec, const ScalarField& u);

struct RemainderReport {
    double fitted_constant = 0;   ///< smallest C_N covering all samples
    double fitted_exponent = 0;   ///< log-log slope of the remainder vs |y|
    double target_exponent = 0;   ///< r_N
    bool bound_holds = false;
};

/// Check the polyhomogeneous remainder bound
///   |a - sum_{l<N} b_l| + |y| |d_y(a - sum_{l<N} b_l)| <= C_N |y|^{r_N}
/// on samples |y| <= 1 at a reference point of the coefficient fields.
/// N is 1-based; N = terms+1 makes the remainder identically zero.
RemainderReport remainder_bound_check(const NonlinearitySpec& spec, int N,
                                      const std::vector<double>& ys);

}  // namespace fcald
