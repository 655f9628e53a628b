#include "fcald/nonlinearity.hpp"

#include <cmath>

#include "fcald/profiles.hpp"

namespace fcald {

HomogeneityConstants homogeneity_constants(double r) {
    if (r <= 1.0) throw ConfigError("homogeneity_constants: need r > 1");
    HomogeneityConstants h;
    h.r = r;
    h.k = static_cast<int>(std::floor(r));
    h.alpha = r - h.k;
    h.c_r = -r;
    for (int j = 1; j < h.k; ++j) h.c_r *= (r - j);
    return h;
}

double dky_power(double r, int k, double y) {
    if (k < 1 || k > static_cast<int>(std::floor(r)))
        throw ConfigError("dky_power: need 1 <= k <= floor(r)");
    if (y == 0.0) {
        if (k == static_cast<int>(std::floor(r)))
            throw ConfigError("dky_power: y = 0 is Hoelder-only at k = floor(r)");
        return 0.0;
    }
    double coef = 1.0;  // r(r-1)...(r-(k-1)) = -c_r
    for (int j = 0; j < k; ++j) coef *= (r - j);
    const double mag = std::pow(std::abs(y), r - k);
    const double sgn = (y < 0 && k % 2 == 0) ? -1.0 : 1.0;  // sgn(y)^{1-k}
    return coef * mag * sgn;
}

namespace {

double term_value(const PowerTerm& t, int i, int j, double y) {
    if (y == 0.0) return 0.0;
    const double qv = (y > 0 || t.symmetric()) ? t.q(i, j) : (*t.q_neg)(i, j);
    return qv * std::pow(std::abs(y), t.r - 1.0) * y;
}

double term_dy(const PowerTerm& t, int i, int j, double y) {
    if (y == 0.0) return 0.0;
    const double qv = (y > 0 || t.symmetric()) ? t.q(i, j) : (*t.q_neg)(i, j);
    return qv * t.r * std::pow(std::abs(y), t.r - 1.0);
}

}  // namespace

double NonlinearitySpec::leading_exponent() const {
    if (terms.empty()) throw ConfigError("leading_exponent of empty spec");
    return terms.front().r;
}

double NonlinearitySpec::max_coeff_norm() const {
    double m = 0.0;
    for (const auto& t : terms) {
        m = std::max(m, max_abs(t.q));
        if (t.q_neg) m = std::max(m, max_abs(*t.q_neg));
    }
    return m;
}

void NonlinearitySpec::validate(const GridSpec& g) const {
    double prev = 1.0;
    for (const auto& t : terms) {
        if (t.r <= prev)
            throw ConfigError("nonlinearity exponents must be strictly increasing and > 1");
        prev = t.r;
        if (t.q.nx != g.nx || t.q.ny != g.ny)
            throw ConfigError("coefficient field does not match grid");
        if (!all_finite(t.q) || (t.q_neg && !all_finite(*t.q_neg)))
            throw ConfigError("coefficient field not finite");
    }
}

nlohmann::json NonlinearitySpec::to_json() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& t : terms) {
        nlohmann::json jt{{"r", t.r}, {"q_max", max_abs(t.q)}, {"two_sided", !t.symmetric()}};
        out.push_back(jt);
    }
    return {{"terms", out}};
}

NonlinearitySpec spec_from_json(const GridSpec& g, const nlohmann::json& j) {
    NonlinearitySpec spec;
    if (!j.contains("terms") || !j.at("terms").is_array())
        throw ConfigError("nonlinearity config needs a \"terms\" array");
    for (const auto& jt : j.at("terms")) {
        PowerTerm t;
        t.r = jt.at("r").get<double>();
        t.q = synth_profile(g, jt.at("q").get<std::string>());
        if (jt.contains("q_neg")) t.q_neg = synth_profile(g, jt.at("q_neg").get<std::string>());
        spec.terms.push_back(std::move(t));
    }
    spec.validate(g);
    return spec;
}

ScalarField eval_a(const NonlinearitySpec& spec, const ScalarField& u) {
    ScalarField out{};
    out.nx = u.nx;
    out.ny = u.ny;
    out.v.assign(u.size(), 0.0);
    for (const auto& t : spec.terms)
        for (int j = 0; j < u.ny; ++j)
            for (int i = 0; i < u.nx; ++i) out(i, j) += term_value(t, i, j, u(i, j));
    return out;
}

ScalarField eval_dy_a(const NonlinearitySpec& spec, const ScalarField& u) {
    ScalarField out{};
    out.nx = u.nx;
    out.ny = u.ny;
    out.v.assign(u.size(), 0.0);
    for (const auto& t : spec.terms)
        for (int j = 0; j < u.ny; ++j)
            for (int i = 0; i < u.nx; ++i) out(i, j) += term_dy(t, i, j, u(i, j));
    return out;
}

RemainderReport remainder_bound_check(const NonlinearitySpec& spec, int N,
                                      const std::vector<double>& ys) {
    if (N < 1) throw ConfigError("remainder_bound_check: N >= 1");
    const int nt = static_cast<int>(spec.terms.size());
    const double rN = (N <= nt) ? spec.terms[N - 1].r
                                : spec.terms.empty() ? 2.0 : spec.terms.back().r + 1.0;
    RemainderReport rep;
    rep.target_exponent = rN;

    std::vector<double> vals;
    std::vector<double> absy;
    double cmax = 0.0;
    const int nx = spec.terms.empty() ? 1 : spec.terms[0].q.nx;
    const int ny = spec.terms.empty() ? 1 : spec.terms[0].q.ny;
    for (double y : ys) {
        if (std::abs(y) > 1.0 || y == 0.0) continue;
        double worst = 0.0;
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                double beta = 0.0, dbeta = 0.0;
                for (int l = N - 1; l < nt; ++l) {  // a - sum_{l<N} b_l = sum_{l>=N} b_l
                    beta += term_value(spec.terms[l], i, j, y);
                    dbeta += term_dy(spec.terms[l], i, j, y);
                }
                worst = std::max(worst, std::abs(beta) + std::abs(y) * std::abs(dbeta));
            }
        vals.push_back(worst);
        absy.push_back(std::abs(y));
        if (worst > 0) cmax = std::max(cmax, worst / std::pow(std::abs(y), rN));
    }
    rep.fitted_constant = cmax;
    // log-log slope over samples with nonzero remainder
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (size_t t = 0; t < vals.size(); ++t) {
        if (vals[t] <= 0) continue;
        const double lx = std::log(absy[t]), ly = std::log(vals[t]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++m;
    }
    rep.fitted_exponent = (m >= 2) ? (m * sxy - sx * sy) / (m * sxx - sx * sx) : rN;
    rep.bound_holds = std::isfinite(cmax);
    return rep;
}

}  // namespace fcald
