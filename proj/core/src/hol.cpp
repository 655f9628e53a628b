#include "fcald/hol.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "fcald/parallel.hpp"

namespace fcald {

EpsilonLadder EpsilonLadder::geometric(double start, double ratio, int count, double theta) {
    if (start <= 0 || ratio <= 0 || ratio >= 1 || count < 1)
        throw ConfigError("EpsilonLadder: need start > 0, ratio in (0,1), count >= 1");
    EpsilonLadder lad;
    lad.theta = theta;
    double e = start;
    for (int i = 0; i < count; ++i, e *= ratio) lad.eps0.push_back(e);
    return lad;
}

void EpsilonLadder::validate() const {
    if (eps0.empty() || theta <= 0) throw ConfigError("EpsilonLadder: empty or bad theta");
    for (size_t i = 0; i < eps0.size(); ++i) {
        if (eps0[i] <= 0) throw ConfigError("EpsilonLadder: eps0 must be positive");
        if (i && eps0[i] >= eps0[i - 1]) throw ConfigError("EpsilonLadder: eps0 must descend");
    }
}

namespace {

/// One stencil evaluation: pairing of Λ(eps0 f0 + Σ sigma_l delta_l f_l)
/// against ftest, for every sign pattern; fixed summation order.
std::vector<double> stencil_pairings(const DnApplyFn& dn, const BoundaryIndex& bindex,
                                     const BoundaryFunction& f0,
                                     const std::vector<BoundaryFunction>& dirs,
                                     const BoundaryFunction& ftest, double eps0,
                                     const std::vector<double>& deltas, int jobs) {
    const int k = static_cast<int>(dirs.size());
    const int patterns = 1 << k;
    auto job = [&](int m) -> double {
        BoundaryFunction f = eps0 * f0;
        for (int l = 0; l < k; ++l) {
            const double sg = ((m >> l) & 1) ? -1.0 : 1.0;
            f = f + (sg * deltas[l]) * dirs[l];
        }
        return boundary_pairing(bindex, dn(f), ftest);
    };
    return parallel_map<double>(jobs, patterns, job);
}

double combine_stencil(const std::vector<double>& pairings, const std::vector<double>& deltas) {
    const int k = static_cast<int>(deltas.size());
    double acc = 0.0;
    for (int m = 0; m < (1 << k); ++m) {
        int minus = 0;
        for (int l = 0; l < k; ++l) minus += (m >> l) & 1;
        acc += (minus % 2 ? -1.0 : 1.0) * pairings[m];
    }
    double denom = 1.0;
    for (double d : deltas) denom *= 2.0 * d;
    return acc / denom;
}

void fit_series(PairingSeries& s, double alpha, const std::vector<double>& corr) {
    const int n = static_cast<int>(s.eps0.size());
    // log-log exponent
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (int i = 0; i < n; ++i) {
        if (std::abs(s.value[i]) <= 0) continue;
        const double lx = std::log(s.eps0[i]), ly = std::log(std::abs(s.value[i]));
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++m;
    }
    s.fitted_exponent = (m >= 2) ? (m * sxy - sx * sy) / (m * sxx - sx * sx) : alpha;

    // LS fit of P / eps^alpha against {eps^e : e in corr}
    const int nc = static_cast<int>(corr.size());
    Eigen::MatrixXd E(n, nc);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
        for (int c = 0; c < nc; ++c) E(i, c) = std::pow(s.eps0[i], corr[c]);
        y[i] = s.value[i] / std::pow(s.eps0[i], alpha);
    }
    Eigen::VectorXd coef = E.colPivHouseholderQr().solve(y);
    int zero_pos = 0;
    for (int c = 0; c < nc; ++c)
        if (corr[c] == 0.0) zero_pos = c;
    s.fitted_amplitude = coef[zero_pos];
    s.fit_residual = (E * coef - y).norm() / std::sqrt(double(n));
}

}  // namespace

MixedPairingValue mixed_pairing(const DnApplyFn& dn, const PoissonSolver& harmonic,
                                const BoundaryFunction& f0,
                                const std::vector<BoundaryFunction>& dirs,
                                const BoundaryFunction& ftest, double eps0,
                                const std::vector<double>& deltas, int jobs) {
    if (dirs.empty() || dirs.size() != deltas.size())
        throw ConfigError("mixed_pairing: need k >= 1 directions with matching steps");
    const BoundaryIndex& b = harmonic.boundary();
    const auto pairings = stencil_pairings(dn, b, f0, dirs, ftest, eps0, deltas, jobs);
    MixedPairingValue v;
    v.raw = combine_stencil(pairings, deltas);
    v.subtracted = v.raw;
    if (dirs.size() == 1) {
        const BoundaryFunction lam0 = neumann_trace(b, harmonic.extend(dirs[0]));
        v.subtracted = v.raw - boundary_pairing(b, lam0, ftest);
    }
    return v;
}

PairingSeries mixed_pairing_series(const DnApplyFn& dn, const PoissonSolver& harmonic,
                                   const BoundaryFunction& f0,
                                   const std::vector<BoundaryFunction>& dirs,
                                   const BoundaryFunction& ftest, const EpsilonLadder& ladder,
                                   int jobs) {
    ladder.validate();
    const int k = static_cast<int>(dirs.size());
    const int patterns = 1 << k;
    const int rungs = static_cast<int>(ladder.eps0.size());
    const BoundaryIndex& b = harmonic.boundary();

    double lam0_pairing = 0.0;
    if (k == 1) {
        const BoundaryFunction lam0 = neumann_trace(b, harmonic.extend(dirs[0]));
        lam0_pairing = boundary_pairing(b, lam0, ftest);
    }

    // flatten (rung, pattern) into one deterministic task list
    auto job = [&](int t) -> double {
        const int ri = t / patterns, m = t % patterns;
        const double eps0 = ladder.eps0[ri];
        BoundaryFunction f = eps0 * f0;
        for (int l = 0; l < k; ++l) {
            const double sg = ((m >> l) & 1) ? -1.0 : 1.0;
            f = f + (sg * ladder.theta * eps0) * dirs[l];
        }
        return boundary_pairing(b, dn(f), ftest);
    };
    const auto flat = parallel_map<double>(jobs, rungs * patterns, job);

    PairingSeries s;
    s.eps0 = ladder.eps0;
    for (int ri = 0; ri < rungs; ++ri) {
        std::vector<double> pats(flat.begin() + ri * patterns, flat.begin() + (ri + 1) * patterns);
        std::vector<double> deltas(k, ladder.theta * ladder.eps0[ri]);
        double p = combine_stencil(pats, deltas);
        if (k == 1) p -= lam0_pairing;
        s.value.push_back(p);
    }
    return s;
}

double alpha_limit(PairingSeries& series, double alpha, const AlphaLimitOptions& opts) {
    if (series.eps0.size() < 4)
        throw ConfigError("alpha_limit: ladder needs at least 4 points");
    double vmax = 0.0;
    for (double v : series.value) vmax = std::max(vmax, std::abs(v));
    if (vmax <= 1e-12) {  // dead series: zero signal, no exponent to fit
        series.fitted_amplitude = 0.0;
        series.fitted_exponent = alpha;
        series.fit_residual = 0.0;
        return 0.0;
    }
    std::vector<double> corr = opts.correction_exponents;
    for (double& e : corr)
        if (e == -1.0) e = std::min(alpha, 1.0 - alpha);
    fit_series(series, alpha, corr);
    if (std::abs(series.fitted_exponent - alpha) > opts.exponent_flag_threshold) {
        if (opts.throw_on_flag)
            throw ExtractionError("alpha_limit: fitted exponent " +
                                  std::to_string(series.fitted_exponent) +
                                  " is inconsistent with alpha = " + std::to_string(alpha));
        // flagged-fit fallback: smallest-eps0 value
        return series.value.back() / std::pow(series.eps0.back(), alpha);
    }
    return series.fitted_amplitude;
}

double rhs_quadrature(const GridSpec& g, const ScalarField& q, double r,
                      const BoundaryFunction& f0, const std::vector<BoundaryFunction>& dirs,
                      const BoundaryFunction& ftest, const PoissonSolver& harmonic) {
    const HomogeneityConstants hc = homogeneity_constants(r);
    const int k = static_cast<int>(dirs.size());
    const ScalarField v0 = harmonic.extend(f0);
    std::vector<ScalarField> vs;
    for (const auto& f : dirs) vs.push_back(harmonic.extend(f));
    vs.push_back(harmonic.extend(ftest));

    ScalarField integrand(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double y = v0(i, j);
            double w;
            if (y == 0.0) {
                if (k > 1 && !g.is_boundary(i, j))
                    throw ConfigError("rhs_quadrature: v0 vanishes at an interior node with "
                                      "k > 1; choose f0 > 0");
                w = 0.0;  // |v0|^{r-k} -> 0 since r > k
            } else {
                w = std::pow(std::abs(y), r - k);
                if (y < 0 && k % 2 == 0) w = -w;  // sgn(v0)^{k-1}
            }
            double prod = q(i, j) * w;
            for (const auto& v : vs) prod *= v(i, j);
            integrand(i, j) = prod;
        }
    return hc.c_r * integrate(g, integrand);
}

IdentityReport verify_identity(const NonlinearitySpec& spec, const GridSpec& g,
                               const BoundaryFunction& f0,
                               const std::vector<BoundaryFunction>& dirs,
                               const BoundaryFunction& ftest, const IdentityOptions& opts) {
    if (spec.terms.size() > 1)
        throw ConfigError("verify_identity: the identity is stated for a single power term");
    PoissonSolver harmonic(g);
    IdentityReport rep;

    const double r = spec.empty() ? dirs.size() + 0.5 : spec.terms[0].r;
    const HomogeneityConstants hc = homogeneity_constants(r);
    if (static_cast<int>(dirs.size()) != hc.k)
        throw ConfigError("verify_identity: need k = floor(r) directions");
    rep.alpha = hc.alpha;

    DnApplyFn dn = [&](const BoundaryFunction& f) {
        return dn_apply(spec, g, f, opts.forward, &harmonic);
    };
    rep.series = mixed_pairing_series(dn, harmonic, f0, dirs, ftest, opts.ladder, opts.jobs);
    PairingSeries fitted = rep.series;
    rep.lhs = alpha_limit(fitted, hc.alpha);
    rep.series = fitted;
    rep.fitted_exponent = fitted.fitted_exponent;

    rep.rhs = spec.empty()
                  ? 0.0
                  : rhs_quadrature(g, spec.terms[0].q, r, f0, dirs, ftest, harmonic);
    const double denom = std::abs(rep.rhs);
    rep.rel_error = (denom > 0) ? std::abs(rep.lhs - rep.rhs) / denom
                                : std::abs(rep.lhs - rep.rhs);
    rep.pass = (denom > 0) ? rep.rel_error <= opts.pass_rel_error
                           : std::abs(rep.lhs - rep.rhs) <= 1e-8;
    return rep;
}

namespace {

/// 6th-order central first derivative, nested per epsilon variable.
double nested_fd(const std::function<double(const std::vector<double>&)>& fn, int k, double step) {
    static const double off[6] = {-3, -2, -1, 1, 2, 3};
    static const double cf[6] = {-1.0 / 60, 3.0 / 20, -3.0 / 4, 3.0 / 4, -3.0 / 20, 1.0 / 60};
    std::vector<int> idx(k, 0);
    double sum = 0.0;
    for (;;) {
        double w = 1.0;
        std::vector<double> eps(k);
        for (int l = 0; l < k; ++l) {
            w *= cf[idx[l]] / step;
            eps[l] = off[idx[l]] * step;
        }
        sum += w * fn(eps);
        int l = 0;
        while (l < k && ++idx[l] == 6) idx[l++] = 0;
        if (l == k) break;
    }
    return sum;
}

}  // namespace

FaaReport faa_di_bruno_check(double r, int k, double u0, const std::vector<double>& v,
                             const std::vector<double>& g2, double g3) {
    if (k < 1 || k > 3) throw ConfigError("faa_di_bruno_check: k in {1,2,3}");
    if (static_cast<int>(v.size()) != k) throw ConfigError("faa_di_bruno_check: need k directions");
    if (u0 == 0.0) throw ConfigError("faa_di_bruno_check: u0 must be away from 0");
    const int npairs = k * (k - 1) / 2;
    std::vector<double> gg = g2;
    gg.resize(npairs, 0.0);

    auto arg = [&](const std::vector<double>& eps) {
        double u = u0;
        for (int l = 0; l < k; ++l) u += eps[l] * v[l];
        int p = 0;
        for (int l = 0; l < k; ++l)
            for (int m = l + 1; m < k; ++m) u += eps[l] * eps[m] * gg[p++];
        if (k == 3) u += eps[0] * eps[1] * eps[2] * g3;
        return u;
    };
    auto phi = [&](const std::vector<double>& eps) {
        const double y = arg(eps);
        return std::pow(std::abs(y), r - 1.0) * y;
    };

    FaaReport rep;
    const double step = 0.02 * std::max(1.0, std::abs(u0));
    rep.fd_value = nested_fd(phi, k, step);

    auto d = [&](int j) { return dky_power(r, j, u0); };
    double lead = d(k);
    for (int l = 0; l < k; ++l) lead *= v[l];
    rep.leading_term = lead;

    double sum = lead;
    if (k == 2) sum += d(1) * gg[0];
    if (k == 3) {
        sum += d(2) * (gg[0] * v[2] + gg[1] * v[1] + gg[2] * v[0]);
        sum += d(1) * g3;
    }
    rep.partition_sum = sum;
    rep.abs_error = std::abs(rep.fd_value - rep.partition_sum);
    return rep;
}

}  // namespace fcald
