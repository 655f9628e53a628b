#include "fcald/reconstruction.hpp"

#include <cmath>
#include <map>
#include <random>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "fcald/parallel.hpp"

namespace fcald {

std::vector<std::array<int, 2>> mode_lattice(int m, bool include_dc) {
    std::vector<std::array<int, 2>> out;
    if (include_dc) out.push_back({0, 0});
    for (int p1 = -m; p1 <= m; ++p1)
        for (int p2 = -m; p2 <= m; ++p2) {
            if (p1 == 0 && p2 == 0) continue;
            if (p1 * p1 + p2 * p2 <= m * m) out.push_back({p1, p2});
        }
    return out;
}

namespace {

/// One mode's measured series (per real component pair) plus the discrete
/// product kernel used by the Gram correction.
struct ModeData {
    std::array<int, 2> p{};
    bool dc = false;
    double scale = 1.0;
    // component series indexed [dir][test]: dir, test in {0 = Re, 1 = Im};
    // the DC mode uses only [0][0]
    PairingSeries series[2][2];
    BoundaryFunction dir_trace[2];
    BoundaryFunction test_trace[2];
    ComplexField kernel;
};

std::array<double, 2> mode_xi(const GridSpec& g, std::array<int, 2> p) {
    const double s = M_PI / g.width();
    return {s * p[0], s * p[1]};
}

Complex basis_phi(const GridSpec& g, std::array<int, 2> p, double x, double y) {
    const double ph = -2.0 * M_PI * (p[0] * (x - g.x0) + p[1] * (y - g.y0)) / g.width();
    return {std::cos(ph), std::sin(ph)};
}

/// Measure the four (or one, for DC) component series of one mode with the
/// k = 1 stencil. Inner jobs stay at 1; callers parallelize across modes.
ModeData measure_mode_k1(DnAccess& dn, const PoissonSolver& harmonic,
                         std::array<int, 2> p, const EpsilonLadder& ladder,
                         const ForwardOptions&) {
    const GridSpec& g = harmonic.grid();
    const BoundaryIndex& b = harmonic.boundary();
    ModeData md;
    md.p = p;
    DnApplyFn apply = [&dn](const BoundaryFunction& f) { return dn.apply(f); };
    const BoundaryFunction ones(b.count(), 1.0);

    if (p[0] == 0 && p[1] == 0) {
        md.dc = true;
        md.dir_trace[0] = ones;
        md.test_trace[0] = ones;
        md.series[0][0] = mixed_pairing_series(apply, harmonic, ones, {ones}, ones, ladder, 1);
        md.kernel = ComplexField(g);
        for (auto& z : md.kernel.v) z = 1.0;
        return md;
    }

    const CalderonPair cp = calderon_pair(g, mode_xi(g, p));
    md.scale = cp.scale();
    md.dir_trace[0] = cp.tre1;
    md.dir_trace[1] = cp.tim1;
    md.test_trace[0] = cp.tre2;
    md.test_trace[1] = cp.tim2;
    const BoundaryFunction* tests[2] = {&md.test_trace[0], &md.test_trace[1]};
    for (int d = 0; d < 2; ++d)
        for (int t = 0; t < 2; ++t)
            md.series[d][t] = mixed_pairing_series(apply, harmonic, ones, {md.dir_trace[d]},
                                                   *tests[t], ladder, 1);

    // discrete-extension product kernel, amplitude restored
    const ScalarField e1r = harmonic.extend(cp.tre1), e1i = harmonic.extend(cp.tim1);
    const ScalarField e2r = harmonic.extend(cp.tre2), e2i = harmonic.extend(cp.tim2);
    md.kernel = ComplexField(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            md.kernel(i, j) = Complex(e1r(i, j), e1i(i, j)) * Complex(e2r(i, j), e2i(i, j)) *
                              md.scale;
    return md;
}

/// Extract the complex moment of one measured mode: fit each component with
/// the given target exponent/corrections, recombine Re/Im, divide by c_r and
/// restore the amplitude.
Complex extract_moment(ModeData& md, double cr, double expo,
                       const std::vector<double>& corrections, ModeDiagnostics* diag,
                       const std::vector<std::vector<double>>* pred = nullptr) {
    AlphaLimitOptions alo;
    alo.correction_exponents = corrections;
    alo.throw_on_flag = false;
    ModeDiagnostics dg;
    auto fit_one = [&](int d, int t, int flat_idx) {
        PairingSeries s = md.series[d][t];
        if (pred)
            for (size_t i = 0; i < s.value.size(); ++i) s.value[i] -= (*pred)[flat_idx][i];
        const double A = alpha_limit(s, expo, alo);
        if (std::abs(s.fitted_exponent - expo) > 0.15 && std::abs(A) > 1e-10) dg.flagged = true;
        dg.fitted_exponent = std::max(dg.fitted_exponent, std::abs(s.fitted_exponent));
        dg.fit_residual = std::max(dg.fit_residual, s.fit_residual);
        return A;
    };
    Complex zc;
    if (md.dc) {
        zc = fit_one(0, 0, 0);
    } else {
        const double arr = fit_one(0, 0, 0), ari = fit_one(0, 1, 1);
        const double air = fit_one(1, 0, 2), aii = fit_one(1, 1, 3);
        zc = Complex(arr - aii, ari + air);
    }
    if (diag) *diag = dg;
    return zc / cr * md.scale;
}

ScalarField synthesize(const GridSpec& g, const std::vector<std::array<int, 2>>& modes,
                       const std::vector<Complex>& coeffs) {
    ScalarField q(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            Complex z = 0.0;
            for (size_t mi = 0; mi < modes.size(); ++mi)
                z += coeffs[mi] * basis_phi(g, modes[mi], g.x(i), g.y(j));
            q(i, j) = z.real();
        }
    return q;
}

void hermitian_symmetrize(const std::vector<std::array<int, 2>>& modes,
                          std::vector<Complex>& c) {
    std::map<std::array<int, 2>, int> idx;
    for (size_t i = 0; i < modes.size(); ++i) idx[modes[i]] = static_cast<int>(i);
    std::vector<Complex> out = c;
    for (size_t i = 0; i < modes.size(); ++i) {
        auto it = idx.find({-modes[i][0], -modes[i][1]});
        if (it != idx.end()) out[i] = 0.5 * (c[i] + std::conj(c[it->second]));
    }
    c = std::move(out);
}

/// Solve the Gram system B c = M where B_ij = ∫ phi_j K_i against the
/// discrete product kernels; the system is diagonally dominant (kernels are
/// near-exponentials) and small.
std::vector<Complex> gram_correct(const GridSpec& g,
                                  const std::vector<std::array<int, 2>>& modes,
                                  const std::vector<const ComplexField*>& kernels,
                                  const std::vector<Complex>& moments) {
    const int nb = static_cast<int>(modes.size());
    Eigen::MatrixXcd B(nb, nb);
    for (int jb = 0; jb < nb; ++jb) {
        ComplexField phi(g);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) phi(i, j) = basis_phi(g, modes[jb], g.x(i), g.y(j));
        for (int ib = 0; ib < nb; ++ib) {
            Complex s = 0.0;
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i)
                    s += quad_weight(g, i, j) * phi(i, j) * (*kernels[ib])(i, j);
            B(ib, jb) = s;
        }
    }
    Eigen::VectorXcd M(nb);
    for (int i = 0; i < nb; ++i) M[i] = moments[i];
    Eigen::VectorXcd c = B.partialPivLu().solve(M);
    std::vector<Complex> out(nb);
    for (int i = 0; i < nb; ++i) out[i] = c[i];
    return out;
}

}  // namespace

Complex recover_mode(DnAccess& dn, double r, std::array<int, 2> p, const RecoveryOptions& opts,
                     ModeDiagnostics* diag) {
    const HomogeneityConstants hc = homogeneity_constants(r);
    PoissonSolver harmonic(dn.grid());
    const GridSpec& g = harmonic.grid();
    const BoundaryIndex& b = harmonic.boundary();
    DnApplyFn apply = [&dn](const BoundaryFunction& f) { return dn.apply(f); };
    const BoundaryFunction ones(b.count(), 1.0);

    // directions: the two Calderon components first, constants beyond
    // (v0 = v3 = ... = 1 as in the uniqueness proof)
    std::vector<BoundaryFunction> base_dirs(hc.k, ones);
    ModeDiagnostics dg;
    AlphaLimitOptions alo;
    alo.throw_on_flag = false;
    Complex zc;
    if (p[0] == 0 && p[1] == 0) {
        PairingSeries s =
            mixed_pairing_series(apply, harmonic, ones, base_dirs, ones, opts.ladder, opts.jobs);
        const double A = alpha_limit(s, hc.alpha, alo);
        dg.fitted_exponent = s.fitted_exponent;
        dg.fit_residual = s.fit_residual;
        dg.flagged = std::abs(s.fitted_exponent - hc.alpha) > 0.15 && std::abs(A) > 1e-10;
        zc = A;
        if (diag) *diag = dg;
        return zc / hc.c_r;
    }

    const CalderonPair cp = calderon_pair(g, mode_xi(g, p));
    const BoundaryFunction* d1[2] = {&cp.tre1, &cp.tim1};
    const BoundaryFunction* d2[2] = {&cp.tre2, &cp.tim2};
    double A[2][2];
    for (int a = 0; a < 2; ++a)
        for (int t = 0; t < 2; ++t) {
            std::vector<BoundaryFunction> dirs = base_dirs;
            dirs[0] = *d1[a];
            if (hc.k >= 2) dirs[1] = *d2[t];
            const BoundaryFunction& ftest = (hc.k >= 2) ? ones : *d2[t];
            PairingSeries s =
                mixed_pairing_series(apply, harmonic, ones, dirs, ftest, opts.ladder, opts.jobs);
            A[a][t] = alpha_limit(s, hc.alpha, alo);
            if (std::abs(s.fitted_exponent - hc.alpha) > 0.15 && std::abs(A[a][t]) > 1e-10)
                dg.flagged = true;
            dg.fitted_exponent = std::max(dg.fitted_exponent, std::abs(s.fitted_exponent));
            dg.fit_residual = std::max(dg.fit_residual, s.fit_residual);
        }
    zc = Complex(A[0][0] - A[1][1], A[0][1] + A[1][0]);
    if (diag) *diag = dg;
    return zc / hc.c_r * cp.scale();
}

RecoveryResult recover_full(DnAccess& dn, double r, int m, const RecoveryOptions& opts) {
    const HomogeneityConstants hc = homogeneity_constants(r);
    if (hc.k > 2)
        throw ConfigError("recover_full: k = floor(r) > 2 is not supported by the mode pipeline");
    PoissonSolver harmonic(dn.grid());
    const GridSpec& g = harmonic.grid();
    const auto modes = mode_lattice(m);

    // per-mode measurement; for k = 2 the second direction is the second
    // Calderon component, handled inside recover_mode-style series below
    std::vector<ModeData> data(modes.size());
    std::vector<ModeDiagnostics> diags(modes.size());
    std::vector<Complex> raw(modes.size());

    auto run_mode = [&](int mi) -> int {
        const auto p = modes[mi];
        if (hc.k == 1) {
            data[mi] = measure_mode_k1(dn, harmonic, p, opts.ladder, opts.forward);
            raw[mi] = extract_moment(data[mi], hc.c_r, hc.alpha, {0.0, std::min(hc.alpha, 1.0 - hc.alpha)},
                                     &diags[mi]);
        } else {
            // k = 2: directions (f1, f2) are the Calderon components, test = 1
            const BoundaryIndex& b = harmonic.boundary();
            const BoundaryFunction ones(b.count(), 1.0);
            DnApplyFn apply = [&dn](const BoundaryFunction& f) { return dn.apply(f); };
            ModeData md;
            md.p = p;
            AlphaLimitOptions alo;
            alo.throw_on_flag = false;
            ModeDiagnostics dg;
            Complex zc;
            if (p[0] == 0 && p[1] == 0) {
                md.dc = true;
                PairingSeries s = mixed_pairing_series(apply, harmonic, ones, {ones, ones}, ones,
                                                       opts.ladder, 1);
                const double A = alpha_limit(s, hc.alpha, alo);
                dg.fitted_exponent = s.fitted_exponent;
                dg.flagged = std::abs(s.fitted_exponent - hc.alpha) > 0.15 && std::abs(A) > 1e-10;
                zc = A;
                md.kernel = ComplexField(g);
                for (auto& z : md.kernel.v) z = 1.0;
            } else {
                const CalderonPair cp = calderon_pair(g, mode_xi(g, p));
                md.scale = cp.scale();
                const BoundaryFunction* d1[2] = {&cp.tre1, &cp.tim1};
                const BoundaryFunction* d2[2] = {&cp.tre2, &cp.tim2};
                double A[2][2];
                for (int a = 0; a < 2; ++a)
                    for (int t = 0; t < 2; ++t) {
                        PairingSeries s = mixed_pairing_series(
                            apply, harmonic, ones, {*d1[a], *d2[t]}, ones, opts.ladder, 1);
                        A[a][t] = alpha_limit(s, hc.alpha, alo);
                        if (std::abs(s.fitted_exponent - hc.alpha) > 0.15 &&
                            std::abs(A[a][t]) > 1e-10)
                            dg.flagged = true;
                        dg.fitted_exponent =
                            std::max(dg.fitted_exponent, std::abs(s.fitted_exponent));
                        dg.fit_residual = std::max(dg.fit_residual, s.fit_residual);
                    }
                zc = Complex(A[0][0] - A[1][1], A[0][1] + A[1][0]);
                const ScalarField e1r = harmonic.extend(cp.tre1), e1i = harmonic.extend(cp.tim1);
                const ScalarField e2r = harmonic.extend(cp.tre2), e2i = harmonic.extend(cp.tim2);
                md.kernel = ComplexField(g);
                for (int j = 0; j < g.ny; ++j)
                    for (int i = 0; i < g.nx; ++i)
                        md.kernel(i, j) = Complex(e1r(i, j), e1i(i, j)) *
                                          Complex(e2r(i, j), e2i(i, j)) * md.scale;
            }
            raw[mi] = zc / hc.c_r * md.scale;
            diags[mi] = dg;
            data[mi] = std::move(md);
        }
        return 0;
    };
    parallel_map<int>(opts.jobs, static_cast<int>(modes.size()), run_mode);

    std::vector<const ComplexField*> kernels;
    kernels.reserve(modes.size());
    for (const auto& md : data) kernels.push_back(&md.kernel);
    std::vector<Complex> corrected = gram_correct(g, modes, kernels, raw);
    hermitian_symmetrize(modes, corrected);

    RecoveryResult res;
    res.estimate.modes = modes;
    res.estimate.raw = raw;
    res.estimate.corrected = corrected;
    res.estimate.diag = diags;
    for (const auto& d : diags) res.estimate.flagged_count += d.flagged ? 1 : 0;
    res.low_confidence = res.estimate.flagged_count * 4 > static_cast<int>(modes.size());
    res.q = synthesize(g, modes, corrected);
    return res;
}

ScalarField project_onto_modes(const GridSpec& g, const ScalarField& q,
                               const std::vector<std::array<int, 2>>& modes) {
    std::vector<Complex> c(modes.size());
    for (size_t mi = 0; mi < modes.size(); ++mi) {
        Complex s = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                s += quad_weight(g, i, j) * q(i, j) * std::conj(basis_phi(g, modes[mi], g.x(i), g.y(j)));
        c[mi] = s / (g.width() * g.width());
    }
    return synthesize(g, modes, c);
}

std::vector<ScalarField> bspline_basis_fields(const GridSpec& g, int per_axis) {
    if (per_axis < 4) throw ConfigError("bspline_basis_fields: need >= 4 splines per axis");
    const int deg = 3;
    const int nknots = per_axis + deg + 1;
    std::vector<double> kn(nknots);
    const int inner = nknots - 2 * deg;
    for (int i = 0; i < nknots; ++i) {
        if (i < deg)
            kn[i] = 0.0;
        else if (i >= nknots - deg)
            kn[i] = 1.0;
        else
            kn[i] = double(i - deg) / (inner - 1);
    }
    auto eval_all = [&](double x) {
        std::vector<double> N(nknots - 1, 0.0);
        for (int i = 0; i < nknots - 1; ++i)
            if ((kn[i] <= x && x < kn[i + 1]) || (x == 1.0 && kn[i] < kn[i + 1] && kn[i + 1] == 1.0))
                N[i] = 1.0;
        for (int d = 1; d <= deg; ++d) {
            std::vector<double> N2(nknots - 1 - d, 0.0);
            for (int i = 0; i < nknots - 1 - d; ++i) {
                double left = 0.0, right = 0.0;
                if (kn[i + d] > kn[i]) left = (x - kn[i]) / (kn[i + d] - kn[i]) * N[i];
                if (kn[i + d + 1] > kn[i + 1])
                    right = (kn[i + d + 1] - x) / (kn[i + d + 1] - kn[i + 1]) * N[i + 1];
                N2[i] = left + right;
            }
            N = std::move(N2);
        }
        N.resize(per_axis);
        return N;
    };

    // 1D values per node (normalized coordinate)
    std::vector<std::vector<double>> vals(g.nx);
    for (int i = 0; i < g.nx; ++i) vals[i] = eval_all(double(i) / (g.nx - 1));

    std::vector<ScalarField> fields;
    fields.reserve(static_cast<size_t>(per_axis) * per_axis);
    for (int jy = 0; jy < per_axis; ++jy)
        for (int jx = 0; jx < per_axis; ++jx) {
            ScalarField f(g);
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) f(i, j) = vals[j][jy] * vals[i][jx];
            fields.push_back(std::move(f));
        }
    return fields;
}

PartialResult recover_partial(DnAccess& dn, double r, const SupportMask& mask,
                              const PartialOptions& opts) {
    const HomogeneityConstants hc = homogeneity_constants(r);
    PoissonSolver harmonic(dn.grid());
    const GridSpec& g = harmonic.grid();
    const BoundaryIndex& b = harmonic.boundary();
    if (mask.empty()) throw ConfigError("recover_partial: empty mask");
    DnApplyFn apply = [&dn](const BoundaryFunction& f) { return dn.apply(f); };

    const BoundaryFunction f0 = positive_probe(b, mask, "bump");
    const ScalarField v0 = harmonic.extend(f0);

    // seeded masked probe generators: sin series in the mask arc parameter
    std::mt19937_64 rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double s0 = b.arc[mask.positions.front()];
    const double s1 = b.arc[mask.positions.back()];
    auto random_probe = [&]() {
        std::array<double, 6> a{};
        for (double& x : a) x = gauss(rng);
        BoundaryFunction f(b.count());
        f.mask = mask;
        double fmax = 0.0;
        for (int pos : mask.positions) {
            const double t = (b.arc[pos] - s0) / (s1 - s0);
            double v = 0.0;
            for (int mfreq = 1; mfreq <= 6; ++mfreq)
                v += a[mfreq - 1] * std::sin(mfreq * M_PI * t);
            f.values[pos] = v;
            fmax = std::max(fmax, std::abs(v));
        }
        if (fmax > 0)
            for (double& x : f.values) x /= fmax;
        return f;
    };
    std::vector<BoundaryFunction> gens;
    std::vector<ScalarField> gen_ext;
    for (int i = 0; i < opts.num_generators; ++i) {
        gens.push_back(random_probe());
        gen_ext.push_back(harmonic.extend(gens.back()));
    }
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < opts.num_generators && static_cast<int>(pairs.size()) < opts.num_pairs; ++i)
        for (int j = i; j < opts.num_generators && static_cast<int>(pairs.size()) < opts.num_pairs;
             ++j)
            pairs.emplace_back(i, j);

    // measured limits per pair
    AlphaLimitOptions alo;
    alo.throw_on_flag = false;
    auto measure = [&](int pi) -> double {
        const auto [ia, ib] = pairs[pi];
        std::vector<BoundaryFunction> dirs{gens[ia]};
        for (int l = 1; l < hc.k; ++l) dirs.push_back(hc.k >= 2 && l == 1 ? gens[ib] : f0);
        const BoundaryFunction& ftest = (hc.k >= 2) ? f0 : gens[ib];
        PairingSeries s = mixed_pairing_series(apply, harmonic, f0, dirs, ftest, opts.ladder, 1);
        return alpha_limit(s, hc.alpha, alo);
    };
    const auto bvec =
        parallel_map<double>(opts.jobs, static_cast<int>(pairs.size()), measure);

    // weight W = c_r |v0|^{r-1} v0^{1-k} (times extra positive probes for k > 2,
    // which this pipeline fixes to the bump f0 itself)
    ScalarField W(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const double y = v0(i, j);
            double w = (y == 0.0) ? 0.0 : std::pow(std::abs(y), r - hc.k);
            if (y < 0 && hc.k % 2 == 0) w = -w;
            W(i, j) = hc.c_r * w;
        }
    for (int extra = 0; extra < hc.k - 1; ++extra) {
        // directions f3..fk and the k>=2 test function are all the bump f0,
        // so their extensions fold into the known weight
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) W(i, j) *= v0(i, j);
    }

    const auto basis = bspline_basis_fields(g, opts.basis_per_axis);
    const int D = static_cast<int>(basis.size());
    Eigen::MatrixXd A(pairs.size(), D);
    for (size_t pi = 0; pi < pairs.size(); ++pi) {
        const auto [ia, ib] = pairs[pi];
        ScalarField K(g);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                K(i, j) = W(i, j) * gen_ext[ia](i, j) * gen_ext[ib](i, j);
        for (int d = 0; d < D; ++d) {
            double s = 0.0;
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i) s += quad_weight(g, i, j) * basis[d](i, j) * K(i, j);
            A(pi, d) = s;
        }
    }

    Eigen::VectorXd bv(pairs.size());
    for (size_t pi = 0; pi < pairs.size(); ++pi) bv[pi] = bvec[pi];

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    PartialResult res;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        res.singular_values.push_back(svd.singularValues()[i]);
    const double smax = res.singular_values.empty() ? 0.0 : res.singular_values.front();
    res.lambda = opts.lambda_rel * smax * smax;
    int effective_rank = 0;
    for (double s : res.singular_values)
        if (s * s > res.lambda) ++effective_rank;
    if (effective_rank == 0)
        throw IllPosedError("recover_partial: no singular value above the regularization level");

    Eigen::MatrixXd N = A.transpose() * A + res.lambda * Eigen::MatrixXd::Identity(D, D);
    Eigen::VectorXd c = N.ldlt().solve(A.transpose() * bv);
    res.coeffs.assign(c.data(), c.data() + D);

    res.q = ScalarField(g);
    for (int d = 0; d < D; ++d)
        for (size_t t = 0; t < res.q.v.size(); ++t) res.q.v[t] += c[d] * basis[d].v[t];
    return res;
}

StageLedger staged_recovery(DnAccess& dn, const std::vector<double>& exponents,
                            const StagedOptions& opts) {
    if (exponents.empty()) throw ConfigError("staged_recovery: need at least one exponent");
    for (size_t l = 1; l < exponents.size(); ++l)
        if (exponents[l] <= exponents[l - 1])
            throw ConfigError("staged_recovery: exponents must be strictly increasing");
    PoissonSolver harmonic(dn.grid());
    const GridSpec& g = harmonic.grid();
    const BoundaryIndex& b = harmonic.boundary();
    const auto modes = mode_lattice(opts.modes_max);
    const int nm = static_cast<int>(modes.size());
    const int rungs = static_cast<int>(opts.ladder.eps0.size());
    const BoundaryFunction ones(b.count(), 1.0);

    // one measurement pass: k = 1 series per mode/component
    std::vector<ModeData> data(nm);
    auto run_mode = [&](int mi) -> int {
        data[mi] = measure_mode_k1(dn, harmonic, modes[mi], opts.ladder, opts.forward);
        return 0;
    };
    parallel_map<int>(opts.jobs, nm, run_mode);

    // Λ0 pairings per mode/component for the prediction side
    std::vector<BoundaryFunction> lam0_trace[2];
    lam0_trace[0].resize(nm);
    lam0_trace[1].resize(nm);
    for (int mi = 0; mi < nm; ++mi) {
        const ModeData& md = data[mi];
        const int ndir = md.dc ? 1 : 2;
        for (int d = 0; d < ndir; ++d)
            lam0_trace[d][mi] = neumann_trace(b, harmonic.extend(md.dir_trace[d]));
    }

    StageLedger ledger;
    NonlinearitySpec recovered;
    const size_t L = exponents.size();
    for (size_t l = 0; l < L; ++l) {
        const double rl = exponents[l];
        const double expo = rl - 1.0;

        // prediction series from the recovered spec so far
        // pred[mi][flat component][rung]
        std::vector<std::array<std::vector<double>, 4>> pred(nm);
        for (int mi = 0; mi < nm; ++mi)
            for (auto& v : pred[mi]) v.assign(rungs, 0.0);
        if (!recovered.empty()) {
            for (int ri = 0; ri < rungs; ++ri) {
                const double e0 = opts.ladder.eps0[ri];
                ForwardSolution base =
                    solve_semilinear(recovered, g, e0 * ones, opts.forward, &harmonic);
                LinearizedOperator lin(recovered, g, base.u);
                auto pred_mode = [&](int mi) -> int {
                    const ModeData& md = data[mi];
                    const int ndir = md.dc ? 1 : 2;
                    for (int d = 0; d < ndir; ++d) {
                        const BoundaryFunction tr =
                            neumann_trace(b, lin.solve(md.dir_trace[d])) - lam0_trace[d][mi];
                        if (md.dc) {
                            pred[mi][0][ri] = boundary_pairing(b, tr, ones);
                        } else {
                            // tests: Re2 / Im2 reconstructed from the stored traces
                            pred[mi][d * 2 + 0][ri] =
                                boundary_pairing(b, tr, md.test_trace[0]);
                            pred[mi][d * 2 + 1][ri] =
                                boundary_pairing(b, tr, md.test_trace[1]);
                        }
                    }
                    return 0;
                };
                parallel_map<int>(opts.jobs, nm, pred_mode);
            }
        }

        // correction exponents for this stage
        std::vector<double> corr{0.0};
        for (size_t m2 = 0; m2 < L; ++m2)
            if (m2 != l) corr.push_back(exponents[m2] - rl);
        corr.push_back(2.0 * exponents[0] - 1.0 - rl);  // own second-order chain
        std::sort(corr.begin(), corr.end());
        corr.erase(std::unique(corr.begin(), corr.end()), corr.end());

        StageResult stage;
        stage.r = rl;
        std::vector<Complex> moments(nm);
        double resid2 = 0.0;
        int flagged = 0;
        for (int mi = 0; mi < nm; ++mi) {
            ModeDiagnostics dg;
            std::vector<std::vector<double>> pv(4);
            for (int c = 0; c < 4; ++c) pv[c] = pred[mi][c];
            moments[mi] = extract_moment(data[mi], -rl, expo, corr, &dg, &pv);
            resid2 += dg.fit_residual * dg.fit_residual;
            flagged += dg.flagged ? 1 : 0;
        }
        stage.residual_norm = std::sqrt(resid2 / nm);
        stage.flagged = flagged * 4 > nm;

        std::vector<const ComplexField*> kernels;
        for (const auto& md : data) kernels.push_back(&md.kernel);
        std::vector<Complex> corrected = gram_correct(g, modes, kernels, moments);
        hermitian_symmetrize(modes, corrected);
        stage.q = synthesize(g, modes, corrected);

        PowerTerm term;
        term.q = stage.q;
        term.r = rl;
        recovered.terms.push_back(std::move(term));
        ledger.stages.push_back(std::move(stage));
    }
    return ledger;
}

}  // namespace fcald
