#include "fcald/forward.hpp"

#include <cmath>
#include <optional>

namespace fcald {

namespace {

/// Interior max-norm of Δ_h u + a(x,u).
double residual_norm(const NonlinearitySpec& spec, const GridSpec& g, const ScalarField& u,
                     ScalarField* out = nullptr) {
    const double ih2 = 1.0 / (g.h * g.h);
    const ScalarField a = eval_a(spec, u);
    double rmax = 0.0;
    ScalarField res(g);
    for (int j = 1; j < g.ny - 1; ++j)
        for (int i = 1; i < g.nx - 1; ++i) {
            const double lap =
                (u(i + 1, j) + u(i - 1, j) + u(i, j + 1) + u(i, j - 1) - 4.0 * u(i, j)) * ih2;
            const double r = lap + a(i, j);
            res(i, j) = r;
            rmax = std::max(rmax, std::abs(r));
        }
    if (out) *out = std::move(res);
    return rmax;
}

}  // namespace

ForwardSolution solve_semilinear(const NonlinearitySpec& spec, const GridSpec& g,
                                 const BoundaryFunction& f, const ForwardOptions& opts,
                                 const PoissonSolver* harmonic) {
    if (opts.newton_tol <= 0 || opts.max_newton < 1)
        throw ConfigError("solve_semilinear: bad options");
    spec.validate(g);
    const double fnorm = max_abs(f);
    const double gate = opts.effective_gate(spec);
    if (fnorm > gate)
        throw ConfigError("solve_semilinear: ||f||_inf = " + std::to_string(fnorm) +
                          " exceeds the smallness gate " + std::to_string(gate) +
                          "; the small-solution branch is only certified under the gate");

    std::optional<PoissonSolver> local_harmonic;
    if (!harmonic) local_harmonic.emplace(g);
    const PoissonSolver& H = harmonic ? *harmonic : *local_harmonic;

    ForwardSolution sol;
    sol.u = H.extend(f);
    ScalarField res;
    double rn = residual_norm(spec, g, sol.u, &res);
    sol.report.method = "harmonic";
    sol.report.iterations = spec.empty() ? 1 : 0;

    if (spec.empty() || rn <= opts.newton_tol) {
        sol.report.residual = rn;
        sol.smallness_ratio = fnorm > 0 ? max_abs(sol.u) / fnorm : 1.0;
        return sol;
    }

    sol.report.method = "newton";
    const BoundaryFunction zero_bdry(f.count());
    int failed_steps = 0;
    bool picard = false;
    int it = 0;
    for (; it < opts.max_newton && rn > opts.newton_tol; ++it) {
        if (!picard) {
            // (Δ_h + d_y a(u)) δ = -res  with δ|∂ = 0, assembled as (-Δ_h - c) δ = res
            const ScalarField c = eval_dy_a(spec, sol.u);
            SparseOperator J = assemble_laplacian(g, &c);
            DirichletSolver solver(std::move(J), opts.linear_method, opts.newton_tol);
            const ScalarField delta = solver.solve(res, zero_bdry);

            double s = opts.damping;
            ScalarField best = sol.u;
            double best_rn = rn;
            bool accepted = false;
            for (int half = 0; half < 12; ++half) {
                ScalarField trial = sol.u;
                for (size_t m = 0; m < trial.v.size(); ++m) trial.v[m] += s * delta.v[m];
                ScalarField tres;
                const double trn = residual_norm(spec, g, trial, &tres);
                if (trn < rn || trn <= opts.newton_tol) {
                    best = std::move(trial);
                    best_rn = trn;
                    res = std::move(tres);
                    accepted = true;
                    break;
                }
                s *= 0.5;
            }
            if (!accepted) {
                ++failed_steps;
                if (opts.picard_fallback && failed_steps > opts.max_newton / 2) {
                    picard = true;
                    sol.report.method = "newton+picard";
                    continue;
                }
            } else {
                sol.u = std::move(best);
                rn = best_rn;
            }
        } else {
            // Picard: Δ_h u_{m+1} = -a(x, u_m), u|∂ = f  =>  (-Δ_h) u = a(u_m)
            sol.u = H.poisson(eval_a(spec, sol.u), f);
            rn = residual_norm(spec, g, sol.u, &res);
        }
    }
    sol.report.iterations = it;
    sol.report.residual = rn;
    if (rn > opts.newton_tol)
        throw SolverError("solve_semilinear: no convergence after " + std::to_string(it) +
                          " iterations (method " + sol.report.method +
                          ", residual " + std::to_string(rn) + ")");
    sol.smallness_ratio = fnorm > 0 ? max_abs(sol.u) / fnorm : 1.0;
    return sol;
}

ScalarField linearized_solve(const NonlinearitySpec& spec, const GridSpec& g,
                             const ScalarField& u_base, const BoundaryFunction& f) {
    return LinearizedOperator(spec, g, u_base).solve(f);
}

namespace {
SparseOperator linearized_matrix(const NonlinearitySpec& spec, const GridSpec& g,
                                 const ScalarField& u_base) {
    const ScalarField c = eval_dy_a(spec, u_base);
    return assemble_laplacian(g, &c);
}
}  // namespace

LinearizedOperator::LinearizedOperator(const NonlinearitySpec& spec, const GridSpec& g,
                                       const ScalarField& u_base)
    : solver_(linearized_matrix(spec, g, u_base)), zero_rhs_(g) {}

ScalarField LinearizedOperator::solve(const BoundaryFunction& f) const {
    return solver_.solve(zero_rhs_, f);
}

ExpansionReport expansion_check(const NonlinearitySpec& spec, const GridSpec& g,
                                const BoundaryFunction& f, const std::vector<double>& eps_ladder,
                                const ForwardOptions& opts) {
    if (spec.terms.size() > 1 || (!spec.empty() && (spec.terms[0].r <= 1 || spec.terms[0].r >= 2)))
        throw ConfigError("expansion_check: single-term spec with 1 < r < 2 required");
    PoissonSolver H(g);
    const ScalarField v = H.extend(f);
    ExpansionReport rep;
    rep.eps = eps_ladder;
    if (spec.empty()) {
        // no nonlinearity: remainder identically zero
        rep.remainder.assign(eps_ladder.size(), 0.0);
        rep.fitted_slope = 0.0;
        rep.pass = true;
        return rep;
    }
    const double r = spec.terms[0].r;
    const double alpha = r - 1.0;
    // w solves Δ_h w = -q|v|^alpha v, w|∂ = 0
    const ScalarField w = H.poisson(eval_a(spec, v), BoundaryFunction(f.count()));

    std::vector<ScalarField> west;
    for (double eps : eps_ladder) {
        ForwardSolution s = solve_semilinear(spec, g, eps * f, opts, &H);
        ScalarField diff = s.u;
        double m = 0.0;
        const double er = std::pow(eps, r);
        for (size_t t = 0; t < diff.v.size(); ++t) {
            diff.v[t] -= eps * v.v[t] + er * w.v[t];
            m = std::max(m, std::abs(diff.v[t]));
        }
        rep.remainder.push_back(m);
        // ladder estimate of w for the two-way check
        ScalarField we = s.u;
        for (size_t t = 0; t < we.v.size(); ++t) we.v[t] = (we.v[t] - eps * v.v[t]) / er;
        west.push_back(std::move(we));
    }

    // slope fit on log-log
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (size_t t = 0; t < eps_ladder.size(); ++t) {
        if (rep.remainder[t] <= 0) continue;
        const double lx = std::log(eps_ladder[t]), ly = std::log(rep.remainder[t]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++m;
    }
    rep.fitted_slope = (m >= 2) ? (m * sxy - sx * sy) / (m * sxx - sx * sx) : 0.0;
    rep.pass = rep.fitted_slope >= 1.0 + 2.0 * alpha - 0.1;

    // per-node LS fit  w_est(eps) = w + c eps^alpha ; compare constant with w
    const size_t L = eps_ladder.size();
    double a11 = L, a12 = 0, a22 = 0;
    for (double e : eps_ladder) {
        const double b = std::pow(e, alpha);
        a12 += b;
        a22 += b * b;
    }
    const double det = a11 * a22 - a12 * a12;
    ScalarField wex(g);
    for (size_t t = 0; t < wex.v.size(); ++t) {
        double r1 = 0, r2 = 0;
        for (size_t l = 0; l < L; ++l) {
            const double b = std::pow(eps_ladder[l], alpha);
            r1 += west[l].v[t];
            r2 += b * west[l].v[t];
        }
        wex.v[t] = (a22 * r1 - a12 * r2) / det;
    }
    double num = 0, den = 0;
    for (size_t t = 0; t < wex.v.size(); ++t) {
        num += (wex.v[t] - w.v[t]) * (wex.v[t] - w.v[t]);
        den += w.v[t] * w.v[t];
    }
    rep.w_two_way_rel_error = den > 0 ? std::sqrt(num / den) : 0.0;
    return rep;
}

}  // namespace fcald
