#include "fcald/elliptic.hpp"

#include <cmath>
#include <vector>

namespace fcald {

namespace {
int interior_id(const GridSpec& g, int i, int j) { return (j - 1) * (g.nx - 2) + (i - 1); }
}  // namespace

SparseOperator assemble_laplacian(const GridSpec& g, const ScalarField* zeroth_order) {
    const int ni = g.nx - 2, nj = g.ny - 2;
    const double ih2 = 1.0 / (g.h * g.h);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<size_t>(ni) * nj * 5);
    for (int j = 1; j <= nj; ++j) {
        for (int i = 1; i <= ni; ++i) {
            const int k = interior_id(g, i, j);
            double diag = 4.0 * ih2;
            if (zeroth_order) diag -= (*zeroth_order)(i, j);
            trip.emplace_back(k, k, diag);
            if (i > 1) trip.emplace_back(k, interior_id(g, i - 1, j), -ih2);
            if (i < ni) trip.emplace_back(k, interior_id(g, i + 1, j), -ih2);
            if (j > 1) trip.emplace_back(k, interior_id(g, i, j - 1), -ih2);
            if (j < nj) trip.emplace_back(k, interior_id(g, i, j + 1), -ih2);
        }
    }
    SparseOperator op{g, Eigen::SparseMatrix<double>(ni * nj, ni * nj),
                      zeroth_order != nullptr};
    op.A.setFromTriplets(trip.begin(), trip.end());
    op.A.makeCompressed();
    return op;
}

DirichletSolver::DirichletSolver(SparseOperator op, LinearMethod method, double tol)
    : op_(std::move(op)), method_(method), tol_(tol), bindex_(boundary_index(op_.grid)) {
    if (method_ == LinearMethod::Auto)
        method_ = (op_.grid.nx <= 129) ? LinearMethod::Direct : LinearMethod::Cg;
    if (method_ == LinearMethod::Direct) {
        ldlt_ = std::make_shared<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
        ldlt_->compute(op_.A);
        if (ldlt_->info() != Eigen::Success)
            throw SolverError("DirichletSolver: LDLT factorization failed");
    } else {
        cg_ = std::make_shared<Eigen::ConjugateGradient<Eigen::SparseMatrix<double>,
                                                        Eigen::Lower | Eigen::Upper,
                                                        Eigen::IncompleteCholesky<double>>>();
        cg_->setMaxIterations(10000);
        cg_->setTolerance(tol_ > 0 ? tol_ : 1e-13);
        cg_->compute(op_.A);
        if (cg_->info() != Eigen::Success)
            throw SolverError("DirichletSolver: CG preconditioner setup failed");
    }
}

ScalarField DirichletSolver::solve(const ScalarField& rhs, const BoundaryFunction& f,
                                   SolveReport* report) const {
    const GridSpec& g = op_.grid;
    const int ni = g.nx - 2, nj = g.ny - 2;
    const double ih2 = 1.0 / (g.h * g.h);

    // boundary values as a full field for stencil lookups
    ScalarField u(g);
    for (int k = 0; k < bindex_.count(); ++k) u(bindex_.i[k], bindex_.j[k]) = f.values[k];

    Eigen::VectorXd rv(ni * nj);
    for (int j = 1; j <= nj; ++j)
        for (int i = 1; i <= ni; ++i) {
            double v = rhs(i, j);
            if (i == 1) v += ih2 * u(0, j);
            if (i == ni) v += ih2 * u(g.nx - 1, j);
            if (j == 1) v += ih2 * u(i, 0);
            if (j == nj) v += ih2 * u(i, g.ny - 1);
            rv[interior_id(g, i, j)] = v;
        }

    Eigen::VectorXd x;
    SolveReport rep;
    if (ldlt_) {
        x = ldlt_->solve(rv);
        rep.method = "ldlt";
        rep.iterations = 0;
    } else {
        x = cg_->solve(rv);
        rep.method = "cg";
        rep.iterations = static_cast<int>(cg_->iterations());
        if (cg_->info() != Eigen::Success) {
            if (op_.grid.nx <= 129) {
                // deterministic fallback for small systems
                Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> direct(op_.A);
                if (direct.info() != Eigen::Success)
                    throw SolverError("DirichletSolver: CG failed and LDLT fallback failed");
                x = direct.solve(rv);
                rep.method = "cg+ldlt-fallback";
            } else {
                throw SolverError("DirichletSolver: CG did not converge after " +
                                  std::to_string(rep.iterations) + " iterations");
            }
        }
    }

    rep.residual_norm = (rv - op_.A * x).lpNorm<Eigen::Infinity>();
    for (int j = 1; j <= nj; ++j)
        for (int i = 1; i <= ni; ++i) u(i, j) = x[interior_id(g, i, j)];
    if (report) *report = rep;
    return u;
}

ScalarField solve_dirichlet(const SparseOperator& op, const ScalarField& rhs,
                            const BoundaryFunction& f, double tol, SolveReport* report) {
    if (tol <= 0) throw ConfigError("solve_dirichlet: tol must be positive");
    if (!all_finite(rhs)) throw ConfigError("solve_dirichlet: rhs not finite");
    DirichletSolver solver(op, LinearMethod::Auto, tol);
    SolveReport rep;
    ScalarField u = solver.solve(rhs, f, &rep);
    if (report) *report = rep;
    return u;
}

PoissonSolver::PoissonSolver(const GridSpec& g)
    : solver_(assemble_laplacian(g, nullptr)), bindex_(boundary_index(g)) {}

ScalarField PoissonSolver::extend(const BoundaryFunction& f) const {
    return solver_.solve(ScalarField(grid()), f);
}

ScalarField PoissonSolver::poisson(const ScalarField& minus_rhs, const BoundaryFunction& f) const {
    return solver_.solve(minus_rhs, f);
}

ScalarField harmonic_extension(const GridSpec& g, const BoundaryFunction& f) {
    return PoissonSolver(g).extend(f);
}

ScalarField discrete_laplacian(const GridSpec& g, const ScalarField& u) {
    ScalarField L(g);
    const double ih2 = 1.0 / (g.h * g.h);
    for (int j = 1; j < g.ny - 1; ++j)
        for (int i = 1; i < g.nx - 1; ++i)
            L(i, j) = (u(i + 1, j) + u(i - 1, j) + u(i, j + 1) + u(i, j - 1) - 4.0 * u(i, j)) * ih2;
    return L;
}

double dirichlet_form(const GridSpec& g, const ScalarField& u, const ScalarField& v) {
    double s = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i + 1 < g.nx; ++i)
            s += (u(i + 1, j) - u(i, j)) * (v(i + 1, j) - v(i, j)) * (j == 0 || j == g.ny - 1 ? 0.5 : 1.0);
    for (int j = 0; j + 1 < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            s += (u(i, j + 1) - u(i, j)) * (v(i, j + 1) - v(i, j)) * (i == 0 || i == g.nx - 1 ? 0.5 : 1.0);
    return s;
}

}  // namespace fcald
