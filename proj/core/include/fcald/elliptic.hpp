#pragma once

#include <memory>
#include <string>

#include <Eigen/Sparse>

#include "fcald/boundary.hpp"
#include "fcald/grid.hpp"

namespace fcald {

/// Interior-node system for -Δ_h - c(x) with the 5-point stencil and
/// Dirichlet elimination. Symmetric; positive definite for c <= 0 and for the
/// small zeroth-order terms this project produces.
struct SparseOperator {
    GridSpec grid;
    Eigen::SparseMatrix<double> A;  ///< interior_count x interior_count, row-major ids
    bool has_zeroth_order = false;

    int dim() const { return static_cast<int>(A.rows()); }
};

struct SolveReport {
    int iterations = 0;
    double residual_norm = 0.0;  ///< interior residual, max norm
    std::string method;          ///< "ldlt" or "cg"
};

enum class LinearMethod { Auto, Direct, Cg };

/// assemble -Δ_h - c on interior nodes; c (the zeroth-order coefficient) is
/// subtracted from the diagonal. Pass nullptr for plain -Δ_h.
SparseOperator assemble_laplacian(const GridSpec& g, const ScalarField* zeroth_order);

/// Dirichlet solver bound to one assembled operator; the factorization (or CG
/// preconditioner) is reused across right-hand sides. Concurrent solve() calls
/// on a factorized instance are safe.
class DirichletSolver {
public:
    explicit DirichletSolver(SparseOperator op, LinearMethod method = LinearMethod::Auto,
                             double tol = 0.0);

    /// Solve (-Δ_h - c) u = rhs interior, u = f on the boundary.
    /// rhs is a full grid field (only interior values are read).
    ScalarField solve(const ScalarField& rhs, const BoundaryFunction& f,
                      SolveReport* report = nullptr) const;

    const GridSpec& grid() const { return op_.grid; }

private:
    SparseOperator op_;
    LinearMethod method_;
    double tol_;
    BoundaryIndex bindex_;
    std::shared_ptr<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>> ldlt_;
    std::shared_ptr<Eigen::ConjugateGradient<Eigen::SparseMatrix<double>,
                                             Eigen::Lower | Eigen::Upper,
                                             Eigen::IncompleteCholesky<double>>>
        cg_;
};

/// One-shot convenience over DirichletSolver.
ScalarField solve_dirichlet(const SparseOperator& op, const ScalarField& rhs,
                            const BoundaryFunction& f, double tol, SolveReport* report = nullptr);

/// Plain-Laplacian solver cached per grid; the workhorse behind harmonic
/// extensions and Poisson right-hand sides.
class PoissonSolver {
public:
    explicit PoissonSolver(const GridSpec& g);

    ScalarField extend(const BoundaryFunction& f) const;  ///< Δ_h u = 0, u|∂ = f
    ScalarField poisson(const ScalarField& minus_rhs, const BoundaryFunction& f) const;
    const GridSpec& grid() const { return solver_.grid(); }
    const BoundaryIndex& boundary() const { return bindex_; }

private:
    DirichletSolver solver_;
    BoundaryIndex bindex_;
};

ScalarField harmonic_extension(const GridSpec& g, const BoundaryFunction& f);

/// Interior residual Δ_h u + rhs_field evaluated on interior nodes (max norm
/// friendly); rhs_field may be empty for plain harmonicity checks.
ScalarField discrete_laplacian(const GridSpec& g, const ScalarField& u);

/// Discrete Dirichlet energy a_h(u, v) = Σ_edges (Δu)(Δv) (unit edge weight,
/// unscaled 2D form). Exactly symmetric; for discrete-harmonic fields it is
/// the weak form of the DN pairing.
double dirichlet_form(const GridSpec& g, const ScalarField& u, const ScalarField& v);

}  // namespace fcald
