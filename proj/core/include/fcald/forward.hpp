#pragma once

#include <string>
#include <vector>

#include "fcald/elliptic.hpp"
#include "fcald/nonlinearity.hpp"

namespace fcald {

struct ForwardOptions {
    double newton_tol = 1e-11;    ///< interior residual max-norm target
    int max_newton = 25;
    double damping = 1.0;         ///< initial step factor
    bool picard_fallback = true;
    /// Smallness gate on ||f||_inf; <= 0 means the default
    /// 0.1 / (1 + max_l ||q_l||_inf). Well-posedness of the small branch is
    /// only guaranteed under the gate, so violations refuse instead of
    /// silently continuing.
    double smallness_gate = 0.0;
    LinearMethod linear_method = LinearMethod::Auto;

    double effective_gate(const NonlinearitySpec& spec) const {
        return smallness_gate > 0 ? smallness_gate : 0.1 / (1.0 + spec.max_coeff_norm());
    }
};

struct ForwardReport {
    int iterations = 0;
    double residual = 0.0;
    std::string method;  ///< "harmonic", "newton", "newton+picard"
};

struct ForwardSolution {
    ScalarField u;
    ForwardReport report;
    double smallness_ratio = 0.0;  ///< ||u||_inf / ||f||_inf (1 for f = 0)
};

/// Solve Δ_h u + a(x,u) = 0, u|∂ = f by damped Newton from the harmonic
/// extension, with Picard fallback for the Hoelder-only Jacobian regime.
ForwardSolution solve_semilinear(const NonlinearitySpec& spec, const GridSpec& g,
                                 const BoundaryFunction& f, const ForwardOptions& opts,
                                 const PoissonSolver* harmonic = nullptr);

/// First linearization at a base state: (Δ_h + d_y a(x, u_base)) v = 0, v|∂ = f.
ScalarField linearized_solve(const NonlinearitySpec& spec, const GridSpec& g,
                             const ScalarField& u_base, const BoundaryFunction& f);

/// Factorized first-linearization operator for repeated solves at one base
/// state (the staged-recovery prediction needs many directions per rung).
class LinearizedOperator {
public:
    LinearizedOperator(const NonlinearitySpec& spec, const GridSpec& g,
                       const ScalarField& u_base);
    ScalarField solve(const BoundaryFunction& f) const;

private:
    DirichletSolver solver_;
    ScalarField zero_rhs_;
};

struct ExpansionReport {
    std::vector<double> eps;
    std::vector<double> remainder;      ///< ||u_eps - eps v - eps^r w||_inf
    double fitted_slope = 0.0;          ///< log-log slope; target 1 + 2*alpha
    double w_two_way_rel_error = 0.0;   ///< direct Poisson w vs ladder-extrapolated w
    bool pass = false;                  ///< slope >= 1 + 2 alpha - 0.1
};

/// One-parameter expansion check u_eps = eps v + eps^{1+alpha} w + O(eps^{1+2alpha})
/// for a single-term spec with 1 < r < 2.
ExpansionReport expansion_check(const NonlinearitySpec& spec, const GridSpec& g,
                                const BoundaryFunction& f, const std::vector<double>& eps_ladder,
                                const ForwardOptions& opts);

}  // namespace fcald
