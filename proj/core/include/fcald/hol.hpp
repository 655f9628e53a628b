#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "fcald/dn_map.hpp"
#include "fcald/probes.hpp"

namespace fcald {

/// Geometric eps0 ladder with FD steps tied to eps0: delta_l = theta * eps0.
/// Scaling the stencil with eps0 keeps every probe inside the small-solution
/// branch and keeps the FD truncation error subordinate to the eps0^alpha
/// signal.
struct EpsilonLadder {
    std::vector<double> eps0;  ///< descending
    double theta = 0.5;

    static EpsilonLadder geometric(double start, double ratio, int count, double theta = 0.5);
    void validate() const;
};

/// Per-eps0 estimates of the kth-linearization pairing and their fitted
/// amplitude/exponent.
struct PairingSeries {
    std::vector<double> eps0;
    std::vector<double> value;
    double fitted_amplitude = 0.0;  ///< A in P ~ A eps0^ahat
    double fitted_exponent = 0.0;   ///< ahat
    double fit_residual = 0.0;
};

/// Abstract measurement: f -> Λ(f) trace. Reconstruction-side code sees only
/// this surface.
using DnApplyFn = std::function<BoundaryFunction(const BoundaryFunction&)>;

struct MixedPairingOptions {
    ForwardOptions forward;
    int jobs = 1;
};

/// Central-difference tensor stencil over the 2^k sign patterns of
/// Λ(eps0 f0 + Σ sigma_l delta_l f_l), divided by Π(2 delta_l), paired against
/// f_{k+1}. For k = 1 the raw pairing and its Λ0-subtracted version are both
/// reported (the Λ0 part cancels structurally for k >= 2).
struct MixedPairingValue {
    double raw = 0.0;
    double subtracted = 0.0;  ///< == raw for k >= 2
};

MixedPairingValue mixed_pairing(const DnApplyFn& dn, const PoissonSolver& harmonic,
                                const BoundaryFunction& f0,
                                const std::vector<BoundaryFunction>& dirs,
                                const BoundaryFunction& ftest, double eps0,
                                const std::vector<double>& deltas, int jobs = 1);

/// Λ0-subtracted pairing series over a ladder (k from dirs.size()).
PairingSeries mixed_pairing_series(const DnApplyFn& dn, const PoissonSolver& harmonic,
                                   const BoundaryFunction& f0,
                                   const std::vector<BoundaryFunction>& dirs,
                                   const BoundaryFunction& ftest, const EpsilonLadder& ladder,
                                   int jobs = 1);

struct AlphaLimitOptions {
    /// extrapolation basis exponents relative to eps0^alpha; 0 must be present
    /// and its coefficient is the returned limit
    std::vector<double> correction_exponents{0.0, -1.0};  ///< -1 => use min(alpha, 1-alpha)
    double exponent_flag_threshold = 0.15;
    bool throw_on_flag = true;
};

/// Least-squares extraction of lim eps0^{-alpha} P(eps0): fits P/eps0^alpha
/// against {eps0^e} for the configured correction exponents and returns the
/// constant coefficient. Fitted log-log exponent far from alpha signals an
/// identity violation or a misconfigured ladder.
double alpha_limit(PairingSeries& series, double alpha, const AlphaLimitOptions& opts = {});

/// RHS of the integral identity: c_r ∫ q |v0|^{r-1} v0^{1-k} v1...v_{k+1} dV
/// with discrete harmonic extensions v_l of the given boundary data.
double rhs_quadrature(const GridSpec& g, const ScalarField& q, double r,
                      const BoundaryFunction& f0, const std::vector<BoundaryFunction>& dirs,
                      const BoundaryFunction& ftest, const PoissonSolver& harmonic);

struct IdentityReport {
    double lhs = 0.0;
    double rhs = 0.0;
    double rel_error = 0.0;
    double fitted_exponent = 0.0;
    double alpha = 0.0;
    PairingSeries series;
    bool pass = false;
};

struct IdentityOptions {
    EpsilonLadder ladder;
    double pass_rel_error = 0.05;
    int jobs = 1;
    ForwardOptions forward;
};

/// Verify Eq-level agreement of the two identity routes for a single-term
/// spec: LHS by ladder extrapolation of measured pairings, RHS by interior
/// quadrature.
IdentityReport verify_identity(const NonlinearitySpec& spec, const GridSpec& g,
                               const BoundaryFunction& f0,
                               const std::vector<BoundaryFunction>& dirs,
                               const BoundaryFunction& ftest, const IdentityOptions& opts);

struct FaaReport {
    double fd_value = 0.0;
    double partition_sum = 0.0;
    double leading_term = 0.0;
    double abs_error = 0.0;
};

/// Scalar Faa di Bruno check for k <= 3: the kth mixed eps-derivative of
/// |u(eps)|^{r-1} u(eps) with u(eps) = u0 + Σ eps_l v_l + Σ_{l<m} eps_l eps_m g_lm
/// (+ eps1 eps2 eps3 g123 for k = 3) computed by high-order FD against the
/// symbolic partition sum built from dky_power.
FaaReport faa_di_bruno_check(double r, int k, double u0, const std::vector<double>& v,
                             const std::vector<double>& g2 = {}, double g3 = 0.0);

}  // namespace fcald
