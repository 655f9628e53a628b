#pragma once

#include <array>
#include <complex>

#include "fcald/dn_access.hpp"
#include "fcald/hol.hpp"

namespace fcald {

using Complex = std::complex<double>;

/// Integer lattice modes p with 0 < |p| <= m (Euclidean), plus the DC mode
/// (0,0) when include_dc; deterministic lexicographic order. The probe
/// frequency for mode p is xi = pi * p / box_width.
std::vector<std::array<int, 2>> mode_lattice(int m, bool include_dc = true);

struct ModeDiagnostics {
    double fitted_exponent = 0.0;  ///< worst component
    double fit_residual = 0.0;
    bool flagged = false;
};

/// Per-mode Fourier-side estimate of q. `raw` is the measured generalized
/// moment (recombined limit / c_r, amplitude restored); `corrected` solves the
/// discrete-kernel Gram system and is what the synthesis consumes. Hermitian
/// symmetry of the corrected map is enforced by averaging, so the synthesized
/// field is real to machine precision.
struct FourierEstimate {
    std::vector<std::array<int, 2>> modes;
    std::vector<Complex> raw;
    std::vector<Complex> corrected;
    std::vector<ModeDiagnostics> diag;
    int flagged_count = 0;
};

struct RecoveryOptions {
    EpsilonLadder ladder = EpsilonLadder::geometric(0.03, 0.7, 6);
    ForwardOptions forward;
    int jobs = 1;
};

/// Raw single-mode recovery: runs the k = floor(r) mixed-FD pairing ladder
/// with Calderon probe traces (constants for the DC mode), expands via the
/// complex-to-real identity, and returns (recombined limit)/c_r, which
/// approximates \int q e^{2 i xi . x} dx.
Complex recover_mode(DnAccess& dn, double r, std::array<int, 2> p, const RecoveryOptions& opts,
                     ModeDiagnostics* diag = nullptr);

struct RecoveryResult {
    ScalarField q;
    FourierEstimate estimate;
    bool low_confidence = false;  ///< > 25% of modes flagged
};

/// Full-data reconstruction: all modes |p| <= m, Gram-corrected synthesis.
RecoveryResult recover_full(DnAccess& dn, double r, int m, const RecoveryOptions& opts);

/// Projection of a known field onto the mode set (the truncation oracle for
/// reports and acceptance): best trig approximation using the same basis the
/// synthesis uses. Never touches DN data.
ScalarField project_onto_modes(const GridSpec& g, const ScalarField& q,
                               const std::vector<std::array<int, 2>>& modes);

struct PartialOptions {
    int basis_per_axis = 5;    ///< d = basis_per_axis^2 tensor cubic B-splines
    int num_generators = 20;   ///< masked probe generators; pairs are drawn from these
    int num_pairs = 200;
    double lambda_rel = 1e-4;  ///< lambda = lambda_rel * ||A||_2^2
    uint64_t seed = 1;
    EpsilonLadder ladder = EpsilonLadder::geometric(0.03, 0.7, 6);
    ForwardOptions forward;
    int jobs = 1;
};

struct PartialResult {
    ScalarField q;
    std::vector<double> singular_values;
    std::vector<double> coeffs;
    double lambda = 0.0;
};

/// Partial-data Tikhonov reconstruction over products of masked harmonic
/// probes, k = floor(r) linearization order.
PartialResult recover_partial(DnAccess& dn, double r, const SupportMask& mask,
                              const PartialOptions& opts);

struct StageResult {
    double r = 0.0;
    ScalarField q;
    double residual_norm = 0.0;  ///< RMS extrapolation residual across modes
    bool flagged = false;        ///< exponent mismatch in the stage extraction
};

struct StageLedger {
    std::vector<StageResult> stages;
};

struct StagedOptions {
    int modes_max = 3;
    EpsilonLadder ladder = EpsilonLadder::geometric(0.03, 0.7, 6);
    ForwardOptions forward;
    int jobs = 1;
};

/// Staged recovery of q_1, ..., q_L for known exponents r_1 < ... < r_L with
/// f0 = 1 (v0 = 1): first-derivative pairings, quadrature prediction of the
/// already-recovered stages via the linearized solve at the recovered base
/// state, eps0^{-(r_l - 1)} extrapolation, and per-stage Fourier inversion.
StageLedger staged_recovery(DnAccess& dn, const std::vector<double>& exponents,
                            const StagedOptions& opts);

/// Tensor-product clamped cubic B-spline basis fields (partition of unity).
std::vector<ScalarField> bspline_basis_fields(const GridSpec& g, int per_axis);

}  // namespace fcald
