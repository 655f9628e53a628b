#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fcald/forward.hpp"

namespace fcald {

/// Outward normal derivative by the one-sided second-order stencil
/// (3 u_b - 4 u_{in1} + u_{in2}) / (2h) along the inward offset, where in1,
/// in2 are the nodes one and two steps inside. Exact on per-axis quadratics.
/// Corner values are set to 0 and excluded from pairings.
BoundaryFunction neumann_trace(const BoundaryIndex& b, const ScalarField& u);

/// Arc-length quadrature of g*h over the boundary, corners excluded.
double boundary_pairing(const BoundaryIndex& b, const BoundaryFunction& g,
                        const BoundaryFunction& h);

/// Weak-form DN pairing for discrete-harmonic fields: the discrete Dirichlet
/// form a_h(u_f, u_g). Exactly symmetric; anchors the accuracy of the strong
/// trace in tests.
double dn_pairing_weak(const GridSpec& g, const ScalarField& uf, const ScalarField& ug);

/// Λ_q(f): forward solve + Neumann trace, restricted to f's mask when present.
BoundaryFunction dn_apply(const NonlinearitySpec& spec, const GridSpec& g,
                          const BoundaryFunction& f, const ForwardOptions& opts,
                          const PoissonSolver* harmonic = nullptr);

/// 64-bit FNV-1a, used for grid/spec fingerprints and dataset record keys.
uint64_t fnv1a(const void* data, size_t len);
uint64_t fingerprint(const nlohmann::json& j);

struct DNRecord {
    BoundaryFunction f;
    BoundaryFunction df;  ///< Λ(f)
};

/// Persisted map f -> ∂_ν u_f, JSON-lines with a fingerprint header.
struct DNDataset {
    uint64_t grid_fp = 0;
    uint64_t spec_fp = 0;
    std::vector<DNRecord> records;

    void save(const std::string& path) const;
    static DNDataset load(const std::string& path);
};

}  // namespace fcald
