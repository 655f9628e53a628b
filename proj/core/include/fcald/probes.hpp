#pragma once

#include <array>
#include <complex>
#include <vector>

#include "fcald/boundary.hpp"
#include "fcald/grid.hpp"

namespace fcald {

/// Calderon exponential pair v1 = e^{(-zeta + i xi).x}, v2 = e^{(zeta + i xi).x}
/// with zeta = rot90(xi) (counterclockwise), so zeta.xi = 0 and |zeta| = |xi|.
/// Both are harmonic and v1 v2 = e^{2 i xi.x}.
///
/// Each complex exponential is normalized by the max of its modulus over the
/// grid; `scale` = s1*s2 restores the product amplitude. Boundary traces are
/// analytic samples, not re-solved harmonics.
struct CalderonPair {
    std::array<double, 2> xi{};
    std::array<double, 2> zeta{};
    ScalarField re1, im1, re2, im2;          ///< normalized interior samples
    BoundaryFunction tre1, tim1, tre2, tim2; ///< normalized analytic traces
    double s1 = 1.0, s2 = 1.0;
    double scale() const { return s1 * s2; }
};

/// Amplitude guard: |xi| * diam(box) beyond the guard would overflow the
/// e^{|zeta|} growth budget.
CalderonPair calderon_pair(const GridSpec& g, std::array<double, 2> xi,
                           double amplitude_guard = 40.0);

/// One term of the complex-to-real expansion of Π (Re v_l + i Im v_l):
/// coefficient i^{|S|} and, per factor, which component (0 = Re, 1 = Im).
struct ProbeTerm {
    std::complex<double> coef;
    std::vector<int> component;
};

/// ProbeCombo: the 2^k real-tuple expansion; recombination reproduces the
/// complex product integral exactly in exact arithmetic.
struct ProbeCombo {
    int k = 0;
    std::vector<ProbeTerm> terms;
};

ProbeCombo real_expand(int k);

/// Nonnegative Dirichlet data supported in a mask: profile "constant" (full
/// boundary only) or "bump", a smooth bump vanishing to all orders at the mask
/// edges with max 1 at the arc midpoint.
BoundaryFunction positive_probe(const BoundaryIndex& b, const SupportMask& mask,
                                const std::string& profile = "bump");

}  // namespace fcald
