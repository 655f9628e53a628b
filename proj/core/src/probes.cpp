#include "fcald/probes.hpp"

#include <cmath>

namespace fcald {

CalderonPair calderon_pair(const GridSpec& g, std::array<double, 2> xi, double amplitude_guard) {
    const double xin = std::hypot(xi[0], xi[1]);
    if (xin == 0.0) throw ConfigError("calderon_pair: xi must be nonzero");
    const double diam = g.width() * std::sqrt(2.0);
    if (xin * diam > amplitude_guard)
        throw ConfigError("calderon_pair: |xi|*diam exceeds the amplitude guard");

    CalderonPair p;
    p.xi = xi;
    p.zeta = {-xi[1], xi[0]};  // rot90, counterclockwise

    auto make = [&](double zsign, ScalarField& re, ScalarField& im, double& smax) {
        re = ScalarField(g);
        im = ScalarField(g);
        smax = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double zx = zsign * (p.zeta[0] * g.x(i) + p.zeta[1] * g.y(j));
                smax = std::max(smax, std::exp(zx));
            }
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                const double ph = xi[0] * g.x(i) + xi[1] * g.y(j);
                const double amp = std::exp(zsign * (p.zeta[0] * g.x(i) + p.zeta[1] * g.y(j))) / smax;
                re(i, j) = amp * std::cos(ph);
                im(i, j) = amp * std::sin(ph);
            }
    };
    make(-1.0, p.re1, p.im1, p.s1);
    make(+1.0, p.re2, p.im2, p.s2);

    const BoundaryIndex b = boundary_index(g);
    p.tre1 = trace(b, p.re1);
    p.tim1 = trace(b, p.im1);
    p.tre2 = trace(b, p.re2);
    p.tim2 = trace(b, p.im2);
    return p;
}

ProbeCombo real_expand(int k) {
    if (k < 1) throw ConfigError("real_expand: k >= 1");
    ProbeCombo combo;
    combo.k = k;
    const std::complex<double> I(0, 1);
    for (int mask = 0; mask < (1 << k); ++mask) {
        ProbeTerm t;
        t.component.resize(k);
        int bits = 0;
        for (int l = 0; l < k; ++l) {
            t.component[l] = (mask >> l) & 1;
            bits += t.component[l];
        }
        t.coef = std::pow(I, bits);
        combo.terms.push_back(std::move(t));
    }
    return combo;
}

BoundaryFunction positive_probe(const BoundaryIndex& b, const SupportMask& mask,
                                const std::string& profile) {
    if (mask.positions.size() < 3) throw ConfigError("positive_probe: mask too small");
    BoundaryFunction f(b.count());
    f.mask = mask;
    if (profile == "constant") {
        if (static_cast<int>(mask.positions.size()) != b.count())
            throw ConfigError("positive_probe: constant profile needs the full boundary");
        for (double& x : f.values) x = 1.0;
        return f;
    }
    if (profile != "bump") throw ConfigError("positive_probe: unknown profile '" + profile + "'");
    // arc-length bump over the mask span; contiguous masks get max 1 at
    // midpoint and smooth decay to 0 at the ends
    const double s0 = b.arc[mask.positions.front()];
    const double s1 = b.arc[mask.positions.back()];
    if (s1 <= s0) throw ConfigError("positive_probe: degenerate mask span");
    for (int pos : mask.positions) {
        const double t = (b.arc[pos] - s0) / (s1 - s0);
        if (t <= 0.0 || t >= 1.0) continue;
        const double z = 2.0 * t - 1.0;
        f.values[pos] = std::exp(1.0 - 1.0 / (1.0 - z * z));
    }
    return f;
}

}  // namespace fcald
