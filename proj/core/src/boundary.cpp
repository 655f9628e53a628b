#include "fcald/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace fcald {

BoundaryIndex boundary_index(const GridSpec& g) {
    BoundaryIndex b{g, {}, {}, {}, {}, {}, {}, {}};
    const int nx = g.nx, ny = g.ny;
    auto push = [&](int i, int j, int nxd, int nyd) {
        b.i.push_back(i);
        b.j.push_back(j);
        b.node_id.push_back(g.id(i, j));
        b.normal.push_back({nxd, nyd});
        const bool c = (i == 0 || i == nx - 1) && (j == 0 || j == ny - 1);
        b.corner.push_back(c);
        b.weight.push_back(g.h);  // corner: h/2 per incident side, h total
    };
    for (int i = 0; i < nx; ++i) push(i, 0, 0, -1);
    for (int j = 1; j < ny; ++j) push(nx - 1, j, 1, 0);
    for (int i = nx - 2; i >= 0; --i) push(i, ny - 1, 0, 1);
    for (int j = ny - 2; j >= 1; --j) push(0, j, -1, 0);

    b.arc.resize(b.node_id.size(), 0.0);
    for (size_t k = 1; k < b.node_id.size(); ++k) {
        const double di = b.i[k] - b.i[k - 1], dj = b.j[k] - b.j[k - 1];
        b.arc[k] = b.arc[k - 1] + g.h * std::hypot(di, dj);
    }
    return b;
}

double BoundaryIndex::perimeter() const {
    double s = 0.0;
    for (double w : weight) s += w;
    return s;
}

bool SupportMask::contains(int pos) const {
    return std::binary_search(positions.begin(), positions.end(), pos);
}

SupportMask restrict_mask(const BoundaryIndex& b, const std::string& selector) {
    const GridSpec& g = b.grid;
    std::set<int> pos;
    auto add_side = [&](const std::string& side) {
        for (int k = 0; k < b.count(); ++k) {
            const int i = b.i[k], j = b.j[k];
            bool in = false;
            if (side == "left") in = (i == 0);
            else if (side == "right") in = (i == g.nx - 1);
            else if (side == "bottom") in = (j == 0);
            else if (side == "top") in = (j == g.ny - 1);
            else if (side == "all") in = true;
            else throw ConfigError("restrict_mask: unknown side '" + side + "'");
            if (in) pos.insert(k);
        }
    };
    if (selector.rfind("arc:", 0) == 0) {
        std::istringstream ss(selector.substr(4));
        double s0, s1;
        char comma;
        if (!(ss >> s0 >> comma >> s1) || comma != ',')
            throw ConfigError("restrict_mask: bad arc range '" + selector + "'");
        for (int k = 0; k < b.count(); ++k)
            if (b.arc[k] >= s0 && b.arc[k] <= s1) pos.insert(k);
    } else {
        std::string rest = selector;
        while (!rest.empty()) {
            auto plus = rest.find('+');
            add_side(rest.substr(0, plus));
            rest = (plus == std::string::npos) ? "" : rest.substr(plus + 1);
        }
    }
    if (pos.empty()) throw ConfigError("restrict_mask: empty selection '" + selector + "'");
    SupportMask m;
    m.positions.assign(pos.begin(), pos.end());
    return m;
}

void BoundaryFunction::apply_mask() {
    if (!mask) return;
    for (int k = 0; k < count(); ++k)
        if (!mask->contains(k)) values[k] = 0.0;
}

namespace {
std::optional<SupportMask> merge_masks(const std::optional<SupportMask>& a,
                                       const std::optional<SupportMask>& b) {
    if (!a || !b) return std::nullopt;  // either side unmasked: result unmasked
    std::set<int> u(a->positions.begin(), a->positions.end());
    u.insert(b->positions.begin(), b->positions.end());
    SupportMask m;
    m.positions.assign(u.begin(), u.end());
    return m;
}
}  // namespace

BoundaryFunction operator+(const BoundaryFunction& a, const BoundaryFunction& b) {
    BoundaryFunction r(a.count());
    for (int k = 0; k < a.count(); ++k) r.values[k] = a.values[k] + b.values[k];
    r.mask = merge_masks(a.mask, b.mask);
    return r;
}

BoundaryFunction operator-(const BoundaryFunction& a, const BoundaryFunction& b) {
    BoundaryFunction r(a.count());
    for (int k = 0; k < a.count(); ++k) r.values[k] = a.values[k] - b.values[k];
    r.mask = merge_masks(a.mask, b.mask);
    return r;
}

BoundaryFunction operator*(double s, const BoundaryFunction& f) {
    BoundaryFunction r = f;
    for (double& x : r.values) x *= s;
    return r;
}

double max_abs(const BoundaryFunction& f) {
    double m = 0.0;
    for (double x : f.values) m = std::max(m, std::abs(x));
    return m;
}

BoundaryFunction trace(const BoundaryIndex& b, const ScalarField& u) {
    BoundaryFunction f(b.count());
    for (int k = 0; k < b.count(); ++k) f.values[k] = u(b.i[k], b.j[k]);
    return f;
}

}  // namespace fcald
