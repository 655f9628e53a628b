#include "fcald/grid.hpp"

#include <cmath>
#include <functional>

namespace fcald {

GridSpec build_grid(double x0, double y0, double x1, double y1, int n) {
    if (n < 8) throw ConfigError("build_grid: need at least 8 nodes per axis");
    const double w = x1 - x0, hgt = y1 - y0;
    if (w <= 0 || hgt <= 0) throw ConfigError("build_grid: degenerate box");
    if (std::abs(w - hgt) > 1e-12 * std::max(w, hgt))
        throw ConfigError("build_grid: box must be square");
    GridSpec g;
    g.nx = g.ny = n;
    g.x0 = x0;
    g.y0 = y0;
    g.h = w / (n - 1);
    return g;
}

nlohmann::json GridSpec::to_json() const {
    return {{"box", {x0, y0, x0 + width(), y0 + width()}}, {"n", nx}};
}

GridSpec GridSpec::from_json(const nlohmann::json& j) {
    if (!j.contains("box") || !j.contains("n"))
        throw ConfigError("grid config needs keys \"box\" and \"n\"");
    const auto& b = j.at("box");
    if (!b.is_array() || b.size() != 4)
        throw ConfigError("grid \"box\" must be [x0,y0,x1,y1]");
    return build_grid(b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                      b[3].get<double>(), j.at("n").get<int>());
}

double max_abs(const ScalarField& f) {
    double m = 0.0;
    for (double x : f.v) m = std::max(m, std::abs(x));
    return m;
}

bool all_finite(const ScalarField& f) {
    for (double x : f.v)
        if (!std::isfinite(x)) return false;
    return true;
}

double quad_weight(const GridSpec& g, int i, int j) {
    double w = g.h * g.h;
    if (i == 0 || i == g.nx - 1) w *= 0.5;
    if (j == 0 || j == g.ny - 1) w *= 0.5;
    return w;
}

double integrate(const GridSpec& g, const ScalarField& f) {
    double s = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) s += quad_weight(g, i, j) * f(i, j);
    return s;
}

std::complex<double> integrate(const GridSpec& g, const ComplexField& f) {
    std::complex<double> s = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) s += quad_weight(g, i, j) * f(i, j);
    return s;
}

double l2_norm(const GridSpec& g, const ScalarField& f) {
    double s = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) s += quad_weight(g, i, j) * f(i, j) * f(i, j);
    return std::sqrt(s);
}

ScalarField sample(const GridSpec& g, const std::function<double(double, double)>& fn) {
    ScalarField f(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) f(i, j) = fn(g.x(i), g.y(j));
    return f;
}

}  // namespace fcald
