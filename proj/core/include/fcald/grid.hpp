#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include <json.hpp>

#include "fcald/errors.hpp"

namespace fcald {

/// Uniform node grid on a closed square box. Nodes are indexed (i, j) with
/// i along x and j along y; linear id = j*nx + i.
struct GridSpec {
    int nx = 0;
    int ny = 0;
    double h = 0.0;
    double x0 = 0.0;  ///< origin corner
    double y0 = 0.0;

    int node_count() const { return nx * ny; }
    int interior_count() const { return (nx - 2) * (ny - 2); }
    int id(int i, int j) const { return j * nx + i; }
    double x(int i) const { return x0 + h * i; }
    double y(int j) const { return y0 + h * j; }
    double width() const { return h * (nx - 1); }
    bool is_boundary(int i, int j) const {
        return i == 0 || j == 0 || i == nx - 1 || j == ny - 1;
    }

    nlohmann::json to_json() const;
    static GridSpec from_json(const nlohmann::json& j);

    friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// build_grid(box, n): n nodes per axis on the square [x0,x1]x[y0,y1].
GridSpec build_grid(double x0, double y0, double x1, double y1, int n);
inline GridSpec build_grid_unit(int n) { return build_grid(0, 0, 1, 1, n); }

/// Grid-sampled real function on the closed box.
struct ScalarField {
    int nx = 0;
    int ny = 0;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const GridSpec& g, double fill = 0.0)
        : nx(g.nx), ny(g.ny), v(static_cast<size_t>(g.nx) * g.ny, fill) {}

    double& operator()(int i, int j) { return v[static_cast<size_t>(j) * nx + i]; }
    double operator()(int i, int j) const { return v[static_cast<size_t>(j) * nx + i]; }
    size_t size() const { return v.size(); }
    bool same_shape(const ScalarField& o) const { return nx == o.nx && ny == o.ny; }
};

double max_abs(const ScalarField& f);
bool all_finite(const ScalarField& f);

/// Complex-valued field, used by the Calderon probe machinery.
struct ComplexField {
    int nx = 0;
    int ny = 0;
    std::vector<std::complex<double>> v;

    ComplexField() = default;
    explicit ComplexField(const GridSpec& g)
        : nx(g.nx), ny(g.ny), v(static_cast<size_t>(g.nx) * g.ny) {}
    std::complex<double>& operator()(int i, int j) { return v[static_cast<size_t>(j) * nx + i]; }
    std::complex<double> operator()(int i, int j) const { return v[static_cast<size_t>(j) * nx + i]; }
};

/// Tensor-product trapezoid quadrature over the closed box.
/// Exact for constants; weight h^2 at interior nodes, scaled by 1/2 per
/// boundary-touching axis.
double quad_weight(const GridSpec& g, int i, int j);
double integrate(const GridSpec& g, const ScalarField& f);
std::complex<double> integrate(const GridSpec& g, const ComplexField& f);

/// L2(box) norm under the interior quadrature.
double l2_norm(const GridSpec& g, const ScalarField& f);

/// Pointwise evaluation of a synthesized profile on the grid (see profiles.hpp).
ScalarField sample(const GridSpec& g, const std::function<double(double, double)>& fn);

}  // namespace fcald
