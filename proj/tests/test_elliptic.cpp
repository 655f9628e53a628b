#include <doctest.h>

#include <cmath>

#include <Eigen/Dense>

#include "fcald/elliptic.hpp"
#include "fcald/profiles.hpp"

using namespace fcald;

namespace {

BoundaryFunction trace_of(const GridSpec& g, const std::function<double(double, double)>& fn) {
    const BoundaryIndex b = boundary_index(g);
    BoundaryFunction f(b.count());
    for (int k = 0; k < b.count(); ++k) f.values[k] = fn(g.x(b.i[k]), g.y(b.j[k]));
    return f;
}

}  // namespace

TEST_CASE("assemble_laplacian: 5-point structure") {
    const GridSpec g = build_grid_unit(9);
    SUBCASE("plain diagonal 4/h^2") {
        const SparseOperator op = assemble_laplacian(g, nullptr);
        CHECK(op.dim() == 49);
        const double ih2 = 1.0 / (g.h * g.h);
        for (int k = 0; k < op.dim(); ++k)
            CHECK(op.A.coeff(k, k) == doctest::Approx(4.0 * ih2).epsilon(1e-15));
    }
    SUBCASE("zeroth order shift c = -1 adds 1 to the diagonal") {
        const ScalarField c(g, -1.0);
        const SparseOperator op = assemble_laplacian(g, &c);
        const double ih2 = 1.0 / (g.h * g.h);
        CHECK(op.A.coeff(0, 0) == doctest::Approx(4.0 * ih2 + 1.0).epsilon(1e-15));
    }
}

TEST_CASE("laplacian is symmetric and its min eigenvalue matches the dense oracle") {
    const GridSpec g = build_grid_unit(9);
    const SparseOperator op = assemble_laplacian(g, nullptr);
    const Eigen::MatrixXd D = Eigen::MatrixXd(op.A);
    CHECK((D - D.transpose()).norm() == doctest::Approx(0.0).epsilon(1e-12));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(D);
    const double lmin = es.eigenvalues()[0];
    // dense eigensolve oracle vs the separable closed form (4/h^2) 2 sin^2(pi h / 2);
    // tends to 2 pi^2 as h -> 0
    const double analytic = (4.0 / (g.h * g.h)) * 2.0 * std::pow(std::sin(M_PI * g.h / 2), 2);
    CHECK(lmin == doctest::Approx(analytic).epsilon(1e-10));
    CHECK(lmin == doctest::Approx(2 * M_PI * M_PI).epsilon(0.02));
    CHECK(lmin > 0.0);
}

TEST_CASE("self-adjointness of the interior form") {
    const GridSpec g = build_grid_unit(17);
    const SparseOperator op = assemble_laplacian(g, nullptr);
    Eigen::VectorXd u = Eigen::VectorXd::LinSpaced(op.dim(), -1.0, 2.0).array().sin();
    Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(op.dim(), 0.0, 5.0).array().cos();
    const double a = u.dot(op.A * v), b = v.dot(op.A * u);
    CHECK(std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b)));
}

TEST_CASE("solve_dirichlet exactness") {
    const GridSpec g = build_grid_unit(17);
    const SparseOperator op = assemble_laplacian(g, nullptr);
    SUBCASE("constants are harmonic") {
        const ScalarField u = solve_dirichlet(op, ScalarField(g), trace_of(g, [](double, double) { return 1.0; }), 1e-12);
        for (double x : u.v) CHECK(x == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("linear f = x reproduced exactly") {
        const ScalarField u = solve_dirichlet(op, ScalarField(g), trace_of(g, [](double x, double) { return x; }), 1e-12);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                CHECK(u(i, j) == doctest::Approx(g.x(i)).epsilon(1e-11));
    }
    SUBCASE("rhs -2 with f = x^2: stencil exact on per-axis quadratics") {
        const ScalarField rhs(g, -2.0);
        const ScalarField u = solve_dirichlet(op, rhs, trace_of(g, [](double x, double) { return x * x; }), 1e-12);
        for (int j = 1; j < g.ny - 1; ++j)
            for (int i = 1; i < g.nx - 1; ++i)
                CHECK(u(i, j) == doctest::Approx(g.x(i) * g.x(i)).epsilon(1e-10));
    }
}

TEST_CASE("solve report and boundary match") {
    const GridSpec g = build_grid_unit(17);
    const SparseOperator op = assemble_laplacian(g, nullptr);
    const BoundaryFunction f = trace_of(g, [](double x, double y) { return x + 2 * y; });
    SolveReport rep;
    DirichletSolver solver(op);
    const ScalarField u = solver.solve(ScalarField(g), f, &rep);
    CHECK(rep.method == "ldlt");
    const BoundaryIndex b = boundary_index(g);
    for (int k = 0; k < b.count(); ++k)
        CHECK(u(b.i[k], b.j[k]) == f.values[k]);  // Dirichlet data exact by elimination
}

TEST_CASE("cg path agrees with the direct path") {
    const GridSpec g = build_grid_unit(33);
    const BoundaryFunction f = trace_of(g, [](double x, double y) { return std::exp(y) * std::cos(x); });
    DirichletSolver direct(assemble_laplacian(g, nullptr), LinearMethod::Direct);
    DirichletSolver cg(assemble_laplacian(g, nullptr), LinearMethod::Cg, 1e-13);
    SolveReport rd, rc;
    const ScalarField ud = direct.solve(ScalarField(g), f, &rd);
    const ScalarField uc = cg.solve(ScalarField(g), f, &rc);
    CHECK(rc.method == "cg");
    CHECK(rc.iterations > 0);
    double diff = 0;
    for (size_t t = 0; t < ud.v.size(); ++t) diff = std::max(diff, std::abs(ud.v[t] - uc.v[t]));
    CHECK(diff <= 1e-9);
}

TEST_CASE("harmonic extension: maximum principle and manufactured solution") {
    SUBCASE("positivity from nonnegative data") {
        const GridSpec g = build_grid_unit(17);
        const BoundaryIndex b = boundary_index(g);
        BoundaryFunction f(b.count());
        for (int k = 0; k < b.count(); ++k)
            f.values[k] = std::max(0.0, std::sin(M_PI * b.arc[k] / 4.0));
        const ScalarField u = harmonic_extension(g, f);
        for (int j = 1; j < g.ny - 1; ++j)
            for (int i = 1; i < g.nx - 1; ++i) CHECK(u(i, j) > 0.0);
        CHECK(max_abs(u) <= 1.0 + 1e-12);
    }
    SUBCASE("zero data") {
        const GridSpec g = build_grid_unit(9);
        const ScalarField u = harmonic_extension(g, BoundaryFunction(boundary_index(g).count()));
        CHECK(max_abs(u) == 0.0);
    }
    SUBCASE("e^y cos x converges at second order") {
        double prev_err = 0;
        int level = 0;
        for (int n : {17, 33, 65}) {
            const GridSpec g = build_grid_unit(n);
            const ScalarField exact =
                sample(g, [](double x, double y) { return std::exp(y) * std::cos(x); });
            const BoundaryFunction f = trace_of(g, [](double x, double y) { return std::exp(y) * std::cos(x); });
            const ScalarField u = harmonic_extension(g, f);
            double err = 0;
            for (size_t t = 0; t < u.v.size(); ++t)
                err = std::max(err, std::abs(u.v[t] - exact.v[t]));
            if (level++) CHECK(std::log2(prev_err / err) >= 1.9);
            prev_err = err;
        }
        CHECK(prev_err <= 5e-6);  // n = 65 absolute accuracy
    }
}

TEST_CASE("concurrent solves against one operator do not interfere") {
    const GridSpec g = build_grid_unit(33);
    DirichletSolver solver(assemble_laplacian(g, nullptr));
    const BoundaryFunction f1 = trace_of(g, [](double x, double) { return x; });
    const BoundaryFunction f2 = trace_of(g, [](double, double y) { return y * y; });
    const ScalarField ref1 = solver.solve(ScalarField(g), f1);
    const ScalarField ref2 = solver.solve(ScalarField(g), f2);
    ScalarField a, bfield;
    std::thread t1([&] { a = solver.solve(ScalarField(g), f1); });
    std::thread t2([&] { bfield = solver.solve(ScalarField(g), f2); });
    t1.join();
    t2.join();
    CHECK(a.v == ref1.v);
    CHECK(bfield.v == ref2.v);
}
