#include <doctest.h>

#include <cmath>
#include <set>

#include "fcald/boundary.hpp"
#include "fcald/grid.hpp"
#include "fcald/profiles.hpp"

using namespace fcald;

TEST_CASE("build_grid spacing") {
    CHECK(build_grid_unit(9).h == doctest::Approx(0.125).epsilon(1e-15));
    CHECK(build_grid_unit(65).h == doctest::Approx(1.0 / 64).epsilon(1e-15));
    CHECK(build_grid(0, 0, 2, 2, 9).h == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(build_grid_unit(9).width() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(build_grid_unit(7), ConfigError);
    CHECK_THROWS_AS(build_grid(0, 0, 1, 2, 9), ConfigError);
}

TEST_CASE("grid json round trip") {
    const GridSpec g = build_grid(0, 0, 2, 2, 17);
    const GridSpec g2 = GridSpec::from_json(g.to_json());
    CHECK(g == g2);
}

TEST_CASE("boundary index counts and weights") {
    for (int n : {9, 33}) {
        const GridSpec g = build_grid_unit(n);
        const BoundaryIndex b = boundary_index(g);
        CHECK(b.count() == 4 * n - 4);
        CHECK(b.perimeter() == doctest::Approx(4.0).epsilon(1e-12));
    }
    CHECK(boundary_index(build_grid_unit(9)).count() == 32);
}

TEST_CASE("node partition: interior xor boundary, each boundary node once") {
    const GridSpec g = build_grid_unit(11);
    const BoundaryIndex b = boundary_index(g);
    std::set<int> bset(b.node_id.begin(), b.node_id.end());
    CHECK(static_cast<int>(bset.size()) == b.count());
    int interior = 0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            const bool isb = bset.count(g.id(i, j)) > 0;
            CHECK(isb == g.is_boundary(i, j));
            if (!isb) ++interior;
        }
    CHECK(interior == g.interior_count());
}

TEST_CASE("boundary normals axis-aligned, corners flagged") {
    const GridSpec g = build_grid_unit(9);
    const BoundaryIndex b = boundary_index(g);
    int corners = 0;
    for (int k = 0; k < b.count(); ++k) {
        const auto [nx, ny] = b.normal[k];
        CHECK(std::abs(nx) + std::abs(ny) == 1);
        if (b.corner[k]) ++corners;
    }
    CHECK(corners == 4);
}

TEST_CASE("boundary quadrature integrates constants exactly") {
    const GridSpec g = build_grid_unit(17);
    const BoundaryIndex b = boundary_index(g);
    double s = 0;
    for (int k = 0; k < b.count(); ++k) s += b.weight[k];
    CHECK(s == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("interior quadrature exact for constants") {
    const GridSpec g = build_grid(0, 0, 2, 2, 21);
    CHECK(integrate(g, ScalarField(g, 1.0)) == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("restrict_mask selectors") {
    const GridSpec g = build_grid_unit(9);
    const BoundaryIndex b = boundary_index(g);
    CHECK(restrict_mask(b, "left").positions.size() == 9);
    CHECK(restrict_mask(b, "all").positions.size() == 32);
    CHECK(restrict_mask(b, "left+top").positions.size() == 17);  // shared corner once
    CHECK_THROWS_AS(restrict_mask(b, "arc:9,10"), ConfigError);
    CHECK(restrict_mask(b, "arc:0,1").positions.size() == 9);  // bottom side span
}

TEST_CASE("profiles: constant, gaussian peak, bumps") {
    const GridSpec g = build_grid_unit(9);
    const ScalarField c = synth_profile(g, "constant:1.0");
    CHECK(c(4, 4) == 1.0);
    const ScalarField ga = synth_profile(g, "gaussian:center=(0.5,0.5),sigma=0.15,amp=1");
    CHECK(ga(4, 4) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(max_abs(ga) == doctest::Approx(1.0).epsilon(1e-14));
    const ScalarField bu =
        synth_profile(g, "bumps:amp=1,sigma=0.1,centers=(0.25,0.25)|(0.75,0.75)");
    CHECK(bu(2, 2) > 0.9);
    CHECK(bu(6, 6) > 0.9);
    CHECK_THROWS_AS(synth_profile(g, "nope:1"), ConfigError);
}
