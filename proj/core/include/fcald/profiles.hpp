#pragma once

#include <string>

#include "fcald/boundary.hpp"
#include "fcald/grid.hpp"

namespace fcald {

/// Synthesize an interior coefficient field from a profile string:
///   "constant:1.0"
///   "gaussian:center=(0.5,0.5),sigma=0.15,amp=1"
///   "bumps:amp=1,sigma=0.12,centers=(0.3,0.35)|(0.7,0.6)"
/// Anything containing '/' or ending in ".csv" is loaded as a field CSV
/// (see io.hpp) and must match the grid shape.
ScalarField synth_profile(const GridSpec& g, const std::string& profile);

/// Boundary data profiles over the arc-length coordinate s (perimeter units):
///   "constant:<c>"            f = c
///   "cos:freq=<m>,amp=<a>"    f = a cos(m*pi*s)
///   "sin:freq=<m>,amp=<a>"    f = a sin(m*pi*s)
/// Integer freq makes sin vanish at all four corners.
BoundaryFunction boundary_profile(const BoundaryIndex& b, const std::string& profile);

}  // namespace fcald
