#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fcald/grid.hpp"

namespace fcald {

/// Ordered boundary traversal: counterclockwise from the origin corner
/// (bottom row, right column, top row, left column). Each boundary node
/// appears exactly once; total count 2*nx + 2*ny - 4.
///
/// Corner nodes carry weight h/2 per incident side (h total) and participate
/// in Dirichlet data, but are excluded from normal-derivative output and from
/// boundary pairings: the outward normal is undefined there.
struct BoundaryIndex {
    const GridSpec grid;
    std::vector<int> i;            ///< x index per boundary node
    std::vector<int> j;            ///< y index per boundary node
    std::vector<int> node_id;      ///< linear grid id
    std::vector<double> weight;    ///< arc-length quadrature weight
    std::vector<double> arc;       ///< arc-length coordinate from origin corner
    std::vector<std::array<int, 2>> normal;  ///< outward unit normal (axis-aligned)
    std::vector<bool> corner;

    int count() const { return static_cast<int>(node_id.size()); }
    double perimeter() const;
};

BoundaryIndex boundary_index(const GridSpec& g);

/// Subset of boundary nodes (positions into the BoundaryIndex ordering).
struct SupportMask {
    std::vector<int> positions;  ///< sorted, unique

    bool contains(int pos) const;
    bool empty() const { return positions.empty(); }
    friend bool operator==(const SupportMask&, const SupportMask&) = default;
};

/// Side selector: "left", "right", "top", "bottom", "all", combinations
/// joined with '+' ("left+top"), or an arc range "arc:s0,s1" in arc-length
/// units. Shared corners are counted once.
SupportMask restrict_mask(const BoundaryIndex& b, const std::string& selector);

/// Values on boundary nodes in BoundaryIndex order, optionally supported on a
/// mask (values vanish outside it).
struct BoundaryFunction {
    std::vector<double> values;
    std::optional<SupportMask> mask;

    BoundaryFunction() = default;
    explicit BoundaryFunction(int n, double fill = 0.0) : values(n, fill) {}

    int count() const { return static_cast<int>(values.size()); }
    void apply_mask();  ///< zero values outside the mask, if one is set
};

BoundaryFunction operator+(const BoundaryFunction& a, const BoundaryFunction& b);
BoundaryFunction operator-(const BoundaryFunction& a, const BoundaryFunction& b);
BoundaryFunction operator*(double s, const BoundaryFunction& f);
double max_abs(const BoundaryFunction& f);

/// Restriction of the trace of a grid field to the boundary ordering.
BoundaryFunction trace(const BoundaryIndex& b, const ScalarField& u);

}  // namespace fcald
