#pragma once

#include "shapeflow/mesh.hpp"

namespace shapeflow {

// Iso-surface extraction with the classic 256-case table and linear edge
// interpolation. Vertices on shared lattice edges are welded, so the output
// is watertight for generic grids (no lattice value exactly at iso). An
// all-positive or all-negative grid yields an empty mesh.
Mesh marching_cubes(const SdfGrid& grid, double iso = 0.0);

}  // namespace shapeflow
