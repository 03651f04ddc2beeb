#pragma once

#include <array>
#include <memory>
#include <vector>

#include "msllg/smallvec.hpp"

namespace msllg {

enum class Bc { periodic, neumann };

/// Boundary facet (edge in 2D, triangle in 3D) with its outward normal tag.
struct BoundaryFacet {
    std::array<int, 3> nodes{-1, -1, -1};
    int axis = 0;  // normal direction
    int side = 0;  // 0: face at coordinate 0, 1: face at coordinate 1
};

/// Uniform simplicial mesh of [0,1]^dim. Squares split along the
/// lower-left-to-upper-right diagonal, cubes into six path tetrahedra.
/// With periodic identification, nodes on max-coordinate faces alias the
/// matching node on the opposite face; dof indices run over the masters.
struct StructuredMesh {
    int dim = 2;
    int cells = 0;  // cells per side
    Bc bc = Bc::neumann;
    double h = 0.0;

    std::vector<Vec3> node_coords;
    std::vector<std::array<int, 4>> elements;  // [3] = -1 for triangles
    std::vector<BoundaryFacet> boundary_facets;

    std::vector<int> node_to_dof;
    std::vector<int> dof_to_node;
    int dof_count = 0;

    double elem_volume = 0.0;  // identical for every element
    int elem_classes = 0;      // 2 in 2D, 6 in 3D; element e has class e % elem_classes

    int node_count() const { return static_cast<int>(node_coords.size()); }
    int elem_count() const { return static_cast<int>(elements.size()); }
    int verts_per_elem() const { return dim + 1; }
    bool periodic() const { return bc == Bc::periodic; }

    /// Constant P1 shape gradient of local vertex `local` on element `e`.
    const Vec3& shape_grad(int e, int local) const { return shape_grad_[e % elem_classes][local]; }

    Vec3 centroid(int e) const;

    struct Location {
        int element = -1;
        std::array<double, 4> bary{0, 0, 0, 0};
    };
    /// Find the element containing p and its barycentric coordinates.
    /// With wrap, p is first mapped into [0,1)^dim by fractional part.
    /// Throws ValidationError for points outside the domain without wrap.
    Location locate(Vec3 p, bool wrap) const;

    /// Node index from integer grid coordinates.
    int node_at(int ix, int iy, int iz = 0) const;

    static std::shared_ptr<const StructuredMesh> build(int dim, int N, Bc bc);

    std::array<std::array<Vec3, 4>, 6> shape_grad_{};
};

using MeshPtr = std::shared_ptr<const StructuredMesh>;

/// build_mesh(dimension, N, bc): uniform simplicial mesh of [0,1]^dim.
MeshPtr build_mesh(int dim, int N, Bc bc);

}  // namespace msllg
