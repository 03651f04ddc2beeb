#pragma once

#include <functional>

#include "msllg/field.hpp"
#include "msllg/mesh.hpp"
#include "msllg/sparse.hpp"

namespace msllg {

using MatrixCoefficient = std::function<Mat3(const Vec3&)>;

/// A[i][j] = int a(x) grad(phi_j) . grad(phi_i) dx with the coefficient
/// sampled at element centroids (exact for P1 when a is constant). Rows and
/// columns are dofs; periodic meshes assemble onto the identified masters.
/// Throws ValidationError when a centroid sample is not symmetric positive
/// definite.
SparseOperator assemble_stiffness(const StructuredMesh& mesh, const MatrixCoefficient& coeff);

/// Consistent (lumped=false) or row-sum-lumped (lumped=true) mass matrix.
SparseOperator assemble_mass(const StructuredMesh& mesh, bool lumped);

/// Diagonal of the lumped mass matrix as a dof vector; defines (.,.)_h.
std::vector<double> lumped_mass_vector(const StructuredMesh& mesh);

/// Quadrature rule on the reference simplex via barycentric points,
/// exact for quadratics (3 edge midpoints in 2D, 4 interior points in 3D).
struct Quadrature {
    int count = 0;
    // points[q][a]: barycentric weight of local vertex a; weights sum to 1.
    double points[4][4] = {};
    double weights[4] = {};
    static const Quadrature& simplex(int dim);
};

}  // namespace msllg
