#include "msllg/assembly.hpp"

#include <cmath>
#include <tuple>

#include "msllg/errors.hpp"

namespace msllg {

namespace {

void check_spd(const Mat3& a, int dim) {
    for (int i = 0; i < dim; ++i)
        for (int j = i + 1; j < dim; ++j)
            if (std::abs(a(i, j) - a(j, i)) > 1e-10 * (1.0 + std::abs(a(i, j))))
                throw ValidationError("stiffness coefficient sample is not symmetric");
    // Sylvester minors for n <= 3.
    const double d1 = a(0, 0);
    const double d2 = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
    if (d1 <= 0.0 || d2 <= 0.0)
        throw ValidationError("stiffness coefficient sample is not positive definite");
    if (dim == 3) {
        const double d3 = a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1)) -
                          a(0, 1) * (a(1, 0) * a(2, 2) - a(1, 2) * a(2, 0)) +
                          a(0, 2) * (a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0));
        if (d3 <= 0.0)
            throw ValidationError("stiffness coefficient sample is not positive definite");
    }
}

}  // namespace

SparseOperator assemble_stiffness(const StructuredMesh& mesh, const MatrixCoefficient& coeff) {
    const int k = mesh.verts_per_elem();
    std::vector<std::tuple<int, int, double>> trip;
    trip.reserve(static_cast<size_t>(mesh.elem_count()) * k * k);
    for (int e = 0; e < mesh.elem_count(); ++e) {
        const Mat3 a = coeff(mesh.centroid(e));
        check_spd(a, mesh.dim);
        Vec3 ag[4];
        for (int b = 0; b < k; ++b) ag[b] = a * mesh.shape_grad(e, b);
        for (int r = 0; r < k; ++r) {
            const int i = mesh.node_to_dof[mesh.elements[e][r]];
            for (int b = 0; b < k; ++b) {
                const int j = mesh.node_to_dof[mesh.elements[e][b]];
                trip.emplace_back(i, j, mesh.elem_volume * dot(ag[b], mesh.shape_grad(e, r)));
            }
        }
    }
    SparseOperator A = SparseOperator::from_triplets(mesh.dof_count, std::move(trip));
    A.symmetric = true;
    A.constant_nullspace = true;  // no essential conditions anywhere in this suite
    return A;
}

SparseOperator assemble_mass(const StructuredMesh& mesh, bool lumped) {
    const int k = mesh.verts_per_elem();
    // Consistent local mass: |T|/((k)(k+1)) * (1 + delta_ab) in any dimension.
    const double off = mesh.elem_volume / (k * (k + 1.0));
    std::vector<std::tuple<int, int, double>> trip;
    trip.reserve(static_cast<size_t>(mesh.elem_count()) * (lumped ? k : k * k));
    for (int e = 0; e < mesh.elem_count(); ++e)
        for (int r = 0; r < k; ++r) {
            const int i = mesh.node_to_dof[mesh.elements[e][r]];
            if (lumped) {
                trip.emplace_back(i, i, mesh.elem_volume / k);
            } else {
                for (int b = 0; b < k; ++b) {
                    const int j = mesh.node_to_dof[mesh.elements[e][b]];
                    trip.emplace_back(i, j, off * (r == b ? 2.0 : 1.0));
                }
            }
        }
    SparseOperator M = SparseOperator::from_triplets(mesh.dof_count, std::move(trip));
    M.symmetric = true;
    return M;
}

std::vector<double> lumped_mass_vector(const StructuredMesh& mesh) {
    std::vector<double> d(mesh.dof_count, 0.0);
    const double share = mesh.elem_volume / mesh.verts_per_elem();
    for (int e = 0; e < mesh.elem_count(); ++e)
        for (int a = 0; a < mesh.verts_per_elem(); ++a)
            d[mesh.node_to_dof[mesh.elements[e][a]]] += share;
    return d;
}

const Quadrature& Quadrature::simplex(int dim) {
    static const Quadrature q2 = [] {
        Quadrature q;
        q.count = 3;  // edge midpoints, exact for quadratics
        const double pts[3][3] = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};
        for (int i = 0; i < 3; ++i) {
            q.weights[i] = 1.0 / 3.0;
            for (int a = 0; a < 3; ++a) q.points[i][a] = pts[i][a];
        }
        return q;
    }();
    static const Quadrature q3 = [] {
        Quadrature q;
        q.count = 4;  // interior rule, exact for quadratics
        const double alpha = 0.58541019662496852;
        const double beta = 0.13819660112501049;
        for (int i = 0; i < 4; ++i) {
            q.weights[i] = 0.25;
            for (int a = 0; a < 4; ++a) q.points[i][a] = (a == i) ? alpha : beta;
        }
        return q;
    }();
    return dim == 2 ? q2 : q3;
}

}  // namespace msllg
