#include "msllg/reconstruct.hpp"

#include <cmath>

#include "msllg/assembly.hpp"
#include "msllg/errors.hpp"
#include "msllg/sparse.hpp"

namespace msllg {

namespace {

double lumped_mean(const StructuredMesh& m, const std::vector<double>& lump,
                   const NodalField& f) {
    double s = 0.0;
    for (int d = 0; d < m.dof_count; ++d) s += lump[d] * f.at(m.dof_to_node[d]);
    return s;
}

}  // namespace

NeumannCorrector neumann_corrector(const MeshPtr& mesh, const PeriodicCoefficientSet& coeffs,
                                   const HomogenizedCoefficients& homog, int n_periods) {
    const StructuredMesh& m = *mesh;
    if (m.periodic()) throw ValidationError("the Neumann corrector lives on a Neumann mesh");
    if (n_periods < 1) throw ValidationError("neumann_corrector: n_periods must be >= 1");
    const double epsinv = static_cast<double>(n_periods);
    const auto A = assemble_stiffness(m, [&](const Vec3& x) { return coeffs.a(epsinv * x); });
    const auto lump = lumped_mass_vector(m);
    const int k = m.verts_per_elem();

    NeumannCorrector nc;
    for (int i = 0; i < m.dim; ++i) {
        Vec3 ei{};
        ei[i] = 1.0;
        const Vec3 flux = homog.a0 * ei;
        std::vector<double> load(m.dof_count, 0.0);
        for (int e = 0; e < m.elem_count(); ++e)
            for (int a = 0; a < k; ++a)
                load[m.node_to_dof[m.elements[e][a]]] +=
                    m.elem_volume * dot(flux, m.shape_grad(e, a));
        auto z = solve_linear(A, load, kCellSolveTol, /*zero_mean=*/true);
        NodalField phi = scatter_to_nodes(mesh, z, 1);

        NodalField xi(mesh, 1);
        for (int node = 0; node < m.node_count(); ++node) xi.at(node) = m.node_coords[node][i];
        const double shift = lumped_mean(m, lump, xi) - lumped_mean(m, lump, phi);
        for (double& v : phi.values) v += shift;
        nc.mean_shift[i] = shift;
        nc.phi.push_back(std::move(phi));
    }
    return nc;
}

NodalField first_order_corrector(const NodalField& m0, const CellSolutions& cells, double eps) {
    if (cells.chi.empty()) throw ValidationError("first_order_corrector: chi is missing");
    const StructuredMesh& m = *m0.mesh;
    if (cells.dim != m.dim) throw ValidationError("first_order_corrector: dimension mismatch");
    const NodalField grad = recover_nodal_gradient(m0);
    const double epsinv = 1.0 / eps;
    NodalField m1(m0.mesh, 3);
    for (int node = 0; node < m.node_count(); ++node) {
        const Vec3 y = epsinv * m.node_coords[node];
        Vec3 v{};
        for (int j = 0; j < m.dim; ++j) {
            const double chij = cells.chi[j].eval(y, 0, /*wrap=*/true);
            for (int c = 0; c < 3; ++c) v[c] += chij * grad.at(node, c * m.dim + j);
        }
        m1.set_vec(node, v);
    }
    return m1;
}

NodalField second_order_corrector(const NodalField& m0, const CellSolutions& cells, double eps,
                                  const ReconstructOptions& opt) {
    if (!cells.second_order_done)
        throw ValidationError("second_order_corrector: second-order cell fields are missing");
    if (!opt.drop_macro_potential)
        throw ValidationError(
            "second_order_corrector: the macro stray potential U0 is out of scope; "
            "its T_low term cannot be enabled");
    const StructuredMesh& m = *m0.mesh;
    if (cells.dim != m.dim) throw ValidationError("second_order_corrector: dimension mismatch");
    const int dim = m.dim;
    const double epsinv = 1.0 / eps;

    const NodalField grad = recover_nodal_gradient(m0);   // comps 3*dim: c*dim + j
    const NodalField hess = recover_nodal_gradient(grad);  // comps 3*dim*dim: (c*dim+j)*dim + i

    NodalField m2(m0.mesh, 3);
    for (int node = 0; node < m.node_count(); ++node) {
        const Vec3 y = epsinv * m.node_coords[node];
        const auto loc = cells.mesh->locate(y, /*wrap=*/true);
        auto cell_at = [&](const NodalField& f) {
            double s = 0.0;
            for (int a = 0; a < cells.mesh->verts_per_elem(); ++a)
                s += loc.bary[a] * f.at(cells.mesh->elements[loc.element][a]);
            return s;
        };

        const Vec3 mv = m0.vec(node);
        Vec3 out{};

        // div_x(theta grad_x m0): sum_ij theta_ij d_i d_j m0
        double theta_val[3][3];
        double chi_val[3];
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) theta_val[i][j] = cell_at(cells.theta[i * dim + j]);
        for (int j = 0; j < dim; ++j) chi_val[j] = cell_at(cells.chi[j]);

        for (int c = 0; c < 3; ++c) {
            double s = 0.0;
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j)
                    s += theta_val[i][j] * hess.at(node, (c * dim + j) * dim + i);
            out[c] += s;
        }

        // sphere-keeping scalar term: the geometric ansatz m0.m2 = -|m1|^2/2
        // forces sum_ij (theta_ij - chi_i chi_j / 2)(d_i m0 . d_j m0)
        double S = 0.0;
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) {
                double gij = 0.0;
                for (int c = 0; c < 3; ++c)
                    gij += grad.at(node, c * dim + i) * grad.at(node, c * dim + j);
                S += (theta_val[i][j] - 0.5 * chi_val[i] * chi_val[j]) * gij;
            }
        out += S * mv;

        // projected low-order block (rho grad U0 forced to zero)
        Vec3 tlow{};
        tlow -= cell_at(cells.kappa) * dot(mv, opt.easy_axis) * opt.easy_axis;
        if (dim == 2 && cells.beta.mesh) tlow += cell_at(cells.beta) * mv.z * Vec3{0, 0, 1};
        {
            Vec3 lam{};
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j)
                    lam[i] += cell_at(cells.lambda[i * dim + j]) * mv[j];
            tlow += lam;
        }
        tlow += cell_at(cells.ustar) * opt.applied_field;
        out += tlow - dot(mv, tlow) * mv;

        m2.set_vec(node, out);
    }
    return m2;
}

NodalField assemble_two_scale(const NodalField& m0, const NodalField* m1, const NodalField* m2,
                              double eps, int order) {
    if (order < 0 || order > 2) throw ValidationError("assemble_two_scale: order must be 0..2");
    NodalField out = m0;
    if (order >= 1) {
        if (!m1 || m1->mesh.get() != m0.mesh.get())
            throw ValidationError("assemble_two_scale: m1 missing or on a different mesh");
        for (size_t i = 0; i < out.values.size(); ++i) out.values[i] += eps * m1->values[i];
    }
    if (order >= 2) {
        if (!m2 || m2->mesh.get() != m0.mesh.get())
            throw ValidationError("assemble_two_scale: m2 missing or on a different mesh");
        for (size_t i = 0; i < out.values.size(); ++i) out.values[i] += eps * eps * m2->values[i];
    }
    return out;
}

}  // namespace msllg
