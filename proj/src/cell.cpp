#include "msllg/cell.hpp"

#include <cmath>

#include "msllg/errors.hpp"

namespace msllg {

namespace {

// Load vectors are assembled with the same centroid rule as the averages in
// homogenize(), which keeps the Fredholm compatibility sums exact.

void check_solvability(std::span<const double> load, const char* what) {
    double sum = 0.0, nrm = 0.0;
    for (double v : load) {
        sum += v;
        nrm += v * v;
    }
    nrm = std::sqrt(nrm);
    if (std::abs(sum) > 1e-8 * std::max(1.0, nrm))
        throw CompatibilityError(std::string("cell right-hand side for ") + what +
                                 " is not orthogonal to constants");
}

NodalField solve_scalar(const CellWorkspace& ws, const SparseOperator& A,
                        std::vector<double> load, const char* what) {
    check_solvability(load, what);
    auto x = solve_linear(A, load, kCellSolveTol, /*zero_mean=*/true);
    return scatter_to_nodes(ws.mesh, x, 1);
}

}  // namespace

CellWorkspace::CellWorkspace(const PeriodicCoefficientSet& c, int cell_N) : coeffs(&c) {
    mesh = build_mesh(c.dim, cell_N, Bc::periodic);
    stiffness_coeff = assemble_stiffness(*mesh, c.a);
    stiffness_identity =
        assemble_stiffness(*mesh, [&](const Vec3&) { return Mat3::identity(c.dim); });
}

std::vector<NodalField> solve_chi(const CellWorkspace& ws) {
    const StructuredMesh& m = *ws.mesh;
    const int k = m.verts_per_elem();
    std::vector<NodalField> chi;
    for (int j = 0; j < m.dim; ++j) {
        std::vector<double> load(m.dof_count, 0.0);
        Vec3 ej{};
        ej[j] = 1.0;
        for (int e = 0; e < m.elem_count(); ++e) {
            const Vec3 aej = ws.coeffs->a(m.centroid(e)) * ej;
            for (int a = 0; a < k; ++a)
                load[m.node_to_dof[m.elements[e][a]]] -=
                    m.elem_volume * dot(aej, m.shape_grad(e, a));
        }
        chi.push_back(solve_scalar(ws, ws.stiffness_coeff, std::move(load), "chi"));
    }
    return chi;
}

NodalField solve_ustar(const CellWorkspace& ws) {
    const StructuredMesh& m = *ws.mesh;
    const int k = m.verts_per_elem();
    double M0 = 0.0;
    for (int e = 0; e < m.elem_count(); ++e) M0 += m.elem_volume * ws.coeffs->Ms(m.centroid(e));

    std::vector<double> load(m.dof_count, 0.0);
    for (int e = 0; e < m.elem_count(); ++e) {
        const double v = (ws.coeffs->Ms(m.centroid(e)) - M0) * m.elem_volume / k;
        for (int a = 0; a < k; ++a) load[m.node_to_dof[m.elements[e][a]]] += v;
    }
    return solve_scalar(ws, ws.stiffness_identity, std::move(load), "U*");
}

CellSolutions solve_cell_first_order(const PeriodicCoefficientSet& coeffs, int cell_N) {
    CellWorkspace ws(coeffs, cell_N);
    CellSolutions cs;
    cs.mesh = ws.mesh;
    cs.dim = coeffs.dim;
    cs.coeff_name = coeffs.name;
    cs.chi = solve_chi(ws);
    cs.ustar = solve_ustar(ws);
    return cs;
}

HomogenizedCoefficients homogenize(const PeriodicCoefficientSet& coeffs,
                                   const CellSolutions& cells) {
    if (cells.dim != coeffs.dim || cells.coeff_name != coeffs.name)
        throw ValidationError("homogenize: cell solutions do not match the coefficient set");
    const StructuredMesh& m = *cells.mesh;
    HomogenizedCoefficients h;
    h.dim = coeffs.dim;

    std::vector<std::vector<double>> chi_grad;
    for (int j = 0; j < m.dim; ++j) chi_grad.push_back(element_gradients(cells.chi[j]));
    const auto ustar_grad = element_gradients(cells.ustar);

    for (int e = 0; e < m.elem_count(); ++e) {
        const Vec3 c = m.centroid(e);
        const Mat3 a = coeffs.a(c);
        const double mu = coeffs.mu(c);
        const double Ms = coeffs.Ms(c);
        h.mu0 += m.elem_volume * mu;
        h.K0 += m.elem_volume * coeffs.K(c);
        h.M0 += m.elem_volume * Ms;
        h.Mt0 += m.elem_volume * mu * Ms;

        const Vec3 gmu = coeffs.grad_mu(c);
        for (int j = 0; j < m.dim; ++j) {
            Vec3 flux{};
            flux[j] = 1.0;
            const double* g = chi_grad[j].data() + static_cast<size_t>(e) * m.dim;
            for (int d = 0; d < m.dim; ++d) flux[d] += g[d];
            flux = a * flux;
            for (int i = 0; i < m.dim; ++i) h.a0(i, j) += m.elem_volume * flux[i];
            for (int i = 0; i < m.dim; ++i)
                h.Hd0(i, j) -=
                    m.elem_volume * gmu[i] * ustar_grad[static_cast<size_t>(e) * m.dim + j];
        }
    }
    return h;
}

Mat3 homogenized_matrix_energy_form(const PeriodicCoefficientSet& coeffs,
                                    const CellSolutions& cells) {
    const StructuredMesh& m = *cells.mesh;
    std::vector<std::vector<double>> chi_grad;
    for (int j = 0; j < m.dim; ++j) chi_grad.push_back(element_gradients(cells.chi[j]));
    Mat3 a0;
    for (int e = 0; e < m.elem_count(); ++e) {
        const Mat3 a = coeffs.a(m.centroid(e));
        Vec3 corr[3];
        for (int j = 0; j < m.dim; ++j) {
            corr[j] = Vec3{};
            corr[j][j] = 1.0;
            const double* g = chi_grad[j].data() + static_cast<size_t>(e) * m.dim;
            for (int d = 0; d < m.dim; ++d) corr[j][d] += g[d];
        }
        for (int i = 0; i < m.dim; ++i)
            for (int j = 0; j < m.dim; ++j)
                a0(i, j) += m.elem_volume * dot(a * corr[j], corr[i]);
    }
    return a0;
}

void solve_second_order(const CellWorkspace& ws, CellSolutions& cells,
                        const HomogenizedCoefficients& homog) {
    if (cells.dim != ws.coeffs->dim || cells.coeff_name != ws.coeffs->name)
        throw ValidationError("solve_second_order: mismatched coefficient set");
    const StructuredMesh& m = *cells.mesh;
    const PeriodicCoefficientSet& co = *ws.coeffs;
    const int k = m.verts_per_elem();
    const int dim = m.dim;

    std::vector<std::vector<double>> chi_grad;
    for (int j = 0; j < dim; ++j) chi_grad.push_back(element_gradients(cells.chi[j]));
    const auto ustar_grad = element_gradients(cells.ustar);

    // theta_ij: A0 theta = a0_ij - (a_ij + (a grad chi_j)_i) - div(a_{i.} chi_j)
    cells.theta.clear();
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            std::vector<double> load(m.dof_count, 0.0);
            for (int e = 0; e < m.elem_count(); ++e) {
                const Vec3 c = m.centroid(e);
                const Mat3 a = co.a(c);
                Vec3 flux{};
                flux[j] = 1.0;
                const double* g = chi_grad[j].data() + static_cast<size_t>(e) * dim;
                for (int d = 0; d < dim; ++d) flux[d] += g[d];
                const double gij = (a * flux)[i];

                double chibar = 0.0;
                for (int a_l = 0; a_l < k; ++a_l)
                    chibar += cells.chi[j].at(m.elements[e][a_l]);
                chibar /= k;

                for (int a_l = 0; a_l < k; ++a_l) {
                    const int dof = m.node_to_dof[m.elements[e][a_l]];
                    const Vec3 agrad = a * m.shape_grad(e, a_l);
                    load[dof] += (gij - homog.a0(i, j)) * m.elem_volume / k -
                                 chibar * m.elem_volume * agrad[i];
                }
            }
            cells.theta.push_back(solve_scalar(ws, ws.stiffness_coeff, std::move(load), "theta"));
        }

    auto zero_order_load = [&](auto&& density, const char* what) {
        std::vector<double> load(m.dof_count, 0.0);
        for (int e = 0; e < m.elem_count(); ++e) {
            const double v = -density(m.centroid(e)) * m.elem_volume / k;
            for (int a_l = 0; a_l < k; ++a_l) load[m.node_to_dof[m.elements[e][a_l]]] += v;
        }
        return solve_scalar(ws, ws.stiffness_coeff, std::move(load), what);
    };

    cells.rho = zero_order_load([&](const Vec3& c) { return co.mu(c) - homog.mu0; }, "rho");
    cells.kappa = zero_order_load([&](const Vec3& c) { return co.K(c) - homog.K0; }, "kappa");
    if (dim == 2)
        cells.beta = zero_order_load(
            [&](const Vec3& c) { return co.mu(c) * co.Ms(c) - homog.Mt0; }, "beta");

    // lambda_ij: A0 lambda = mu d_i d_j U* - Hd0_ij, with the Hessian term
    // integrated by parts against the analytic gradient of mu.
    cells.lambda.clear();
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
            std::vector<double> load(m.dof_count, 0.0);
            for (int e = 0; e < m.elem_count(); ++e) {
                const Vec3 c = m.centroid(e);
                const double mu = co.mu(c);
                const Vec3 gmu = co.grad_mu(c);
                const double du = ustar_grad[static_cast<size_t>(e) * dim + j];
                for (int a_l = 0; a_l < k; ++a_l) {
                    const int dof = m.node_to_dof[m.elements[e][a_l]];
                    load[dof] += du * (gmu[i] * m.elem_volume / k +
                                       mu * m.shape_grad(e, a_l)[i] * m.elem_volume) +
                                 homog.Hd0(i, j) * m.elem_volume / k;
                }
            }
            cells.lambda.push_back(
                solve_scalar(ws, ws.stiffness_coeff, std::move(load), "lambda"));
        }

    cells.second_order_done = true;
}

CellSuite solve_cell_suite(const PeriodicCoefficientSet& coeffs, int cell_N) {
    CellWorkspace ws(coeffs, cell_N);
    CellSuite s;
    s.cells.mesh = ws.mesh;
    s.cells.dim = coeffs.dim;
    s.cells.coeff_name = coeffs.name;
    s.cells.chi = solve_chi(ws);
    s.cells.ustar = solve_ustar(ws);
    s.homog = homogenize(coeffs, s.cells);
    solve_second_order(ws, s.cells, s.homog);
    return s;
}

}  // namespace msllg
