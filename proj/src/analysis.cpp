#include "msllg/analysis.hpp"

#include <cmath>

#include "msllg/assembly.hpp"
#include "msllg/errors.hpp"

namespace msllg {

double H1Norm::full() const { return std::sqrt(l2 * l2 + semi * semi); }

double field_norm_l2(const NodalField& f) {
    const StructuredMesh& m = *f.mesh;
    const auto& quad = Quadrature::simplex(m.dim);
    const int k = m.verts_per_elem();
    double s = 0.0;
    for (int e = 0; e < m.elem_count(); ++e)
        for (int q = 0; q < quad.count; ++q) {
            double v2 = 0.0;
            for (int c = 0; c < f.comps; ++c) {
                double v = 0.0;
                for (int a = 0; a < k; ++a)
                    v += quad.points[q][a] * f.at(m.elements[e][a], c);
                v2 += v * v;
            }
            s += m.elem_volume * quad.weights[q] * v2;
        }
    return std::sqrt(s);
}

H1Norm field_norm_h1(const NodalField& f) {
    H1Norm n;
    n.l2 = field_norm_l2(f);
    const StructuredMesh& m = *f.mesh;
    const auto eg = element_gradients(f);
    double s = 0.0;
    for (int e = 0; e < m.elem_count(); ++e) {
        const double* g = eg.data() + static_cast<size_t>(e) * f.comps * m.dim;
        double v = 0.0;
        for (int i = 0; i < f.comps * m.dim; ++i) v += g[i] * g[i];
        s += m.elem_volume * v;
    }
    n.semi = std::sqrt(s);
    return n;
}

double error_l2(const NodalField& ref, const NodalField& approx) {
    if (ref.mesh.get() != approx.mesh.get() || ref.comps != approx.comps)
        throw ValidationError("error_l2: fields are not comparable (mesh or components differ)");
    NodalField d = ref;
    for (size_t i = 0; i < d.values.size(); ++i) d.values[i] -= approx.values[i];
    return field_norm_l2(d);
}

double error_h1_corrected(const NodalField& ref, const NodalField& m0, CorrectorKind kind,
                          const CellSolutions* cells, const std::vector<NodalField>* phi,
                          double eps, H1Norm* parts, bool hessian_term) {
    if (ref.mesh.get() != m0.mesh.get())
        throw ValidationError("error_h1_corrected: fields are not on the same mesh");
    if (kind == CorrectorKind::chi && (!cells || cells->chi.empty()))
        throw ValidationError("error_h1_corrected: chi corrector requested without cells");
    if (kind == CorrectorKind::neumann && (!phi || phi->empty()))
        throw ValidationError("error_h1_corrected: Neumann corrector requested without Phi");

    const StructuredMesh& m = *ref.mesh;
    const int dim = m.dim;
    const int k = m.verts_per_elem();
    const auto& quad = Quadrature::simplex(dim);
    const double epsinv = kind == CorrectorKind::chi ? 1.0 / eps : 0.0;

    const NodalField grad0 = recover_nodal_gradient(m0);   // G_j, comps 3*dim
    const auto grad_ref = element_gradients(ref);
    const auto grad_m0 = element_gradients(m0);
    const auto grad_G = element_gradients(grad0);  // d_k G_(c,j), elementwise

    std::vector<const NodalField*> phi_fields;
    std::vector<std::vector<double>> phi_grads;
    if (kind == CorrectorKind::neumann)
        for (int j = 0; j < dim; ++j) {
            phi_fields.push_back(&(*phi)[j]);
            phi_grads.push_back(element_gradients((*phi)[j]));
        }

    double l2 = 0.0, semi = 0.0;
    for (int e = 0; e < m.elem_count(); ++e) {
        for (int q = 0; q < quad.count; ++q) {
            Vec3 x{};
            Vec3 dref{}, dm0{};
            double G[3][3] = {};
            for (int a = 0; a < k; ++a) {
                const int node = m.elements[e][a];
                const double w = quad.points[q][a];
                x += w * m.node_coords[node];
                dref += w * ref.vec(node);
                dm0 += w * m0.vec(node);
                for (int c = 0; c < 3; ++c)
                    for (int j = 0; j < dim; ++j) G[c][j] += w * grad0.at(node, c * dim + j);
            }

            // corrector weights w_j and their spatial gradients at x
            double wj[3] = {0, 0, 0};
            double dwj[3][3] = {};  // dwj[j][k] = d_k w_j
            if (kind == CorrectorKind::chi) {
                const Vec3 y = epsinv * x;
                const auto loc = cells->mesh->locate(y, /*wrap=*/true);
                for (int j = 0; j < dim; ++j) {
                    double chi = 0.0;
                    Vec3 gchi{};
                    for (int a = 0; a < cells->mesh->verts_per_elem(); ++a) {
                        const int cn = cells->mesh->elements[loc.element][a];
                        chi += loc.bary[a] * cells->chi[j].at(cn);
                        gchi += cells->chi[j].at(cn) * cells->mesh->shape_grad(loc.element, a);
                    }
                    wj[j] = eps * chi;
                    for (int d = 0; d < dim; ++d) dwj[j][d] = gchi[d];  // eps * (1/eps) cancels
                }
            } else if (kind == CorrectorKind::neumann) {
                for (int j = 0; j < dim; ++j) {
                    double p = 0.0;
                    for (int a = 0; a < k; ++a)
                        p += quad.points[q][a] * phi_fields[j]->at(m.elements[e][a]);
                    wj[j] = p - x[j];
                    for (int d = 0; d < dim; ++d)
                        dwj[j][d] = phi_grads[j][static_cast<size_t>(e) * dim + d] -
                                    (d == j ? 1.0 : 0.0);
                }
            }

            Vec3 dq = dref - dm0;
            for (int j = 0; j < dim; ++j)
                for (int c = 0; c < 3; ++c) dq[c] -= wj[j] * G[c][j];
            l2 += m.elem_volume * quad.weights[q] * dot(dq, dq);

            for (int d = 0; d < dim; ++d) {
                Vec3 gd{};
                for (int c = 0; c < 3; ++c) {
                    double v = grad_ref[(static_cast<size_t>(e) * 3 + c) * dim + d] -
                               grad_m0[(static_cast<size_t>(e) * 3 + c) * dim + d];
                    for (int j = 0; j < dim; ++j) {
                        v -= dwj[j][d] * G[c][j];
                        if (hessian_term)
                            v -= wj[j] *
                                 grad_G[(static_cast<size_t>(e) * 3 * dim + c * dim + j) * dim + d];
                    }
                    gd[c] = v;
                }
                semi += m.elem_volume * quad.weights[q] * dot(gd, gd);
            }
        }
    }
    H1Norm n;
    n.l2 = std::sqrt(l2);
    n.semi = std::sqrt(semi);
    if (parts) *parts = n;
    return n.full();
}

double fit_order(const std::vector<std::pair<double, double>>& eps_err) {
    if (eps_err.size() < 2) throw ValidationError("fit_order: need at least two samples");
    double x0 = std::log(eps_err.front().first);
    bool distinct = false;
    for (const auto& [e, v] : eps_err) {
        if (e <= 0.0 || v <= 0.0)
            throw ValidationError("fit_order: eps and errors must be positive");
        if (std::abs(std::log(e) - x0) > 1e-14) distinct = true;
    }
    if (!distinct) throw ValidationError("fit_order: need at least two distinct eps values");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(eps_err.size());
    for (const auto& [e, v] : eps_err) {
        const double x = std::log(e), y = std::log(v);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace msllg
