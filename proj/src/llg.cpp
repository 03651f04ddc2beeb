#include "msllg/llg.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "msllg/errors.hpp"
#include "msllg/sparse.hpp"

namespace msllg {

namespace {

inline Vec3 load3(std::span<const double> v, int i) {
    return {v[3 * i], v[3 * i + 1], v[3 * i + 2]};
}
inline void store3(std::span<double> v, int i, const Vec3& x) {
    v[3 * i] = x.x;
    v[3 * i + 1] = x.y;
    v[3 * i + 2] = x.z;
}

// y = A x for interleaved 3-component dof vectors, scalar CSR blocks.
void mul3(const SparseOperator& A, std::span<const double> x, std::span<double> y) {
    for (int i = 0; i < A.n; ++i) {
        double s0 = 0.0, s1 = 0.0, s2 = 0.0;
        for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
            const double a = A.val[k];
            const int j = A.col[k];
            s0 += a * x[3 * j];
            s1 += a * x[3 * j + 1];
            s2 += a * x[3 * j + 2];
        }
        y[3 * i] = s0;
        y[3 * i + 1] = s1;
        y[3 * i + 2] = s2;
    }
}

// [v]_x w = v x w
Mat3 cross_matrix(const Vec3& v) {
    Mat3 m;
    m(0, 1) = -v.z;
    m(0, 2) = v.y;
    m(1, 0) = v.z;
    m(1, 2) = -v.x;
    m(2, 0) = -v.y;
    m(2, 1) = v.x;
    return m;
}

Mat3 mat_mul(const Mat3& a, const Mat3& b) {
    Mat3 r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += a(i, k) * b(k, j);
            r(i, j) = s;
        }
    return r;
}

bool invert3(const Mat3& a, Mat3& inv) {
    const double c00 = a(1, 1) * a(2, 2) - a(1, 2) * a(2, 1);
    const double c01 = a(1, 2) * a(2, 0) - a(1, 0) * a(2, 2);
    const double c02 = a(1, 0) * a(2, 1) - a(1, 1) * a(2, 0);
    const double det = a(0, 0) * c00 + a(0, 1) * c01 + a(0, 2) * c02;
    if (std::abs(det) < 1e-300) return false;
    const double d = 1.0 / det;
    inv(0, 0) = c00 * d;
    inv(0, 1) = (a(0, 2) * a(2, 1) - a(0, 1) * a(2, 2)) * d;
    inv(0, 2) = (a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1)) * d;
    inv(1, 0) = c01 * d;
    inv(1, 1) = (a(0, 0) * a(2, 2) - a(0, 2) * a(2, 0)) * d;
    inv(1, 2) = (a(0, 2) * a(1, 0) - a(0, 0) * a(1, 2)) * d;
    inv(2, 0) = c02 * d;
    inv(2, 1) = (a(0, 1) * a(2, 0) - a(0, 0) * a(2, 1)) * d;
    inv(2, 2) = (a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0)) * d;
    return true;
}

}  // namespace

LlgSolver::LlgSolver(const ModelSpec& spec) : spec_(spec) {
    if (!spec_.mesh) throw ValidationError("llg model needs a mesh");
    if (!spec_.coeffs) throw ValidationError("llg model needs a coefficient set");
    if (spec_.alpha <= 0.0) throw ValidationError("damping constant must be positive");
    if (spec_.scale == Scale::multiscale && spec_.n_periods < 1)
        throw ValidationError("multiscale model needs n_periods >= 1");
    if (spec_.scale == Scale::homogenized && !spec_.homog)
        throw ValidationError("homogenized model needs homogenized coefficients");
    if (spec_.terms.stray2d && spec_.mesh->dim != 2)
        throw ValidationError("the degenerate stray term is a thin-film (2D) reduction");

    const StructuredMesh& m = *spec_.mesh;
    const double epsinv = static_cast<double>(spec_.n_periods);

    if (spec_.terms.exchange) {
        if (spec_.scale == Scale::multiscale) {
            const auto& co = *spec_.coeffs;
            stiffness_ = assemble_stiffness(m, [&co, epsinv](const Vec3& x) {
                return co.a(epsinv * x);
            });
        } else {
            const Mat3 a0 = spec_.homog->a0;
            stiffness_ = assemble_stiffness(m, [a0](const Vec3&) { return a0; });
        }
    }
    lumped_ = lumped_mass_vector(m);
    q_ = (1.0 + spec_.alpha * spec_.alpha) / 4.0;

    K_node_.assign(m.dof_count, 0.0);
    stray_node_.assign(m.dof_count, 0.0);
    zeeman_node_.assign(m.dof_count, Vec3{});
    for (int d = 0; d < m.dof_count; ++d) {
        const Vec3 x = m.node_coords[m.dof_to_node[d]];
        if (spec_.scale == Scale::multiscale) {
            const Vec3 y = epsinv * x;
            if (spec_.terms.anisotropy) K_node_[d] = spec_.coeffs->K(y);
            if (spec_.terms.stray2d) stray_node_[d] = spec_.coeffs->mu(y) * spec_.coeffs->Ms(y);
            if (spec_.terms.zeeman)
                zeeman_node_[d] = spec_.coeffs->Ms(y) * spec_.coeffs->applied_field;
        } else {
            if (spec_.terms.anisotropy) K_node_[d] = spec_.homog->K0;
            if (spec_.terms.stray2d) stray_node_[d] = spec_.homog->Mt0;
            if (spec_.terms.zeeman)
                zeeman_node_[d] = spec_.homog->M0 * spec_.coeffs->applied_field;
        }
    }
}

double LlgSolver::original_dt_bound() const {
    const double h = spec_.mesh->h;
    return h * h / (10.0 * (1.0 + spec_.alpha * spec_.alpha));
}

double LlgSolver::lumped_norm(std::span<const double> dof3) const {
    double s = 0.0;
    for (int i = 0; i < spec_.mesh->dof_count; ++i) {
        const Vec3 v = load3(dof3, i);
        s += lumped_[i] * dot(v, v);
    }
    return std::sqrt(s);
}

void LlgSolver::linear_field_part(std::span<const double> w, std::span<double> out) const {
    const int n = spec_.mesh->dof_count;
    if (spec_.terms.exchange) {
        mul3(stiffness_, w, out);
        for (int i = 0; i < n; ++i) {
            const double inv = -1.0 / lumped_[i];
            out[3 * i] *= inv;
            out[3 * i + 1] *= inv;
            out[3 * i + 2] *= inv;
        }
    } else {
        for (size_t i = 0; i < out.size(); ++i) out[i] = 0.0;
    }
    const Vec3 u = spec_.coeffs->easy_axis;
    for (int i = 0; i < n; ++i) {
        Vec3 h = load3(out, i);
        const Vec3 wi = load3(w, i);
        if (spec_.terms.anisotropy) h -= K_node_[i] * dot(wi, u) * u;
        if (spec_.terms.stray2d) h += stray_node_[i] * wi.z * Vec3{0.0, 0.0, 1.0};
        store3(out, i, h);
    }
}

void LlgSolver::full_field(std::span<const double> m, std::span<double> out) const {
    linear_field_part(m, out);
    if (spec_.terms.zeeman)
        for (int i = 0; i < spec_.mesh->dof_count; ++i)
            store3(out, i, load3(out, i) + zeeman_node_[i]);
}

NodalField LlgSolver::effective_field(const NodalField& m) const {
    if (m.mesh.get() != spec_.mesh.get())
        throw ValidationError("effective_field: field lives on a different mesh");
    auto md = restrict_to_dofs(m);
    std::vector<double> h(md.size());
    full_field(md, h);
    return scatter_to_nodes(spec_.mesh, h, 3);
}

double LlgSolver::discrete_energy(const NodalField& m) const {
    if (m.mesh.get() != spec_.mesh.get())
        throw ValidationError("discrete_energy: field lives on a different mesh");
    const StructuredMesh& mesh = *spec_.mesh;
    const double epsinv = static_cast<double>(spec_.n_periods);
    const bool multi = spec_.scale == Scale::multiscale;
    const auto& quad = Quadrature::simplex(mesh.dim);
    const int k = mesh.verts_per_elem();
    const Vec3 u = spec_.coeffs->easy_axis;

    double E = 0.0;
    for (int e = 0; e < mesh.elem_count(); ++e) {
        if (spec_.terms.exchange) {
            Vec3 grad[3];  // gradient of each magnetization component
            for (int a = 0; a < k; ++a) {
                const Vec3 g = mesh.shape_grad(e, a);
                const Vec3 mv = m.vec(mesh.elements[e][a]);
                for (int c = 0; c < 3; ++c) grad[c] += mv[c] * g;
            }
            const Mat3 a_here = multi ? spec_.coeffs->a(epsinv * mesh.centroid(e)) : spec_.homog->a0;
            double s = 0.0;
            for (int c = 0; c < 3; ++c) s += dot(a_here * grad[c], grad[c]);
            E += 0.5 * mesh.elem_volume * s;
        }
        if (spec_.terms.anisotropy || spec_.terms.stray2d || spec_.terms.zeeman) {
            for (int qp = 0; qp < quad.count; ++qp) {
                Vec3 x{}, mv{};
                for (int a = 0; a < k; ++a) {
                    x += quad.points[qp][a] * mesh.node_coords[mesh.elements[e][a]];
                    mv += quad.points[qp][a] * m.vec(mesh.elements[e][a]);
                }
                const double w = mesh.elem_volume * quad.weights[qp];
                const Vec3 y = epsinv * x;
                if (spec_.terms.anisotropy) {
                    const double K = multi ? spec_.coeffs->K(y) : spec_.homog->K0;
                    E += w * 0.5 * K * dot(mv, u) * dot(mv, u);
                }
                if (spec_.terms.stray2d) {
                    const double s =
                        multi ? spec_.coeffs->mu(y) * spec_.coeffs->Ms(y) : spec_.homog->Mt0;
                    E -= w * 0.5 * s * mv.z * mv.z;
                }
                if (spec_.terms.zeeman) {
                    const double M = multi ? spec_.coeffs->Ms(y) : spec_.homog->M0;
                    E -= w * M * dot(spec_.coeffs->applied_field, mv);
                }
            }
        }
    }
    return E;
}

LlgSolver::StepResult LlgSolver::step(const NodalField& m, double dt, Scheme scheme,
                                      double threshold, int max_iter) const {
    if (m.mesh.get() != spec_.mesh.get())
        throw ValidationError("step: field lives on a different mesh");
    if (dt <= 0.0) throw ValidationError("step: dt must be positive");
    if (scheme == Scheme::original && dt > original_dt_bound())
        std::fprintf(stderr,
                     "warning: dt=%.3g exceeds the original iteration's uniqueness bound %.3g\n",
                     dt, original_dt_bound());

    const auto t0 = std::chrono::steady_clock::now();
    const int n = spec_.mesh->dof_count;
    const int n3 = 3 * n;
    const double inv_dt = 1.0 / dt;
    const double adt = spec_.alpha * inv_dt;

    std::vector<double> mj = restrict_to_dofs(m);
    std::vector<double> hj(n3);
    full_field(mj, hj);

    std::vector<double> ml = mj;  // iterate l = 0
    std::vector<double> hl(n3), hf(n3), mc(n3), rhs(n3), lbuf(n3), w(n3);
    std::vector<Mat3> block_inv(n);

    IterationStats stats;
    const Mat3 I3 = Mat3::identity(3);
    const std::vector<double> diagA =
        spec_.terms.exchange ? stiffness_.diagonal() : std::vector<double>(n, 0.0);
    const Vec3 u = spec_.coeffs->easy_axis;

    for (int l = 0; l < max_iter; ++l) {
        // Frozen fields for this inner iteration. The original iteration
        // evaluates h_eff only at old iterates (its inner system is nodal,
        // and its contraction needs dt <~ h^2); the improved one keeps the
        // stiff exchange operator on the unknown.
        if (scheme == Scheme::original) {
            full_field(ml, hl);
            for (int i = 0; i < n3; ++i) hf[i] = hl[i] + hj[i];
        } else {
            for (int i = 0; i < n3; ++i) hf[i] = hj[i];
            for (int i = 0; i < n3; ++i) mc[i] = ml[i] + mj[i];
        }

        for (int i = 0; i < n; ++i) {
            const Vec3 mji = load3(mj, i);
            Vec3 r = inv_dt * mji - q_ * cross(mji, load3(hj, i));
            if (scheme == Scheme::original) {
                r -= q_ * cross(mji, load3(hf, i) - load3(hj, i));  // m_j x h(m_l)
            } else if (spec_.terms.zeeman) {
                r -= q_ * cross(load3(mc, i), zeeman_node_[i]);
            }
            store3(rhs, i, r);

            Mat3 B = inv_dt * I3;
            B += (-adt) * cross_matrix(mji);
            B += (-q_) * cross_matrix(load3(hf, i));
            if (scheme == Scheme::improved) {
                // block-Jacobi preconditioner for the Krylov solve
                Mat3 Ldiag;
                if (spec_.terms.exchange) Ldiag += (-diagA[i] / lumped_[i]) * I3;
                if (spec_.terms.anisotropy) Ldiag += (-K_node_[i]) * outer(u, u);
                if (spec_.terms.stray2d)
                    Ldiag += stray_node_[i] * outer(Vec3{0, 0, 1}, Vec3{0, 0, 1});
                B += q_ * mat_mul(cross_matrix(load3(mc, i)), Ldiag);
            }
            if (!invert3(B, block_inv[i])) block_inv[i] = dt * I3;
        }

        if (scheme == Scheme::original) {
            // h_eff fully frozen: the lumped system is block-diagonal
            for (int i = 0; i < n; ++i) store3(w, i, block_inv[i] * load3(rhs, i));
        } else {
            auto apply = [&](std::span<const double> in, std::span<double> out) {
                linear_field_part(in, lbuf);
                for (int i = 0; i < n; ++i) {
                    const Vec3 wi = load3(in, i);
                    Vec3 y = inv_dt * wi - adt * cross(load3(mj, i), wi) +
                             q_ * cross(wi, load3(hf, i)) +
                             q_ * cross(load3(mc, i), load3(lbuf, i));
                    store3(out, i, y);
                }
            };
            auto precond = [&](std::span<const double> in, std::span<double> out) {
                for (int i = 0; i < n; ++i) store3(out, i, block_inv[i] * load3(in, i));
            };

            w = ml;  // warm start
            auto lin = bicgstab(n3, apply, precond, rhs, w, 1e-10, 500);
            if (!lin.converged) {
                stats.iterations = l + 1;
                stats.converged = false;
                stats.residual = std::numeric_limits<double>::infinity();
                break;
            }
        }

        double diff2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const Vec3 d = load3(w, i) - load3(ml, i);
            diff2 += lumped_[i] * dot(d, d);
        }
        const double diff = std::sqrt(diff2);
        ml = w;
        stats.iterations = l + 1;
        stats.residual = diff;
        if (!std::isfinite(diff) || diff > 1e4) {  // diverging fixed point
            stats.converged = false;
            break;
        }
        if (diff <= threshold) {
            stats.converged = true;
            break;
        }
    }

    stats.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                        .count();
    StepResult out{scatter_to_nodes(spec_.mesh, ml, 3), stats};
    return out;
}

LlgSolver::RunResult LlgSolver::run(const NodalField& m_init, double dt, int steps, Scheme scheme,
                                    double threshold, int max_iter, int snapshot_stride,
                                    const std::vector<int>* checkpoints,
                                    const std::function<void(int, const NodalField&)>& on_snapshot)
    const {
    RunResult res;
    res.m = m_init;
    auto want_snapshot = [&](int j) {
        if (snapshot_stride > 0 && j % snapshot_stride == 0) return true;
        if (checkpoints)
            for (int c : *checkpoints)
                if (c == j) return true;
        return false;
    };
    for (int j = 0; j < steps; ++j) {
        auto prev_norms = res.m;  // nodal norms of the previous state
        auto sr = step(res.m, dt, scheme, threshold, max_iter);
        sr.stats.step_index = j;
        res.stats.push_back(sr.stats);
        if (!sr.stats.converged)
            throw SolverError("inner iteration did not converge at step " + std::to_string(j),
                              {sr.stats.residual});
        for (int node = 0; node < spec_.mesh->node_count(); ++node) {
            const double drift = std::abs(norm(sr.m.vec(node)) - norm(prev_norms.vec(node)));
            res.max_norm_drift = std::max(res.max_norm_drift, drift);
        }
        res.m = std::move(sr.m);
        if (on_snapshot && want_snapshot(j + 1)) on_snapshot(j + 1, res.m);
    }
    return res;
}

NodalField initial_expansion_periodic(const NodalField& m0, const CellSolutions& cells,
                                      double eps) {
    if (cells.chi.empty()) throw ValidationError("expansion initial data needs chi");
    if (eps <= 0.0) throw ValidationError("expansion initial data needs eps > 0");
    const StructuredMesh& m = *m0.mesh;
    if (cells.dim != m.dim) throw ValidationError("cell/physical dimension mismatch");
    const NodalField grad = recover_nodal_gradient(m0);
    NodalField out = m0;
    const double epsinv = 1.0 / eps;
    for (int node = 0; node < m.node_count(); ++node) {
        const Vec3 y = epsinv * m.node_coords[node];
        Vec3 corr{};
        for (int j = 0; j < m.dim; ++j) {
            const double chij = cells.chi[j].eval(y, 0, /*wrap=*/true);
            for (int c = 0; c < 3; ++c) corr[c] += eps * chij * grad.at(node, c * m.dim + j);
        }
        const Vec3 mv = m0.vec(node);
        corr -= dot(mv, corr) * mv;  // tangent-plane projection, keeps the
                                     // sphere-deviation identity exact nodewise
        out.set_vec(node, mv + corr);
    }
    return out;
}

NodalField initial_expansion_neumann(const NodalField& m0, const std::vector<NodalField>& phi) {
    const StructuredMesh& m = *m0.mesh;
    if (static_cast<int>(phi.size()) != m.dim)
        throw ValidationError("expansion initial data needs the Neumann corrector");
    const NodalField grad = recover_nodal_gradient(m0);
    NodalField out = m0;
    for (int node = 0; node < m.node_count(); ++node) {
        Vec3 corr{};
        for (int j = 0; j < m.dim; ++j) {
            const double wj = phi[j].at(node) - m.node_coords[node][j];
            for (int c = 0; c < 3; ++c) corr[c] += wj * grad.at(node, c * m.dim + j);
        }
        const Vec3 mv = m0.vec(node);
        corr -= dot(mv, corr) * mv;
        out.set_vec(node, mv + corr);
    }
    return out;
}

ProjectionResult initial_projection(const NodalField& m0, const NodalField& guess,
                                    const PeriodicCoefficientSet& coeffs,
                                    const HomogenizedCoefficients& homog, int n_periods,
                                    double tol, int max_iter) {
    const MeshPtr mesh = m0.mesh;
    const StructuredMesh& m = *mesh;
    const double epsinv = static_cast<double>(n_periods);
    const auto A_eps =
        assemble_stiffness(m, [&](const Vec3& x) { return coeffs.a(epsinv * x); });
    const Mat3 a0 = homog.a0;
    const auto A_hom = assemble_stiffness(m, [a0](const Vec3&) { return a0; });
    const auto A_ident =
        assemble_stiffness(m, [&](const Vec3&) { return Mat3::identity(m.dim); });
    const auto D = lumped_mass_vector(m);
    const int n = m.dof_count;

    // F = div(a0 grad m0) represented through the lumped mass
    std::vector<double> m0d = restrict_to_dofs(m0), F(3 * n);
    mul3(A_hom, m0d, F);
    for (int i = 0; i < 3 * n; ++i) F[i] = -F[i] / D[i / 3];

    ProjectionResult res;
    res.m = guess;
    for (int node = 0; node < m.node_count(); ++node)
        res.m.set_vec(node, normalized(res.m.vec(node)));

    for (int it = 0; it < max_iter; ++it) {
        const NodalField grad = recover_nodal_gradient(res.m);
        std::vector<double> cur = restrict_to_dofs(res.m);
        std::vector<double> next(3 * n);

        for (int c = 0; c < 3; ++c) {
            std::vector<double> b(n);
            for (int i = 0; i < n; ++i) {
                const int node = m.dof_to_node[i];
                const Vec3 mi = load3(cur, i);
                const Vec3 Fi = load3(F, i);
                const Mat3 a_here = coeffs.a(epsinv * m.node_coords[node]);
                double ga = 0.0;
                for (int p = 0; p < m.dim; ++p)
                    for (int q = 0; q < m.dim; ++q) {
                        double dpq = 0.0;
                        for (int comp = 0; comp < 3; ++comp)
                            dpq += grad.at(node, comp * m.dim + p) *
                                   grad.at(node, comp * m.dim + q);
                        ga += a_here(p, q) * dpq;
                    }
                // ga enters with the sign that makes m0 a fixed point when
                // a_eps = a0; the identity m . div(a grad m) = -a grad m . grad m
                // fixes it
                const Vec3 rhs = -1.0 * Fi + dot(mi, Fi) * mi + ga * mi;
                b[i] = D[i] * rhs[c];
            }
            // drop the constant-mode defect of the Picard linearization
            double mean = 0.0;
            for (double v : b) mean += v;
            mean /= n;
            for (double& v : b) v -= mean;
            auto z = solve_linear(A_eps, b, 1e-10, /*zero_mean=*/true);
            double cmean = 0.0;
            for (int i = 0; i < n; ++i) cmean += cur[3 * i + c];
            cmean /= n;
            for (int i = 0; i < n; ++i) next[3 * i + c] = z[i] + cmean;
        }

        // under-relaxation breaks the two-cycles plain Picard tends to fall
        // into once the update is small
        const double omega = 0.6;
        std::vector<double> curd = restrict_to_dofs(res.m);
        for (int i = 0; i < 3 * n; ++i) next[i] = curd[i] + omega * (next[i] - curd[i]);
        NodalField cand = scatter_to_nodes(mesh, next, 3);
        for (int node = 0; node < m.node_count(); ++node)
            cand.set_vec(node, normalized(cand.vec(node)));

        // discrete H1 distance between successive iterates
        std::vector<double> cd = restrict_to_dofs(cand);
        double h1 = 0.0;
        std::vector<double> diff(n), Ad(n);
        for (int c = 0; c < 3; ++c) {
            for (int i = 0; i < n; ++i) diff[i] = cd[3 * i + c] - cur[3 * i + c];
            A_ident.multiply(diff, Ad);
            h1 += detail::dot_seq(diff, Ad);
            for (int i = 0; i < n; ++i) h1 += D[i] * diff[i] * diff[i];
        }
        res.m = std::move(cand);
        res.iterations = it + 1;
        if (std::sqrt(h1) <= tol) {
            res.converged = true;
            break;
        }
    }
    return res;
}

}  // namespace msllg
