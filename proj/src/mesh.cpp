#include "msllg/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "msllg/errors.hpp"

namespace msllg {

namespace {

// Solve the (k x k) linear system in place, k <= 4. Partial pivoting.
void solve_small(int k, double A[4][4], double* b) {
    for (int c = 0; c < k; ++c) {
        int piv = c;
        for (int r = c + 1; r < k; ++r)
            if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
        if (piv != c) {
            for (int j = 0; j < k; ++j) std::swap(A[c][j], A[piv][j]);
            std::swap(b[c], b[piv]);
        }
        for (int r = c + 1; r < k; ++r) {
            const double f = A[r][c] / A[c][c];
            for (int j = c; j < k; ++j) A[r][j] -= f * A[c][j];
            b[r] -= f * b[c];
        }
    }
    for (int r = k - 1; r >= 0; --r) {
        double s = b[r];
        for (int j = r + 1; j < k; ++j) s -= A[r][j] * b[j];
        b[r] = s / A[r][r];
    }
}

// Signed volume of a simplex from its vertices.
double signed_volume(int dim, const Vec3* v) {
    if (dim == 2) {
        const Vec3 e1 = v[1] - v[0], e2 = v[2] - v[0];
        return 0.5 * (e1.x * e2.y - e1.y * e2.x);
    }
    const Vec3 e1 = v[1] - v[0], e2 = v[2] - v[0], e3 = v[3] - v[0];
    return dot(e1, cross(e2, e3)) / 6.0;
}

// P1 shape gradients from vertex coordinates: phi_a(x) = c_a + g_a . x,
// phi_a(v_b) = delta_ab.
std::array<Vec3, 4> shape_gradients(int dim, const Vec3* v) {
    std::array<Vec3, 4> g{};
    const int k = dim + 1;
    for (int a = 0; a < k; ++a) {
        double A[4][4] = {};
        double rhs[4] = {};
        for (int b = 0; b < k; ++b) {
            A[b][0] = 1.0;
            for (int d = 0; d < dim; ++d) A[b][d + 1] = v[b][d];
            rhs[b] = (a == b) ? 1.0 : 0.0;
        }
        solve_small(k, A, rhs);
        for (int d = 0; d < dim; ++d) g[a][d] = rhs[d + 1];
    }
    return g;
}

constexpr int kPerm3[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};

}  // namespace

int StructuredMesh::node_at(int ix, int iy, int iz) const {
    const int s = cells + 1;
    return ix + s * (iy + s * iz);
}

Vec3 StructuredMesh::centroid(int e) const {
    Vec3 c{};
    const int k = verts_per_elem();
    for (int a = 0; a < k; ++a) c += node_coords[elements[e][a]];
    return (1.0 / k) * c;
}

MeshPtr StructuredMesh::build(int dim, int N, Bc bc) {
    if (dim != 2 && dim != 3) throw ValidationError("mesh dimension must be 2 or 3");
    if (N < 1) throw ValidationError("mesh must have at least one cell per side");

    auto mesh = std::make_shared<StructuredMesh>();
    StructuredMesh& m = *mesh;
    m.dim = dim;
    m.cells = N;
    m.bc = bc;
    m.h = 1.0 / N;

    const int s = N + 1;
    const int nz = (dim == 3) ? s : 1;
    m.node_coords.reserve(static_cast<size_t>(s) * s * nz);
    for (int iz = 0; iz < nz; ++iz)
        for (int iy = 0; iy < s; ++iy)
            for (int ix = 0; ix < s; ++ix)
                m.node_coords.push_back({ix * m.h, iy * m.h, dim == 3 ? iz * m.h : 0.0});

    if (dim == 2) {
        m.elem_classes = 2;
        m.elements.reserve(static_cast<size_t>(N) * N * 2);
        for (int cy = 0; cy < N; ++cy)
            for (int cx = 0; cx < N; ++cx) {
                const int v00 = m.node_at(cx, cy), v10 = m.node_at(cx + 1, cy);
                const int v01 = m.node_at(cx, cy + 1), v11 = m.node_at(cx + 1, cy + 1);
                m.elements.push_back({v00, v10, v11, -1});
                m.elements.push_back({v00, v11, v01, -1});
            }
    } else {
        m.elem_classes = 6;
        m.elements.reserve(static_cast<size_t>(N) * N * N * 6);
        for (int cz = 0; cz < N; ++cz)
            for (int cy = 0; cy < N; ++cy)
                for (int cx = 0; cx < N; ++cx)
                    for (const auto& p : kPerm3) {
                        int idx[3] = {cx, cy, cz};
                        std::array<int, 4> el{};
                        el[0] = m.node_at(idx[0], idx[1], idx[2]);
                        for (int step = 0; step < 3; ++step) {
                            ++idx[p[step]];
                            el[step + 1] = m.node_at(idx[0], idx[1], idx[2]);
                        }
                        Vec3 vv[4];
                        for (int a = 0; a < 4; ++a) vv[a] = m.node_coords[el[a]];
                        if (signed_volume(3, vv) < 0.0) std::swap(el[2], el[3]);
                        m.elements.push_back(el);
                    }
    }

    {
        Vec3 vv[4];
        for (int a = 0; a < m.verts_per_elem(); ++a) vv[a] = m.node_coords[m.elements[0][a]];
        m.elem_volume = signed_volume(dim, vv);
    }
    for (int c = 0; c < m.elem_classes; ++c) {
        Vec3 vv[4];
        for (int a = 0; a < m.verts_per_elem(); ++a) vv[a] = m.node_coords[m.elements[c][a]];
        m.shape_grad_[c] = shape_gradients(dim, vv);
    }

    // Periodic identification: indices on max faces fold back modulo N.
    m.node_to_dof.assign(m.node_coords.size(), -1);
    if (bc == Bc::periodic) {
        m.dof_count = (dim == 2) ? N * N : N * N * N;
        m.dof_to_node.resize(m.dof_count);
        for (int iz = 0; iz < nz; ++iz)
            for (int iy = 0; iy < s; ++iy)
                for (int ix = 0; ix < s; ++ix) {
                    const int jx = ix % N, jy = iy % N, jz = (dim == 3) ? iz % N : 0;
                    const int dof = jx + N * (jy + (dim == 3 ? N * jz : 0));
                    m.node_to_dof[m.node_at(ix, iy, iz)] = dof;
                }
        for (int iz = 0; iz < (dim == 3 ? N : 1); ++iz)
            for (int iy = 0; iy < N; ++iy)
                for (int ix = 0; ix < N; ++ix)
                    m.dof_to_node[ix + N * (iy + (dim == 3 ? N * iz : 0))] = m.node_at(ix, iy, iz);
    } else {
        m.dof_count = m.node_count();
        m.dof_to_node.resize(m.dof_count);
        for (int i = 0; i < m.dof_count; ++i) {
            m.node_to_dof[i] = i;
            m.dof_to_node[i] = i;
        }
    }

    // Boundary facets with outward normal tags.
    if (dim == 2) {
        for (int axis = 0; axis < 2; ++axis)
            for (int side = 0; side < 2; ++side)
                for (int c = 0; c < N; ++c) {
                    const int fixed = side * N;
                    BoundaryFacet f;
                    f.axis = axis;
                    f.side = side;
                    if (axis == 0) {
                        f.nodes = {m.node_at(fixed, c), m.node_at(fixed, c + 1), -1};
                    } else {
                        f.nodes = {m.node_at(c, fixed), m.node_at(c + 1, fixed), -1};
                    }
                    m.boundary_facets.push_back(f);
                }
    } else {
        for (int axis = 0; axis < 3; ++axis)
            for (int side = 0; side < 2; ++side) {
                const int u = (axis + 1) % 3, v = (axis + 2) % 3;
                for (int cv = 0; cv < N; ++cv)
                    for (int cu = 0; cu < N; ++cu) {
                        int base[3];
                        base[axis] = side * N;
                        auto corner = [&](int du, int dv) {
                            int idx[3] = {base[0], base[1], base[2]};
                            idx[u] = cu + du;
                            idx[v] = cv + dv;
                            return m.node_at(idx[0], idx[1], idx[2]);
                        };
                        BoundaryFacet f1, f2;
                        f1.axis = f2.axis = axis;
                        f1.side = f2.side = side;
                        f1.nodes = {corner(0, 0), corner(1, 0), corner(1, 1)};
                        f2.nodes = {corner(0, 0), corner(1, 1), corner(0, 1)};
                        m.boundary_facets.push_back(f1);
                        m.boundary_facets.push_back(f2);
                    }
            }
    }

    return mesh;
}

StructuredMesh::Location StructuredMesh::locate(Vec3 p, bool wrap) const {
    if (wrap) {
        for (int d = 0; d < dim; ++d) p[d] = p[d] - std::floor(p[d]);
    } else {
        for (int d = 0; d < dim; ++d)
            if (p[d] < -1e-12 || p[d] > 1.0 + 1e-12)
                throw ValidationError("point outside [0,1]^n and wrapping disabled");
    }
    int cell[3] = {0, 0, 0};
    for (int d = 0; d < dim; ++d) {
        const double clamped = std::min(std::max(p[d], 0.0), 1.0);
        cell[d] = std::min(static_cast<int>(clamped / h), cells - 1);
    }
    const int cell_id = cell[0] + cells * (cell[1] + (dim == 3 ? cells * cell[2] : 0));
    const int first = cell_id * elem_classes;

    Location best;
    double best_min = -1e300;
    for (int c = 0; c < elem_classes; ++c) {
        const int e = first + c;
        const Vec3 v0 = node_coords[elements[e][0]];
        std::array<double, 4> lam{0, 0, 0, 0};
        double lo = 1e300;
        for (int a = 0; a < verts_per_elem(); ++a) {
            lam[a] = (a == 0 ? 1.0 : 0.0) + dot(shape_grad(e, a), p - v0);
            lo = std::min(lo, lam[a]);
        }
        if (lo > best_min) {
            best_min = lo;
            best.element = e;
            best.bary = lam;
        }
        if (lo >= -1e-12) break;  // containing element found; earlier class wins ties
    }
    return best;
}

MeshPtr build_mesh(int dim, int N, Bc bc) { return StructuredMesh::build(dim, N, bc); }

}  // namespace msllg
