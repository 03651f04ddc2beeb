#include <algorithm>
#include <cstdio>
#include <map>

#include "msllg/assembly.hpp"
#include "msllg/cell.hpp"
#include "msllg/coefficients.hpp"
#include "msllg/errors.hpp"
#include "msllg/field.hpp"
#include "msllg/mesh.hpp"
#include "msllg/sparse.hpp"
#include "testkit.hpp"

using namespace msllg;

namespace {

double signed_volume(const StructuredMesh& m, int e) {
    const Vec3 v0 = m.node_coords[m.elements[e][0]];
    if (m.dim == 2) {
        const Vec3 e1 = m.node_coords[m.elements[e][1]] - v0;
        const Vec3 e2 = m.node_coords[m.elements[e][2]] - v0;
        return 0.5 * (e1.x * e2.y - e1.y * e2.x);
    }
    const Vec3 e1 = m.node_coords[m.elements[e][1]] - v0;
    const Vec3 e2 = m.node_coords[m.elements[e][2]] - v0;
    const Vec3 e3 = m.node_coords[m.elements[e][3]] - v0;
    return dot(e1, cross(e2, e3)) / 6.0;
}

double dense_entry(const SparseOperator& A, int i, int j) {
    for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
        if (A.col[k] == j) return A.val[k];
    return 0.0;
}

std::vector<std::vector<double>> to_dense(const SparseOperator& A) {
    std::vector<std::vector<double>> D(A.n, std::vector<double>(A.n, 0.0));
    for (int i = 0; i < A.n; ++i)
        for (int k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) D[i][A.col[k]] += A.val[k];
    return D;
}

// Test-side dense assembly oracle: own shape functions (from vertex
// coordinates), own centroid sampling, no CSR machinery.
std::vector<std::vector<double>> dense_stiffness_oracle(const StructuredMesh& m,
                                                        const MatrixCoefficient& coeff) {
    std::vector<std::vector<double>> D(m.dof_count, std::vector<double>(m.dof_count, 0.0));
    const int k = m.verts_per_elem();
    for (int e = 0; e < m.elem_count(); ++e) {
        // Shape gradients: solve [1 x y] c = delta per vertex.
        std::vector<Vec3> grads(k);
        for (int a = 0; a < k; ++a) {
            std::vector<std::vector<double>> M(k, std::vector<double>(k));
            std::vector<double> rhs(k, 0.0);
            rhs[a] = 1.0;
            for (int b = 0; b < k; ++b) {
                M[b][0] = 1.0;
                for (int d = 0; d < m.dim; ++d) M[b][d + 1] = m.node_coords[m.elements[e][b]][d];
            }
            auto sol = testkit::dense_solve(M, rhs);
            for (int d = 0; d < m.dim; ++d) grads[a][d] = sol[d + 1];
        }
        Vec3 c{};
        for (int a = 0; a < k; ++a) c += m.node_coords[m.elements[e][a]];
        c = (1.0 / k) * c;
        const Mat3 amat = coeff(c);
        const double vol = std::abs(signed_volume(m, e));
        for (int r = 0; r < k; ++r)
            for (int b = 0; b < k; ++b)
                D[m.node_to_dof[m.elements[e][r]]][m.node_to_dof[m.elements[e][b]]] +=
                    vol * dot(amat * grads[b], grads[r]);
    }
    return D;
}

void test_build_mesh() {
    {
        auto m = build_mesh(2, 1, Bc::neumann);
        CHECK(m->elem_count() == 2);
        CHECK(m->node_count() == 4);
        double area = 0.0;
        for (int e = 0; e < m->elem_count(); ++e) area += signed_volume(*m, e);
        CHECK_NEAR(area, 1.0, 1e-15);
        CHECK(m->dof_count == 4);
    }
    {
        auto m = build_mesh(2, 180, Bc::periodic);
        CHECK(m->elem_count() == 180 * 180 * 2);
        CHECK(m->dof_count == 180 * 180);
        // every max-face node aliases a master on the opposite face
        for (int i = 0; i <= 180; ++i) {
            const int right = m->node_at(180, i);
            const int left = m->node_at(0, i % 180);
            CHECK(m->node_to_dof[right] == m->node_to_dof[left]);
        }
    }
    {
        auto m = build_mesh(3, 4, Bc::neumann);
        CHECK(m->elem_count() == 6 * 4 * 4 * 4);
        double vol = 0.0;
        bool all_positive = true;
        for (int e = 0; e < m->elem_count(); ++e) {
            const double v = signed_volume(*m, e);
            vol += v;
            all_positive = all_positive && v > 0.0;
        }
        CHECK(all_positive);
        CHECK_NEAR(vol, 1.0, 1e-12);
    }
    {
        auto m = build_mesh(3, 3, Bc::periodic);
        CHECK(m->dof_count == 27);
        bool all_positive = true;
        for (int e = 0; e < m->elem_count(); ++e)
            all_positive = all_positive && signed_volume(*m, e) > 0.0;
        CHECK(all_positive);
    }
    CHECK_THROWS(build_mesh(4, 2, Bc::neumann), ValidationError);
    CHECK_THROWS(build_mesh(2, 0, Bc::neumann), ValidationError);
}

void test_stiffness() {
    auto ident = [](const Vec3&) { return Mat3::identity(2); };

    {  // constants in the kernel
        auto m = build_mesh(2, 7, Bc::periodic);
        auto A = assemble_stiffness(*m, ident);
        std::vector<double> ones(A.n, 1.0);
        auto y = A.multiply(ones);
        double worst = 0.0;
        for (double v : y) worst = std::max(worst, std::abs(v));
        CHECK(worst <= 1e-10);
        CHECK(A.asymmetry() <= 1e-12 * std::max(1.0, A.max_abs()));
    }
    {  // assembled N=1 Neumann stiffness against hand-computed element sums
        auto m = build_mesh(2, 1, Bc::neumann);
        auto A = assemble_stiffness(*m, ident);
        // nodes: 0=(0,0) 1=(1,0) 2=(0,1) 3=(1,1)
        CHECK_NEAR(dense_entry(A, 0, 0), 1.0, 1e-14);
        CHECK_NEAR(dense_entry(A, 0, 1), -0.5, 1e-14);
        CHECK_NEAR(dense_entry(A, 0, 2), -0.5, 1e-14);
        CHECK_NEAR(dense_entry(A, 0, 3), 0.0, 1e-14);
        CHECK_NEAR(dense_entry(A, 1, 1), 1.0, 1e-14);
        CHECK_NEAR(dense_entry(A, 1, 3), -0.5, 1e-14);
        CHECK_NEAR(dense_entry(A, 2, 2), 1.0, 1e-14);
        CHECK_NEAR(dense_entry(A, 3, 3), 1.0, 1e-14);
    }
    {  // paper coefficient on an 8^2 cell vs the dense assembly oracle
        auto co = make_coefficients("paper2d", 2);
        auto m = build_mesh(2, 8, Bc::periodic);
        auto A = assemble_stiffness(*m, co.a);
        auto D = dense_stiffness_oracle(*m, co.a);
        double worst = 0.0;
        for (int i = 0; i < A.n; ++i)
            for (int j = 0; j < A.n; ++j)
                worst = std::max(worst, std::abs(dense_entry(A, i, j) - D[i][j]));
        CHECK(worst <= 1e-10);
    }
    {  // linearity in the coefficient
        auto co = make_coefficients("paper2d", 2);
        auto m = build_mesh(2, 6, Bc::periodic);
        auto A1 = assemble_stiffness(*m, co.a);
        const double s = 2.37;
        auto As = assemble_stiffness(*m, [&](const Vec3& y) { return s * co.a(y); });
        double worst = 0.0;
        for (size_t k = 0; k < A1.val.size(); ++k)
            worst = std::max(worst, std::abs(As.val[k] - s * A1.val[k]));
        CHECK(worst <= 1e-12 * As.max_abs());
    }
    {  // P1 exactness: energy of a linear field identical across refinements
        Mat3 aniso;
        aniso(0, 0) = 2.0;
        aniso(0, 1) = aniso(1, 0) = 0.5;
        aniso(1, 1) = 1.3;
        auto coeff = [&](const Vec3&) { return aniso; };
        const Vec3 c{0.3, -0.7, 0.0};
        double energy[2];
        int idx = 0;
        for (int N : {8, 16}) {
            auto m = build_mesh(2, N, Bc::neumann);
            auto A = assemble_stiffness(*m, coeff);
            NodalField f(m, 1);
            for (int node = 0; node < m->node_count(); ++node)
                f.at(node) = dot(c, m->node_coords[node]);
            auto v = restrict_to_dofs(f);
            auto Av = A.multiply(v);
            energy[idx++] = detail::dot_seq(v, Av);
        }
        CHECK_NEAR(energy[0], energy[1], 1e-10);
    }
    {  // positive semidefinite on random vectors
        auto m = build_mesh(2, 5, Bc::neumann);
        auto co = make_coefficients("paper2d", 2);
        auto A = assemble_stiffness(*m, co.a);
        testkit::Rng rng(7);
        for (int t = 0; t < 10; ++t) {
            std::vector<double> x(A.n);
            for (double& v : x) v = rng.uniform(-1.0, 1.0);
            auto Ax = A.multiply(x);
            CHECK(detail::dot_seq(x, Ax) >= -1e-12);
        }
    }
    {  // non-SPD coefficient rejected
        auto m = build_mesh(2, 2, Bc::neumann);
        Mat3 bad;
        bad(0, 0) = 1.0;
        bad(1, 1) = -1.0;
        CHECK_THROWS(assemble_stiffness(*m, [&](const Vec3&) { return bad; }), ValidationError);
    }
}

void test_mass() {
    {
        auto m = build_mesh(2, 1, Bc::neumann);
        auto L = assemble_mass(*m, true);
        double total = 0.0;
        for (double v : L.val) total += v;
        CHECK_NEAR(total, 1.0, 1e-15);
        CHECK(static_cast<int>(L.val.size()) == L.n);  // diagonal

        auto M = assemble_mass(*m, false);
        // consistent entries from the two unit-square triangles
        CHECK_NEAR(dense_entry(M, 0, 0), 4.0 / 24.0, 1e-15);
        CHECK_NEAR(dense_entry(M, 0, 1), 1.0 / 24.0, 1e-15);
        CHECK_NEAR(dense_entry(M, 0, 3), 2.0 / 24.0, 1e-15);
        CHECK_NEAR(dense_entry(M, 1, 2), 0.0, 1e-15);
    }
    for (int dim : {2, 3}) {  // lumped = row sums of consistent
        auto m = build_mesh(dim, 4, Bc::periodic);
        auto L = assemble_mass(*m, true);
        auto M = assemble_mass(*m, false);
        double worst = 0.0;
        for (int i = 0; i < M.n; ++i) {
            double rs = 0.0;
            for (int k = M.row_ptr[i]; k < M.row_ptr[i + 1]; ++k) rs += M.val[k];
            worst = std::max(worst, std::abs(rs - dense_entry(L, i, i)));
        }
        CHECK(worst <= 1e-12);
    }
}

void test_solve_linear() {
    {  // identity system
        SparseOperator I;
        I.n = 5;
        for (int i = 0; i < 5; ++i) {
            I.row_ptr.push_back(i);
            I.col.push_back(i);
            I.val.push_back(1.0);
        }
        I.row_ptr.push_back(5);
        I.symmetric = true;
        std::vector<double> b{1.0, -2.0, 3.0, 0.5, 0.0};
        auto x = solve_linear(I, b, 1e-12, false);
        for (int i = 0; i < 5; ++i) CHECK_NEAR(x[i], b[i], 1e-12);
    }
    {  // zero rhs on a singular system
        auto m = build_mesh(2, 4, Bc::periodic);
        auto A = assemble_stiffness(*m, [](const Vec3&) { return Mat3::identity(2); });
        std::vector<double> b(A.n, 0.0);
        auto x = solve_linear(A, b, 1e-12, true);
        for (double v : x) CHECK(std::abs(v) <= 1e-15);
    }
    {  // 4^2 periodic stiffness vs the dense zero-mean oracle
        auto m = build_mesh(2, 4, Bc::periodic);
        auto co = make_coefficients("paper2d", 2);
        auto A = assemble_stiffness(*m, co.a);
        std::vector<double> b(A.n);
        testkit::Rng rng(11);
        for (double& v : b) v = rng.uniform(-1.0, 1.0);
        double mean = 0.0;
        for (double v : b) mean += v;
        mean /= b.size();
        for (double& v : b) v -= mean;  // compatible rhs

        auto x = solve_linear(A, b, 1e-12, true);
        auto xd = testkit::dense_solve_zero_mean(to_dense(A), b);
        double worst = 0.0;
        for (int i = 0; i < A.n; ++i) worst = std::max(worst, std::abs(x[i] - xd[i]));
        CHECK(worst <= 1e-8);
        double xmean = 0.0;
        for (double v : x) xmean += v;
        CHECK(std::abs(xmean / A.n) <= 1e-12);

        // determinism: identical inputs give bitwise-identical outputs
        auto x2 = solve_linear(A, b, 1e-12, true);
        CHECK(std::equal(x.begin(), x.end(), x2.begin()));

        // incompatible rhs rejected
        auto bad = b;
        bad[0] += 1.0;
        CHECK_THROWS(solve_linear(A, bad, 1e-12, true), CompatibilityError);
        // missing constraint on singular system rejected
        CHECK_THROWS(solve_linear(A, b, 1e-12, false), CompatibilityError);

        // non-convergence carries a residual history
        try {
            solve_linear(A, b, 1e-14, true, 2);
            CHECK_MSG(false, "expected SolverError");
        } catch (const SolverError& e) {
            CHECK(!e.residual_history.empty());
        }
    }
}

void test_interpolation() {
    {  // P1 reproduces linear functions
        auto m = build_mesh(2, 9, Bc::neumann);
        NodalField f(m, 1);
        const Vec3 c{1.25, -0.5, 0.0};
        for (int node = 0; node < m->node_count(); ++node)
            f.at(node) = 3.0 + dot(c, m->node_coords[node]);
        testkit::Rng rng(3);
        for (int t = 0; t < 25; ++t) {
            const Vec3 p{rng.uniform(), rng.uniform(), 0.0};
            CHECK_NEAR(f.eval(p, 0), 3.0 + dot(c, p), 1e-12);
        }
    }
    {  // wrapping
        auto m = build_mesh(2, 8, Bc::periodic);
        NodalField f(m, 1);
        for (int node = 0; node < m->node_count(); ++node) {
            const Vec3 p = m->node_coords[node];
            f.at(node) = std::sin(2 * 3.14159265358979 * p.x) + p.y;
        }
        CHECK_NEAR(f.eval({1.25, 0.5, 0.0}, 0, true), f.eval({0.25, 0.5, 0.0}, 0, true), 1e-14);
        CHECK_THROWS(f.eval({1.25, 0.5, 0.0}, 0, false), ValidationError);
    }
    {  // cross-mesh transfer vs brute-force element search
        auto src = build_mesh(2, 24, Bc::neumann);
        auto dst = build_mesh(2, 30, Bc::neumann);
        NodalField f(src, 1);
        for (int node = 0; node < src->node_count(); ++node) {
            const Vec3 p = src->node_coords[node];
            f.at(node) = std::cos(3.0 * p.x) * (1.0 + p.y * p.y);
        }
        auto g = interpolate_field(f, dst, false);
        // oracle: exhaustive containment search with barycentric test
        for (int node = 0; node < dst->node_count(); node += 17) {
            const Vec3 p = dst->node_coords[node];
            double val = 0.0;
            bool found = false;
            for (int e = 0; e < src->elem_count() && !found; ++e) {
                const Vec3 v0 = src->node_coords[src->elements[e][0]];
                double lam[3], lo = 1.0;
                double sum = 0.0;
                for (int a = 0; a < 3; ++a) {
                    lam[a] = (a == 0 ? 1.0 : 0.0) + dot(src->shape_grad(e, a), p - v0);
                    lo = std::min(lo, lam[a]);
                    sum += lam[a];
                }
                if (lo >= -1e-12 && std::abs(sum - 1.0) < 1e-12) {
                    found = true;
                    val = 0.0;
                    for (int a = 0; a < 3; ++a) val += lam[a] * f.at(src->elements[e][a]);
                }
            }
            CHECK(found);
            CHECK_NEAR(g.at(node), val, 1e-12);
        }
    }
}

void test_gradients() {
    {  // linear exactness, constant zero
        auto m = build_mesh(2, 6, Bc::neumann);
        NodalField f(m, 1);
        const Vec3 c{0.4, -1.7, 0.0};
        for (int node = 0; node < m->node_count(); ++node)
            f.at(node) = dot(c, m->node_coords[node]);
        auto g = element_gradients(f);
        double worst = 0.0;
        for (int e = 0; e < m->elem_count(); ++e) {
            worst = std::max(worst, std::abs(g[e * 2 + 0] - c.x));
            worst = std::max(worst, std::abs(g[e * 2 + 1] - c.y));
        }
        CHECK(worst <= 1e-13);

        NodalField k(m, 1);
        for (int node = 0; node < m->node_count(); ++node) k.at(node) = 4.2;
        auto gk = element_gradients(k);
        for (double v : gk) CHECK(std::abs(v) <= 1e-13);
    }
    {  // recovered gradient of a quadratic converges at O(h)
        double err[3];
        int idx = 0;
        for (int N : {16, 32, 64}) {
            auto m = build_mesh(2, N, Bc::neumann);
            NodalField f(m, 1);
            for (int node = 0; node < m->node_count(); ++node) {
                const Vec3 p = m->node_coords[node];
                f.at(node) = p.x * p.x + 0.5 * p.x * p.y - p.y * p.y;
            }
            auto g = recover_nodal_gradient(f);
            double worst = 0.0;
            for (int node = 0; node < m->node_count(); ++node) {
                const Vec3 p = m->node_coords[node];
                worst = std::max(worst, std::abs(g.at(node, 0) - (2 * p.x + 0.5 * p.y)));
                worst = std::max(worst, std::abs(g.at(node, 1) - (0.5 * p.x - 2 * p.y)));
            }
            err[idx++] = worst;
        }
        const double slope1 = std::log2(err[0] / err[1]);
        const double slope2 = std::log2(err[1] / err[2]);
        CHECK_MSG(slope1 > 0.75 && slope1 < 2.2, std::to_string(slope1));
        CHECK_MSG(slope2 > 0.75 && slope2 < 2.2, std::to_string(slope2));
    }
}

void test_snapshot_roundtrip() {
    auto m = build_mesh(2, 5, Bc::periodic);
    NodalField f(m, 3);
    testkit::Rng rng(21);
    for (double& v : f.values) v = rng.uniform(-1.0, 1.0);
    const std::string path = "snapshot_test_tmp.txt";
    write_snapshot(path, f);
    auto data = read_snapshot(path);
    CHECK(data.dim == 2 && data.cells == 5 && data.bc == Bc::periodic && data.comps == 3);
    auto g = bind_snapshot(data, m);
    CHECK(std::equal(f.values.begin(), f.values.end(), g.values.begin()));
    std::remove(path.c_str());
}

}  // namespace

int main() {
    test_build_mesh();
    test_stiffness();
    test_mass();
    test_solve_linear();
    test_interpolation();
    test_gradients();
    test_snapshot_roundtrip();
    return testkit::summary("mesh_fem");
}
