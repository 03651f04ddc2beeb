#include <algorithm>
#include <cmath>
#include <numbers>

#include "msllg/analysis.hpp"
#include "msllg/assembly.hpp"
#include "msllg/errors.hpp"
#include "msllg/sparse.hpp"
#include "testkit.hpp"

using namespace msllg;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

NodalField random_field(const MeshPtr& mesh, unsigned long long seed) {
    NodalField f(mesh, 3);
    testkit::Rng rng(seed);
    // periodic meshes require aliased nodes to agree: draw on dofs
    std::vector<double> dofs(static_cast<size_t>(mesh->dof_count) * 3);
    for (double& v : dofs) v = rng.uniform(-1.0, 1.0);
    return scatter_to_nodes(mesh, dofs, 3);
}

void test_error_l2() {
    auto mesh = build_mesh(2, 20, Bc::periodic);
    auto f = random_field(mesh, 17);
    CHECK(error_l2(f, f) == 0.0);

    NodalField g = f;
    const Vec3 c{0.3, -0.2, 0.15};
    for (int node = 0; node < mesh->node_count(); ++node) g.set_vec(node, g.vec(node) + c);
    CHECK_NEAR(error_l2(f, g), norm(c), 1e-13);

    auto other = build_mesh(2, 21, Bc::periodic);
    NodalField h(other, 3);
    CHECK_THROWS(error_l2(f, h), ValidationError);

    // interpolation onto the own mesh leaves the field unchanged
    auto same = interpolate_field(f, mesh, true);
    CHECK(error_l2(f, same) <= 1e-12);
}

void test_norm_axioms() {
    auto mesh = build_mesh(2, 12, Bc::neumann);
    for (unsigned long long seed : {1ull, 2ull, 3ull, 4ull}) {
        auto u = random_field(mesh, seed);
        auto v = random_field(mesh, seed + 100);
        NodalField sum(mesh, 3), su(mesh, 3);
        const double lam = -2.7;
        for (size_t i = 0; i < u.values.size(); ++i) {
            sum.values[i] = u.values[i] + v.values[i];
            su.values[i] = lam * u.values[i];
        }
        CHECK(field_norm_l2(sum) <= field_norm_l2(u) + field_norm_l2(v) + 1e-10);
        CHECK_NEAR(field_norm_l2(su), std::abs(lam) * field_norm_l2(u), 1e-10);
    }
}

void test_h1_zero_corrector_cross_check() {
    auto mesh = build_mesh(2, 16, Bc::periodic);
    auto ref = random_field(mesh, 5);
    auto m0 = random_field(mesh, 6);
    const double e = error_h1_corrected(ref, m0, CorrectorKind::none, nullptr, nullptr, 0.0);

    // independent evaluation through assembled quadratic forms
    const auto A = assemble_stiffness(*mesh, [&](const Vec3&) { return Mat3::identity(2); });
    const auto M = assemble_mass(*mesh, false);
    auto rd = restrict_to_dofs(ref), md = restrict_to_dofs(m0);
    double total = 0.0;
    std::vector<double> d(mesh->dof_count), tmp(mesh->dof_count);
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < mesh->dof_count; ++i) d[i] = rd[3 * i + c] - md[3 * i + c];
        A.multiply(d, tmp);
        total += detail::dot_seq(d, tmp);
        M.multiply(d, tmp);
        total += detail::dot_seq(d, tmp);
    }
    CHECK_NEAR(e, std::sqrt(total), 1e-10);
}

void test_fit_order() {
    {  // exact power law
        std::vector<std::pair<double, double>> s;
        for (int n = 2; n <= 6; ++n) s.emplace_back(1.0 / n, 1.0 / n);
        CHECK_NEAR(fit_order(s), 1.0, 1e-12);
    }
    {  // constant errors
        std::vector<std::pair<double, double>> s;
        for (int n = 2; n <= 6; ++n) s.emplace_back(1.0 / n, 0.37);
        CHECK_NEAR(fit_order(s), 0.0, 1e-12);
    }
    {  // tabulated 2D-periodic e0 column at j=10; frozen least-squares value
        std::vector<std::pair<double, double>> s{{1.0 / 2, 1.18e-1},
                                                 {1.0 / 3, 6.34e-2},
                                                 {1.0 / 4, 4.46e-2},
                                                 {1.0 / 5, 3.77e-2},
                                                 {1.0 / 6, 3.25e-2}};
        CHECK_NEAR(fit_order(s), 1.1722543123587272, 1e-9);
    }
    CHECK_THROWS(fit_order({{0.5, 1.0}}), ValidationError);
    CHECK_THROWS(fit_order({{0.5, 1.0}, {0.5, 2.0}}), ValidationError);
    CHECK_THROWS(fit_order({{0.5, 1.0}, {0.25, 0.0}}), ValidationError);
}

void test_h1_chi_sanity() {
    // ref = m0 and zero corrector: the error vanishes; with a corrector on a
    // constant-coefficient cell (chi = 0) it stays zero
    auto mesh = build_mesh(2, 16, Bc::periodic);
    NodalField m0(mesh, 3);
    for (int node = 0; node < mesh->node_count(); ++node) {
        const Vec3 p = mesh->node_coords[node];
        m0.set_vec(node, normalized({std::sin(kTwoPi * p.x), std::cos(kTwoPi * p.y), 1.0}));
    }
    auto co = make_coefficients("constant", 2);
    auto cells = solve_cell_first_order(co, 8);
    const double e = error_h1_corrected(m0, m0, CorrectorKind::chi, &cells, nullptr, 0.5);
    CHECK(e <= 1e-9);
    CHECK_THROWS(
        error_h1_corrected(m0, m0, CorrectorKind::chi, nullptr, nullptr, 0.5),
        ValidationError);
    CHECK_THROWS(
        error_h1_corrected(m0, m0, CorrectorKind::neumann, nullptr, nullptr, 0.5),
        ValidationError);
}

}  // namespace

int main() {
    test_error_l2();
    test_norm_axioms();
    test_h1_zero_corrector_cross_check();
    test_fit_order();
    test_h1_chi_sanity();
    return testkit::summary("analysis");
}
