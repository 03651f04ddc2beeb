#include "msllg/sparse.hpp"

#include <algorithm>
#include <tuple>

namespace msllg {

void SparseOperator::multiply(std::span<const double> x, std::span<double> y) const {
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k] * x[col[k]];
        y[i] = s;
    }
}

std::vector<double> SparseOperator::multiply(std::span<const double> x) const {
    std::vector<double> y(n);
    multiply(x, y);
    return y;
}

std::vector<double> SparseOperator::diagonal() const {
    std::vector<double> d(n, 0.0);
    for (int i = 0; i < n; ++i)
        for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
            if (col[k] == i) d[i] = val[k];
    return d;
}

double SparseOperator::max_abs() const {
    double m = 0.0;
    for (double v : val) m = std::max(m, std::abs(v));
    return m;
}

double SparseOperator::asymmetry() const {
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
            const int j = col[k];
            double aji = 0.0;
            for (int k2 = row_ptr[j]; k2 < row_ptr[j + 1]; ++k2)
                if (col[k2] == i) {
                    aji = val[k2];
                    break;
                }
            worst = std::max(worst, std::abs(val[k] - aji));
        }
    return worst;
}

double SparseOperator::max_row_sum() const {
    double worst = 0.0;
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int k = row_ptr[i]; k < row_ptr[i + 1]; ++k) s += val[k];
        worst = std::max(worst, std::abs(s));
    }
    return worst;
}

SparseOperator SparseOperator::from_triplets(int n,
                                             std::vector<std::tuple<int, int, double>> triplets) {
    std::sort(triplets.begin(), triplets.end(),
              [](const auto& a, const auto& b) {
                  return std::tie(std::get<0>(a), std::get<1>(a)) <
                         std::tie(std::get<0>(b), std::get<1>(b));
              });
    SparseOperator A;
    A.n = n;
    A.row_ptr.assign(n + 1, 0);
    for (size_t k = 0; k < triplets.size();) {
        const int i = std::get<0>(triplets[k]);
        const int j = std::get<1>(triplets[k]);
        double v = 0.0;
        while (k < triplets.size() && std::get<0>(triplets[k]) == i &&
               std::get<1>(triplets[k]) == j) {
            v += std::get<2>(triplets[k]);
            ++k;
        }
        A.col.push_back(j);
        A.val.push_back(v);
        ++A.row_ptr[i + 1];
    }
    for (int i = 0; i < n; ++i) A.row_ptr[i + 1] += A.row_ptr[i];
    return A;
}

std::vector<double> solve_linear(const SparseOperator& A, std::span<const double> b, double tol,
                                 bool zero_mean_constraint, int max_iter, SolveStats* stats_out) {
    const int n = A.n;
    if (static_cast<int>(b.size()) != n)
        throw ValidationError("solve_linear: right-hand side size mismatch");
    if (max_iter <= 0) max_iter = std::max(1000, 20 * n);

    std::vector<double> rhs(b.begin(), b.end());
    const double bnorm = detail::norm_seq(rhs);

    if (A.constant_nullspace) {
        double s = 0.0;
        for (double x : rhs) s += x;
        // absolute floor keeps roundoff-level right-hand sides legal
        if (std::abs(s) > 1e-8 * bnorm + 1e-15 * n)
            throw CompatibilityError("solve_linear: rhs not orthogonal to constants on singular system");
        if (!zero_mean_constraint)
            throw CompatibilityError("solve_linear: singular system requires the zero-mean constraint");
        detail::remove_mean(rhs);
    }

    std::vector<double> x(n, 0.0), r = rhs, z(n), p(n), q(n);
    std::vector<double> inv_diag = A.diagonal();
    for (double& d : inv_diag) d = (std::abs(d) > 1e-300) ? 1.0 / d : 1.0;

    SolveStats st;
    const double stop = tol * (bnorm > 0.0 ? bnorm : 1.0);
    double rnorm = detail::norm_seq(r);
    st.residual_history.push_back(bnorm > 0.0 ? rnorm / bnorm : 0.0);

    auto precond = [&](std::span<const double> in, std::span<double> out) {
        for (int i = 0; i < n; ++i) out[i] = inv_diag[i] * in[i];
        if (zero_mean_constraint) detail::remove_mean(out);
    };

    if (rnorm > stop) {
        precond(r, z);
        p = z;
        double rz = detail::dot_seq(r, z);
        for (int it = 0; it < max_iter; ++it) {
            A.multiply(p, q);
            const double pq = detail::dot_seq(p, q);
            if (pq <= 0.0) break;  // matrix not SPD on the working subspace
            const double alpha = rz / pq;
            for (int i = 0; i < n; ++i) x[i] += alpha * p[i];
            for (int i = 0; i < n; ++i) r[i] -= alpha * q[i];
            if (zero_mean_constraint) detail::remove_mean(r);
            rnorm = detail::norm_seq(r);
            st.iterations = it + 1;
            st.residual_history.push_back(rnorm / (bnorm > 0.0 ? bnorm : 1.0));
            if (rnorm <= stop) {
                st.converged = true;
                break;
            }
            precond(r, z);
            const double rz_new = detail::dot_seq(r, z);
            const double beta = rz_new / rz;
            rz = rz_new;
            for (int i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        }
    } else {
        st.converged = true;
    }
    st.rel_residual = st.residual_history.back();
    if (zero_mean_constraint) detail::remove_mean(x);
    if (stats_out) *stats_out = st;
    if (!st.converged)
        throw SolverError("solve_linear: CG did not reach tolerance", st.residual_history);
    return x;
}

}  // namespace msllg
