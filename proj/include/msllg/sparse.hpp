#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "msllg/errors.hpp"

namespace msllg {

/// Row-compressed sparse matrix with the two structural flags the solvers
/// care about: symmetry, and whether constants span the nullspace
/// (pure-Neumann/periodic stiffness).
struct SparseOperator {
    int n = 0;
    std::vector<int> row_ptr;
    std::vector<int> col;
    std::vector<double> val;
    bool symmetric = false;
    bool constant_nullspace = false;

    void multiply(std::span<const double> x, std::span<double> y) const;
    std::vector<double> multiply(std::span<const double> x) const;
    std::vector<double> diagonal() const;
    double max_abs() const;
    /// max_ij |A_ij - A_ji|
    double asymmetry() const;
    /// max_i |sum_j A_ij|
    double max_row_sum() const;

    static SparseOperator from_triplets(int n, std::vector<std::tuple<int, int, double>> triplets);
};

struct SolveStats {
    int iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
    std::vector<double> residual_history;
};

/// Preconditioned conjugate gradients with Jacobi scaling. For singular
/// systems (constant nullspace) the zero-mean constraint must be set: the
/// right-hand side is checked for compatibility and every iterate is kept
/// in the zero-mean subspace, so the returned solution has mean(x) = 0.
/// Deterministic: fixed iteration order, sequential reductions.
std::vector<double> solve_linear(const SparseOperator& A, std::span<const double> b, double tol,
                                 bool zero_mean_constraint, int max_iter = 0,
                                 SolveStats* stats_out = nullptr);

namespace detail {

inline double dot_seq(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm_seq(std::span<const double> a) { return std::sqrt(dot_seq(a, a)); }

inline void remove_mean(std::span<double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    s /= static_cast<double>(v.size());
    for (double& x : v) x -= s;
}

}  // namespace detail

/// BiCGStab for nonsymmetric systems, matrix-free. `apply(x, y)` computes
/// y = A x; `precond(r, z)` computes z = M^-1 r (pass identity for none).
/// Starts from the initial content of x. Deterministic.
template <class Apply, class Precond>
SolveStats bicgstab(int n, Apply&& apply, Precond&& precond, std::span<const double> b,
                    std::span<double> x, double tol, int max_iter) {
    SolveStats st;
    std::vector<double> r(n), r0(n), p(n), v(n), s(n), t(n), phat(n), shat(n), tmp(n);

    apply(std::span<const double>(x.data(), n), std::span<double>(tmp));
    for (int i = 0; i < n; ++i) r[i] = b[i] - tmp[i];
    const double bnorm = detail::norm_seq(b);
    const double stop = tol * (bnorm > 0.0 ? bnorm : 1.0);

    r0 = r;
    double rho_old = 1.0, alpha = 1.0, omega = 1.0;
    double rnorm = detail::norm_seq(r);
    st.residual_history.push_back(bnorm > 0.0 ? rnorm / bnorm : rnorm);
    if (rnorm <= stop) {
        st.converged = true;
        st.rel_residual = st.residual_history.back();
        return st;
    }

    for (int it = 0; it < max_iter; ++it) {
        const double rho = detail::dot_seq(r0, r);
        if (std::abs(rho) < 1e-300) {  // breakdown: restart with current residual
            r0 = r;
            rho_old = 1.0;
            alpha = 1.0;
            omega = 1.0;
            continue;
        }
        if (it == 0) {
            p = r;
        } else {
            const double beta = (rho / rho_old) * (alpha / omega);
            for (int i = 0; i < n; ++i) p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        precond(std::span<const double>(p), std::span<double>(phat));
        apply(std::span<const double>(phat), std::span<double>(v));
        alpha = rho / detail::dot_seq(r0, v);
        for (int i = 0; i < n; ++i) s[i] = r[i] - alpha * v[i];
        if (detail::norm_seq(s) <= stop) {
            for (int i = 0; i < n; ++i) x[i] += alpha * phat[i];
            rnorm = detail::norm_seq(s);
            st.iterations = it + 1;
            st.converged = true;
            st.rel_residual = rnorm / (bnorm > 0.0 ? bnorm : 1.0);
            st.residual_history.push_back(st.rel_residual);
            return st;
        }
        precond(std::span<const double>(s), std::span<double>(shat));
        apply(std::span<const double>(shat), std::span<double>(t));
        const double tt = detail::dot_seq(t, t);
        omega = tt > 0.0 ? detail::dot_seq(t, s) / tt : 0.0;
        for (int i = 0; i < n; ++i) x[i] += alpha * phat[i] + omega * shat[i];
        for (int i = 0; i < n; ++i) r[i] = s[i] - omega * t[i];
        rnorm = detail::norm_seq(r);
        st.iterations = it + 1;
        st.residual_history.push_back(rnorm / (bnorm > 0.0 ? bnorm : 1.0));
        if (rnorm <= stop) {
            st.converged = true;
            st.rel_residual = st.residual_history.back();
            return st;
        }
        if (std::abs(omega) < 1e-300) {
            r0 = r;  // omega breakdown: restart
            rho_old = 1.0;
            alpha = 1.0;
            omega = 1.0;
            continue;
        }
        rho_old = rho;
    }
    st.rel_residual = st.residual_history.back();
    return st;
}

}  // namespace msllg
