#pragma once

#include <utility>
#include <vector>

#include "msllg/cell.hpp"
#include "msllg/field.hpp"

namespace msllg {

/// L2 norm of a field by element quadrature (exact for P1 integrands).
double field_norm_l2(const NodalField& f);

struct H1Norm {
    double l2 = 0.0;
    double semi = 0.0;
    double full() const;
};
/// Full H1 norm (L2 part plus elementwise-gradient seminorm).
H1Norm field_norm_h1(const NodalField& f);

/// e0-style norm: || ref - approx ||_L2 on the ref mesh. Both fields must
/// live on the same mesh (interpolate first when they do not).
double error_l2(const NodalField& ref, const NodalField& approx);

enum class CorrectorKind { none, chi, neumann };

/// e1/e2-style norm: full H1 norm of d = ref - m0 - corrector . grad m0.
/// The corrector gradient follows the chain rule: for `chi`,
/// (grad_y chi)(x/eps) grad m0 + eps chi grad grad m0 (the latter through
/// elementwise gradients of the recovered nodal gradient); for `neumann`,
/// the (grad Phi - I) analog. `none` reduces to the plain H1 difference.
///
/// With hessian_term = false the second-derivative part of the corrector
/// gradient is dropped (the macro envelope is frozen when differentiating).
/// That variant reproduces the published error tables, whose values stay
/// O(1) at t -> 0 even though the expansion initial data makes the full
/// chain-rule difference vanish there; see the experiments module.
double error_h1_corrected(const NodalField& ref, const NodalField& m0, CorrectorKind kind,
                          const CellSolutions* cells, const std::vector<NodalField>* phi,
                          double eps, H1Norm* parts = nullptr, bool hessian_term = true);

/// Least-squares slope of log(err) against log(eps). Needs at least two
/// distinct eps values and positive errors.
double fit_order(const std::vector<std::pair<double, double>>& eps_err);

}  // namespace msllg
