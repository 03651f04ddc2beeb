#pragma once

#include <vector>

#include "msllg/cell.hpp"
#include "msllg/field.hpp"

namespace msllg {

/// Neumann corrector Phi^eps: for each coordinate x_i, the multiscale flux
/// problem  int a^eps grad Phi_i . grad v = int a0 e_i . grad v  on a Neumann
/// mesh, normalized so the lumped mean of Phi_i - x_i vanishes (the field is
/// only determined up to a constant, which cancels in the error norms).
struct NeumannCorrector {
    std::vector<NodalField> phi;  // dim scalar fields on the physical mesh
    double mean_shift[3] = {0, 0, 0};
};
NeumannCorrector neumann_corrector(const MeshPtr& mesh, const PeriodicCoefficientSet& coeffs,
                                   const HomogenizedCoefficients& homog, int n_periods);

/// First-order two-scale corrector m1 = sum_j chi_j(x/eps) d_j m0, built from
/// periodic-wrap interpolation of chi and recovered nodal gradients of m0.
NodalField first_order_corrector(const NodalField& m0, const CellSolutions& cells, double eps);

struct ReconstructOptions {
    Vec3 applied_field{0, 0, 0};
    Vec3 easy_axis{0, 0, 1};
    /// The rho grad U0 term of T_low needs the whole-space stray potential,
    /// which this suite does not solve; it is forced to zero. Flipping this
    /// flag is rejected loudly rather than silently honored.
    bool drop_macro_potential = true;
};

/// Second-order corrector with the variable-separated ansatz: the Hessian
/// term sum_ij theta_ij d_i d_j m0, the sphere-keeping scalar term, and the
/// projected low-order block (kappa, beta in 2D, Lambda, U* h_a). Second
/// derivatives of m0 come from double gradient recovery.
NodalField second_order_corrector(const NodalField& m0, const CellSolutions& cells, double eps,
                                  const ReconstructOptions& opt);

/// Truncated two-scale sum m0 + eps m1 + eps^2 m2 up to `order` in {0,1,2}.
NodalField assemble_two_scale(const NodalField& m0, const NodalField* m1, const NodalField* m2,
                              double eps, int order);

}  // namespace msllg
