#pragma once

#include <vector>

#include "msllg/assembly.hpp"
#include "msllg/coefficients.hpp"
#include "msllg/field.hpp"

namespace msllg {

/// Scalar auxiliary fields on the periodic unit cell. chi and ustar come
/// from the first-order problem; theta, rho, lambda, kappa (and beta in 2D)
/// from the second-order one. All fields are zero-mean over Y.
struct CellSolutions {
    MeshPtr mesh;
    int dim = 2;
    std::string coeff_name;

    std::vector<NodalField> chi;     // dim fields
    NodalField ustar;
    std::vector<NodalField> theta;   // dim*dim fields, index i*dim + j
    NodalField rho;
    std::vector<NodalField> lambda;  // dim*dim fields, index i*dim + j
    NodalField kappa;
    NodalField beta;                 // 2D only; empty otherwise
    bool second_order_done = false;
};

struct HomogenizedCoefficients {
    int dim = 2;
    Mat3 a0;
    double mu0 = 0.0, K0 = 0.0, M0 = 0.0, Mt0 = 0.0;
    Mat3 Hd0;
};

/// Reusable assembly for one coefficient set / cell resolution pair: the
/// n first-order and n^2+n+2 second-order problems share these matrices.
struct CellWorkspace {
    MeshPtr mesh;
    SparseOperator stiffness_coeff;     // div(a grad .)
    SparseOperator stiffness_identity;  // plain Laplacian, for U*
    const PeriodicCoefficientSet* coeffs = nullptr;

    CellWorkspace(const PeriodicCoefficientSet& c, int cell_N);
};

/// Relative CG tolerance for every cell solve.
inline constexpr double kCellSolveTol = 1e-10;

/// First-order cell problem for the correctors chi_j:
/// int_Y a (grad chi_j + e_j) . grad v dy = 0 for periodic v, zero mean.
std::vector<NodalField> solve_chi(const CellWorkspace& ws);

/// U* with Delta U* = -(Ms - M0), periodic, zero mean.
NodalField solve_ustar(const CellWorkspace& ws);

/// Convenience: first-order solves bundled into a CellSolutions.
CellSolutions solve_cell_first_order(const PeriodicCoefficientSet& coeffs, int cell_N);

/// Homogenized coefficients from the first-order solutions:
/// a0_ij = int a(e_j + grad chi_j) . e_i, plain averages mu0/K0/M0,
/// Mt0 = int mu Ms, and Hd0_ij = -int d_i(mu) d_j(U*) (integrated by parts
/// using the analytic gradient of mu).
HomogenizedCoefficients homogenize(const PeriodicCoefficientSet& coeffs,
                                   const CellSolutions& cells);

/// Second-order cell fields. Every right-hand side is checked for
/// orthogonality to constants (within 1e-8) before solving; a violation
/// signals an inconsistent homogenized coefficient and throws
/// CompatibilityError.
void solve_second_order(const CellWorkspace& ws, CellSolutions& cells,
                        const HomogenizedCoefficients& homog);

struct CellSuite {
    CellSolutions cells;
    HomogenizedCoefficients homog;
};
/// chi / U* -> homogenized coefficients -> theta / rho / lambda / kappa / beta.
CellSuite solve_cell_suite(const PeriodicCoefficientSet& coeffs, int cell_N);

/// Energy-form evaluation a0_ij = int a (grad chi_j + e_j).(grad chi_i + e_i);
/// agrees with homogenize() up to solver tolerance, kept as a cross-check.
Mat3 homogenized_matrix_energy_form(const PeriodicCoefficientSet& coeffs,
                                    const CellSolutions& cells);

}  // namespace msllg
