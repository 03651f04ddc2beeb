#pragma once

#include <functional>
#include <optional>

#include "msllg/assembly.hpp"
#include "msllg/cell.hpp"
#include "msllg/coefficients.hpp"
#include "msllg/field.hpp"

namespace msllg {

enum class Scale { multiscale, homogenized };
enum class Scheme { original, improved };

struct FieldTerms {
    bool exchange = true;
    bool anisotropy = false;
    bool zeeman = false;
    bool stray2d = false;
};

/// What to solve: multiscale (coefficients sampled at x/eps) or homogenized
/// (constant coefficients from the cell module), with the active field terms.
struct ModelSpec {
    Scale scale = Scale::homogenized;
    int n_periods = 1;  // eps = 1/n_periods when multiscale
    FieldTerms terms;
    double alpha = 1.0;
    MeshPtr mesh;
    const PeriodicCoefficientSet* coeffs = nullptr;
    const HomogenizedCoefficients* homog = nullptr;  // required when homogenized
};

struct IterationStats {
    int step_index = 0;
    int iterations = 0;
    double residual = 0.0;  // lumped-L2 distance of the last two inner iterates
    double wall_ms = 0.0;
    bool converged = false;
};

/// Implicit midpoint integrator for the LLG equation
///   dt m - alpha m x dt m = -(1+alpha^2) m x h_eff(m),
/// discretized with P1 elements and the lumped inner product. Each time step
/// solves the midpoint system by an inner fixed-point iteration; `original`
/// freezes the exchange operator at the previous iterate, `improved` keeps it
/// on the unknown, which is what shrinks the iteration counts.
class LlgSolver {
  public:
    explicit LlgSolver(const ModelSpec& spec);

    const ModelSpec& spec() const { return spec_; }
    const StructuredMesh& mesh() const { return *spec_.mesh; }

    /// Nodal effective field: -M_lumped^-1 A m plus the nodal lower-order
    /// terms that are switched on.
    NodalField effective_field(const NodalField& m) const;

    /// E = 1/2 int a|grad m|^2 + 1/2 int K (m.u)^2 - 1/2 int s (m.e3)^2
    ///     - int (M h_a) . m   with s the stray coupling at this scale.
    double discrete_energy(const NodalField& m) const;

    struct StepResult {
        NodalField m;
        IterationStats stats;
    };
    /// One midpoint step. A non-converged inner iteration is reported in the
    /// stats, not thrown; callers decide whether to abort or shrink dt.
    StepResult step(const NodalField& m, double dt, Scheme scheme, double threshold,
                    int max_iter) const;

    struct RunResult {
        NodalField m;
        std::vector<IterationStats> stats;
        double max_norm_drift = 0.0;  // max nodal | |m_new| - |m_old| | over all steps
    };
    /// March `steps` steps; invokes on_snapshot(step_index, field) after any
    /// step index contained in `checkpoints` (and at every snapshot_stride
    /// steps when stride > 0). Throws SolverError on inner non-convergence.
    RunResult run(const NodalField& m_init, double dt, int steps, Scheme scheme, double threshold,
                  int max_iter, int snapshot_stride = 0,
                  const std::vector<int>* checkpoints = nullptr,
                  const std::function<void(int, const NodalField&)>& on_snapshot = {}) const;

    /// Uniqueness bound of the original iteration: dt <= h^2/(10(1+alpha^2)).
    /// Exceeding it only warns; the benchmark needs to run past it.
    double original_dt_bound() const;

    const std::vector<double>& lumped_mass() const { return lumped_; }
    /// sqrt(sum_i D_i |v_i|^2) over dof 3-vectors.
    double lumped_norm(std::span<const double> dof3) const;

  private:
    void linear_field_part(std::span<const double> w, std::span<double> out) const;
    void full_field(std::span<const double> m, std::span<double> out) const;

    ModelSpec spec_;
    SparseOperator stiffness_;
    std::vector<double> lumped_;
    std::vector<double> K_node_, stray_node_;  // per dof
    std::vector<Vec3> zeeman_node_;            // per dof
    double q_ = 0.0;                           // (1+alpha^2)/4
    friend struct LlgInnerSystem;
};

/// Expansion-method initial data. The correction (eps chi(x/eps) . grad m0
/// for periodic, (Phi - x) . grad m0 for Neumann) is projected onto the
/// tangent plane of m0 at each node so |m_eps| - 1 = |c|^2 / (|m_eps| + 1)
/// holds nodewise. The result is intentionally not renormalized.
NodalField initial_expansion_periodic(const NodalField& m0, const CellSolutions& cells,
                                      double eps);
NodalField initial_expansion_neumann(const NodalField& m0, const std::vector<NodalField>& phi);

struct ProjectionResult {
    NodalField m;
    int iterations = 0;
    bool converged = false;
};
/// Projection-method initial data: Picard iteration on the sphere-constrained
/// variational problem, renormalizing nodally after every iterate. `guess`
/// seeds the iteration (use the expansion output). Stops when successive
/// iterates differ by at most tol in the discrete H1 norm.
ProjectionResult initial_projection(const NodalField& m0, const NodalField& guess,
                                    const PeriodicCoefficientSet& coeffs,
                                    const HomogenizedCoefficients& homog, int n_periods,
                                    double tol, int max_iter);

}  // namespace msllg
