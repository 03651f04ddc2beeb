#pragma once

#include <string>
#include <vector>

#include "msllg/analysis.hpp"
#include "msllg/cell.hpp"
#include "msllg/config.hpp"
#include "msllg/reconstruct.hpp"

namespace msllg {

struct ErrorRow {
    int n = 0;
    int j = 0;
    double e0 = 0, re0 = 0, e1 = 0, re1 = 0;
    double e2 = std::numeric_limits<double>::quiet_NaN();
    double re2 = std::numeric_limits<double>::quiet_NaN();
};

struct OrderRow {
    int j = 0;
    std::string quantity;
    double slope = 0.0;
};

struct StudyResult {
    HomogenizedCoefficients homog;
    std::vector<ErrorRow> rows;  // (n, j) ascending
    std::vector<OrderRow> orders;
};

/// The convergence experiment: cell problems once, one homogenized run,
/// then per-n reference multiscale solves with corrected errors at every
/// checkpoint. Writes coeffs.txt, errors.csv, orders.csv into out_dir when
/// write_outputs is set. The n sweep runs on up to `threads` workers; each
/// run is internally sequential, so results do not depend on `threads`.
StudyResult run_convergence_study(const ExperimentConfig& cfg, int threads, bool write_outputs);

/// Algorithm-1 end-to-end for a single n (cfg.n_single or the first entry
/// of n_periods): cell solves, homogenized time loop, correctors, assembled
/// two-scale snapshots, plus reference-based error rows. Stage failures are
/// tagged with the stage name.
StudyResult run_algorithm1(const ExperimentConfig& cfg, bool write_outputs);

struct BenchRow {
    std::string scheme;
    double dt = 0.0;
    int steps_run = 0;
    double mean_iters = 0.0;
    bool all_converged = false;
    double wall_ms = 0.0;
};
/// Table-1 style comparison of the two inner iterations on the homogenized
/// problem: both schemes at each bench dt for bench_steps steps. Wall time
/// is reported, never asserted. Writes bench.csv when write_outputs is set.
std::vector<BenchRow> run_scheme_benchmark(const ExperimentConfig& cfg, bool write_outputs);

/// One time integration per the config's scale/terms keys; emits snapshots
/// and the per-step stats.csv (step,iters,residual,wall_ms).
void run_single_solve(const ExperimentConfig& cfg);

/// Cell solves + homogenized coefficients; writes coeffs.txt and the cell
/// field snapshots.
CellSuite run_cell_command(const ExperimentConfig& cfg, bool write_outputs);

/// Neumann corrector and reconstructed fields for inspection.
void run_corrector_command(const ExperimentConfig& cfg);

void write_coeffs_file(const std::string& path, const HomogenizedCoefficients& h);
void write_errors_csv(const std::string& path, const std::vector<ErrorRow>& rows);
void write_orders_csv(const std::string& path, const std::vector<OrderRow>& rows);

}  // namespace msllg
