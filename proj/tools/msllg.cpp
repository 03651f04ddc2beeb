// Command-line front end: cell | corrector | solve | converge | bench-iter |
// algo1, each driven by a key = value config file. --full runs the named
// presets at their published sizes; the default is the desk-scale variant.

#include <cstdio>
#include <cstring>
#include <string>
#include <thread>

#include "msllg/config.hpp"
#include "msllg/errors.hpp"
#include "msllg/experiments.hpp"

namespace {

void usage() {
    std::printf(
        "usage: msllg <cell|corrector|solve|converge|bench-iter|algo1> --config <path>\n"
        "             [--full] [--out <dir>] [--threads <k>]\n"
        "\n"
        "subcommands\n"
        "  cell        solve the unit-cell problems, write coeffs.txt and cell snapshots\n"
        "  corrector   Neumann corrector and reconstructed fields for inspection\n"
        "  solve       one LLG time integration (scale/terms from the config)\n"
        "  converge    reference vs homogenized errors across n_periods (errors.csv, orders.csv)\n"
        "  bench-iter  iteration-count comparison of the two midpoint iterations (bench.csv)\n"
        "  algo1       the full two-scale pipeline for a single n, with snapshots\n"
        "\n"
        "exit codes: 0 success, 2 validation error, 3 solver non-convergence\n");
}

}  // namespace

int main(int argc, char** argv) {
    using namespace msllg;
    if (argc < 2) {
        usage();
        return 2;
    }
    const std::string cmd = argv[1];
    if (cmd == "-h" || cmd == "--help" || cmd == "help") {
        usage();
        return 0;
    }

    std::string config_path, out_override;
    bool full = false;
    int threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    for (int i = 2; i < argc; ++i) {
        const std::string a = argv[i];
        auto next = [&](const char* what) -> std::string {
            if (i + 1 >= argc) {
                std::fprintf(stderr, "missing value after %s\n", what);
                std::exit(2);
            }
            return argv[++i];
        };
        if (a == "--config")
            config_path = next("--config");
        else if (a == "--out")
            out_override = next("--out");
        else if (a == "--threads")
            threads = std::atoi(next("--threads").c_str());
        else if (a == "--full")
            full = true;
        else {
            std::fprintf(stderr, "unknown flag: %s\n", a.c_str());
            return 2;
        }
    }
    if (threads < 1) threads = 1;

    try {
        if (config_path.empty()) throw ValidationError("--config <path> is required");
        ExperimentConfig cfg = parse_config(config_path);
        if (!full) downscale_preset(cfg);
        if (!out_override.empty()) cfg.out_dir = out_override;

        if (cmd == "cell") {
            auto suite = run_cell_command(cfg, true);
            std::printf("a0_11 = %.6f  a0_12 = %.3e  (cell mesh %d^%d)\n", suite.homog.a0(0, 0),
                        suite.homog.a0(0, 1), cfg.cell_n, cfg.dim);
        } else if (cmd == "corrector") {
            run_corrector_command(cfg);
        } else if (cmd == "solve") {
            run_single_solve(cfg);
        } else if (cmd == "converge") {
            auto res = run_convergence_study(cfg, threads, true);
            for (const auto& o : res.orders)
                std::printf("j=%-5d %s slope %.3f\n", o.j, o.quantity.c_str(), o.slope);
        } else if (cmd == "bench-iter") {
            run_scheme_benchmark(cfg, true);
        } else if (cmd == "algo1") {
            auto res = run_algorithm1(cfg, true);
            for (const auto& r : res.rows)
                std::printf("n=%d j=%-5d e0=%.4e e1=%.4e e2=%.4e\n", r.n, r.j, r.e0, r.e1,
                            r.e2);
        } else {
            usage();
            return 2;
        }
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const SolverError& e) {
        std::fprintf(stderr, "solver error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
