#pragma once

#include <map>
#include <string>
#include <vector>

#include "msllg/llg.hpp"
#include "msllg/mesh.hpp"

namespace msllg {

/// Experiment description parsed from the line-oriented `key = value` config
/// format. `experiment = <preset>` expands a named preset in place; keys
/// after it override preset values. Mesh sizes accept `180`, `1/180`, or a
/// decimal h.
struct ExperimentConfig {
    std::string experiment = "custom";
    int dim = 2;
    Bc bc = Bc::periodic;
    std::string coeff = "paper2d";
    std::map<std::string, double> coeff_overrides;
    std::vector<int> n_periods;
    int n_ref = 0;  // h_ref = 1/n_ref
    int n_hom = 0;  // h_hom = 1/n_hom
    int cell_n = 128;
    double dt = 1e-6;
    std::vector<int> checkpoints;
    double alpha = 1.0;
    std::string scheme = "improved";
    double threshold = 1e-8;
    int max_iter = 100;
    FieldTerms terms{true, false, false, false};
    std::string initial = "expansion";  // expansion | projection
    std::string out_dir = "out";
    // single-run (`solve`/`algo1`) extras
    std::string scale = "homogenized";
    int steps = 10;
    int snapshot_stride = 0;
    int n_single = 0;  // 0: first entry of n_periods
    // scheme benchmark extras
    std::vector<double> bench_dts{1e-4, 1e-5, 1e-6};
    int bench_steps = 3;
};

ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& source_name);

/// Canonical serialization: fixed key order, 17 significant digits.
/// parse(serialize(c)) reproduces c.
std::string serialize_config(const ExperimentConfig& c);

/// Expand one of periodic2d | neumann2d | periodic2d_stray | periodic3d |
/// custom into c (custom leaves everything untouched).
void apply_preset(ExperimentConfig& c, const std::string& preset);

/// Desk-scale variant of the named presets: coarser meshes, fewer periods,
/// checkpoints capped at 100. Used whenever --full is absent.
void downscale_preset(ExperimentConfig& c);

/// Throws ValidationError listing every missing/invalid entry.
void validate_config(const ExperimentConfig& c);

Scheme parse_scheme(const std::string& s);

}  // namespace msllg
