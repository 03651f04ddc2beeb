#include "msllg/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "msllg/errors.hpp"

namespace msllg {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

int parse_mesh_size(const std::string& v, int line, const std::string& src) {
    double x = 0.0;
    if (v.find('/') != std::string::npos) {
        double num = 0.0, den = 0.0;
        if (std::sscanf(v.c_str(), "%lf/%lf", &num, &den) != 2 || num <= 0.0 || den <= 0.0)
            throw ValidationError(src + ":" + std::to_string(line) + ": bad mesh size '" + v + "'");
        x = num / den;
    } else {
        try {
            x = std::stod(v);
        } catch (...) {
            throw ValidationError(src + ":" + std::to_string(line) + ": bad mesh size '" + v + "'");
        }
    }
    if (x <= 0.0)
        throw ValidationError(src + ":" + std::to_string(line) + ": mesh size must be positive");
    return x > 1.0 ? static_cast<int>(std::lround(x)) : static_cast<int>(std::lround(1.0 / x));
}

double parse_double(const std::string& v, int line, const std::string& src) {
    try {
        return std::stod(v);
    } catch (...) {
        throw ValidationError(src + ":" + std::to_string(line) + ": bad number '" + v + "'");
    }
}

int parse_int(const std::string& v, int line, const std::string& src) {
    try {
        return std::stoi(v);
    } catch (...) {
        throw ValidationError(src + ":" + std::to_string(line) + ": bad integer '" + v + "'");
    }
}

template <class T, class F>
std::vector<T> parse_list(const std::string& v, F&& one) {
    std::istringstream ss(v);
    std::vector<T> out;
    std::string tok;
    while (ss >> tok) out.push_back(one(tok));
    return out;
}

FieldTerms parse_terms(const std::string& v, int line, const std::string& src) {
    FieldTerms t{false, false, false, false};
    std::string tok;
    std::istringstream ss(v);
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok == "exchange")
            t.exchange = true;
        else if (tok == "anisotropy")
            t.anisotropy = true;
        else if (tok == "zeeman")
            t.zeeman = true;
        else if (tok == "stray2d")
            t.stray2d = true;
        else if (!tok.empty())
            throw ValidationError(src + ":" + std::to_string(line) + ": unknown term '" + tok +
                                  "'");
    }
    return t;
}

std::string terms_to_string(const FieldTerms& t) {
    std::string s;
    auto add = [&](const char* name) {
        if (!s.empty()) s += ",";
        s += name;
    };
    if (t.exchange) add("exchange");
    if (t.anisotropy) add("anisotropy");
    if (t.zeeman) add("zeeman");
    if (t.stray2d) add("stray2d");
    return s;
}

}  // namespace

Scheme parse_scheme(const std::string& s) {
    if (s == "original") return Scheme::original;
    if (s == "improved") return Scheme::improved;
    throw ValidationError("unknown scheme '" + s + "' (expected original or improved)");
}

void apply_preset(ExperimentConfig& c, const std::string& preset) {
    c.experiment = preset;
    if (preset == "custom") return;
    if (preset == "periodic2d" || preset == "neumann2d" || preset == "periodic2d_stray") {
        c.dim = 2;
        c.bc = preset == "neumann2d" ? Bc::neumann : Bc::periodic;
        c.coeff = "paper2d";
        c.coeff_overrides.clear();
        c.n_periods = {2, 3, 4, 5, 6};
        c.n_ref = 180;
        c.n_hom = 180;
        c.cell_n = 128;
        c.dt = 1e-6;
        c.checkpoints = {10, 100, 1000};
        c.alpha = 1.0;
        c.scheme = "improved";
        c.threshold = 1e-8;
        c.max_iter = 100;
        c.terms = FieldTerms{true, false, false, false};
        c.initial = "expansion";
        if (preset == "periodic2d_stray") {
            c.terms.stray2d = true;
            c.coeff_overrides["mu_base"] = 1.1;
            c.coeff_overrides["mu_amp"] = 0.25;
        }
    } else if (preset == "periodic3d") {
        c.dim = 3;
        c.bc = Bc::periodic;
        c.coeff = "paper3d";
        c.coeff_overrides.clear();
        c.n_periods = {2, 3, 5};
        c.n_ref = 30;
        c.n_hom = 24;
        c.cell_n = 32;
        c.dt = 5e-5;
        c.checkpoints = {10, 100};
        c.alpha = 1.0;
        c.scheme = "improved";
        c.threshold = 1e-8;
        c.max_iter = 100;
        c.terms = FieldTerms{true, false, false, false};
        c.initial = "expansion";
    } else {
        throw ValidationError("unknown experiment preset '" + preset + "'");
    }
}

void downscale_preset(ExperimentConfig& c) {
    if (c.experiment == "custom") return;
    if (c.experiment == "periodic3d") {
        c.n_ref = 12;
        c.n_hom = 12;
        c.cell_n = 16;
        c.n_periods = {2, 3};
        c.checkpoints = {10};
    } else {
        c.n_ref = 90;
        c.n_hom = 90;
        std::vector<int> cp;
        for (int j : c.checkpoints)
            if (j <= 100) cp.push_back(j);
        c.checkpoints = cp.empty() ? std::vector<int>{10} : cp;
    }
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& src) {
    ExperimentConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ValidationError(src + ":" + std::to_string(lineno) +
                                  ": expected 'key = value', got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (val.empty())
            throw ValidationError(src + ":" + std::to_string(lineno) + ": empty value for '" +
                                  key + "'");

        if (key == "experiment") {
            apply_preset(c, val);
        } else if (key == "dim") {
            c.dim = parse_int(val, lineno, src);
        } else if (key == "bc") {
            if (val == "periodic")
                c.bc = Bc::periodic;
            else if (val == "neumann")
                c.bc = Bc::neumann;
            else
                throw ValidationError(src + ":" + std::to_string(lineno) + ": unknown bc '" +
                                      val + "'");
        } else if (key == "coeff") {
            c.coeff = val;
        } else if (key.rfind("coeff_", 0) == 0) {
            c.coeff_overrides[key.substr(6)] = parse_double(val, lineno, src);
        } else if (key == "n_periods") {
            c.n_periods =
                parse_list<int>(val, [&](const std::string& t) { return parse_int(t, lineno, src); });
        } else if (key == "h_ref") {
            c.n_ref = parse_mesh_size(val, lineno, src);
        } else if (key == "h_hom") {
            c.n_hom = parse_mesh_size(val, lineno, src);
        } else if (key == "cell_n") {
            c.cell_n = parse_int(val, lineno, src);
        } else if (key == "dt") {
            c.dt = parse_double(val, lineno, src);
        } else if (key == "checkpoints") {
            c.checkpoints =
                parse_list<int>(val, [&](const std::string& t) { return parse_int(t, lineno, src); });
        } else if (key == "alpha") {
            c.alpha = parse_double(val, lineno, src);
        } else if (key == "scheme") {
            parse_scheme(val);
            c.scheme = val;
        } else if (key == "threshold") {
            c.threshold = parse_double(val, lineno, src);
        } else if (key == "max_iter") {
            c.max_iter = parse_int(val, lineno, src);
        } else if (key == "terms") {
            c.terms = parse_terms(val, lineno, src);
        } else if (key == "initial") {
            if (val != "expansion" && val != "projection")
                throw ValidationError(src + ":" + std::to_string(lineno) +
                                      ": initial must be expansion or projection");
            c.initial = val;
        } else if (key == "out_dir") {
            c.out_dir = val;
        } else if (key == "scale") {
            if (val != "multiscale" && val != "homogenized")
                throw ValidationError(src + ":" + std::to_string(lineno) +
                                      ": scale must be multiscale or homogenized");
            c.scale = val;
        } else if (key == "steps") {
            c.steps = parse_int(val, lineno, src);
        } else if (key == "snapshot_stride") {
            c.snapshot_stride = parse_int(val, lineno, src);
        } else if (key == "n") {
            c.n_single = parse_int(val, lineno, src);
        } else if (key == "bench_dts") {
            c.bench_dts = parse_list<double>(
                val, [&](const std::string& t) { return parse_double(t, lineno, src); });
        } else if (key == "bench_steps") {
            c.bench_steps = parse_int(val, lineno, src);
        } else {
            throw ValidationError(src + ":" + std::to_string(lineno) + ": unknown key '" + key +
                                  "'");
        }
    }
    return c;
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

void validate_config(const ExperimentConfig& c) {
    std::vector<std::string> missing;
    if (c.dim != 2 && c.dim != 3) missing.push_back("dim must be 2 or 3");
    if (c.n_ref < 1) missing.push_back("h_ref is required (reference mesh size)");
    if (c.n_hom < 1) missing.push_back("h_hom is required (homogenized mesh size)");
    if (c.n_ref < c.n_hom) missing.push_back("h_ref must be at least as fine as h_hom");
    if (c.cell_n < 2) missing.push_back("cell_n must be at least 2");
    if (c.n_periods.empty()) missing.push_back("n_periods is required");
    for (int n : c.n_periods)
        if (n < 2) missing.push_back("every n_periods entry must be >= 2");
    if (c.dt <= 0.0) missing.push_back("dt must be positive");
    if (c.checkpoints.empty()) missing.push_back("checkpoints are required");
    for (size_t i = 1; i < c.checkpoints.size(); ++i)
        if (c.checkpoints[i] <= c.checkpoints[i - 1])
            missing.push_back("checkpoints must be strictly ascending");
    if (c.alpha <= 0.0) missing.push_back("alpha must be positive");
    if (c.threshold <= 0.0) missing.push_back("threshold must be positive");
    if (c.max_iter < 1) missing.push_back("max_iter must be positive");
    if (!missing.empty()) {
        std::string msg = "invalid experiment config:";
        for (const auto& m : missing) msg += "\n  - " + m;
        throw ValidationError(msg);
    }
}

std::string serialize_config(const ExperimentConfig& c) {
    std::ostringstream out;
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "experiment = custom\n";  // canonical form carries expanded values
    out << "dim = " << c.dim << "\n";
    out << "bc = " << (c.bc == Bc::periodic ? "periodic" : "neumann") << "\n";
    out << "coeff = " << c.coeff << "\n";
    for (const auto& [k, v] : c.coeff_overrides) out << "coeff_" << k << " = " << num(v) << "\n";
    out << "n_periods =";
    for (int n : c.n_periods) out << " " << n;
    out << "\n";
    out << "h_ref = " << c.n_ref << "\n";
    out << "h_hom = " << c.n_hom << "\n";
    out << "cell_n = " << c.cell_n << "\n";
    out << "dt = " << num(c.dt) << "\n";
    out << "checkpoints =";
    for (int j : c.checkpoints) out << " " << j;
    out << "\n";
    out << "alpha = " << num(c.alpha) << "\n";
    out << "scheme = " << c.scheme << "\n";
    out << "threshold = " << num(c.threshold) << "\n";
    out << "max_iter = " << c.max_iter << "\n";
    out << "terms = " << terms_to_string(c.terms) << "\n";
    out << "initial = " << c.initial << "\n";
    out << "out_dir = " << c.out_dir << "\n";
    out << "scale = " << c.scale << "\n";
    out << "steps = " << c.steps << "\n";
    out << "snapshot_stride = " << c.snapshot_stride << "\n";
    out << "n = " << c.n_single << "\n";
    out << "bench_dts =";
    for (double v : c.bench_dts) out << " " << num(v);
    out << "\n";
    out << "bench_steps = " << c.bench_steps << "\n";
    return out.str();
}

}  // namespace msllg
