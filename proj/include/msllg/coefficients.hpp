#pragma once

#include <functional>
#include <map>
#include <string>

#include "msllg/smallvec.hpp"

namespace msllg {

/// Analytic Y-periodic material data: exchange matrix a(y), anisotropy K(y),
/// stray coupling mu(y), saturation magnetization Ms(y), and their analytic
/// gradients. Keeping the data analytic keeps the gradients exact, which the
/// integration-by-parts forms of the cell module rely on.
struct PeriodicCoefficientSet {
    int dim = 2;
    std::string name = "constant";

    std::function<Mat3(const Vec3&)> a;
    std::function<std::array<Mat3, 3>(const Vec3&)> grad_a;  // d a / d y_k
    std::function<double(const Vec3&)> K;
    std::function<double(const Vec3&)> mu;
    std::function<double(const Vec3&)> Ms;
    std::function<Vec3(const Vec3&)> grad_mu;
    std::function<Vec3(const Vec3&)> grad_Ms;

    Vec3 easy_axis{0.0, 0.0, 1.0};
    Vec3 applied_field{0.0, 0.0, 0.0};
    double a_min = 0.0;
    double a_max = 0.0;
};

/// Named analytic presets with optional numeric parameter overrides:
///   constant  a = scale*I, mu/K/Ms constants (keys a_value, mu_value,
///             K_value, Ms_value)
///   paper2d   a(y) = f(y1) f(y2) I with f(t) = base + amp cos(2 pi (t-1/2))
///   paper3d   the three-factor version on the unit cube
///   layered   a(y) = (base + amp sin(2 pi y2)) I
/// Every preset also honors mu_base/mu_amp (product-of-sines profile),
/// K_value, Ms_value, and ha_x/ha_y/ha_z, u_x/u_y/u_z overrides.
PeriodicCoefficientSet make_coefficients(const std::string& preset, int dim,
                                         const std::map<std::string, double>& overrides = {});

}  // namespace msllg
