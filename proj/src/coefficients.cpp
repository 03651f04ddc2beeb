#include "msllg/coefficients.hpp"

#include <cmath>
#include <numbers>

#include "msllg/errors.hpp"

namespace msllg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double get(const std::map<std::string, double>& o, const std::string& key, double fallback) {
    auto it = o.find(key);
    return it == o.end() ? fallback : it->second;
}

}  // namespace

PeriodicCoefficientSet make_coefficients(const std::string& preset, int dim,
                                         const std::map<std::string, double>& overrides) {
    if (dim != 2 && dim != 3) throw ValidationError("coefficient dimension must be 2 or 3");
    PeriodicCoefficientSet c;
    c.dim = dim;
    c.name = preset;

    const double mu_base = get(overrides, "mu_base", 1.0);
    const double mu_amp = get(overrides, "mu_amp", 0.0);
    const double K_value = get(overrides, "K_value", 0.0);
    const double Ms_value = get(overrides, "Ms_value", 1.0);

    if (mu_amp == 0.0) {
        c.mu = [mu_base](const Vec3&) { return mu_base; };
        c.grad_mu = [](const Vec3&) { return Vec3{}; };
    } else {
        // Product-of-sines profile; the degenerate-stray experiments use
        // mu_base = 1.1, mu_amp = 0.25 in 2D.
        c.mu = [mu_base, mu_amp, dim](const Vec3& y) {
            double v = 1.0;
            for (int d = 0; d < 2; ++d) v *= mu_base + mu_amp * std::sin(kTwoPi * y[d]);
            (void)dim;
            return v;
        };
        c.grad_mu = [mu_base, mu_amp](const Vec3& y) {
            const double f0 = mu_base + mu_amp * std::sin(kTwoPi * y.x);
            const double f1 = mu_base + mu_amp * std::sin(kTwoPi * y.y);
            const double d0 = mu_amp * kTwoPi * std::cos(kTwoPi * y.x);
            const double d1 = mu_amp * kTwoPi * std::cos(kTwoPi * y.y);
            return Vec3{d0 * f1, f0 * d1, 0.0};
        };
    }
    c.K = [K_value](const Vec3&) { return K_value; };
    c.Ms = [Ms_value](const Vec3&) { return Ms_value; };
    c.grad_Ms = [](const Vec3&) { return Vec3{}; };

    c.easy_axis = normalized(
        Vec3{get(overrides, "u_x", 0.0), get(overrides, "u_y", 0.0), get(overrides, "u_z", 1.0)});
    c.applied_field = {get(overrides, "ha_x", 0.0), get(overrides, "ha_y", 0.0),
                       get(overrides, "ha_z", 0.0)};

    if (preset == "constant") {
        const double a_value = get(overrides, "a_value", 1.0);
        if (a_value <= 0.0) throw ValidationError("constant preset needs a_value > 0");
        c.a = [a_value, dim](const Vec3&) { return Mat3::scaled_identity(dim, a_value); };
        c.grad_a = [](const Vec3&) { return std::array<Mat3, 3>{}; };
        c.a_min = c.a_max = a_value;
    } else if (preset == "paper2d" || preset == "paper3d") {
        const int nf = (preset == "paper3d") ? 3 : 2;
        if (preset == "paper3d" && dim != 3)
            throw ValidationError("paper3d preset requires dimension 3");
        const double base = get(overrides, "base", 1.1);
        const double amp = get(overrides, "amp", 0.25);
        if (base <= std::abs(amp)) throw ValidationError("cosine preset must stay positive");
        auto f = [base, amp](double t) { return base + amp * std::cos(kTwoPi * (t - 0.5)); };
        auto df = [amp](double t) { return -amp * kTwoPi * std::sin(kTwoPi * (t - 0.5)); };
        c.a = [f, nf, dim](const Vec3& y) {
            double v = 1.0;
            for (int d = 0; d < nf; ++d) v *= f(y[d]);
            return Mat3::scaled_identity(dim, v);
        };
        c.grad_a = [f, df, nf, dim](const Vec3& y) {
            std::array<Mat3, 3> g{};
            double fa[3] = {1.0, 1.0, 1.0};
            for (int d = 0; d < nf; ++d) fa[d] = f(y[d]);
            for (int k = 0; k < nf; ++k) {
                double v = df(y[k]);
                for (int d = 0; d < nf; ++d)
                    if (d != k) v *= fa[d];
                g[k] = Mat3::scaled_identity(dim, v);
            }
            return g;
        };
        double lo = base - std::abs(amp), hi = base + std::abs(amp);
        c.a_min = std::pow(lo, nf);
        c.a_max = std::pow(hi, nf);
    } else if (preset == "layered") {
        const double base = get(overrides, "base", 2.0);
        const double amp = get(overrides, "amp", 1.0);
        if (base <= std::abs(amp)) throw ValidationError("layered preset must stay positive");
        c.a = [base, amp, dim](const Vec3& y) {
            return Mat3::scaled_identity(dim, base + amp * std::sin(kTwoPi * y.y));
        };
        c.grad_a = [amp, dim](const Vec3& y) {
            std::array<Mat3, 3> g{};
            g[1] = Mat3::scaled_identity(dim, amp * kTwoPi * std::cos(kTwoPi * y.y));
            return g;
        };
        c.a_min = base - std::abs(amp);
        c.a_max = base + std::abs(amp);
    } else {
        throw ValidationError("unknown coefficient preset: " + preset);
    }
    return c;
}

}  // namespace msllg
