#pragma once

#include <cmath>

#include "msllg/field.hpp"

namespace msllg {

/// The bubble profile used by all convergence experiments: with
/// xt = (x1 - 1/2, x2 - 1/2) and A = (1 - 2|xt|)^4,
///   m = (2 xt1 A, 2 xt2 A, A^2 - |xt|^2) / (A^2 + |xt|^2)  for |xt| <= 1/2,
///   m = (0, 0, -1)                                          otherwise.
/// Unit length at every node; constant near the boundary, so both periodic
/// and Neumann data are consistent. In 3D the profile is extruded along x3.
inline Vec3 bubble_value(const Vec3& x) {
    const double t1 = x.x - 0.5, t2 = x.y - 0.5;
    const double r = std::sqrt(t1 * t1 + t2 * t2);
    if (r >= 0.5) return {0.0, 0.0, -1.0};
    const double A = std::pow(1.0 - 2.0 * r, 4);
    const double denom = A * A + r * r;
    return {2.0 * t1 * A / denom, 2.0 * t2 * A / denom, (A * A - r * r) / denom};
}

inline NodalField bubble_initial_data(const MeshPtr& mesh) {
    NodalField f(mesh, 3);
    for (int node = 0; node < mesh->node_count(); ++node)
        f.set_vec(node, bubble_value(mesh->node_coords[node]));
    return f;
}

}  // namespace msllg
