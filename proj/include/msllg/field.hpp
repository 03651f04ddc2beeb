#pragma once

#include <span>
#include <string>
#include <vector>

#include "msllg/mesh.hpp"
#include "msllg/smallvec.hpp"

namespace msllg {

/// Per-node values on a StructuredMesh. component_count is 1 for scalar
/// fields and 3 for magnetization; gradient recovery produces comps*dim.
/// On periodic meshes aliased nodes carry identical values.
struct NodalField {
    MeshPtr mesh;
    int comps = 1;
    std::vector<double> values;  // node * comps + c

    NodalField() = default;
    NodalField(MeshPtr m, int c) : mesh(std::move(m)), comps(c) {
        values.assign(static_cast<size_t>(mesh->node_count()) * comps, 0.0);
    }

    double& at(int node, int c = 0) { return values[static_cast<size_t>(node) * comps + c]; }
    double at(int node, int c = 0) const { return values[static_cast<size_t>(node) * comps + c]; }

    Vec3 vec(int node) const {
        const size_t b = static_cast<size_t>(node) * comps;
        return {values[b], comps > 1 ? values[b + 1] : 0.0, comps > 2 ? values[b + 2] : 0.0};
    }
    void set_vec(int node, const Vec3& v) {
        const size_t b = static_cast<size_t>(node) * comps;
        values[b] = v.x;
        if (comps > 1) values[b + 1] = v.y;
        if (comps > 2) values[b + 2] = v.z;
    }

    /// P1 interpolation at a point; wrap maps the point into [0,1)^dim first.
    double eval(const Vec3& p, int c, bool wrap = false) const;
    Vec3 eval_vec(const Vec3& p, bool wrap = false) const;
};

/// Values at dof representatives (periodic masters), dof * comps + c.
std::vector<double> restrict_to_dofs(const NodalField& f);
/// Scatter a dof vector back to all nodes (aliases included).
NodalField scatter_to_nodes(const MeshPtr& mesh, std::span<const double> dof_values, int comps);

/// Per-element constant P1 gradients, layout [elem][comp][dim].
std::vector<double> element_gradients(const NodalField& f);

/// Volume-weighted average of adjacent element gradients, giving a nodal
/// field with comps*dim components ordered c*dim + d. Periodic meshes
/// average over the wrapped patch of each master node.
NodalField recover_nodal_gradient(const NodalField& f);

/// Interpolate a field onto the nodes of another mesh.
NodalField interpolate_field(const NodalField& f, const MeshPtr& target, bool periodic_wrap);

/// Plain-text snapshot: header line "dim N bc", then one line per node with
/// the component values at 17 significant digits.
void write_snapshot(const std::string& path, const NodalField& f);

struct SnapshotData {
    int dim = 0;
    int cells = 0;
    Bc bc = Bc::neumann;
    int comps = 0;
    std::vector<double> values;
};
SnapshotData read_snapshot(const std::string& path);
/// Bind snapshot data to a mesh (which must match the header).
NodalField bind_snapshot(const SnapshotData& data, const MeshPtr& mesh);

}  // namespace msllg
