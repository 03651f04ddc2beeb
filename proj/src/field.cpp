#include "msllg/field.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "msllg/errors.hpp"

namespace msllg {

double NodalField::eval(const Vec3& p, int c, bool wrap) const {
    const auto loc = mesh->locate(p, wrap);
    double s = 0.0;
    for (int a = 0; a < mesh->verts_per_elem(); ++a)
        s += loc.bary[a] * at(mesh->elements[loc.element][a], c);
    return s;
}

Vec3 NodalField::eval_vec(const Vec3& p, bool wrap) const {
    const auto loc = mesh->locate(p, wrap);
    Vec3 s{};
    for (int a = 0; a < mesh->verts_per_elem(); ++a)
        s += loc.bary[a] * vec(mesh->elements[loc.element][a]);
    return s;
}

std::vector<double> restrict_to_dofs(const NodalField& f) {
    const StructuredMesh& m = *f.mesh;
    std::vector<double> out(static_cast<size_t>(m.dof_count) * f.comps);
    for (int d = 0; d < m.dof_count; ++d)
        for (int c = 0; c < f.comps; ++c)
            out[static_cast<size_t>(d) * f.comps + c] = f.at(m.dof_to_node[d], c);
    return out;
}

NodalField scatter_to_nodes(const MeshPtr& mesh, std::span<const double> dof_values, int comps) {
    NodalField f(mesh, comps);
    for (int node = 0; node < mesh->node_count(); ++node) {
        const int d = mesh->node_to_dof[node];
        for (int c = 0; c < comps; ++c)
            f.at(node, c) = dof_values[static_cast<size_t>(d) * comps + c];
    }
    return f;
}

std::vector<double> element_gradients(const NodalField& f) {
    const StructuredMesh& m = *f.mesh;
    const int k = m.verts_per_elem();
    std::vector<double> g(static_cast<size_t>(m.elem_count()) * f.comps * m.dim, 0.0);
    for (int e = 0; e < m.elem_count(); ++e) {
        double* ge = g.data() + static_cast<size_t>(e) * f.comps * m.dim;
        for (int a = 0; a < k; ++a) {
            const Vec3& grad = m.shape_grad(e, a);
            const int node = m.elements[e][a];
            for (int c = 0; c < f.comps; ++c) {
                const double v = f.at(node, c);
                for (int d = 0; d < m.dim; ++d) ge[c * m.dim + d] += v * grad[d];
            }
        }
    }
    return g;
}

NodalField recover_nodal_gradient(const NodalField& f) {
    const StructuredMesh& m = *f.mesh;
    const auto eg = element_gradients(f);
    const int oc = f.comps * m.dim;

    // Accumulate on dofs so periodic aliases share one wrapped patch.
    std::vector<double> acc(static_cast<size_t>(m.dof_count) * oc, 0.0);
    std::vector<double> wsum(m.dof_count, 0.0);
    const double w = m.elem_volume;
    for (int e = 0; e < m.elem_count(); ++e) {
        const double* ge = eg.data() + static_cast<size_t>(e) * oc;
        for (int a = 0; a < m.verts_per_elem(); ++a) {
            const int d = m.node_to_dof[m.elements[e][a]];
            wsum[d] += w;
            for (int j = 0; j < oc; ++j) acc[static_cast<size_t>(d) * oc + j] += w * ge[j];
        }
    }
    for (int d = 0; d < m.dof_count; ++d)
        for (int j = 0; j < oc; ++j) acc[static_cast<size_t>(d) * oc + j] /= wsum[d];
    return scatter_to_nodes(f.mesh, acc, oc);
}

NodalField interpolate_field(const NodalField& f, const MeshPtr& target, bool periodic_wrap) {
    NodalField out(target, f.comps);
    for (int node = 0; node < target->node_count(); ++node) {
        const Vec3 p = target->node_coords[node];
        for (int c = 0; c < f.comps; ++c) out.at(node, c) = f.eval(p, c, periodic_wrap);
    }
    return out;
}

void write_snapshot(const std::string& path, const NodalField& f) {
    std::FILE* fp = std::fopen(path.c_str(), "w");
    if (!fp) throw ValidationError("cannot open snapshot file for writing: " + path);
    const StructuredMesh& m = *f.mesh;
    std::fprintf(fp, "%d %d %s\n", m.dim, m.cells, m.periodic() ? "periodic" : "neumann");
    for (int node = 0; node < m.node_count(); ++node) {
        for (int c = 0; c < f.comps; ++c)
            std::fprintf(fp, c ? " %.17g" : "%.17g", f.at(node, c));
        std::fputc('\n', fp);
    }
    std::fclose(fp);
}

SnapshotData read_snapshot(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open snapshot file: " + path);
    SnapshotData d;
    std::string header, bc;
    if (!std::getline(in, header)) throw ValidationError("snapshot header missing: " + path);
    {
        std::istringstream hs(header);
        if (!(hs >> d.dim >> d.cells >> bc)) throw ValidationError("bad snapshot header: " + path);
        if (bc == "periodic")
            d.bc = Bc::periodic;
        else if (bc == "neumann")
            d.bc = Bc::neumann;
        else
            throw ValidationError("bad snapshot boundary tag: " + bc);
    }
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        double v;
        int count = 0;
        while (ls >> v) {
            d.values.push_back(v);
            ++count;
        }
        if (first) {
            d.comps = count;
            first = false;
        } else if (count != d.comps) {
            throw ValidationError("inconsistent component count in snapshot: " + path);
        }
    }
    const int side = d.cells + 1;
    const size_t expect =
        static_cast<size_t>(side) * side * (d.dim == 3 ? side : 1) * std::max(d.comps, 1);
    if (d.values.size() != expect) throw ValidationError("snapshot node count mismatch: " + path);
    return d;
}

NodalField bind_snapshot(const SnapshotData& data, const MeshPtr& mesh) {
    if (mesh->dim != data.dim || mesh->cells != data.cells || (mesh->bc == Bc::periodic) != (data.bc == Bc::periodic))
        throw ValidationError("snapshot header does not match the target mesh");
    NodalField f(mesh, data.comps);
    f.values = data.values;
    return f;
}

}  // namespace msllg
