#pragma once

// Mixed element spaces on triangles: vector P2 velocity, P1 pressure
// (continuous Taylor-Hood or discontinuous Scott-Vogelius), P2 temperature.

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <vector>

#include "bouss/mesh.hpp"
#include "bouss/quadrature.hpp"

namespace bouss {

enum class PressureKind {
    continuous_p1,     // Taylor-Hood
    discontinuous_p1,  // Scott-Vogelius (needs a barycentric-split mesh)
};

struct ElementFamily {
    int velocity_degree = 2;
    PressureKind pressure = PressureKind::continuous_p1;
    int temperature_degree = 2;

    static ElementFamily taylor_hood() { return {}; }
    static ElementFamily scott_vogelius() { return {2, PressureKind::discontinuous_p1, 2}; }
};

// Dirichlet data. Velocity is no-slip on every wall; temperature is Dirichlet
// on the tagged walls present in the map (the rest are natural/Neumann).
struct BoundarySpec {
    std::map<BoundaryTag, std::function<double(double, double)>> temperature_dirichlet;

    // Heated cavity: T=0 at x=0, T=1 at x=1, insulated top and bottom.
    static BoundarySpec cavity_benchmark() {
        BoundarySpec bc;
        bc.temperature_dirichlet[BoundaryTag::left] = [](double, double) { return 0.0; };
        bc.temperature_dirichlet[BoundaryTag::right] = [](double, double) { return 1.0; };
        return bc;
    }

    // Homogeneous Dirichlet temperature on all four walls.
    static BoundarySpec all_dirichlet_zero() {
        BoundarySpec bc;
        auto zero = [](double, double) { return 0.0; };
        bc.temperature_dirichlet[BoundaryTag::left] = zero;
        bc.temperature_dirichlet[BoundaryTag::right] = zero;
        bc.temperature_dirichlet[BoundaryTag::top] = zero;
        bc.temperature_dirichlet[BoundaryTag::bottom] = zero;
        return bc;
    }
};

// Scalar P2 dofs are shared between velocity components and temperature:
// vertex dofs first, then one dof per edge (midpoint). Velocity dof of
// component c and scalar dof i is c*n_scalar + i.
struct DofMap {
    ElementFamily family;
    int n_scalar = 0;
    int n_velocity = 0;
    int n_pressure = 0;
    int n_temperature = 0;
    std::vector<std::array<int, 6>> cell_scalar;    // v0 v1 v2 e01 e12 e20
    std::vector<std::array<int, 3>> cell_pressure;  // P1 dofs per cell
    std::vector<Vertex> scalar_coords;
    std::vector<uint8_t> velocity_dirichlet;  // per scalar dof; value is 0 (no-slip)
    std::vector<uint8_t> temperature_dirichlet;
    std::vector<double> temperature_value;
    bool pressure_mean_constraint = true;

    int velocity_dof(int comp, int scalar_dof) const { return comp * n_scalar + scalar_dof; }
};

inline DofMap build_dofmap(const Mesh& mesh, const ElementFamily& family, const BoundarySpec& bc) {
    if (family.pressure == PressureKind::discontinuous_p1 && !mesh.alfeld)
        throw std::invalid_argument(
            "build_dofmap: Scott-Vogelius pressure requires a barycentric (Alfeld) split mesh");
    if (family.velocity_degree != 2 || family.temperature_degree != 2)
        throw std::invalid_argument("build_dofmap: only quadratic velocity/temperature supported");

    DofMap d;
    d.family = family;
    const int nv = mesh.n_vertices();
    const int nt = mesh.n_triangles();
    const EdgeTable et = build_edge_table(mesh);
    const int ne = static_cast<int>(et.edges.size());

    d.n_scalar = nv + ne;
    d.n_velocity = 2 * d.n_scalar;
    d.n_temperature = d.n_scalar;

    d.scalar_coords.resize(d.n_scalar);
    for (int v = 0; v < nv; ++v) d.scalar_coords[v] = mesh.vertices[v];
    for (int e = 0; e < ne; ++e) {
        const auto& [a, b] = et.edges[e];
        d.scalar_coords[nv + e] = {0.5 * (mesh.vertices[a][0] + mesh.vertices[b][0]),
                                   0.5 * (mesh.vertices[a][1] + mesh.vertices[b][1])};
    }

    d.cell_scalar.resize(nt);
    for (int t = 0; t < nt; ++t) {
        const Triangle& tri = mesh.triangles[t];
        d.cell_scalar[t] = {tri[0], tri[1], tri[2], nv + et.cell_edges[t][0], nv + et.cell_edges[t][1],
                            nv + et.cell_edges[t][2]};
    }

    d.cell_pressure.resize(nt);
    if (family.pressure == PressureKind::continuous_p1) {
        d.n_pressure = nv;
        for (int t = 0; t < nt; ++t) {
            const Triangle& tri = mesh.triangles[t];
            d.cell_pressure[t] = {tri[0], tri[1], tri[2]};
        }
    } else {
        d.n_pressure = 3 * nt;
        for (int t = 0; t < nt; ++t) d.cell_pressure[t] = {3 * t, 3 * t + 1, 3 * t + 2};
    }

    // edge-id lookup for boundary edges
    std::map<EdgeKey, int> edge_index;
    for (int e = 0; e < ne; ++e) edge_index[et.edges[e]] = e;

    d.velocity_dirichlet.assign(d.n_scalar, 0);
    d.temperature_dirichlet.assign(d.n_scalar, 0);
    d.temperature_value.assign(d.n_scalar, 0.0);

    for (const auto& [e, tag] : mesh.boundary_edges) {
        auto it = edge_index.find(e);
        if (it == edge_index.end()) throw std::runtime_error("build_dofmap: tagged edge not in mesh");
        const std::array<int, 3> dofs = {e.first, e.second, nv + it->second};
        for (int dof : dofs) d.velocity_dirichlet[dof] = 1;
        auto bit = bc.temperature_dirichlet.find(tag);
        if (bit != bc.temperature_dirichlet.end()) {
            for (int dof : dofs) {
                d.temperature_dirichlet[dof] = 1;
                d.temperature_value[dof] = bit->second(d.scalar_coords[dof][0], d.scalar_coords[dof][1]);
            }
        }
    }
    return d;
}

// --- reference shape functions -------------------------------------------

// P2 basis on the reference triangle in barycentric form; local node order
// matches DofMap::cell_scalar.
inline void p2_shape(const std::array<double, 3>& lam, std::array<double, 6>& val) {
    const double l0 = lam[0], l1 = lam[1], l2 = lam[2];
    val = {l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), 4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0};
}

// Reference gradients with respect to (ξ,η) where λ=(1-ξ-η, ξ, η).
inline void p2_shape_grad(const std::array<double, 3>& lam, std::array<std::array<double, 2>, 6>& grad) {
    const double l0 = lam[0], l1 = lam[1], l2 = lam[2];
    // dλ0 = (-1,-1), dλ1 = (1,0), dλ2 = (0,1)
    grad[0] = {-(4 * l0 - 1), -(4 * l0 - 1)};
    grad[1] = {4 * l1 - 1, 0.0};
    grad[2] = {0.0, 4 * l2 - 1};
    grad[3] = {4 * (l0 - l1), -4 * l1};
    grad[4] = {4 * l2, 4 * l1};
    grad[5] = {-4 * l2, 4 * (l0 - l2)};
}

inline void p1_shape(const std::array<double, 3>& lam, std::array<double, 3>& val) {
    val = {lam[0], lam[1], lam[2]};
}

// Basis values and physical gradients at the quadrature points of one cell.
struct ShapeValues {
    int n_basis = 0;
    double det_jacobian = 0.0;                              // 2x area
    std::vector<std::array<double, 6>> values;              // [q][i]
    std::vector<std::array<std::array<double, 2>, 6>> grads;  // [q][i][xy]
};

namespace detail {

struct CellGeometry {
    double det = 0.0;
    double inv_jt[2][2] = {{0, 0}, {0, 0}};  // J^{-T}
    Vertex origin{};
    double jac[2][2] = {{0, 0}, {0, 0}};
};

inline CellGeometry cell_geometry(const Mesh& mesh, int t) {
    const Triangle& tri = mesh.triangles[t];
    const Vertex &A = mesh.vertices[tri[0]], &B = mesh.vertices[tri[1]], &C = mesh.vertices[tri[2]];
    CellGeometry g;
    g.origin = A;
    g.jac[0][0] = B[0] - A[0];
    g.jac[0][1] = C[0] - A[0];
    g.jac[1][0] = B[1] - A[1];
    g.jac[1][1] = C[1] - A[1];
    g.det = g.jac[0][0] * g.jac[1][1] - g.jac[0][1] * g.jac[1][0];
    if (!(g.det > 0.0)) throw std::runtime_error("cell_geometry: degenerate or inverted triangle");
    const double inv = 1.0 / g.det;
    // J^{-1} = inv * [d -b; -c a],  J^{-T} its transpose
    g.inv_jt[0][0] = g.jac[1][1] * inv;
    g.inv_jt[0][1] = -g.jac[1][0] * inv;
    g.inv_jt[1][0] = -g.jac[0][1] * inv;
    g.inv_jt[1][1] = g.jac[0][0] * inv;
    return g;
}

inline Vertex physical_point(const Mesh& mesh, int t, const std::array<double, 3>& lam) {
    const Triangle& tri = mesh.triangles[t];
    const Vertex &A = mesh.vertices[tri[0]], &B = mesh.vertices[tri[1]], &C = mesh.vertices[tri[2]];
    return {lam[0] * A[0] + lam[1] * B[0] + lam[2] * C[0], lam[0] * A[1] + lam[1] * B[1] + lam[2] * C[1]};
}

}  // namespace detail

inline ShapeValues shape_values_p2(const Mesh& mesh, int cell, const QuadratureRule& quad) {
    const auto g = detail::cell_geometry(mesh, cell);
    ShapeValues sv;
    sv.n_basis = 6;
    sv.det_jacobian = g.det;
    sv.values.resize(quad.size());
    sv.grads.resize(quad.size());
    std::array<std::array<double, 2>, 6> gref;
    for (int q = 0; q < quad.size(); ++q) {
        p2_shape(quad.points[q], sv.values[q]);
        p2_shape_grad(quad.points[q], gref);
        for (int i = 0; i < 6; ++i) {
            sv.grads[q][i][0] = g.inv_jt[0][0] * gref[i][0] + g.inv_jt[0][1] * gref[i][1];
            sv.grads[q][i][1] = g.inv_jt[1][0] * gref[i][0] + g.inv_jt[1][1] * gref[i][1];
        }
    }
    return sv;
}

inline ShapeValues shape_values_p1(const Mesh& mesh, int cell, const QuadratureRule& quad) {
    const auto g = detail::cell_geometry(mesh, cell);
    ShapeValues sv;
    sv.n_basis = 3;
    sv.det_jacobian = g.det;
    sv.values.resize(quad.size());
    sv.grads.resize(quad.size());
    // P1 gradients are constant: ∇λ = J^{-T} ∇_ref λ
    const double gr[3][2] = {{-1, -1}, {1, 0}, {0, 1}};
    for (int q = 0; q < quad.size(); ++q) {
        std::array<double, 3> v;
        p1_shape(quad.points[q], v);
        sv.values[q] = {v[0], v[1], v[2], 0, 0, 0};
        for (int i = 0; i < 3; ++i) {
            sv.grads[q][i][0] = g.inv_jt[0][0] * gr[i][0] + g.inv_jt[0][1] * gr[i][1];
            sv.grads[q][i][1] = g.inv_jt[1][0] * gr[i][0] + g.inv_jt[1][1] * gr[i][1];
        }
    }
    return sv;
}

// Nodal P2 interpolation (values at vertices and edge midpoints).
template <typename F>
std::vector<double> interpolate_p2(const DofMap& dofs, F&& f) {
    std::vector<double> c(dofs.n_scalar);
    for (int i = 0; i < dofs.n_scalar; ++i) c[i] = f(dofs.scalar_coords[i][0], dofs.scalar_coords[i][1]);
    return c;
}

}  // namespace bouss
