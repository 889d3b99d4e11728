#pragma once

// Triangulations of the unit square: uniform grids, conforming boundary-layer
// bisection, and barycentric (Alfeld) splits.

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace bouss {

enum class BoundaryTag : int { left = 0, right = 1, top = 2, bottom = 3 };

inline const char* to_string(BoundaryTag t) {
    switch (t) {
        case BoundaryTag::left: return "left";
        case BoundaryTag::right: return "right";
        case BoundaryTag::top: return "top";
        case BoundaryTag::bottom: return "bottom";
    }
    return "?";
}

inline BoundaryTag boundary_tag_from_string(const std::string& s) {
    if (s == "left") return BoundaryTag::left;
    if (s == "right") return BoundaryTag::right;
    if (s == "top") return BoundaryTag::top;
    if (s == "bottom") return BoundaryTag::bottom;
    throw std::invalid_argument("unknown boundary tag: " + s);
}

using Vertex = std::array<double, 2>;
using Triangle = std::array<int, 3>;  // CCW vertex indices
using EdgeKey = std::pair<int, int>;  // (min, max) vertex indices

inline EdgeKey edge_key(int a, int b) {
    return a < b ? EdgeKey{a, b} : EdgeKey{b, a};
}

struct Mesh {
    std::vector<Vertex> vertices;
    std::vector<Triangle> triangles;
    std::map<EdgeKey, BoundaryTag> boundary_edges;
    bool alfeld = false;  // set when the mesh is a barycentric split

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }

    double signed_area(int t) const {
        const auto& [a, b, c] = triangles[t];
        const Vertex &A = vertices[a], &B = vertices[b], &C = vertices[c];
        return 0.5 * ((B[0] - A[0]) * (C[1] - A[1]) - (B[1] - A[1]) * (C[0] - A[0]));
    }

    double total_area() const {
        double s = 0.0;
        for (int t = 0; t < n_triangles(); ++t) s += signed_area(t);
        return s;
    }

    double diameter(int t) const {
        const auto& [a, b, c] = triangles[t];
        auto d2 = [&](int u, int v) {
            double dx = vertices[u][0] - vertices[v][0];
            double dy = vertices[u][1] - vertices[v][1];
            return dx * dx + dy * dy;
        };
        return std::sqrt(std::max({d2(a, b), d2(b, c), d2(c, a)}));
    }

    std::vector<uint8_t> boundary_vertex_mask() const {
        std::vector<uint8_t> on(vertices.size(), 0);
        for (const auto& [e, tag] : boundary_edges) {
            (void)tag;
            on[e.first] = 1;
            on[e.second] = 1;
        }
        return on;
    }

    // Checks positive orientation, edge conformity, and that the tagged edge
    // set is exactly the topological boundary.
    void validate() const {
        for (int t = 0; t < n_triangles(); ++t)
            if (!(signed_area(t) > 0.0))
                throw std::runtime_error("mesh: non-positive triangle " + std::to_string(t));
        std::map<EdgeKey, int> count;
        for (const auto& tri : triangles) {
            count[edge_key(tri[0], tri[1])]++;
            count[edge_key(tri[1], tri[2])]++;
            count[edge_key(tri[2], tri[0])]++;
        }
        for (const auto& [e, c] : count) {
            if (c > 2) throw std::runtime_error("mesh: edge shared by >2 triangles");
            const bool tagged = boundary_edges.count(e) > 0;
            if (c == 1 && !tagged) throw std::runtime_error("mesh: untagged boundary edge");
            if (c == 2 && tagged) throw std::runtime_error("mesh: interior edge carries a tag");
        }
        for (const auto& [e, tag] : boundary_edges)
            if (!count.count(e)) throw std::runtime_error("mesh: tag on nonexistent edge");
    }
};

// Uniform triangulation of [0,1]^2 with n cells per side, each cell split
// along the lower-left-to-upper-right diagonal.
inline Mesh uniform_square_mesh(int n) {
    if (n < 1) throw std::invalid_argument("uniform_square_mesh: n must be >= 1");
    Mesh m;
    const double h = 1.0 / n;
    m.vertices.reserve(static_cast<size_t>(n + 1) * (n + 1));
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) m.vertices.push_back({i * h, j * h});
    auto vid = [n](int i, int j) { return j * (n + 1) + i; };
    m.triangles.reserve(static_cast<size_t>(2) * n * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int v00 = vid(i, j), v10 = vid(i + 1, j);
            const int v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
            m.triangles.push_back({v00, v10, v11});
            m.triangles.push_back({v00, v11, v01});
        }
    }
    for (int i = 0; i < n; ++i) {
        m.boundary_edges[edge_key(vid(i, 0), vid(i + 1, 0))] = BoundaryTag::bottom;
        m.boundary_edges[edge_key(vid(i, n), vid(i + 1, n))] = BoundaryTag::top;
        m.boundary_edges[edge_key(vid(0, i), vid(0, i + 1))] = BoundaryTag::left;
        m.boundary_edges[edge_key(vid(n, i), vid(n, i + 1))] = BoundaryTag::right;
    }
    return m;
}

namespace detail {

// One conforming bisection pass: every marked triangle is split across its
// longest edge; hanging nodes are removed by recursive longest-edge
// bisection of the neighbors (Rivara refinement).
inline void bisect_pass(Mesh& m, const std::vector<uint8_t>& marked_in) {
    std::vector<Vertex>& verts = m.vertices;
    std::vector<Triangle> tris = m.triangles;
    std::vector<uint8_t> alive(tris.size(), 1);
    std::vector<uint8_t> marked = marked_in;
    std::map<EdgeKey, int> midpoint;

    auto edge_mid = [&](int a, int b) {
        const EdgeKey key = edge_key(a, b);
        auto it = midpoint.find(key);
        if (it != midpoint.end()) return it->second;
        const int mid = static_cast<int>(verts.size());
        verts.push_back({0.5 * (verts[a][0] + verts[b][0]), 0.5 * (verts[a][1] + verts[b][1])});
        midpoint.emplace(key, mid);
        auto bit = m.boundary_edges.find(key);
        if (bit != m.boundary_edges.end()) {
            const BoundaryTag tag = bit->second;
            m.boundary_edges.erase(bit);
            m.boundary_edges[edge_key(a, mid)] = tag;
            m.boundary_edges[edge_key(mid, b)] = tag;
        }
        return mid;
    };

    auto len2 = [&](int a, int b) {
        const double dx = verts[a][0] - verts[b][0];
        const double dy = verts[a][1] - verts[b][1];
        return dx * dx + dy * dy;
    };

    auto bisect = [&](size_t t) {
        const Triangle tri = tris[t];
        // rotate so the longest edge is (a, b); cyclic rotation keeps CCW
        const double l01 = len2(tri[0], tri[1]);
        const double l12 = len2(tri[1], tri[2]);
        const double l20 = len2(tri[2], tri[0]);
        int a = tri[0], b = tri[1], c = tri[2];
        if (l12 > l01 && l12 >= l20) {
            a = tri[1]; b = tri[2]; c = tri[0];
        } else if (l20 > l01 && l20 > l12) {
            a = tri[2]; b = tri[0]; c = tri[1];
        }
        const int mid = edge_mid(a, b);
        alive[t] = 0;
        tris.push_back({a, mid, c});
        tris.push_back({mid, b, c});
        alive.push_back(1);
        alive.push_back(1);
        marked.push_back(0);
        marked.push_back(0);
    };

    bool changed = true;
    int sweeps = 0;
    while (changed) {
        if (++sweeps > 1000) throw std::runtime_error("bisect_pass: closure did not terminate");
        changed = false;
        for (size_t t = 0; t < tris.size(); ++t) {
            if (!alive[t]) continue;
            bool split = marked[t] != 0;
            if (!split) {
                const Triangle& tri = tris[t];
                split = midpoint.count(edge_key(tri[0], tri[1])) ||
                        midpoint.count(edge_key(tri[1], tri[2])) ||
                        midpoint.count(edge_key(tri[2], tri[0]));
            }
            if (split) {
                bisect(t);
                changed = true;
            }
        }
    }

    std::vector<Triangle> out;
    out.reserve(tris.size());
    for (size_t t = 0; t < tris.size(); ++t)
        if (alive[t]) out.push_back(tris[t]);
    m.triangles = std::move(out);
}

}  // namespace detail

// Bisects every triangle touching the boundary `layers` times, restoring
// conformity after each pass.
inline Mesh refine_boundary_layer(const Mesh& mesh, int layers) {
    if (layers < 0) throw std::invalid_argument("refine_boundary_layer: layers must be >= 0");
    Mesh m = mesh;
    for (int pass = 0; pass < layers; ++pass) {
        const auto on_boundary = m.boundary_vertex_mask();
        std::vector<uint8_t> marked(m.triangles.size(), 0);
        for (size_t t = 0; t < m.triangles.size(); ++t) {
            const Triangle& tri = m.triangles[t];
            if (on_boundary[tri[0]] || on_boundary[tri[1]] || on_boundary[tri[2]]) marked[t] = 1;
        }
        detail::bisect_pass(m, marked);
        m.alfeld = false;
    }
    return m;
}

// Connects each triangle's barycenter to its vertices (3 children per parent).
inline Mesh alfeld_split(const Mesh& mesh) {
    Mesh m;
    m.vertices = mesh.vertices;
    m.boundary_edges = mesh.boundary_edges;
    m.triangles.reserve(mesh.triangles.size() * 3);
    for (const Triangle& tri : mesh.triangles) {
        const Vertex &A = mesh.vertices[tri[0]], &B = mesh.vertices[tri[1]], &C = mesh.vertices[tri[2]];
        const int g = static_cast<int>(m.vertices.size());
        m.vertices.push_back({(A[0] + B[0] + C[0]) / 3.0, (A[1] + B[1] + C[1]) / 3.0});
        m.triangles.push_back({tri[0], tri[1], g});
        m.triangles.push_back({tri[1], tri[2], g});
        m.triangles.push_back({tri[2], tri[0], g});
    }
    m.alfeld = true;
    return m;
}

// Debug/visualization export: one line per vertex "x y", then one line per
// triangle "i j k", then one line per boundary edge "i j tag".
inline void write_mesh_text(const Mesh& m, std::ostream& os) {
    os.precision(17);
    for (const Vertex& v : m.vertices) os << v[0] << ' ' << v[1] << '\n';
    for (const Triangle& t : m.triangles) os << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    for (const auto& [e, tag] : m.boundary_edges)
        os << e.first << ' ' << e.second << ' ' << to_string(tag) << '\n';
}

// Global edge enumeration (first-encounter order over triangles); per-cell
// edge ids follow the local convention (v0,v1), (v1,v2), (v2,v0).
struct EdgeTable {
    std::vector<EdgeKey> edges;
    std::vector<std::array<int, 3>> cell_edges;
};

inline EdgeTable build_edge_table(const Mesh& m) {
    EdgeTable et;
    et.cell_edges.resize(m.triangles.size());
    std::map<EdgeKey, int> index;
    for (size_t t = 0; t < m.triangles.size(); ++t) {
        const Triangle& tri = m.triangles[t];
        const std::array<EdgeKey, 3> keys = {edge_key(tri[0], tri[1]), edge_key(tri[1], tri[2]),
                                             edge_key(tri[2], tri[0])};
        for (int k = 0; k < 3; ++k) {
            auto [it, inserted] = index.emplace(keys[k], static_cast<int>(et.edges.size()));
            if (inserted) et.edges.push_back(keys[k]);
            et.cell_edges[t][k] = it->second;
        }
    }
    return et;
}

}  // namespace bouss
