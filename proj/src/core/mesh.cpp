#include "core/mesh.hpp"

#include "core/error.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <utility>

namespace wgs::mesh {

double norm(Vertex2 a) { return std::hypot(a.x, a.y); }

int Edge::slot_of(int cell) const
{
    if (cell_ids[0] == cell) return 0;
    if (cell_ids[1] == cell) return 1;
    return -1;
}

const char* to_string(Family family)
{
    switch (family) {
    case Family::Triangle: return "tri";
    case Family::NonconvexL: return "nonconvex-l";
    case Family::Custom: return "custom";
    }
    return "custom";
}

Family family_from_string(const std::string& name)
{
    if (name == "tri") return Family::Triangle;
    if (name == "nonconvex-l") return Family::NonconvexL;
    if (name == "custom") return Family::Custom;
    throw Error(ErrorCode::InvalidArgument, "unknown mesh family '" + name + "'");
}

int PolyMesh::n_boundary_edges() const
{
    return static_cast<int>(std::count_if(edges.begin(), edges.end(), [](const Edge& e) { return e.boundary; }));
}

std::vector<Vertex2> PolyMesh::polygon(int cell) const
{
    std::vector<Vertex2> poly;
    poly.reserve(cells[cell].vertex_ids.size());
    for (int v : cells[cell].vertex_ids) poly.push_back(vertices[v]);
    return poly;
}

namespace {

double signed_area(std::span<const Vertex2> poly)
{
    double a = 0.0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) a += cross(poly[i], poly[(i + 1) % n]);
    return 0.5 * a;
}

std::uint64_t edge_key(int a, int b)
{
    const auto lo = static_cast<std::uint64_t>(std::min(a, b));
    const auto hi = static_cast<std::uint64_t>(std::max(a, b));
    return (lo << 32) | hi;
}

// Builds cells on an integer lattice with spacing 1/denominator, inserting every
// lattice vertex that lies strictly inside a cell side (hanging-node removal).
PolyMesh from_lattice(const std::vector<std::vector<std::array<int, 2>>>& lattice_cells, int denominator,
                      Family family, int n)
{
    std::map<std::array<int, 2>, int> ids;
    std::vector<Vertex2> vertices;
    const double inv = 1.0 / denominator;
    for (const auto& poly : lattice_cells) {
        for (const auto& p : poly) {
            if (ids.emplace(p, static_cast<int>(vertices.size())).second) {
                vertices.push_back({p[0] * inv, p[1] * inv});
            }
        }
    }

    std::vector<std::vector<int>> cells;
    cells.reserve(lattice_cells.size());
    for (const auto& poly : lattice_cells) {
        std::vector<int> ring;
        for (std::size_t i = 0; i < poly.size(); ++i) {
            const auto& p = poly[i];
            const auto& q = poly[(i + 1) % poly.size()];
            ring.push_back(ids.at(p));
            const int dx = q[0] - p[0];
            const int dy = q[1] - p[1];
            const int g = std::gcd(std::abs(dx), std::abs(dy));
            for (int s = 1; s < g; ++s) {
                auto it = ids.find({p[0] + s * dx / g, p[1] + s * dy / g});
                if (it != ids.end()) ring.push_back(it->second);
            }
        }
        cells.push_back(std::move(ring));
    }
    return from_polygons(std::move(vertices), cells, family, n);
}

bool segments_intersect(Vertex2 p1, Vertex2 p2, Vertex2 q1, Vertex2 q2)
{
    auto orient = [](Vertex2 a, Vertex2 b, Vertex2 c) {
        const double v = cross(b - a, c - a);
        return std::abs(v) <= kGeomTol ? 0 : (v > 0 ? 1 : -1);
    };
    auto on_segment = [](Vertex2 a, Vertex2 b, Vertex2 c) {
        return std::min(a.x, b.x) - kGeomTol <= c.x && c.x <= std::max(a.x, b.x) + kGeomTol &&
               std::min(a.y, b.y) - kGeomTol <= c.y && c.y <= std::max(a.y, b.y) + kGeomTol;
    };
    const int o1 = orient(p1, p2, q1);
    const int o2 = orient(p1, p2, q2);
    const int o3 = orient(q1, q2, p1);
    const int o4 = orient(q1, q2, p2);
    if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return true;
    if (o1 == 0 && on_segment(p1, p2, q1)) return true;
    if (o2 == 0 && on_segment(p1, p2, q2)) return true;
    if (o3 == 0 && on_segment(q1, q2, p1)) return true;
    if (o4 == 0 && on_segment(q1, q2, p2)) return true;
    return false;
}

// Uniform bucket grid over the vertex bounding box for proximity queries.
class VertexGrid {
public:
    VertexGrid(const std::vector<Vertex2>& vertices, double cell_size)
        : vertices_(vertices)
    {
        if (vertices.empty()) return;
        lo_ = hi_ = vertices.front();
        for (const auto& v : vertices) {
            lo_.x = std::min(lo_.x, v.x);
            lo_.y = std::min(lo_.y, v.y);
            hi_.x = std::max(hi_.x, v.x);
            hi_.y = std::max(hi_.y, v.y);
        }
        size_ = std::max(cell_size, 1e-9);
        nx_ = std::max(1, static_cast<int>((hi_.x - lo_.x) / size_) + 1);
        ny_ = std::max(1, static_cast<int>((hi_.y - lo_.y) / size_) + 1);
        buckets_.resize(static_cast<std::size_t>(nx_) * ny_);
        for (int i = 0; i < static_cast<int>(vertices.size()); ++i) {
            buckets_[bucket(vertices[i])].push_back(i);
        }
    }

    template <class F>
    void visit_box(Vertex2 a, Vertex2 b, F&& f) const
    {
        if (buckets_.empty()) return;
        const int i0 = clamp_x(std::min(a.x, b.x) - kGeomTol);
        const int i1 = clamp_x(std::max(a.x, b.x) + kGeomTol);
        const int j0 = clamp_y(std::min(a.y, b.y) - kGeomTol);
        const int j1 = clamp_y(std::max(a.y, b.y) + kGeomTol);
        for (int j = j0; j <= j1; ++j)
            for (int i = i0; i <= i1; ++i)
                for (int v : buckets_[static_cast<std::size_t>(j) * nx_ + i]) f(v);
    }

private:
    int clamp_x(double x) const { return std::clamp(static_cast<int>((x - lo_.x) / size_), 0, nx_ - 1); }
    int clamp_y(double y) const { return std::clamp(static_cast<int>((y - lo_.y) / size_), 0, ny_ - 1); }
    std::size_t bucket(Vertex2 v) const { return static_cast<std::size_t>(clamp_y(v.y)) * nx_ + clamp_x(v.x); }

    const std::vector<Vertex2>& vertices_;
    Vertex2 lo_, hi_;
    double size_ = 1.0;
    int nx_ = 0, ny_ = 0;
    std::vector<std::vector<int>> buckets_;
};

} // namespace

CellGeometry cell_geometry(std::span<const Vertex2> polygon)
{
    if (polygon.size() < 3) throw Error(ErrorCode::DegenerateCell, "polygon with fewer than 3 vertices");
    // Shift to the first vertex to reduce cancellation.
    const Vertex2 o = polygon[0];
    double a2 = 0.0;
    double cx = 0.0, cy = 0.0;
    const std::size_t n = polygon.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vertex2 p = polygon[i] - o;
        const Vertex2 q = polygon[(i + 1) % n] - o;
        const double c = cross(p, q);
        a2 += c;
        cx += (p.x + q.x) * c;
        cy += (p.y + q.y) * c;
    }
    const double area = 0.5 * a2;
    if (!(area > 1e-14)) throw Error(ErrorCode::DegenerateCell, "non-positive or vanishing cell area");
    CellGeometry g;
    g.area = area;
    g.centroid = {o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2)};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) g.diameter = std::max(g.diameter, norm(polygon[i] - polygon[j]));
    return g;
}

bool is_convex(std::span<const Vertex2> polygon)
{
    const std::size_t n = polygon.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Vertex2 e0 = polygon[(i + 1) % n] - polygon[i];
        const Vertex2 e1 = polygon[(i + 2) % n] - polygon[(i + 1) % n];
        if (cross(e0, e1) < -kGeomTol) return false;
    }
    return true;
}

PolyMesh from_polygons(std::vector<Vertex2> vertices, const std::vector<std::vector<int>>& cells,
                       Family family, int subdivisions)
{
    PolyMesh mesh;
    mesh.vertices = std::move(vertices);
    mesh.family = family;
    mesh.subdivisions = subdivisions;
    if (subdivisions > 0 && (subdivisions & (subdivisions - 1)) == 0) {
        mesh.level = std::countr_zero(static_cast<unsigned>(subdivisions));
    }

    for (const auto& v : mesh.vertices) {
        if (!std::isfinite(v.x) || !std::isfinite(v.y)) throw Error(ErrorCode::InvalidArgument, "non-finite vertex");
    }

    std::unordered_map<std::uint64_t, int> edge_ids;
    mesh.cells.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
        Cell cell;
        cell.vertex_ids = cells[c];
        if (cell.vertex_ids.size() < 3) {
            throw Error(ErrorCode::InvalidArgument, "cell " + std::to_string(c) + " has fewer than 3 vertices");
        }
        for (int v : cell.vertex_ids) {
            if (v < 0 || v >= mesh.n_vertices()) {
                throw Error(ErrorCode::InvalidArgument, "cell " + std::to_string(c) + " references vertex " +
                                                            std::to_string(v) + " out of range");
            }
        }
        std::vector<Vertex2> poly;
        for (int v : cell.vertex_ids) poly.push_back(mesh.vertices[v]);
        if (signed_area(poly) < 0.0) {
            std::reverse(cell.vertex_ids.begin(), cell.vertex_ids.end());
            std::reverse(poly.begin(), poly.end());
        }
        const CellGeometry g = cell_geometry(poly);
        cell.area = g.area;
        cell.centroid = g.centroid;
        cell.diameter = g.diameter;
        cell.convex = is_convex(poly);
        mesh.h = std::max(mesh.h, g.diameter);

        const int n = cell.n_edges();
        cell.edge_ids.resize(n);
        for (int i = 0; i < n; ++i) {
            const int a = cell.vertex_ids[i];
            const int b = cell.vertex_ids[(i + 1) % n];
            if (a == b) throw Error(ErrorCode::InvalidArgument, "repeated consecutive vertex in cell " + std::to_string(c));
            auto [it, inserted] = edge_ids.emplace(edge_key(a, b), mesh.n_edges());
            if (inserted) {
                Edge e;
                e.vertex_ids = {std::min(a, b), std::max(a, b)};
                e.length = norm(mesh.vertices[b] - mesh.vertices[a]);
                mesh.edges.push_back(e);
            }
            Edge& e = mesh.edges[it->second];
            const int slot = e.cell_ids[0] < 0 ? 0 : 1;
            if (slot == 1 && e.cell_ids[1] >= 0) {
                throw Error(ErrorCode::InvalidArgument, "edge shared by more than two cells");
            }
            const Vertex2 t = mesh.vertices[b] - mesh.vertices[a];
            e.cell_ids[slot] = static_cast<int>(c);
            e.normals[slot] = (1.0 / norm(t)) * Vertex2{t.y, -t.x};
            e.boundary = slot == 0;
            cell.edge_ids[i] = it->second;
        }
        mesh.cells.push_back(std::move(cell));
    }
    return mesh;
}

PolyMesh build_uniform_triangle_mesh(int n)
{
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "subdivisions must be >= 1");
    std::vector<std::vector<std::array<int, 2>>> cells;
    cells.reserve(2 * static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            cells.push_back({{i, j}, {i + 1, j}, {i + 1, j + 1}});
            cells.push_back({{i, j}, {i + 1, j + 1}, {i, j + 1}});
        }
    }
    return from_lattice(cells, n, Family::Triangle, n);
}

PolyMesh build_nonconvex_L_mesh(int n)
{
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "subdivisions must be >= 1");
    std::vector<std::vector<std::array<int, 2>>> cells;
    cells.reserve(2 * static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            const int x = 2 * i;
            const int y = 2 * j;
            cells.push_back({{x, y}, {x + 2, y}, {x + 2, y + 1}, {x + 1, y + 1}, {x + 1, y + 2}, {x, y + 2}});
            cells.push_back({{x + 1, y + 1}, {x + 2, y + 1}, {x + 2, y + 2}, {x + 1, y + 2}});
        }
    }
    return from_lattice(cells, 2 * n, Family::NonconvexL, n);
}

PolyMesh build_mesh(Family family, int n)
{
    switch (family) {
    case Family::Triangle: return build_uniform_triangle_mesh(n);
    case Family::NonconvexL: return build_nonconvex_L_mesh(n);
    case Family::Custom: break;
    }
    throw Error(ErrorCode::InvalidArgument, "custom meshes cannot be generated; load them from a file");
}

ValidationReport validate(const PolyMesh& mesh)
{
    ValidationReport report;
    auto fail = [&](const std::string& what) { report.violations.push_back(what); };

    for (int v = 0; v < mesh.n_vertices(); ++v) {
        if (!std::isfinite(mesh.vertices[v].x) || !std::isfinite(mesh.vertices[v].y)) {
            fail("vertex " + std::to_string(v) + ": non-finite coordinate");
        }
    }
    const VertexGrid grid(mesh.vertices, mesh.h > 0 ? mesh.h : 1.0);
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        const Vertex2 p = mesh.vertices[v];
        grid.visit_box(p, p, [&](int w) {
            if (w > v && norm(mesh.vertices[w] - p) <= kGeomTol) {
                fail("vertices " + std::to_string(v) + " and " + std::to_string(w) + ": coincident");
            }
        });
    }

    double total_area = 0.0;
    double h = 0.0;
    for (int c = 0; c < mesh.n_cells(); ++c) {
        const Cell& cell = mesh.cells[c];
        const std::string tag = "cell " + std::to_string(c) + ": ";
        const int n = cell.n_edges();
        if (n < 3) {
            fail(tag + "fewer than 3 vertices");
            continue;
        }
        if (static_cast<int>(cell.edge_ids.size()) != n) {
            fail(tag + "edge list not aligned with vertex list");
            continue;
        }
        const auto poly = mesh.polygon(c);
        const double sa = signed_area(poly);
        if (!(sa > 1e-14)) fail(tag + "not counter-clockwise or degenerate");
        if (std::abs(sa - cell.area) > 1e-12) fail(tag + "stored area inconsistent");
        total_area += cell.area;
        h = std::max(h, cell.diameter);
        if (is_convex(poly) != cell.convex) fail(tag + "convex flag inconsistent");
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if (adjacent) continue;
                if (segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) {
                    fail(tag + "self-intersecting boundary");
                    i = n;
                    break;
                }
            }
        }
        for (int i = 0; i < n; ++i) {
            const int eid = cell.edge_ids[i];
            if (eid < 0 || eid >= mesh.n_edges()) {
                fail(tag + "edge id out of range");
                continue;
            }
            const Edge& e = mesh.edges[eid];
            const int a = cell.vertex_ids[i];
            const int b = cell.vertex_ids[(i + 1) % n];
            if (e.vertex_ids != std::array<int, 2>{std::min(a, b), std::max(a, b)}) {
                fail(tag + "edge " + std::to_string(eid) + " does not join its vertices");
                continue;
            }
            const int slot = e.slot_of(c);
            if (slot < 0) {
                fail("edge " + std::to_string(eid) + ": missing adjacent cell " + std::to_string(c));
                continue;
            }
            const Vertex2 t = mesh.vertices[b] - mesh.vertices[a];
            const Vertex2 expected = (1.0 / norm(t)) * Vertex2{t.y, -t.x};
            const Vertex2 nrm = e.normals[slot];
            if (std::abs(norm(nrm) - 1.0) > kGeomTol) {
                fail("edge " + std::to_string(eid) + ": normal not unit for cell " + std::to_string(c));
            } else if (norm(nrm - expected) > 1e-10) {
                fail("edge " + std::to_string(eid) + ": normal not outward for cell " + std::to_string(c));
            } else if (cell.convex) {
                const Vertex2 mid = 0.5 * (mesh.vertices[a] + mesh.vertices[b]);
                if (!(dot(nrm, mid - cell.centroid) > 0.0)) {
                    fail("edge " + std::to_string(eid) + ": normal not outward for cell " + std::to_string(c));
                }
            }
        }
    }
    if (std::abs(h - mesh.h) > kGeomTol) fail("mesh: h differs from max cell diameter");

    double domain_area = 0.0;
    for (int eid = 0; eid < mesh.n_edges(); ++eid) {
        const Edge& e = mesh.edges[eid];
        const std::string tag = "edge " + std::to_string(eid) + ": ";
        const int nc = e.n_cells();
        if (nc == 0) fail(tag + "no adjacent cells");
        if (e.boundary != (nc == 1)) fail(tag + "boundary flag inconsistent with adjacency");
        const Vertex2 a = mesh.vertices[e.vertex_ids[0]];
        const Vertex2 b = mesh.vertices[e.vertex_ids[1]];
        if (std::abs(norm(b - a) - e.length) > kGeomTol) fail(tag + "stored length inconsistent");
        if (nc == 1) {
            // Contribution of the boundary to the enclosed area, oriented by the outward normal.
            const Vertex2 nrm = e.normals[0];
            const Vertex2 t{-nrm.y, nrm.x};
            const bool forward = dot(b - a, t) > 0;
            domain_area += 0.5 * (forward ? cross(a, b) : cross(b, a));
        }
        grid.visit_box(a, b, [&](int w) {
            if (w == e.vertex_ids[0] || w == e.vertex_ids[1]) return;
            const Vertex2 p = mesh.vertices[w];
            const double len = norm(b - a);
            const double s = dot(p - a, b - a) / (len * len);
            if (s > kGeomTol && s < 1.0 - kGeomTol && std::abs(cross(b - a, p - a)) / len <= kGeomTol) {
                fail(tag + "hanging vertex " + std::to_string(w));
            }
        });
    }

    if (std::abs(total_area - domain_area) > 1e-10) {
        std::ostringstream os;
        os << "mesh: cell areas sum to " << total_area << " but boundary encloses " << domain_area;
        fail(os.str());
    }
    if (mesh.family != Family::Custom && std::abs(total_area - 1.0) > 1e-10) {
        fail("mesh: cell areas do not sum to 1");
    }
    const int euler = mesh.n_vertices() - mesh.n_edges() + mesh.n_cells();
    if (euler != 1) fail("mesh: Euler characteristic V-E+C = " + std::to_string(euler) + " (expected 1)");
    return report;
}

} // namespace wgs::mesh
